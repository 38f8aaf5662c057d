// Thin typed client over /api/v1. Every response passes through the
// revision observer so the view layer can detect stale state.
export const API_BASE = '/api/v1';
export const JOB_POLL_INTERVAL_MS = 500;
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function parseError(res) {
    let message = res.statusText;
    try {
        const doc = await res.json();
        if (doc?.error?.message)
            message = doc.error.message;
    }
    catch {
        /* body was not json */
    }
    return new ApiError(res.status, message);
}
export class ApiClient {
    constructor(fetchImpl, onRevision) {
        this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
        this.onRevision = onRevision ?? (() => undefined);
    }
    async request(method, path, body) {
        const init = { method, headers: {} };
        if (body !== undefined) {
            init.headers = { 'content-type': 'application/json' };
            init.body = JSON.stringify(body);
        }
        const res = await this.fetchImpl(API_BASE + path, init);
        if (!res.ok)
            throw await parseError(res);
        const doc = (await res.json());
        if (typeof doc.revision === 'number')
            this.onRevision(doc.revision);
        return doc;
    }
    createSession(seed = 0) {
        return this.request('POST', '/sessions', { seed });
    }
    sessionStatus(sid) {
        return this.request('GET', `/sessions/${sid}`);
    }
    uploadDataset(sid, csvText, role = 'all') {
        return this.request('POST', `/sessions/${sid}/dataset`, { csv_text: csvText, role });
    }
    configureFeatures(sid, config) {
        return this.request('POST', `/sessions/${sid}/features`, config);
    }
    trainModel(sid, payload) {
        return this.request('POST', `/sessions/${sid}/models/train`, payload);
    }
    listModels(sid) {
        return this.request('GET', `/sessions/${sid}/models`);
    }
    evaluate(sid, split, loss) {
        return this.request('POST', `/sessions/${sid}/evaluate`, { split, loss });
    }
    getGsa(sid) {
        return this.request('GET', `/sessions/${sid}/gsa`);
    }
    getPlot(sid, params) {
        const query = new URLSearchParams();
        query.set('split', params.split);
        query.set('output', params.output);
        query.set('mode', params.mode);
        query.set('sort', params.sort);
        if (params.model_id)
            query.set('model_id', params.model_id);
        return this.request('GET', `/sessions/${sid}/plot?${query.toString()}`);
    }
    explain(sid, payload) {
        return this.request('POST', `/sessions/${sid}/explain`, payload);
    }
    getJob(jobId) {
        return this.request('GET', `/jobs/${jobId}`);
    }
}
const defaultSleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));
/** Poll a job at the standard interval until it reaches a terminal state. */
export async function waitForJob(client, jobId, onProgress, sleep = defaultSleep) {
    for (;;) {
        const job = await client.getJob(jobId);
        if (onProgress)
            onProgress(job);
        if (job.status === 'done' || job.status === 'failed')
            return job;
        await sleep(JOB_POLL_INTERVAL_MS);
    }
}
