// Thin typed client over /api/v1. Every response passes through the
// revision observer so the view layer can detect stale state.

import type {
    ConfigureResponse,
    EvaluationResponse,
    ExplanationResponse,
    GsaResponse,
    JobDoc,
    PlotResponse,
    SessionStatus,
    TrainResponse,
    UploadResponse,
} from './types.js';

export const API_BASE = '/api/v1';
export const JOB_POLL_INTERVAL_MS = 500;

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
export type RevisionObserver = (revision: number) => void;

async function parseError(res: Response): Promise<ApiError> {
    let message = res.statusText;
    try {
        const doc = await res.json();
        if (doc?.error?.message) message = doc.error.message;
    } catch {
        /* body was not json */
    }
    return new ApiError(res.status, message);
}

export class ApiClient {
    private fetchImpl: FetchLike;
    private onRevision: RevisionObserver;

    constructor(fetchImpl?: FetchLike, onRevision?: RevisionObserver) {
        this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
        this.onRevision = onRevision ?? (() => undefined);
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const init: RequestInit = { method, headers: {} };
        if (body !== undefined) {
            init.headers = { 'content-type': 'application/json' };
            init.body = JSON.stringify(body);
        }
        const res = await this.fetchImpl(API_BASE + path, init);
        if (!res.ok) throw await parseError(res);
        const doc = (await res.json()) as T & { revision?: number };
        if (typeof doc.revision === 'number') this.onRevision(doc.revision);
        return doc;
    }

    createSession(seed = 0): Promise<{ session_id: string; revision: number }> {
        return this.request('POST', '/sessions', { seed });
    }

    sessionStatus(sid: string): Promise<SessionStatus> {
        return this.request('GET', `/sessions/${sid}`);
    }

    uploadDataset(sid: string, csvText: string, role = 'all'): Promise<UploadResponse> {
        return this.request('POST', `/sessions/${sid}/dataset`, { csv_text: csvText, role });
    }

    configureFeatures(sid: string, config: Record<string, unknown>): Promise<ConfigureResponse> {
        return this.request('POST', `/sessions/${sid}/features`, config);
    }

    trainModel(sid: string, payload: Record<string, unknown>): Promise<TrainResponse> {
        return this.request('POST', `/sessions/${sid}/models/train`, payload);
    }

    listModels(sid: string): Promise<{ models: SessionStatus['models']; revision: number }> {
        return this.request('GET', `/sessions/${sid}/models`);
    }

    evaluate(sid: string, split: string, loss: string): Promise<EvaluationResponse> {
        return this.request('POST', `/sessions/${sid}/evaluate`, { split, loss });
    }

    getGsa(sid: string): Promise<GsaResponse> {
        return this.request('GET', `/sessions/${sid}/gsa`);
    }

    getPlot(
        sid: string,
        params: { split: string; output: string; mode: string; sort: string; model_id?: string },
    ): Promise<PlotResponse> {
        const query = new URLSearchParams();
        query.set('split', params.split);
        query.set('output', params.output);
        query.set('mode', params.mode);
        query.set('sort', params.sort);
        if (params.model_id) query.set('model_id', params.model_id);
        return this.request('GET', `/sessions/${sid}/plot?${query.toString()}`);
    }

    explain(sid: string, payload: Record<string, unknown>): Promise<ExplanationResponse> {
        return this.request('POST', `/sessions/${sid}/explain`, payload);
    }

    getJob(jobId: string): Promise<JobDoc> {
        return this.request('GET', `/jobs/${jobId}`);
    }
}

export type Sleeper = (ms: number) => Promise<void>;

const defaultSleep: Sleeper = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

/** Poll a job at the standard interval until it reaches a terminal state. */
export async function waitForJob(
    client: ApiClient,
    jobId: string,
    onProgress?: (job: JobDoc) => void,
    sleep: Sleeper = defaultSleep,
): Promise<JobDoc> {
    for (;;) {
        const job = await client.getJob(jobId);
        if (onProgress) onProgress(job);
        if (job.status === 'done' || job.status === 'failed') return job;
        await sleep(JOB_POLL_INTERVAL_MS);
    }
}
