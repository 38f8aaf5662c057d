// A scripted stand-in for the ApiClient: canned responses, call counting,
// and jobs that finish after a configurable number of polls.
export class FakeClient {
    constructor() {
        this.calls = {};
        this.revision = 0;
        this.jobPollsUntilDone = 2;
        this.jobPolls = {};
        this.explainPayload = {};
        this.gsaPayload = {};
    }
    count(name) {
        this.calls[name] = (this.calls[name] ?? 0) + 1;
    }
    bump() {
        this.revision += 1;
        return this.revision;
    }
    async createSession() {
        this.count('createSession');
        return { session_id: 's0001', revision: this.revision };
    }
    async sessionStatus() {
        this.count('sessionStatus');
        return {
            session_id: 's0001',
            revision: this.revision,
            has_dataset: true,
            configured: true,
            config: null,
            models: [],
            best_model_id: null,
            evaluated: false,
            gsa_ready: false,
        };
    }
    async uploadDataset() {
        this.count('uploadDataset');
        return {
            rows: 10,
            columns: [
                { name: 'a', kind: 'numeric', categories: null },
                { name: 'label', kind: 'categorical', categories: ['x', 'y'] },
            ],
            role: 'all',
            revision: this.bump(),
        };
    }
    async configureFeatures(_sid, config) {
        this.count('configureFeatures');
        return {
            revision: this.bump(),
            task: String(config.task),
            input_columns: config.inputs ?? [],
            output_columns: config.outputs ?? [],
            rows_kept: 10,
            rows_dropped_missing: 0,
            split_counts: { train: 7, validation: 2, test: 1 },
            warnings: [],
        };
    }
    async trainModel() {
        this.count('trainModel');
        return { job_id: `job-${this.calls.trainModel}`, model_id: 'm000', revision: this.bump() };
    }
    async listModels() {
        this.count('listModels');
        return {
            models: [
                {
                    model_id: 'm000',
                    family: 'gradient_boosted_trees',
                    status: 'ready',
                    job_id: 'job-1',
                    hyperparameters: {},
                    error: null,
                },
            ],
            revision: this.revision,
        };
    }
    async evaluate() {
        this.count('evaluate');
        return {
            split: 'validation',
            loss: 'cross_entropy',
            entries: [{ model_id: 'm000', error: 0.41 }],
            best_model_id: 'm000',
            excluded: [],
            families: { m000: 'gradient_boosted_trees' },
            gsa_job_id: 'gsa-job',
            revision: this.bump(),
        };
    }
    async getGsa() {
        this.count('getGsa');
        return {
            status: 'done',
            outputs: {
                'Survived=1': [
                    { input: 'Pclass', s1: 0.38, st: 0.64 },
                    { input: 'Sex=male', s1: 0.05, st: 0.3 },
                    { input: 'Sex=female', s1: 0.08, st: 0.36 },
                    { input: 'Age', s1: 0.2, st: 0.55 },
                    { input: 'SibSp', s1: 0.1, st: 0.36 },
                    { input: 'Parch', s1: 0.04, st: 0.18 },
                    { input: 'Fare', s1: 0.05, st: 0.21 },
                ],
            },
            total_variance: { 'Survived=1': 0.11 },
            warnings: [],
            revision: this.revision,
            ...this.gsaPayload,
        };
    }
    async getPlot() {
        this.count('getPlot');
        return {
            output: 'Survived',
            split: 'validation',
            ground_truth: [0, 1, 1],
            prediction: [0, 1, 0],
            indices: [0, 1, 2],
            model_id: 'm000',
            revision: this.revision,
        };
    }
    async explain(_sid, payload) {
        this.count('explain');
        return {
            method: payload.method ?? 'lime',
            split: String(payload.split),
            sample_index: Number(payload.sample_index),
            prediction: [0.84, 0.16],
            predicted_label: '0',
            ground_truth: '0',
            target_output: 'Survived=0',
            entries: [
                {
                    feature: 'Pclass',
                    attribution: -0.21,
                    direction: 'negative',
                    value_raw: 3,
                    value_normalized: 1.0,
                    value: 3,
                    threshold_low: 2,
                    threshold_high: null,
                    category: null,
                },
                {
                    feature: 'Sex',
                    attribution: -0.2,
                    direction: 'negative',
                    value_raw: 'male',
                    value_normalized: 'male',
                    value: 'male',
                    threshold_low: null,
                    threshold_high: null,
                    category: 'male',
                },
            ],
            base_value: payload.method === 'shap' ? 0.42 : null,
            prediction_probabilities: { '0': 0.84, '1': 0.16 },
            normalized: Boolean(payload.normalized),
            warnings: [],
            model_id: 'm000',
            revision: this.revision,
        };
    }
    async getJob(jobId) {
        this.count('getJob');
        this.jobPolls[jobId] = (this.jobPolls[jobId] ?? 0) + 1;
        const done = this.jobPolls[jobId] >= this.jobPollsUntilDone;
        if (done && jobId.startsWith('job-'))
            this.bump();
        return {
            job_id: jobId,
            kind: jobId.startsWith('gsa') ? 'gsa' : 'train',
            status: done ? 'done' : 'running',
            progress: done ? 1 : 0.5,
            result: done ? { model_id: 'm000' } : null,
            error: null,
        };
    }
}
