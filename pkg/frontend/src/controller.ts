// Orchestrates the loop against the API: upload, configure, train with
// job polling, evaluate, fetch plots/GSA, explain on click, and feed the
// GSA refinement back into the feature selection. Pure logic: rendering
// happens through the injected view hooks, so this whole class is
// testable without a DOM.

import { ApiClient, Sleeper, waitForJob } from './api.js';
import {
    ViewState,
    featureImportance,
    initialViewState,
    markRefreshed,
    observeRevision,
    refinementSelection,
} from './state.js';
import type {
    ColumnInfo,
    EvaluationResponse,
    ExplanationResponse,
    GsaResponse,
    JobDoc,
    PlotResponse,
    SessionStatus,
} from './types.js';

export interface PopupModel {
    method: 'lime' | 'shap';
    sampleIndex: number;
    prediction: string;
    groundTruth: string;
    baseValue: number | null;
    probabilities: Record<string, number> | null;
    entries: {
        feature: string;
        attribution: number;
        direction: 'positive' | 'negative';
        value: number | string;
        thresholdLabel: string | null;
    }[];
    warnings: string[];
}

export interface ViewHooks {
    onColumns?(columns: ColumnInfo[], rows: number): void;
    onConfigured?(inputColumns: string[], outputs: string[], warnings: string[]): void;
    onModels?(models: SessionStatus['models']): void;
    onTrainingProgress?(modelId: string, job: JobDoc): void;
    onEvaluation?(report: EvaluationResponse): void;
    onPlot?(plot: PlotResponse): void;
    onGsa?(gsa: GsaResponse): void;
    onPopup?(popup: PopupModel): void;
    onSelectionChanged?(inputs: string[], dropped: string[]): void;
    onError?(message: string): void;
}

function formatThreshold(e: {
    feature: string;
    threshold_low: number | null;
    threshold_high: number | null;
    category: string | null;
}): string | null {
    if (e.category !== null) return `${e.feature} = ${e.category}`;
    const lo = e.threshold_low;
    const hi = e.threshold_high;
    if (lo === null && hi === null) return null;
    if (lo === null) return `${e.feature} ≤ ${hi}`;
    if (hi === null) return `${e.feature} > ${lo}`;
    return `${lo} < ${e.feature} ≤ ${hi}`;
}

export class WorkbenchController {
    state: ViewState = initialViewState();
    columns: ColumnInfo[] = [];
    selectedInputs: string[] = [];
    selectedOutputs: string[] = [];
    task: 'regression' | 'classification' = 'classification';
    normalization = 'none';
    lastExplanation: ExplanationResponse | null = null;
    lastGsa: GsaResponse | null = null;
    explainRequestCount = 0;

    constructor(
        private client: ApiClient,
        public view: ViewHooks = {},
        private sleep?: Sleeper,
    ) {}

    noteRevision = (revision: number): void => {
        observeRevision(this.state, revision);
    };

    private async beforeMutation(): Promise<void> {
        if (this.state.refreshNeeded && this.state.sessionId) {
            const status = await this.client.sessionStatus(this.state.sessionId);
            this.view.onModels?.(status.models);
            markRefreshed(this.state);
        }
    }

    private sid(): string {
        if (!this.state.sessionId) throw new Error('no session yet');
        return this.state.sessionId;
    }

    async start(seed = 0): Promise<void> {
        const doc = await this.client.createSession(seed);
        this.state.sessionId = doc.session_id;
        this.state.lastSeenRevision = doc.revision;
    }

    async uploadCsv(text: string): Promise<void> {
        await this.beforeMutation();
        const doc = await this.client.uploadDataset(this.sid(), text);
        this.noteRevision(doc.revision);
        this.columns = doc.columns;
        this.selectedInputs = [];
        this.selectedOutputs = [];
        this.view.onColumns?.(doc.columns, doc.rows);
    }

    async configure(
        inputs: string[],
        outputs: string[],
        task: 'regression' | 'classification',
        normalization = 'none',
        split?: Record<string, number>,
    ): Promise<void> {
        await this.beforeMutation();
        const doc = await this.client.configureFeatures(this.sid(), {
            inputs,
            outputs,
            task,
            normalization,
            ...(split ? { split } : {}),
        });
        this.noteRevision(doc.revision);
        this.selectedInputs = [...inputs];
        this.selectedOutputs = [...outputs];
        this.task = task;
        this.normalization = normalization;
        this.state.selectedOutput = outputs[0] ?? null;
        this.lastGsa = null;
        this.lastExplanation = null;
        this.view.onConfigured?.(doc.input_columns, doc.output_columns, doc.warnings);
    }

    async train(family: string, hyperparameters: Record<string, unknown> = {}): Promise<JobDoc> {
        await this.beforeMutation();
        const doc = await this.client.trainModel(this.sid(), { family, hyperparameters });
        this.noteRevision(doc.revision);
        const job = await waitForJob(
            this.client,
            doc.job_id,
            (j) => this.view.onTrainingProgress?.(doc.model_id, j),
            this.sleep,
        );
        const models = await this.client.listModels(this.sid());
        this.noteRevision(models.revision);
        this.view.onModels?.(models.models);
        if (job.status === 'failed') {
            this.view.onError?.(`training failed: ${job.error}`);
        }
        return job;
    }

    async evaluate(split?: string, loss?: string): Promise<EvaluationResponse> {
        await this.beforeMutation();
        if (split) this.state.split = split;
        if (loss) this.state.loss = loss;
        const report = await this.client.evaluate(this.sid(), this.state.split, this.state.loss);
        this.noteRevision(report.revision);
        this.view.onEvaluation?.(report);
        // the loop auto-runs GSA on the fresh best model; follow it
        const job = await waitForJob(this.client, report.gsa_job_id, undefined, this.sleep);
        if (job.status === 'done') {
            const gsa = await this.client.getGsa(this.sid());
            this.noteRevision(gsa.revision);
            this.lastGsa = gsa;
            this.view.onGsa?.(gsa);
        } else {
            this.view.onError?.(`GSA failed: ${job.error}`);
        }
        return report;
    }

    async refreshPlot(): Promise<PlotResponse | null> {
        if (!this.state.selectedOutput) return null;
        const plot = await this.client.getPlot(this.sid(), {
            split: this.state.split,
            output: this.state.selectedOutput,
            mode: this.state.plotMode,
            sort: this.state.sortMode,
        });
        this.noteRevision(plot.revision);
        this.view.onPlot?.(plot);
        return plot;
    }

    /** A click on one plotted sample: exactly one explain request. */
    async selectSample(sampleIndex: number): Promise<PopupModel> {
        this.state.selectedSample = sampleIndex;
        this.explainRequestCount += 1;
        const doc = await this.client.explain(this.sid(), {
            split: this.state.split,
            sample_index: sampleIndex,
            method: this.state.explanationMethod,
            normalized: this.state.normalized,
        });
        this.noteRevision(doc.revision);
        this.lastExplanation = doc;
        const popup = this.popupModel();
        this.view.onPopup?.(popup);
        return popup;
    }

    /** Rebuild the popup from the cached explanation; the raw/normalized
     * toggle never re-requests attributions. */
    popupModel(): PopupModel {
        const doc = this.lastExplanation;
        if (!doc) throw new Error('no explanation yet');
        const normalized = this.state.normalized;
        return {
            method: doc.method,
            sampleIndex: doc.sample_index,
            prediction: String(doc.predicted_label),
            groundTruth: String(doc.ground_truth),
            baseValue: doc.base_value,
            probabilities: doc.prediction_probabilities,
            entries: doc.entries.map((e) => ({
                feature: e.feature,
                attribution: e.attribution,
                direction: e.direction,
                value: normalized ? e.value_normalized : e.value_raw,
                thresholdLabel: doc.method === 'lime' ? formatThreshold(e) : null,
            })),
            warnings: doc.warnings,
        };
    }

    toggleNormalized(): PopupModel | null {
        this.state.normalized = !this.state.normalized;
        if (!this.lastExplanation) return null;
        const popup = this.popupModel();
        this.view.onPopup?.(popup);
        return popup;
    }

    /** GSA refinement: uncheck the low-importance inputs, keeping the rest
     * selected so the user can immediately retrain. */
    applyRefinement(keepRatio = 0.5): { keep: string[]; drop: string[] } {
        const gsa = this.lastGsa;
        if (!gsa || !gsa.outputs) throw new Error('no GSA result to refine from');
        const outputName = Object.keys(gsa.outputs)[0];
        const importance = featureImportance(gsa.outputs[outputName]);
        const result = refinementSelection(importance, this.selectedInputs, keepRatio);
        this.selectedInputs = result.keep;
        this.view.onSelectionChanged?.(result.keep, result.drop);
        return result;
    }

    /** Re-configure with the refined selection; training becomes possible
     * again on the narrowed feature set. */
    async retrainAfterRefinement(): Promise<void> {
        await this.configure(
            this.selectedInputs,
            this.selectedOutputs,
            this.task,
            this.normalization,
        );
    }
}
