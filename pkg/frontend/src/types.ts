// Wire payload shapes for /api/v1 (numbers arrive as flat JSON lists).

export interface SessionStatus {
    session_id: string;
    revision: number;
    has_dataset: boolean;
    configured: boolean;
    config: FeatureConfigDoc | null;
    models: ModelSummary[];
    best_model_id: string | null;
    evaluated: boolean;
    gsa_ready: boolean;
}

export interface FeatureConfigDoc {
    inputs: string[];
    outputs: string[];
    task: 'regression' | 'classification';
    normalization: 'none' | 'min_max' | 'mean_std';
    split: Record<string, number>;
}

export interface ColumnInfo {
    name: string;
    kind: 'numeric' | 'categorical';
    categories: string[] | null;
}

export interface UploadResponse {
    rows: number;
    columns: ColumnInfo[];
    role: string;
    revision: number;
}

export interface ConfigureResponse {
    revision: number;
    task: string;
    input_columns: string[];
    output_columns: string[];
    rows_kept: number;
    rows_dropped_missing: number;
    split_counts: Record<string, number>;
    warnings: string[];
}

export interface ModelSummary {
    model_id: string;
    family: string;
    status: 'training' | 'ready' | 'failed';
    job_id: string | null;
    hyperparameters: Record<string, unknown>;
    error: string | null;
}

export interface TrainResponse {
    job_id: string;
    model_id: string;
    revision: number;
}

export interface JobDoc {
    job_id: string;
    kind: string;
    status: 'queued' | 'running' | 'done' | 'failed';
    progress: number;
    result: Record<string, unknown> | null;
    error: string | null;
}

export interface EvaluationEntry {
    model_id: string;
    error: number;
}

export interface EvaluationResponse {
    split: string;
    loss: string;
    entries: EvaluationEntry[];
    best_model_id: string;
    excluded: { model_id: string; reason: string }[];
    families: Record<string, string>;
    gsa_job_id: string;
    revision: number;
}

export interface PlotResponse {
    output: string;
    split: string;
    ground_truth: number[];
    prediction: number[];
    indices?: number[];
    outliers?: boolean[];
    categories?: string[];
    model_id: string;
    revision: number;
}

export interface SobolEntry {
    input: string;
    s1: number;
    st: number;
}

export interface GsaResponse {
    status: 'queued' | 'running' | 'done';
    outputs?: Record<string, SobolEntry[]>;
    total_variance?: Record<string, number>;
    warnings?: string[];
    job_id?: string;
    revision: number;
}

export interface ExplanationEntryDoc {
    feature: string;
    attribution: number;
    direction: 'positive' | 'negative';
    value_raw: number | string;
    value_normalized: number | string;
    value: number | string;
    threshold_low: number | null;
    threshold_high: number | null;
    category: string | null;
}

export interface ExplanationResponse {
    method: 'lime' | 'shap';
    split: string;
    sample_index: number;
    prediction: number[];
    predicted_label: string | number;
    ground_truth: string | number;
    target_output: string;
    entries: ExplanationEntryDoc[];
    base_value: number | null;
    prediction_probabilities: Record<string, number> | null;
    normalized: boolean;
    warnings: string[];
    model_id: string;
    revision: number;
}
