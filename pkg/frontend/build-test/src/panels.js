// DOM wiring for the workbench panels. Rendering only: all numbers come
// from API payloads through the controller.
import { attributionBars, barChart, pairedBarChart, samplePlot } from './charts.js';
import { sourceFeature } from './state.js';
function el(tag, attrs = {}, text) {
    const node = document.createElement(tag);
    for (const [k, v] of Object.entries(attrs))
        node.setAttribute(k, v);
    if (text !== undefined)
        node.textContent = text;
    return node;
}
function byId(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing #${id}`);
    return node;
}
const LOSSES = {
    regression: ['mae', 'mse', 'rmse', 'msle', 'rmsle', 'log_cosh'],
    classification: [
        'cross_entropy',
        'binary_cross_entropy',
        'nll',
        'hinge',
        'smoothed_hinge',
        'squared_hinge',
        'modified_huber',
        'ramp',
    ],
};
const FAMILIES = {
    gradient_boosted_trees: { rounds: 100, max_depth: 6, learning_rate: 0.1 },
    random_forest: { n_trees: 100, max_depth: 16 },
    mlp: { hidden_layers: [64, 32], epochs: 25 },
    tabular_resnet: { blocks: 2, layer_size: 64, epochs: 25 },
};
export class Panels {
    constructor(controller) {
        this.controller = controller;
    }
    hooks() {
        return {
            onColumns: (cols, rows) => this.renderFeaturePanel(cols, rows),
            onConfigured: (_, __, warnings) => this.note(warnings.length ? `configured; ${warnings.join(' | ')}` : 'configured'),
            onModels: (models) => this.renderModels(models),
            onTrainingProgress: (modelId, job) => this.note(`training ${modelId}: ${(job.progress * 100).toFixed(0)}% (${job.status})`),
            onEvaluation: (report) => this.renderErrorPlot(report),
            onPlot: (plot) => this.renderSamplePlot(plot),
            onGsa: (gsa) => this.renderGsa(gsa),
            onPopup: (popup) => this.renderPopup(popup),
            onSelectionChanged: (inputs, dropped) => {
                this.syncCheckboxes(inputs);
                this.note(`refinement unchecked: ${dropped.join(', ') || 'nothing'}`);
            },
            onError: (message) => this.note(`error: ${message}`),
        };
    }
    note(text) {
        byId('status-line').textContent = text;
    }
    // --- feature selection -------------------------------------------------
    renderFeaturePanel(columns, rows) {
        this.note(`dataset loaded: ${rows} rows, ${columns.length} columns`);
        const box = byId('feature-rows');
        box.textContent = '';
        for (const col of columns) {
            const row = el('div', { class: 'feature-row' });
            const input = el('input', { type: 'checkbox', 'data-role': 'input', 'data-name': col.name });
            const output = el('input', { type: 'checkbox', 'data-role': 'output', 'data-name': col.name });
            row.append(input, output, el('span', { class: 'feature-name' }, `${col.name} (${col.kind})`));
            box.append(row);
        }
    }
    selection() {
        const inputs = [];
        const outputs = [];
        document.querySelectorAll('#feature-rows input:checked').forEach((node) => {
            (node.dataset.role === 'input' ? inputs : outputs).push(node.dataset.name ?? '');
        });
        return { inputs, outputs };
    }
    syncCheckboxes(inputs) {
        document
            .querySelectorAll('#feature-rows input[data-role="input"]')
            .forEach((node) => {
            node.checked = inputs.includes(node.dataset.name ?? '');
        });
    }
    // --- models / error plot -----------------------------------------------
    renderModels(models) {
        const box = byId('model-list');
        box.textContent = '';
        for (const m of models) {
            box.append(el('div', { class: `model ${m.status}` }, `${m.model_id} ${m.family} [${m.status}]`));
        }
    }
    renderErrorPlot(report) {
        const data = report.entries.map((e) => ({
            label: `${e.model_id}`,
            value: e.error,
            highlight: e.model_id === report.best_model_id,
        }));
        byId('error-plot').innerHTML = barChart(data);
        byId('best-model').textContent =
            `best: ${report.best_model_id} (${report.loss} on ${report.split})`;
    }
    // --- sample plot + click-to-explain --------------------------------------
    renderSamplePlot(plot) {
        const mode = this.controller.state.plotMode;
        byId('sample-plot').innerHTML = samplePlot(plot.ground_truth, plot.prediction, {
            diagonal: mode === 'goodness_of_fit',
            outliers: plot.outliers,
        });
        document.querySelectorAll('#sample-plot circle').forEach((circle) => {
            circle.addEventListener('click', () => {
                const idx = Number(circle.dataset.index);
                const indices = plot.indices ?? [];
                const sample = indices.length ? indices[idx] : idx;
                void this.controller.selectSample(sample);
            });
        });
    }
    // --- explanation popup ----------------------------------------------------
    renderPopup(popup) {
        const dialog = byId('popup');
        dialog.hidden = false;
        byId('popup-title').textContent =
            `${popup.method.toUpperCase()} for sample ${popup.sampleIndex}`;
        byId('popup-pred').textContent = `prediction: ${popup.prediction}`;
        byId('popup-gt').textContent = `ground truth: ${popup.groundTruth}`;
        byId('popup-base').textContent =
            popup.baseValue !== null ? `base value: ${popup.baseValue.toFixed(4)}` : '';
        const probs = byId('popup-probs');
        probs.textContent = popup.probabilities
            ? 'probabilities: ' +
                Object.entries(popup.probabilities)
                    .map(([k, v]) => `${k}=${v.toFixed(3)}`)
                    .join('  ')
            : '';
        byId('popup-bars').innerHTML = attributionBars(popup.entries);
        const rows = byId('popup-rows');
        rows.textContent = '';
        for (const e of popup.entries) {
            const parts = [`${e.feature} = ${e.value}`];
            if (e.thresholdLabel)
                parts.push(`[${e.thresholdLabel}]`);
            parts.push(`${e.attribution >= 0 ? '+' : ''}${e.attribution.toFixed(4)}`);
            rows.append(el('div', { class: `popup-row ${e.direction}` }, parts.join('  ')));
        }
    }
    // --- GSA panel -------------------------------------------------------------
    renderGsa(gsa) {
        if (!gsa.outputs)
            return;
        const outputName = Object.keys(gsa.outputs)[0];
        const entries = gsa.outputs[outputName];
        byId('gsa-plot').innerHTML = pairedBarChart(entries.map((e) => ({ label: e.input, first: e.s1, total: e.st })));
        byId('gsa-title').textContent = `Sobol indices for ${outputName} (S1 | ST)`;
        const warn = byId('gsa-warnings');
        warn.textContent = (gsa.warnings ?? []).join(' | ');
        byId('refine-button').toggleAttribute('disabled', false);
    }
    // --- wiring ---------------------------------------------------------------
    bind() {
        byId('upload-button').addEventListener('click', () => {
            const file = byId('csv-file').files?.[0];
            if (!file)
                return this.note('choose a CSV first');
            void file.text().then((text) => this.controller.uploadCsv(text));
        });
        byId('configure-button').addEventListener('click', () => {
            const { inputs, outputs } = this.selection();
            const task = byId('task-select').value;
            const normalization = byId('norm-select').value;
            void this.controller
                .configure(inputs, outputs, task, normalization)
                .then(() => this.refreshLossChoices(task))
                .catch((e) => this.note(`error: ${e.message}`));
        });
        byId('train-button').addEventListener('click', () => {
            const family = byId('family-select').value;
            let params = {};
            const raw = byId('hyper-input').value.trim();
            if (raw) {
                try {
                    params = JSON.parse(raw);
                }
                catch {
                    return this.note('hyperparameters must be JSON');
                }
            }
            void this.controller.train(family, params).catch((e) => this.note(`error: ${e.message}`));
        });
        byId('evaluate-button').addEventListener('click', () => {
            const split = byId('split-select').value;
            const loss = byId('loss-select').value;
            void this.controller
                .evaluate(split, loss)
                .then(() => this.controller.refreshPlot())
                .catch((e) => this.note(`error: ${e.message}`));
        });
        byId('plot-mode').addEventListener('change', () => {
            this.controller.state.plotMode = byId('plot-mode').value;
            void this.controller.refreshPlot();
        });
        byId('sort-mode').addEventListener('change', () => {
            this.controller.state.sortMode = byId('sort-mode').value;
            void this.controller.refreshPlot();
        });
        byId('method-select').addEventListener('change', () => {
            this.controller.state.explanationMethod = byId('method-select')
                .value;
        });
        byId('normalized-toggle').addEventListener('change', () => {
            this.controller.toggleNormalized();
        });
        byId('popup-close').addEventListener('click', () => {
            byId('popup').hidden = true;
        });
        byId('refine-button').addEventListener('click', () => {
            try {
                const result = this.controller.applyRefinement();
                this.note(`refinement keeps [${result.keep.join(', ')}]; retrain to apply`);
            }
            catch (e) {
                this.note(`error: ${e.message}`);
            }
        });
        byId('retrain-button').addEventListener('click', () => {
            void this.controller
                .retrainAfterRefinement()
                .then(() => this.note('re-configured on refined features; train new models'))
                .catch((e) => this.note(`error: ${e.message}`));
        });
        this.populateSelect('family-select', Object.keys(FAMILIES));
        this.refreshLossChoices('classification');
        byId('family-select').addEventListener('change', () => {
            const family = byId('family-select').value;
            byId('hyper-input').placeholder = JSON.stringify(FAMILIES[family]);
        });
    }
    refreshLossChoices(task) {
        this.populateSelect('loss-select', LOSSES[task]);
    }
    populateSelect(id, options) {
        const select = byId(id);
        select.textContent = '';
        for (const option of options) {
            select.append(el('option', { value: option }, option));
        }
    }
}
export function featureOf(column) {
    return sourceFeature(column);
}
