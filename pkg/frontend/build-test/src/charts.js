// Minimal SVG chart builders. They return markup strings: the server did
// all the math, these only scale values into pixels.
const SVG_NS = 'http://www.w3.org/2000/svg';
function esc(text) {
    return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/"/g, '&quot;');
}
export function barChart(data, width = 420, height = 180) {
    if (data.length === 0)
        return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}"></svg>`;
    const max = Math.max(...data.map((d) => Math.abs(d.value)), 1e-12);
    const bw = Math.max(8, Math.floor(width / data.length) - 6);
    const parts = [];
    data.forEach((d, i) => {
        const h = Math.max(1, Math.round(((height - 30) * Math.abs(d.value)) / max));
        const x = i * (bw + 6) + 4;
        const y = height - 18 - h;
        const cls = d.highlight ? 'bar best' : 'bar';
        parts.push(`<rect class="${cls}" x="${x}" y="${y}" width="${bw}" height="${h}">` +
            `<title>${esc(d.label)}: ${d.value.toPrecision(4)}</title></rect>`);
        parts.push(`<text class="bar-label" x="${x + bw / 2}" y="${height - 5}" text-anchor="middle">${esc(d.label.slice(0, 8))}</text>`);
    });
    return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}">${parts.join('')}</svg>`;
}
/** Paired first/total-order index bars per input. */
export function pairedBarChart(data, width = 460, height = 200) {
    if (data.length === 0)
        return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}"></svg>`;
    const max = Math.max(...data.map((d) => Math.max(d.first, d.total)), 1e-9);
    const group = Math.max(18, Math.floor(width / data.length) - 8);
    const bw = Math.floor(group / 2) - 1;
    const parts = [];
    data.forEach((d, i) => {
        const x0 = i * (group + 8) + 4;
        const h1 = Math.max(1, Math.round(((height - 32) * d.first) / max));
        const h2 = Math.max(1, Math.round(((height - 32) * d.total) / max));
        parts.push(`<rect class="bar s1" x="${x0}" y="${height - 20 - h1}" width="${bw}" height="${h1}">` +
            `<title>${esc(d.label)} S1=${d.first.toFixed(3)}</title></rect>`);
        parts.push(`<rect class="bar st" x="${x0 + bw + 2}" y="${height - 20 - h2}" width="${bw}" height="${h2}">` +
            `<title>${esc(d.label)} ST=${d.total.toFixed(3)}</title></rect>`);
        parts.push(`<text class="bar-label" x="${x0 + bw}" y="${height - 6}" text-anchor="middle">${esc(d.label.slice(0, 9))}</text>`);
    });
    return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}">${parts.join('')}</svg>`;
}
/** Two overlaid series (ground truth + prediction) against sample index,
 * or prediction vs ground truth when `diagonal` is set. Returns circle
 * elements carrying data-index so the panel can wire click handlers. */
export function samplePlot(groundTruth, prediction, options = {}) {
    const width = options.width ?? 560;
    const height = options.height ?? 240;
    const n = groundTruth.length;
    if (n === 0)
        return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}"></svg>`;
    const all = groundTruth.concat(prediction);
    const lo = Math.min(...all);
    const hi = Math.max(...all);
    const span = hi - lo || 1;
    const sy = (v) => height - 12 - ((height - 24) * (v - lo)) / span;
    const parts = [];
    if (options.diagonal) {
        const sx = (v) => 12 + ((width - 24) * (v - lo)) / span;
        parts.push(`<line class="diag" x1="${sx(lo)}" y1="${sy(lo)}" x2="${sx(hi)}" y2="${sy(hi)}"/>`);
        for (let i = 0; i < n; i++) {
            const cls = options.outliers?.[i] ? 'pt outlier' : 'pt';
            parts.push(`<circle class="${cls}" data-index="${i}" cx="${sx(prediction[i])}" cy="${sy(groundTruth[i])}" r="3"/>`);
        }
    }
    else {
        const sx = (i) => 12 + ((width - 24) * i) / Math.max(1, n - 1);
        for (let i = 0; i < n; i++) {
            parts.push(`<circle class="pt gt" data-index="${i}" cx="${sx(i)}" cy="${sy(groundTruth[i])}" r="3"/>`);
            parts.push(`<circle class="pt pred" data-index="${i}" cx="${sx(i)}" cy="${sy(prediction[i])}" r="3"/>`);
        }
    }
    return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}">${parts.join('')}</svg>`;
}
/** Horizontal signed attribution bars for the explanation popup. */
export function attributionBars(entries, width = 360, rowHeight = 22) {
    const height = entries.length * rowHeight + 8;
    if (entries.length === 0)
        return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}"></svg>`;
    const max = Math.max(...entries.map((e) => Math.abs(e.attribution)), 1e-12);
    const mid = width / 2;
    const parts = [];
    entries.forEach((e, i) => {
        const y = i * rowHeight + 6;
        const w = Math.max(1, Math.round(((width / 2 - 70) * Math.abs(e.attribution)) / max));
        const x = e.attribution >= 0 ? mid : mid - w;
        const cls = e.attribution >= 0 ? 'attr pos' : 'attr neg';
        parts.push(`<rect class="${cls}" x="${x}" y="${y}" width="${w}" height="${rowHeight - 8}">` +
            `<title>${esc(e.feature)}: ${e.attribution.toPrecision(4)}</title></rect>`);
        parts.push(`<text class="attr-label" x="4" y="${y + rowHeight - 12}">${esc(e.feature.slice(0, 14))}</text>`);
    });
    parts.push(`<line class="axis" x1="${mid}" y1="0" x2="${mid}" y2="${height}"/>`);
    return `<svg xmlns="${SVG_NS}" width="${width}" height="${height}">${parts.join('')}</svg>`;
}
