// View state for the workbench loop. The server is the single source of
// numeric truth; this object only tracks what the user is looking at and
// the last revision seen, so a newer revision forces a refresh before the
// next mutation.

export interface ViewState {
    sessionId: string | null;
    split: string;
    loss: string;
    plotMode: 'series' | 'goodness_of_fit';
    sortMode: 'none' | 'ground_truth' | 'prediction';
    selectedOutput: string | null;
    selectedSample: number | null;
    explanationMethod: 'lime' | 'shap';
    normalized: boolean;
    lastSeenRevision: number;
    refreshNeeded: boolean;
}

export function initialViewState(): ViewState {
    return {
        sessionId: null,
        split: 'validation',
        loss: 'mse',
        plotMode: 'series',
        sortMode: 'none',
        selectedOutput: null,
        selectedSample: null,
        explanationMethod: 'lime',
        normalized: false,
        lastSeenRevision: 0,
        refreshNeeded: false,
    };
}

/** Record a revision carried by a server response. Seeing a revision newer
 * than the last known one (e.g. written by a background job) marks the view
 * stale: the controller must refresh before its next mutation. */
export function observeRevision(state: ViewState, revision: number): void {
    if (revision > state.lastSeenRevision + 1) {
        state.refreshNeeded = true;
    }
    if (revision > state.lastSeenRevision) {
        state.lastSeenRevision = revision;
    }
}

export function markRefreshed(state: ViewState): void {
    state.refreshNeeded = false;
}

/** Derive the original feature name of an encoded column ("Sex=male" -> "Sex"). */
export function sourceFeature(column: string): string {
    const i = column.indexOf('=');
    return i < 0 ? column : column.slice(0, i);
}

/** Aggregate per-column Sobol entries to original features (max over the
 * one-hot group, matching how a user reads the grouped bars). */
export function featureImportance(
    entries: { input: string; s1: number; st: number }[],
): Map<string, { s1: number; st: number }> {
    const byFeature = new Map<string, { s1: number; st: number }>();
    for (const e of entries) {
        const name = sourceFeature(e.input);
        const cur = byFeature.get(name);
        if (!cur) {
            byFeature.set(name, { s1: e.s1, st: e.st });
        } else {
            cur.s1 = Math.max(cur.s1, e.s1);
            cur.st = Math.max(cur.st, e.st);
        }
    }
    return byFeature;
}

/** The refinement rule: keep features whose total-order index reaches
 * `keepRatio` of the strongest one; the rest get unchecked. */
export function refinementSelection(
    importance: Map<string, { s1: number; st: number }>,
    currentInputs: string[],
    keepRatio = 0.5,
): { keep: string[]; drop: string[] } {
    let maxSt = 0;
    for (const name of currentInputs) {
        const imp = importance.get(name);
        if (imp) maxSt = Math.max(maxSt, imp.st);
    }
    const keep: string[] = [];
    const drop: string[] = [];
    for (const name of currentInputs) {
        const imp = importance.get(name);
        if (imp && maxSt > 0 && imp.st < keepRatio * maxSt) {
            drop.push(name);
        } else {
            keep.push(name);
        }
    }
    return { keep, drop };
}
