import assert from 'node:assert/strict';
import { test } from 'node:test';
import { featureImportance, initialViewState, markRefreshed, observeRevision, refinementSelection, sourceFeature, } from '../src/state.js';
test('revision observation flags only gaps as stale', () => {
    const state = initialViewState();
    observeRevision(state, 1);
    observeRevision(state, 2);
    assert.equal(state.refreshNeeded, false);
    observeRevision(state, 5); // missed revisions 3 and 4
    assert.equal(state.refreshNeeded, true);
    assert.equal(state.lastSeenRevision, 5);
    markRefreshed(state);
    assert.equal(state.refreshNeeded, false);
    observeRevision(state, 4); // older responses never regress the counter
    assert.equal(state.lastSeenRevision, 5);
});
test('one-hot columns map back to their source feature', () => {
    assert.equal(sourceFeature('Sex=male'), 'Sex');
    assert.equal(sourceFeature('Age'), 'Age');
    assert.equal(sourceFeature('name=with=equals'), 'name');
});
test('feature importance aggregates one-hot groups by max', () => {
    const importance = featureImportance([
        { input: 'Sex=male', s1: 0.05, st: 0.30 },
        { input: 'Sex=female', s1: 0.08, st: 0.36 },
        { input: 'Age', s1: 0.2, st: 0.55 },
    ]);
    assert.deepEqual(importance.get('Sex'), { s1: 0.08, st: 0.36 });
    assert.deepEqual(importance.get('Age'), { s1: 0.2, st: 0.55 });
});
test('refinement keeps features above the ratio threshold', () => {
    const importance = new Map([
        ['A', { s1: 0.3, st: 0.6 }],
        ['B', { s1: 0.1, st: 0.4 }],
        ['C', { s1: 0.02, st: 0.1 }],
    ]);
    const { keep, drop } = refinementSelection(importance, ['A', 'B', 'C'], 0.5);
    assert.deepEqual(keep, ['A', 'B']);
    assert.deepEqual(drop, ['C']);
});
test('features without importance data stay selected', () => {
    const importance = new Map([['A', { s1: 0.3, st: 0.6 }]]);
    const { keep, drop } = refinementSelection(importance, ['A', 'Unseen'], 0.5);
    assert.deepEqual(keep, ['A', 'Unseen']);
    assert.deepEqual(drop, []);
});
