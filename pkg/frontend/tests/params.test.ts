import { describe, expect, it } from 'vitest';
import { PARAM_FIELDS, paramsEqual, validateParams } from '../src/params.js';
import { DEFAULT_PARAMS } from '../src/types.js';

describe('validateParams', () => {
    it('accepts the defaults', () => {
        expect(validateParams(DEFAULT_PARAMS)).toEqual({});
    });

    it('rejects an even median window', () => {
        const errors = validateParams({ ...DEFAULT_PARAMS, median_window: 14 });
        expect(errors.median_window).toMatch(/odd/);
    });

    it('rejects a median window below 3', () => {
        expect(validateParams({ ...DEFAULT_PARAMS, median_window: 1 })
            .median_window).toBeTruthy();
    });

    it('rejects thresholds outside (0, 1)', () => {
        expect(validateParams({ ...DEFAULT_PARAMS, threshold: 0 }).threshold)
            .toBeTruthy();
        expect(validateParams({ ...DEFAULT_PARAMS, threshold: 1 }).threshold)
            .toBeTruthy();
    });

    it('rejects an inverted period range on both fields', () => {
        const errors = validateParams({
            ...DEFAULT_PARAMS, period_min: 300, period_max: 100,
        });
        expect(errors.period_min).toBeTruthy();
        expect(errors.period_max).toBeTruthy();
    });

    it('rejects a non-positive score filter sigma', () => {
        expect(validateParams({ ...DEFAULT_PARAMS, gauss_sigma: 0 }).gauss_sigma)
            .toBeTruthy();
    });
});

describe('PARAM_FIELDS', () => {
    it('covers every extraction parameter exactly once', () => {
        const keys = PARAM_FIELDS.map(f => f.key).sort();
        expect(keys).toEqual(Object.keys(DEFAULT_PARAMS).sort());
    });
});

describe('paramsEqual', () => {
    it('treats copies as equal', () => {
        expect(paramsEqual(DEFAULT_PARAMS, { ...DEFAULT_PARAMS })).toBe(true);
    });

    it('detects a changed field', () => {
        expect(paramsEqual(DEFAULT_PARAMS,
                           { ...DEFAULT_PARAMS, gauss_sigma: 3 })).toBe(false);
    });
});
