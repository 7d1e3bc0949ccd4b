import { ExtractionParams } from './types.js';

export interface FieldSpec {
    key: keyof ExtractionParams;
    label: string;
    step: number;
    validate: (v: number, all: ExtractionParams) => string | null;
}

export const PARAM_FIELDS: FieldSpec[] = [
    {
        key: 'median_window',
        label: 'median window a (px)',
        step: 2,
        validate: v =>
            v < 3 || v % 2 === 0 ? 'must be an odd integer ≥ 3' : null,
    },
    {
        key: 'threshold',
        label: 'residual threshold t',
        step: 1 / 255,
        validate: v => (v <= 0 || v >= 1 ? 'must be in (0, 1)' : null),
    },
    {
        key: 'period_min',
        label: 'period min p0 (px)',
        step: 1,
        validate: (v, all) =>
            v < 2 ? 'must be ≥ 2'
                : v >= all.period_max ? 'must be below period max' : null,
    },
    {
        key: 'period_max',
        label: 'period max p1 (px)',
        step: 1,
        validate: (v, all) =>
            v <= all.period_min ? 'must be above period min' : null,
    },
    {
        key: 'gauss_sigma',
        label: 'score filter σ',
        step: 0.1,
        validate: v => (v <= 0 ? 'must be positive' : null),
    },
];

/** Map of field -> error message; empty when the form can be submitted. */
export function validateParams(p: ExtractionParams): Partial<Record<keyof ExtractionParams, string>> {
    const errors: Partial<Record<keyof ExtractionParams, string>> = {};
    for (const f of PARAM_FIELDS) {
        const msg = f.validate(p[f.key], p);
        if (msg) errors[f.key] = msg;
    }
    return errors;
}

export function paramsEqual(a: ExtractionParams, b: ExtractionParams): boolean {
    return PARAM_FIELDS.every(f => a[f.key] === b[f.key]);
}
