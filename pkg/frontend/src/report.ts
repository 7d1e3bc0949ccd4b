import { ExtractionReport } from './types.js';

export type BadgeKind = 'ok' | 'warn' | 'fail' | 'none';

/** Badge color logic: green only for a clean BCH decode, yellow when the
 *  decode succeeded but the pipeline flagged warnings, red on failure. */
export function badgeFor(report: ExtractionReport): { kind: BadgeKind; text: string } {
    const bch = report.bch;
    if (bch.status === 'ok') {
        const text = `payload 0x${bch.payload}, ${bch.corrections} corrections`;
        return report.warnings.length > 0
            ? { kind: 'warn', text: `${text} (with warnings)` }
            : { kind: 'ok', text };
    }
    if (bch.status === 'failed') {
        return { kind: 'fail', text: 'BCH decode failed' };
    }
    return report.warnings.length > 0
        ? { kind: 'warn', text: report.warnings[0] }
        : { kind: 'none', text: 'no error correction run' };
}

/** Per-bit confidence in [0,1]: how far the probability sits from 0.5. */
export function bitConfidence(prob: number): number {
    return Math.min(1, Math.abs(prob - 0.5) * 2);
}

export interface BitCell {
    bit: 0 | 1;
    confidence: number;
}

export function bitCells(report: ExtractionReport): BitCell[] {
    if (!report.probabilities) return [];
    return report.probabilities.map(p => ({
        bit: p > 0.5 ? 1 : 0,
        confidence: bitConfidence(p),
    }));
}

/** Normalized polyline for the period score curve (y flipped for canvas). */
export function scoreCurvePath(report: ExtractionReport, w: number, h: number):
        { x: number; y: number }[] {
    const curve = report.score_curve;
    if (curve.length === 0) return [];
    const ps = curve.map(c => c.p);
    const ss = curve.map(c => c.score);
    const pMin = Math.min(...ps);
    const pMax = Math.max(...ps);
    const sMax = Math.max(...ss) || 1;
    return curve.map(c => ({
        x: pMax === pMin ? 0 : ((c.p - pMin) / (pMax - pMin)) * (w - 1),
        y: (h - 1) * (1 - c.score / sMax),
    }));
}

export function formatTimings(report: ExtractionReport): string {
    const total = Object.values(report.timings).reduce((a, b) => a + b, 0);
    return `${(total * 1000).toFixed(0)} ms`;
}
