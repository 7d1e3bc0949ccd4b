export interface Point {
    x: number;
    y: number;
}

/** Corner handles in TL, TR, BR, BL order (the service contract). */
export type QuadCorners = [Point, Point, Point, Point];

export interface ExtractionParams {
    median_window: number;
    threshold: number;
    period_min: number;
    period_max: number;
    gauss_sigma: number;
}

export const DEFAULT_PARAMS: ExtractionParams = {
    median_window: 15,
    threshold: 16 / 255,
    period_min: 40,
    period_max: 400,
    gauss_sigma: 2.0,
};

export interface BchResult {
    status: 'ok' | 'failed' | 'skipped';
    payload: string | null;
    corrections: number | null;
}

export interface ExtractionReport {
    period: number | null;
    score_curve: { p: number; score: number }[];
    shift: [number, number] | null;
    bits: string | null;
    probabilities: number[] | null;
    bch: BchResult;
    warnings: string[];
    timings: Record<string, number>;
    artifacts?: Record<string, string>;
}

export interface SessionInfo {
    session_id: string;
    width: number;
    height: number;
}

export interface RectifyResult {
    artifact: string;
    thumbnail: string;
    sha256: string;
    width: number;
    height: number;
}

export interface HistoryEntry {
    params: ExtractionParams & Record<string, unknown>;
    report: Pick<ExtractionReport, 'period' | 'shift' | 'bits' | 'bch' | 'warnings'>;
}
