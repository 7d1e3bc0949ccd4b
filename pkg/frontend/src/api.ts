import {
    ExtractionParams, ExtractionReport, HistoryEntry, QuadCorners,
    RectifyResult, SessionInfo,
} from './types.js';
import { cornersToJson } from './corners.js';

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function unwrap<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
        let detail = resp.statusText;
        try {
            const body = await resp.json();
            if (body && typeof body.error === 'string') detail = body.error;
        } catch {
            /* non-JSON error body */
        }
        throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
}

/** Thin client over the five service endpoints; all state lives server-side. */
export class WorkbenchApi {
    constructor(private base: string = '') {}

    async createSession(file: Blob): Promise<SessionInfo> {
        const resp = await fetch(`${this.base}/sessions`, {
            method: 'POST',
            body: file,
        });
        return unwrap<SessionInfo>(resp);
    }

    async rectify(sid: string, corners: QuadCorners, outW: number, outH: number):
            Promise<RectifyResult> {
        const resp = await fetch(`${this.base}/sessions/${sid}/rectify`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({
                corners: cornersToJson(corners), out_w: outW, out_h: outH,
            }),
        });
        return unwrap<RectifyResult>(resp);
    }

    async extract(sid: string, params: ExtractionParams, preRectified = false):
            Promise<ExtractionReport> {
        const resp = await fetch(`${this.base}/sessions/${sid}/extract`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({ ...params, pre_rectified: preRectified }),
        });
        return unwrap<ExtractionReport>(resp);
    }

    async history(sid: string): Promise<HistoryEntry[]> {
        const resp = await fetch(`${this.base}/sessions/${sid}/history`);
        const body = await unwrap<{ history: HistoryEntry[] }>(resp);
        return body.history;
    }

    artifactUrl(path: string): string {
        return `${this.base}${path}`;
    }
}
