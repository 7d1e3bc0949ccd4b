import { cornersToJson } from './corners.js';
export class ApiError extends Error {
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
async function unwrap(resp) {
    if (!resp.ok) {
        let detail = resp.statusText;
        try {
            const body = await resp.json();
            if (body && typeof body.error === 'string')
                detail = body.error;
        }
        catch {
            /* non-JSON error body */
        }
        throw new ApiError(resp.status, detail);
    }
    return resp.json();
}
/** Thin client over the five service endpoints; all state lives server-side. */
export class WorkbenchApi {
    constructor(base = '') {
        this.base = base;
    }
    async createSession(file) {
        const resp = await fetch(`${this.base}/sessions`, {
            method: 'POST',
            body: file,
        });
        return unwrap(resp);
    }
    async rectify(sid, corners, outW, outH) {
        const resp = await fetch(`${this.base}/sessions/${sid}/rectify`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({
                corners: cornersToJson(corners), out_w: outW, out_h: outH,
            }),
        });
        return unwrap(resp);
    }
    async extract(sid, params, preRectified = false) {
        const resp = await fetch(`${this.base}/sessions/${sid}/extract`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({ ...params, pre_rectified: preRectified }),
        });
        return unwrap(resp);
    }
    async history(sid) {
        const resp = await fetch(`${this.base}/sessions/${sid}/history`);
        const body = await unwrap(resp);
        return body.history;
    }
    artifactUrl(path) {
        return `${this.base}${path}`;
    }
}
