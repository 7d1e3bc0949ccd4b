import { afterEach, describe, expect, it, vi } from 'vitest';
import { ApiError, WorkbenchApi } from '../src/api.js';
import { DEFAULT_PARAMS, QuadCorners } from '../src/types.js';

const square: QuadCorners = [
    { x: 0, y: 0 }, { x: 99, y: 0 }, { x: 99, y: 99 }, { x: 0, y: 99 },
];

function jsonResponse(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { 'content-type': 'application/json' },
    });
}

afterEach(() => {
    vi.unstubAllGlobals();
});

describe('WorkbenchApi', () => {
    it('posts the raw file body to /sessions', async () => {
        const fetchMock = vi.fn().mockResolvedValue(jsonResponse(
            { session_id: 'abc', width: 100, height: 80 }, 201));
        vi.stubGlobal('fetch', fetchMock);
        const api = new WorkbenchApi('http://h');

        const info = await api.createSession(new Blob(['png-bytes']));

        expect(info.session_id).toBe('abc');
        const [url, init] = fetchMock.mock.calls[0];
        expect(url).toBe('http://h/sessions');
        expect(init.method).toBe('POST');
        expect(init.body).toBeInstanceOf(Blob);
    });

    it('sends corners as [x, y] pairs with output size', async () => {
        const fetchMock = vi.fn().mockResolvedValue(jsonResponse({
            artifact: '/a', thumbnail: '/t', sha256: '00', width: 100, height: 80,
        }));
        vi.stubGlobal('fetch', fetchMock);

        await new WorkbenchApi().rectify('abc', square, 100, 80);

        const [url, init] = fetchMock.mock.calls[0];
        expect(url).toBe('/sessions/abc/rectify');
        expect(JSON.parse(init.body)).toEqual({
            corners: [[0, 0], [99, 0], [99, 99], [0, 99]],
            out_w: 100,
            out_h: 80,
        });
    });

    it('merges params and the pre_rectified flag in extract', async () => {
        const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ period: 73 }));
        vi.stubGlobal('fetch', fetchMock);

        await new WorkbenchApi().extract('abc', DEFAULT_PARAMS, true);

        const body = JSON.parse(fetchMock.mock.calls[0][1].body);
        expect(body.pre_rectified).toBe(true);
        expect(body.median_window).toBe(DEFAULT_PARAMS.median_window);
    });

    it('unwraps the history envelope', async () => {
        const entry = {
            params: DEFAULT_PARAMS,
            report: { period: 73, shift: [0, 0], bits: null,
                      bch: { status: 'skipped', payload: null, corrections: null },
                      warnings: [] },
        };
        vi.stubGlobal('fetch',
                      vi.fn().mockResolvedValue(jsonResponse({ history: [entry] })));

        const history = await new WorkbenchApi().history('abc');

        expect(history).toHaveLength(1);
        expect(history[0].report.period).toBe(73);
    });

    it('raises ApiError with the service error message', async () => {
        vi.stubGlobal('fetch', vi.fn().mockResolvedValue(
            jsonResponse({ error: 'unknown session' }, 404)));

        const err = await new WorkbenchApi().history('nope').catch(e => e);

        expect(err).toBeInstanceOf(ApiError);
        expect(err.status).toBe(404);
        expect(err.message).toBe('unknown session');
    });

    it('falls back to the status text for non-JSON error bodies', async () => {
        vi.stubGlobal('fetch', vi.fn().mockResolvedValue(
            new Response('<html>', { status: 500, statusText: 'Internal Error' })));

        const err = await new WorkbenchApi().history('abc').catch(e => e);

        expect(err).toBeInstanceOf(ApiError);
        expect(err.message).toBe('Internal Error');
    });

    it('prefixes artifact URLs with the base', () => {
        expect(new WorkbenchApi('http://h').artifactUrl('/sessions/a/artifacts/x.png'))
            .toBe('http://h/sessions/a/artifacts/x.png');
    });
});
