import { WorkbenchApi, ApiError } from './api.js';
import {
    clampToImage, cornersToCliString, frameCorners, hitTestHandle,
    isConvexQuad, snapToPixel,
} from './corners.js';
import { PARAM_FIELDS, validateParams } from './params.js';
import { badgeFor, bitCells, formatTimings, scoreCurvePath } from './report.js';
import {
    DEFAULT_PARAMS, ExtractionParams, ExtractionReport, HistoryEntry,
    QuadCorners,
} from './types.js';

const api = new WorkbenchApi('');

interface State {
    sessionId: string | null;
    imageW: number;
    imageH: number;
    corners: QuadCorners;
    params: ExtractionParams;
    rectified: boolean;
    busy: boolean;
    photo: HTMLImageElement | null;
}

const state: State = {
    sessionId: null,
    imageW: 0,
    imageH: 0,
    corners: frameCorners(1, 1),
    params: { ...DEFAULT_PARAMS },
    rectified: false,
    busy: false,
    photo: null,
};

const $ = <T extends HTMLElement>(id: string): T =>
    document.getElementById(id) as T;

const canvas = $<HTMLCanvasElement>('photo-canvas');
const ctx = canvas.getContext('2d')!;
const HANDLE_RADIUS = 8;
let dragging = -1;

function toast(message: string, isError = true): void {
    const el = $('toast');
    el.textContent = message;
    el.className = isError ? 'toast error show' : 'toast show';
    setTimeout(() => { el.className = 'toast'; }, 4000);
}

function canvasScale(): number {
    return state.imageW > 0 ? canvas.width / state.imageW : 1;
}

function draw(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!state.photo) return;
    ctx.drawImage(state.photo, 0, 0, canvas.width, canvas.height);
    const k = canvasScale();
    const pts = state.corners.map(c => ({ x: c.x * k, y: c.y * k }));
    ctx.strokeStyle = isConvexQuad(state.corners) ? '#2ecc71' : '#e74c3c';
    ctx.lineWidth = 2;
    ctx.beginPath();
    pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.closePath();
    ctx.stroke();
    pts.forEach((p, i) => {
        ctx.fillStyle = i === dragging ? '#f39c12' : '#3498db';
        ctx.beginPath();
        ctx.arc(p.x, p.y, HANDLE_RADIUS, 0, 2 * Math.PI);
        ctx.fill();
    });
    $('corner-string').textContent = cornersToCliString(state.corners);
}

function pointerPos(ev: MouseEvent): { x: number; y: number } {
    const r = canvas.getBoundingClientRect();
    const k = canvasScale();
    return {
        x: (ev.clientX - r.left) * (canvas.width / r.width) / k,
        y: (ev.clientY - r.top) * (canvas.height / r.height) / k,
    };
}

canvas.addEventListener('mousedown', ev => {
    const p = pointerPos(ev);
    dragging = hitTestHandle(state.corners, p, HANDLE_RADIUS * 2 / canvasScale());
    draw();
});
canvas.addEventListener('mousemove', ev => {
    if (dragging < 0) return;
    const p = clampToImage(pointerPos(ev), state.imageW, state.imageH);
    state.corners[dragging] = snapToPixel(p);
    state.rectified = false;
    draw();
});
window.addEventListener('mouseup', () => {
    dragging = -1;
    draw();
});

async function upload(file: File): Promise<void> {
    try {
        const info = await api.createSession(file);
        state.sessionId = info.session_id;
        state.imageW = info.width;
        state.imageH = info.height;
        state.corners = frameCorners(info.width, info.height);
        state.rectified = false;
        const img = new Image();
        img.onload = () => {
            state.photo = img;
            canvas.width = Math.min(900, info.width);
            canvas.height = Math.round(canvas.width * info.height / info.width);
            draw();
        };
        img.src = URL.createObjectURL(file);
        $('session-label').textContent = `session ${info.session_id.slice(0, 8)} ` +
            `(${info.width}×${info.height})`;
        renderHistory([]);
    } catch (e) {
        toast(e instanceof ApiError ? `upload rejected: ${e.message}` : String(e));
    }
}

$('file-input').addEventListener('change', ev => {
    const input = ev.target as HTMLInputElement;
    if (input.files && input.files[0]) void upload(input.files[0]);
});

function buildParamForm(): void {
    const form = $('param-form');
    form.innerHTML = '';
    for (const f of PARAM_FIELDS) {
        const row = document.createElement('label');
        row.className = 'param-row';
        const span = document.createElement('span');
        span.textContent = f.label;
        const input = document.createElement('input');
        input.type = 'number';
        input.step = String(f.step);
        input.value = String(state.params[f.key]);
        input.addEventListener('input', () => {
            state.params[f.key] = Number(input.value);
            const errors = validateParams(state.params);
            input.className = errors[f.key] ? 'invalid' : '';
            row.title = errors[f.key] ?? '';
        });
        row.append(span, input);
        form.append(row);
    }
}

async function doRectify(): Promise<void> {
    if (!state.sessionId) return toast('upload a photograph first');
    if (!isConvexQuad(state.corners)) {
        return toast('corners are collinear or non-convex; drag the handles apart');
    }
    try {
        const res = await api.rectify(state.sessionId, state.corners,
                                      state.imageW, state.imageH);
        state.rectified = true;
        const img = $<HTMLImageElement>('rectified-preview');
        img.src = api.artifactUrl(res.artifact) + `?v=${Date.now()}`;
        $('rectified-hash').textContent = `sha256 ${res.sha256.slice(0, 16)}…`;
    } catch (e) {
        toast(e instanceof ApiError ? `rectify failed: ${e.message}` : String(e));
    }
}

function renderReport(report: ExtractionReport): void {
    const badge = badgeFor(report);
    const badgeEl = $('bch-badge');
    badgeEl.textContent = badge.text;
    badgeEl.className = `badge ${badge.kind}`;

    $('report-period').textContent = report.period === null ? '—'
        : `${report.period} px`;
    $('report-shift').textContent = report.shift
        ? `(${report.shift[0]}, ${report.shift[1]})` : '—';
    $('report-time').textContent = formatTimings(report);

    const bitsEl = $('bit-grid');
    bitsEl.innerHTML = '';
    for (const cell of bitCells(report)) {
        const div = document.createElement('div');
        div.className = 'bit';
        div.textContent = String(cell.bit);
        div.style.opacity = String(0.35 + 0.65 * cell.confidence);
        bitsEl.append(div);
    }

    const curveCanvas = $<HTMLCanvasElement>('score-curve');
    const cc = curveCanvas.getContext('2d')!;
    cc.clearRect(0, 0, curveCanvas.width, curveCanvas.height);
    const path = scoreCurvePath(report, curveCanvas.width, curveCanvas.height);
    cc.strokeStyle = '#3498db';
    cc.beginPath();
    path.forEach((p, i) => (i === 0 ? cc.moveTo(p.x, p.y) : cc.lineTo(p.x, p.y)));
    cc.stroke();

    const thumbs = $('intermediates');
    thumbs.innerHTML = '';
    for (const [name, url] of Object.entries(report.artifacts ?? {})) {
        const fig = document.createElement('figure');
        const img = document.createElement('img');
        img.src = api.artifactUrl(url) + `?v=${Date.now()}`;
        const cap = document.createElement('figcaption');
        cap.textContent = name;
        fig.append(img, cap);
        thumbs.append(fig);
    }

    const warnEl = $('warnings');
    warnEl.innerHTML = '';
    for (const w of report.warnings) {
        const li = document.createElement('li');
        li.textContent = w;
        warnEl.append(li);
    }
}

function renderHistory(entries: HistoryEntry[]): void {
    const list = $('history-list');
    list.innerHTML = '';
    entries.forEach((entry, i) => {
        const li = document.createElement('li');
        li.textContent = `#${i + 1}  period=${entry.report.period ?? '?'}  ` +
            `bch=${entry.report.bch.status}  σ=${entry.params.gauss_sigma}`;
        li.addEventListener('click', () => {
            state.params = { ...state.params, ...entry.params };
            buildParamForm();
        });
        list.append(li);
    });
}

async function doExtract(): Promise<void> {
    if (!state.sessionId) return toast('upload a photograph first');
    const errors = validateParams(state.params);
    const firstError = Object.values(errors)[0];
    if (firstError) return toast(`invalid parameters: ${firstError}`);
    const button = $<HTMLButtonElement>('extract-btn');
    state.busy = true;
    button.disabled = true;
    try {
        const report = await api.extract(state.sessionId, state.params,
                                         !state.rectified);
        renderReport(report);
        renderHistory(await api.history(state.sessionId));
    } catch (e) {
        toast(e instanceof ApiError ? `extract failed: ${e.message}` : String(e));
    } finally {
        state.busy = false;
        button.disabled = false;
    }
}

$('rectify-btn').addEventListener('click', () => void doRectify());
$('extract-btn').addEventListener('click', () => void doExtract());
buildParamForm();
