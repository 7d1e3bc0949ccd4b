import { Point, QuadCorners } from './types.js';

/** Handles snap to integer pixels — the service treats corners as exact
 *  sample positions, so fractional handle positions would make the UI's
 *  rectification differ from a CLI run with the "same" corners. */
export function snapToPixel(p: Point): Point {
    return { x: Math.round(p.x), y: Math.round(p.y) };
}

export function frameCorners(width: number, height: number): QuadCorners {
    return [
        { x: 0, y: 0 },
        { x: width - 1, y: 0 },
        { x: width - 1, y: height - 1 },
        { x: 0, y: height - 1 },
    ];
}

function cross(a: Point, b: Point, c: Point): number {
    return (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
}

/** True when the corners form a strictly convex quad (no three collinear),
 *  matching the service-side validation so bad requests are never sent. */
export function isConvexQuad(corners: QuadCorners): boolean {
    const signs: number[] = [];
    for (let i = 0; i < 4; i++) {
        const s = cross(corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]);
        if (Math.abs(s) < 1e-9) return false;
        signs.push(Math.sign(s));
    }
    return signs.every(s => s === signs[0]);
}

/** Index of the handle within `radius` of the pointer, or -1. */
export function hitTestHandle(corners: QuadCorners, p: Point, radius: number): number {
    let best = -1;
    let bestDist = radius;
    corners.forEach((c, i) => {
        const d = Math.hypot(c.x - p.x, c.y - p.y);
        if (d <= bestDist) {
            best = i;
            bestDist = d;
        }
    });
    return best;
}

export function clampToImage(p: Point, width: number, height: number): Point {
    return {
        x: Math.min(Math.max(p.x, 0), width - 1),
        y: Math.min(Math.max(p.y, 0), height - 1),
    };
}

/** Serialize for the service: list of [x, y] in TL,TR,BR,BL order. */
export function cornersToJson(corners: QuadCorners): number[][] {
    return corners.map(c => [c.x, c.y]);
}

/** The CLI's corner string format, for copy/paste parity checks. */
export function cornersToCliString(corners: QuadCorners): string {
    return corners.map(c => `${c.x},${c.y}`).join(';');
}
