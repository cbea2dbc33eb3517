/* tslint:disable */
/* eslint-disable */

/**
 * A truncated signed distance field of one of the demo shapes
 * (0 sphere, 1 box, 2 ellipsoid).
 */
export class Field {
    free(): void;
    [Symbol.dispose](): void;
    constructor(shape: number, voxel: number);
    /**
     * Pushes a small disc of 12 points centred at (x, y, 0) out of the
     * shape. Returns `[energy_before, energy_after, iterations, x0, y0,
     * x1, y1, ...]` with the disc points before and after, interleaved
     * per point.
     */
    resolve(x: number, y: number, radius: number): Float64Array;
    /**
     * `n × n` samples of the z = 0 plane over ±`VIEW_HALF`, row-major with
     * y increasing downwards.
     */
    slice(n: number): Float64Array;
    trunc(): number;
}

/**
 * Remaps a 2-D polyline `[x0, y0, x1, y1, ...]` so that it runs between
 * new endpoints, keeping its shape. `arc_length` picks the progress
 * measure. Returns the remapped polyline in the same layout.
 */
export function remap_path(points: Float64Array, sx: number, sy: number, ex: number, ey: number, arc_length: boolean): Float64Array;

/**
 * Retargets a synthetic hand to a gripper pose.
 *
 * `pinch` selects the fingertip gesture (parameter = aperture in m)
 * instead of the whole-hand one (parameter = finger curl in rad).
 * `yaw` and `pitch` rotate the hand. Returns the 21 keypoints (63 values)
 * followed by the gripper origin and its x, y, z axes (12 values).
 */
export function retarget_hand(pinch: boolean, param: number, yaw: number, pitch: number, left: boolean): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_field_free: (a: number, b: number) => void;
    readonly field_new: (a: number, b: number) => [number, number, number];
    readonly field_resolve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly field_slice: (a: number, b: number) => [number, number];
    readonly field_trunc: (a: number) => number;
    readonly remap_path: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly retarget_hand: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
