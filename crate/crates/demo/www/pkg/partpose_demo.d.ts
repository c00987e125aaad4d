/* tslint:disable */
/* eslint-disable */

/**
 * Farthest point samples on a demo mesh ("sphere", "handle", "door" or
 * "wedge") as flat `[x, y, z, nx, ny, nz, …]`.
 */
export function fps_points(mesh: string, n: number, seed: bigint): Float64Array;

/**
 * Mesh vertices as flat `[x, y, z, …]`, for drawing the FPS backdrop.
 */
export function mesh_vertices(mesh: string): Float64Array;

/**
 * Depth image of the cabinet with the door at `joint` radians, seen from
 * the given latitude/longitude (degrees) and distance. Returns
 * `[depth…, label…]`, each `width × height` long; depth 0 and label −1 mark
 * empty pixels.
 */
export function render_cabinet(joint: number, lat: number, lon: number, radius: number, width: number, height: number): Float32Array;

/**
 * Quality of a straight grasp across a wedge whose faces lean `deg`
 * degrees, followed by the measured contact deviation in degrees
 * (`[q, deviation]`; deviation is NaN when no contacts are found).
 */
export function wedge_quality(deg: number, depth: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fps_points: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly mesh_vertices: (a: number, b: number) => [number, number];
    readonly render_cabinet: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly wedge_quality: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
