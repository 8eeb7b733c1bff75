/* tslint:disable */
/* eslint-disable */

/**
 * Flat arrays describing a solved problem, ready for a canvas.
 */
export class SolveView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    cost: number;
    kkt_residual: number;
    lower: number;
    outer_iterations: number;
    upper: number;
    readonly adjoint: Float64Array;
    /**
     * One value per triangle.
     */
    readonly control: Float64Array;
    /**
     * Post-processed control `Proj(y φ / ν)` at the vertices.
     */
    readonly postprocessed: Float64Array;
    readonly state: Float64Array;
    /**
     * Three vertex indices per triangle.
     */
    readonly triangles: Uint32Array;
    /**
     * `x0, y0, x1, y1, ...`
     */
    readonly vertices: Float64Array;
}

/**
 * Default `(ν, α, β)` of a preset.
 */
export function preset_defaults(name: string): Float64Array;

export function presets(): string[];

export function solve(name: string, level: number, nu: number, lower: number, upper: number): SolveView;

export function study(name: string, j_min: number, j_max: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_get_solveview_cost: (a: number) => number;
    readonly __wbg_get_solveview_kkt_residual: (a: number) => number;
    readonly __wbg_get_solveview_lower: (a: number) => number;
    readonly __wbg_get_solveview_outer_iterations: (a: number) => number;
    readonly __wbg_get_solveview_upper: (a: number) => number;
    readonly __wbg_set_solveview_cost: (a: number, b: number) => void;
    readonly __wbg_set_solveview_kkt_residual: (a: number, b: number) => void;
    readonly __wbg_set_solveview_lower: (a: number, b: number) => void;
    readonly __wbg_set_solveview_outer_iterations: (a: number, b: number) => void;
    readonly __wbg_set_solveview_upper: (a: number, b: number) => void;
    readonly __wbg_solveview_free: (a: number, b: number) => void;
    readonly preset_defaults: (a: number, b: number) => [number, number, number, number];
    readonly presets: () => [number, number];
    readonly solve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly solveview_adjoint: (a: number) => [number, number];
    readonly solveview_control: (a: number) => [number, number];
    readonly solveview_postprocessed: (a: number) => [number, number];
    readonly solveview_state: (a: number) => [number, number];
    readonly solveview_triangles: (a: number) => [number, number];
    readonly solveview_vertices: (a: number) => [number, number];
    readonly study: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
