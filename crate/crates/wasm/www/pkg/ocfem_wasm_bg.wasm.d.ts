/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_get_solveview_cost: (a: number) => number;
export const __wbg_get_solveview_kkt_residual: (a: number) => number;
export const __wbg_get_solveview_lower: (a: number) => number;
export const __wbg_get_solveview_outer_iterations: (a: number) => number;
export const __wbg_get_solveview_upper: (a: number) => number;
export const __wbg_set_solveview_cost: (a: number, b: number) => void;
export const __wbg_set_solveview_kkt_residual: (a: number, b: number) => void;
export const __wbg_set_solveview_lower: (a: number, b: number) => void;
export const __wbg_set_solveview_outer_iterations: (a: number, b: number) => void;
export const __wbg_set_solveview_upper: (a: number, b: number) => void;
export const __wbg_solveview_free: (a: number, b: number) => void;
export const preset_defaults: (a: number, b: number) => [number, number, number, number];
export const presets: () => [number, number];
export const solve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const solveview_adjoint: (a: number) => [number, number];
export const solveview_control: (a: number) => [number, number];
export const solveview_postprocessed: (a: number) => [number, number];
export const solveview_state: (a: number) => [number, number];
export const solveview_triangles: (a: number) => [number, number];
export const solveview_vertices: (a: number) => [number, number];
export const study: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
