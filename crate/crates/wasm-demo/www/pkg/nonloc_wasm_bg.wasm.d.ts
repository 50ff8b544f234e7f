/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curve_free: (a: number, b: number) => void;
export const apply_laplacian: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const curve_interior: (a: number) => [number, number];
export const curve_iterations: (a: number) => number;
export const curve_residual: (a: number) => number;
export const curve_x: (a: number) => [number, number];
export const curve_y: (a: number) => [number, number];
export const forced_bounds: (a: number, b: number) => [number, number, number, number];
export const solve_arctan: (a: number, b: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
