/* tslint:disable */
/* eslint-disable */

/**
 * Sampled curve with a couple of scalar diagnostics.
 */
export class Curve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * 1 where the node lies in the interval, 0 in the collar.
     */
    readonly interior: Uint8Array;
    readonly iterations: number;
    readonly residual: number;
    readonly x: Float64Array;
    readonly y: Float64Array;
}

/**
 * Applies the nonlocal p-Laplacian (`p = 2` gives the plain Laplacian) to
 * one of `square`, `sine`, `abs` or `step` on `(−1, 1)`.
 */
export function apply_laplacian(name: string, sigma: number, p: number, node_count: number): Curve;

/**
 * Lower bounds on `‖u‖₁` forced by a spiky source over `levels` refinements.
 */
export function forced_bounds(sigma: number, levels: number): Float64Array;

/**
 * Solves `L_μ[u] = arctan(u) − h` on `(−1, 1)` with a Gaussian of width `sigma`.
 */
export function solve_arctan(sigma: number, node_count: number): Curve;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curve_free: (a: number, b: number) => void;
    readonly apply_laplacian: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly curve_interior: (a: number) => [number, number];
    readonly curve_iterations: (a: number) => number;
    readonly curve_residual: (a: number) => number;
    readonly curve_x: (a: number) => [number, number];
    readonly curve_y: (a: number) => [number, number];
    readonly forced_bounds: (a: number, b: number) => [number, number, number, number];
    readonly solve_arctan: (a: number, b: number) => [number, number, number];
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
