/* tslint:disable */
/* eslint-disable */

/**
 * Delay axis in delay bins followed by the Doppler axis in Doppler bins,
 * with the two lengths first: `[n_tau, n_nu, taus.., nus..]`.
 */
export function ambiguity_axes(m: number, n: number, tau_over: number, nu_over: number): Float64Array;

/**
 * Normalised ambiguity magnitude of the pilot train in dB, row-major
 * `[tau][nu]`. Axes come from [`ambiguity_axes`].
 */
export function ambiguity_surface(m: number, n: number, tau_over: number, nu_over: number): Float64Array;

/**
 * Closed-form CCDF of the composite frame PAPR at each threshold (dB).
 */
export function ccdf_analytic_curve(rho_db: number, m: number, n: number, gamma_db: Float64Array): Float64Array;

/**
 * Empirical CCDF over `trials` random QPSK frames with the given pilot.
 */
export function ccdf_simulated_curve(pilot: string, rho_db: number, m: number, n: number, trials: number, seed: bigint, gamma_db: Float64Array): Float64Array;

/**
 * Closed-form PSD (dB, total) at frequencies given in units of `M/T`.
 */
export function psd_curve(pilot: string, rho_db: number, m: number, n: number, f_norm: Float64Array): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ambiguity_axes: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly ambiguity_surface: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly ccdf_analytic_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly ccdf_simulated_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: number, i: number) => [number, number, number, number];
    readonly psd_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
