/* tslint:disable */
/* eslint-disable */

export class GainCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly constant: number;
    readonly density: Float64Array;
    /**
     * Exact gain `K(x)` solved on the grid.
     */
    readonly exact: Float64Array;
    readonly expected_exact: number;
    readonly x: Float64Array;
}

export class KalmanComparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly kb_mean: Float64Array;
    readonly kb_var: Float64Array;
    readonly pf_mean: Float64Array;
    readonly pf_var: Float64Array;
    readonly times: Float64Array;
    readonly truth: Float64Array;
}

export class ManeuverRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly estimate: Float64Array;
    readonly mu: Float64Array;
    readonly n_modes: number;
    readonly rmse: number;
    readonly rmse_post: number;
    readonly times: Float64Array;
    readonly truth: Float64Array;
    /**
     * 1-based truth mode per step.
     */
    readonly truth_mode: Float64Array;
}

/**
 * Exact and constant gain for `n` particles from `N(0, 1)` and
 * `h(x) = atan(x / length)`, without the noise rescaling.
 */
export function gain_curve(n: number, length: number, seed: bigint): GainCurve;

/**
 * `dX = -X dt + dB`, `dZ = X dt + dW` filtered by `particles` particles
 * and by Kalman–Bucy on the same increments.
 */
export function kalman_comparison(seed: bigint, particles: number): KalmanComparison;

/**
 * Shipped maneuvering-target scenario with a chosen seed, particle count
 * and mode-probability update (`"euler"` or `"bayes"`).
 */
export function maneuver(seed: bigint, particles: number, mu_update: string): ManeuverRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_gaincurve_free: (a: number, b: number) => void;
    readonly __wbg_kalmancomparison_free: (a: number, b: number) => void;
    readonly __wbg_maneuverrun_free: (a: number, b: number) => void;
    readonly gain_curve: (a: number, b: number, c: bigint) => [number, number, number];
    readonly gaincurve_constant: (a: number) => number;
    readonly gaincurve_density: (a: number) => [number, number];
    readonly gaincurve_exact: (a: number) => [number, number];
    readonly gaincurve_expected_exact: (a: number) => number;
    readonly gaincurve_x: (a: number) => [number, number];
    readonly kalman_comparison: (a: bigint, b: number) => [number, number, number];
    readonly kalmancomparison_kb_mean: (a: number) => [number, number];
    readonly kalmancomparison_kb_var: (a: number) => [number, number];
    readonly kalmancomparison_pf_mean: (a: number) => [number, number];
    readonly kalmancomparison_pf_var: (a: number) => [number, number];
    readonly kalmancomparison_times: (a: number) => [number, number];
    readonly kalmancomparison_truth: (a: number) => [number, number];
    readonly maneuver: (a: bigint, b: number, c: number, d: number) => [number, number, number];
    readonly maneuverrun_estimate: (a: number) => [number, number];
    readonly maneuverrun_mu: (a: number) => [number, number];
    readonly maneuverrun_n_modes: (a: number) => number;
    readonly maneuverrun_rmse: (a: number) => number;
    readonly maneuverrun_rmse_post: (a: number) => number;
    readonly maneuverrun_times: (a: number) => [number, number];
    readonly maneuverrun_truth: (a: number) => [number, number];
    readonly maneuverrun_truth_mode: (a: number) => [number, number];
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
