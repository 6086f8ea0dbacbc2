/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_gaincurve_free: (a: number, b: number) => void;
export const __wbg_kalmancomparison_free: (a: number, b: number) => void;
export const __wbg_maneuverrun_free: (a: number, b: number) => void;
export const gain_curve: (a: number, b: number, c: bigint) => [number, number, number];
export const gaincurve_constant: (a: number) => number;
export const gaincurve_density: (a: number) => [number, number];
export const gaincurve_exact: (a: number) => [number, number];
export const gaincurve_expected_exact: (a: number) => number;
export const gaincurve_x: (a: number) => [number, number];
export const kalman_comparison: (a: bigint, b: number) => [number, number, number];
export const kalmancomparison_kb_mean: (a: number) => [number, number];
export const kalmancomparison_kb_var: (a: number) => [number, number];
export const kalmancomparison_pf_mean: (a: number) => [number, number];
export const kalmancomparison_pf_var: (a: number) => [number, number];
export const kalmancomparison_times: (a: number) => [number, number];
export const kalmancomparison_truth: (a: number) => [number, number];
export const maneuver: (a: bigint, b: number, c: number, d: number) => [number, number, number];
export const maneuverrun_estimate: (a: number) => [number, number];
export const maneuverrun_mu: (a: number) => [number, number];
export const maneuverrun_n_modes: (a: number) => number;
export const maneuverrun_rmse: (a: number) => number;
export const maneuverrun_rmse_post: (a: number) => number;
export const maneuverrun_times: (a: number) => [number, number];
export const maneuverrun_truth: (a: number) => [number, number];
export const maneuverrun_truth_mode: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
