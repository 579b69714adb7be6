/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_coveragedemo_free: (a: number, b: number) => void;
export const __wbg_fusiondemo_free: (a: number, b: number) => void;
export const __wbg_swarmdemo_free: (a: number, b: number) => void;
export const coveragedemo_cells: (a: number) => [number, number, number, number];
export const coveragedemo_cost: (a: number) => [number, number, number];
export const coveragedemo_iterations: (a: number) => number;
export const coveragedemo_move_site: (a: number, b: number, c: number, d: number) => void;
export const coveragedemo_new: (a: number, b: number, c: number) => [number, number, number];
export const coveragedemo_sites: (a: number) => [number, number];
export const coveragedemo_step: (a: number) => [number, number, number];
export const fusiondemo_new: () => number;
export const fusiondemo_push: (a: number, b: number, c: number, d: number) => [number, number];
export const swarmdemo_command: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const swarmdemo_emergency_stop: (a: number) => [number, number, number, number];
export const swarmdemo_groups: (a: number) => [number, number];
export const swarmdemo_new: (a: number, b: number) => [number, number, number];
export const swarmdemo_positions: (a: number) => [number, number];
export const swarmdemo_set_formation: (a: number, b: number, c: number) => [number, number, number, number];
export const swarmdemo_status: (a: number) => [number, number];
export const swarmdemo_step: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
