/* tslint:disable */
/* eslint-disable */

/**
 * Lloyd relaxation of random sites in a square.
 */
export class CoverageDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Cells as a JSON array of `[[x, y], ...]` vertex lists.
     */
    cells(): string;
    cost(): number;
    iterations(): number;
    /**
     * Moves site `index` to `(x, y)`, clamped to the region.
     */
    move_site(index: number, x: number, y: number): void;
    constructor(site_count: number, half_size: number, seed: number);
    sites(): Float64Array;
    /**
     * One Lloyd iteration; returns the largest site displacement.
     */
    step(): number;
}

/**
 * Frame-by-frame decision fusion with the default P, N and F.
 */
export class FusionDemo {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    /**
     * Feeds one classified frame. Returns JSON with the push outcome, the
     * decision if one fired, the buffered labels and the blank frames left.
     */
    push(label: string, confidence: number): string;
}

/**
 * A swarm flying in formation that accepts operator verbs.
 */
export class SwarmDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Issues one verb with JSON arguments; returns the echo as JSON.
     *
     * Local verbs run in the current mode only, as with a real operator.
     */
    command(verb: string, args: string): string;
    emergency_stop(): string;
    /**
     * Group id per UAV, in the same order as `positions`.
     */
    groups(): Uint32Array;
    constructor(uav_count: number, seed: number);
    /**
     * Flattened `[x, y, z, ...]` positions in id order.
     */
    positions(): Float64Array;
    /**
     * Switches to formation mode and reshapes every group.
     */
    set_formation(kind: string): string;
    /**
     * Tick, time, mode, collisions, spacing error, max speed and the last echo.
     */
    status(): string;
    step(ticks: number): void;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_coveragedemo_free: (a: number, b: number) => void;
    readonly __wbg_fusiondemo_free: (a: number, b: number) => void;
    readonly __wbg_swarmdemo_free: (a: number, b: number) => void;
    readonly coveragedemo_cells: (a: number) => [number, number, number, number];
    readonly coveragedemo_cost: (a: number) => [number, number, number];
    readonly coveragedemo_iterations: (a: number) => number;
    readonly coveragedemo_move_site: (a: number, b: number, c: number, d: number) => void;
    readonly coveragedemo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly coveragedemo_sites: (a: number) => [number, number];
    readonly coveragedemo_step: (a: number) => [number, number, number];
    readonly fusiondemo_new: () => number;
    readonly fusiondemo_push: (a: number, b: number, c: number, d: number) => [number, number];
    readonly swarmdemo_command: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly swarmdemo_emergency_stop: (a: number) => [number, number, number, number];
    readonly swarmdemo_groups: (a: number) => [number, number];
    readonly swarmdemo_new: (a: number, b: number) => [number, number, number];
    readonly swarmdemo_positions: (a: number) => [number, number];
    readonly swarmdemo_set_formation: (a: number, b: number, c: number) => [number, number, number, number];
    readonly swarmdemo_status: (a: number) => [number, number];
    readonly swarmdemo_step: (a: number, b: number) => [number, number];
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
