/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Ground-truth object labels as RGBA.
     */
    labels_rgba(): Uint8Array;
    merge(mode: string, n_target: number, small_first: boolean): MergeView;
    constructor(seed: number, size: number, objects: number, softness: number, rect: boolean);
    size(): number;
}

export class MergeView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    centroids(): Float64Array;
    overshoot(): boolean;
    rgba(): Uint8Array;
    summary(): string;
    token_count(): number;
    valid_masks(): number;
}

export function estimate(tokens: number, preset: string, baseline_tokens: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_mergeview_free: (a: number, b: number) => void;
    readonly demo_labels_rgba: (a: number) => [number, number];
    readonly demo_merge: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_size: (a: number) => number;
    readonly estimate: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly mergeview_centroids: (a: number) => [number, number];
    readonly mergeview_overshoot: (a: number) => number;
    readonly mergeview_rgba: (a: number) => [number, number];
    readonly mergeview_summary: (a: number) => [number, number];
    readonly mergeview_token_count: (a: number) => number;
    readonly mergeview_valid_masks: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
