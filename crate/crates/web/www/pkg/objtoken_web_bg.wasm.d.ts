/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_mergeview_free: (a: number, b: number) => void;
export const demo_labels_rgba: (a: number) => [number, number];
export const demo_merge: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demo_size: (a: number) => number;
export const estimate: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const mergeview_centroids: (a: number) => [number, number];
export const mergeview_overshoot: (a: number) => number;
export const mergeview_rgba: (a: number) => [number, number];
export const mergeview_summary: (a: number) => [number, number];
export const mergeview_token_count: (a: number) => number;
export const mergeview_valid_masks: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
