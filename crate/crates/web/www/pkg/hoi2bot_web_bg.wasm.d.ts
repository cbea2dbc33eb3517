/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_field_free: (a: number, b: number) => void;
export const field_new: (a: number, b: number) => [number, number, number];
export const field_resolve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const field_slice: (a: number, b: number) => [number, number];
export const field_trunc: (a: number) => number;
export const remap_path: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const retarget_hand: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
