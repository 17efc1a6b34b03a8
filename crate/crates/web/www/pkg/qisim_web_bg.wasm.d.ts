/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const bell_explorer: (a: number, b: number, c: number, d: number) => [number, number];
export const eit_spectrum: (a: number, b: number, c: number, d: number) => [number, number];
export const visibility_explorer: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
