/* tslint:disable */
/* eslint-disable */

export class Explorer {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Top variables as `[{label, count}]`; `kind` is `all`, `request` or `providable`.
     */
    frequency(kind: string, top_k: number): string;
    /**
     * Ids adjacent to `id`, as a JSON array.
     */
    neighbors(id: string): string;
    /**
     * The network document: `{nodes: [{id, kind, name}], edges: [{source, target, weight, shared}]}`.
     */
    network(): string;
    constructor(records: string);
    /**
     * Ranked jackets for a request: `{request_id, unmet, matches}`.
     */
    rank(request_id: string, top_k: number): string;
    /**
     * Summary line and characteristic-values table.
     */
    statsText(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_explorer_free: (a: number, b: number) => void;
    readonly explorer_frequency: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly explorer_neighbors: (a: number, b: number, c: number) => [number, number, number, number];
    readonly explorer_network: (a: number) => [number, number];
    readonly explorer_new: (a: number, b: number) => [number, number, number];
    readonly explorer_rank: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly explorer_statsText: (a: number) => [number, number];
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
