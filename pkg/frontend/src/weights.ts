/** Weight-bundle JSON serialization; the format the solver's inference
 * module reads (version 1, GRU convention tag "zrh-v1"). */

import { Meta, Weights, numel, tensorSpecs } from "./model.js";

export const WEIGHT_FORMAT_VERSION = 1;
export const GRU_CONVENTION = "zrh-v1";

export function dumpWeights(w: Weights): string {
  const tensors: Record<string, { shape: number[]; data: number[] }> = {};
  for (const [name, shape] of tensorSpecs(w.meta)) {
    const t = w.tensors.get(name)!;
    // serialize through float32 so the file replays bit-for-bit in the
    // solver, which loads every tensor as float32
    const f32 = Float32Array.from(t);
    tensors[name] = { shape: [...shape], data: Array.from(f32) };
  }
  return JSON.stringify({
    version: WEIGHT_FORMAT_VERSION,
    meta: {
      d_h: w.meta.dH,
      heads: w.meta.heads,
      layers: w.meta.layers,
      d_ff: w.meta.dFF,
      ln_eps: w.meta.lnEps,
      gru: GRU_CONVENTION,
    },
    tensors,
  });
}

export function loadWeights(doc: string): Weights {
  const obj = JSON.parse(doc);
  if (obj.version !== WEIGHT_FORMAT_VERSION) {
    throw new Error(`unknown weight format version ${obj.version}`);
  }
  if (obj.meta?.gru !== GRU_CONVENTION) {
    throw new Error(`unknown GRU convention tag ${obj.meta?.gru}`);
  }
  const meta: Meta = {
    dH: obj.meta.d_h,
    heads: obj.meta.heads,
    layers: obj.meta.layers,
    dFF: obj.meta.d_ff,
    lnEps: obj.meta.ln_eps ?? 1e-5,
  };
  const tensors = new Map<string, Float64Array>();
  for (const [name, shape] of tensorSpecs(meta)) {
    const entry = obj.tensors?.[name];
    if (!entry) throw new Error(`missing tensor ${name}`);
    if (entry.data.length !== numel(shape)) {
      throw new Error(`tensor ${name}: expected ${numel(shape)} values`);
    }
    // round-trip through float32 to match what the solver will compute with
    const t = Float64Array.from(Float32Array.from(entry.data as number[]));
    if (t.some((v) => !Number.isFinite(v))) {
      throw new Error(`tensor ${name} contains non-finite values`);
    }
    tensors.set(name, t);
  }
  return { meta, tensors };
}

export function cloneWeights(w: Weights): Weights {
  const tensors = new Map<string, Float64Array>();
  for (const [name, t] of w.tensors) tensors.set(name, Float64Array.from(t));
  return { meta: { ...w.meta }, tensors };
}
