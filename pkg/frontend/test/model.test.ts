import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";
import { mulberry32 } from "../src/data.js";
import { metrics } from "../src/evaluate.js";
import {
  DEFAULT_META,
  Sample,
  forward,
  randomWeights,
  tensorSpecs,
  zeroWeights,
} from "../src/model.js";
import { dumpWeights, loadWeights } from "../src/weights.js";

const MODELS = path.resolve(
  new URL(".", import.meta.url).pathname,
  "..",
  "..",
  "models",
);

describe("forward pass", () => {
  const sample: Sample = {
    surface: [20, 12],
    groups: [
      [
        [3, 5],
        [2, 2],
      ],
      [[7, 9]],
    ],
    label: 1,
  };

  it("zero weights produce exactly one half", () => {
    expect(forward(zeroWeights(), sample)).toBe(0.5);
  });

  it("is deterministic", () => {
    const w = randomWeights(DEFAULT_META, mulberry32(1));
    expect(forward(w, sample)).toBe(forward(w, sample));
  });

  it("reproduces the solver's recorded reference outputs", () => {
    // cross-implementation parity: the fixtures were generated by the
    // solver's own inference from the same weight file
    const doc = JSON.parse(fs.readFileSync(path.join(MODELS, "fixtures.json"), "utf-8"));
    const w = loadWeights(fs.readFileSync(path.join(MODELS, doc.weights), "utf-8"));
    expect(doc.cases.length).toBeGreaterThanOrEqual(50);
    for (const c of doc.cases) {
      const s: Sample = { surface: c.surface, groups: c.groups, label: 0 };
      expect(Math.abs(forward(w, s) - c.probability)).toBeLessThan(1e-4);
    }
  });
});

describe("weight serialization", () => {
  it("round-trips exactly at float32 precision", () => {
    const w = randomWeights(DEFAULT_META, mulberry32(5));
    const back = loadWeights(dumpWeights(w));
    for (const [name, t] of back.tensors) {
      const orig = Float64Array.from(Float32Array.from(w.tensors.get(name)!));
      expect(t).toEqual(orig);
    }
  });

  it("rejects missing tensors and bad versions", () => {
    const doc = JSON.parse(dumpWeights(zeroWeights()));
    const broken = { ...doc, tensors: { ...doc.tensors } };
    delete broken.tensors["gru.Wz"];
    expect(() => loadWeights(JSON.stringify(broken))).toThrow(/gru.Wz/);
    expect(() => loadWeights(JSON.stringify({ ...doc, version: 9 }))).toThrow(/version/);
  });

  it("tensor inventory matches the inference contract", () => {
    const specs = tensorSpecs(DEFAULT_META);
    expect(specs.size).toBe(2 + 12 * DEFAULT_META.layers + 9 + 4);
    expect(specs.get("embed.W0")).toEqual([16, 2]);
    expect(specs.get("head.W2")).toEqual([1, 64]);
  });
});

describe("metrics", () => {
  it("all-feasible decisions give TPR 1 and TNR 0", () => {
    // zero weights with tau 0.5 decide every query feasible
    const labels = [1, 0, 1, 0, 0];
    const w = zeroWeights();
    const decisions = labels.map(() => forward(w, { surface: [5, 5], groups: [[[1, 1]]], label: 0 }) >= 0.5);
    const m = metrics(labels, decisions);
    expect(m.tpr).toBe(1);
    expect(m.tnr).toBe(0);
  });

  it("hand-computed confusion case", () => {
    const m = metrics([1, 1, 1, 0, 0], [true, false, true, false, true]);
    expect(m.accuracy).toBeCloseTo(3 / 5, 12);
    expect(m.tpr).toBeCloseTo(2 / 3, 12);
    expect(m.tnr).toBeCloseTo(1 / 2, 12);
    expect(m.counts).toEqual({ tp: 2, fp: 1, tn: 1, fn: 1 });
  });

  it("rejects empty and mismatched inputs", () => {
    expect(() => metrics([], [])).toThrow(/empty/);
    expect(() => metrics([1], [])).toThrow(/mismatch/);
  });
});
