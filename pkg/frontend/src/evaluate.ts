/** Classification metrics and parity-fixture export. */

import { Sample, Weights, forward } from "./model.js";

export interface Metrics {
  accuracy: number;
  tpr: number | null;
  tnr: number | null;
  counts: { tp: number; fp: number; tn: number; fn: number };
}

export function classify(w: Weights, samples: Sample[], tau = 0.5): boolean[] {
  return samples.map((s) => forward(w, s) >= tau);
}

export function metrics(labels: number[], decisions: boolean[]): Metrics {
  if (labels.length !== decisions.length) throw new Error("length mismatch");
  if (labels.length === 0) throw new Error("empty dataset");
  let tp = 0;
  let fp = 0;
  let tn = 0;
  let fn = 0;
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] === 1) decisions[i] ? tp++ : fn++;
    else decisions[i] ? fp++ : tn++;
  }
  return {
    accuracy: (tp + tn) / labels.length,
    tpr: tp + fn > 0 ? tp / (tp + fn) : null,
    tnr: tn + fp > 0 ? tn / (tn + fp) : null,
    counts: { tp, fp, tn, fn },
  };
}

export function evaluate(
  w: Weights,
  samples: Sample[],
  tau = 0.5,
): { overall: Metrics; perPc: Record<string, Metrics> } {
  const decisions = classify(w, samples, tau);
  const overall = metrics(samples.map((s) => s.label), decisions);
  const perPc: Record<string, Metrics> = {};
  const byPc = new Map<string, { labels: number[]; decisions: boolean[] }>();
  for (let i = 0; i < samples.length; i++) {
    const key = String(samples[i].pc ?? "?");
    let b = byPc.get(key);
    if (!b) byPc.set(key, (b = { labels: [], decisions: [] }));
    b.labels.push(samples[i].label);
    b.decisions.push(decisions[i]);
  }
  for (const [key, b] of byPc) perPc[key] = metrics(b.labels, b.decisions);
  return { overall, perPc };
}

export interface Fixture {
  surface: number[];
  groups: number[][][];
  probability: number;
}

/** Parity fixtures: recorded probabilities the solver's inference must
 * reproduce within 1e-4 from the exported weight file. */
export function makeFixtures(w: Weights, samples: Sample[], count: number): Fixture[] {
  return samples.slice(0, count).map((s) => ({
    surface: [...s.surface],
    groups: s.groups,
    probability: forward(w, s),
  }));
}
