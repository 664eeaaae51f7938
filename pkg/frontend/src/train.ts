/** Training loop: Adam on weighted BCE with within-group permutation
 * augmentation applied after the attention stack, before the GRU. */

import {
  DEFAULT_META,
  GroupCache,
  Meta,
  Sample,
  Weights,
  encodeGroups,
  encodeGroupsBackward,
  groupEmbeddings,
  headBackward,
  headForward,
  randomWeights,
  zeroGrads,
} from "./model.js";
import { mulberry32, shuffle } from "./data.js";
import { clampP, positiveWeight, weightedBce, weightedBceLogitGrad } from "./loss.js";
import { cloneWeights } from "./weights.js";

export interface TrainConfig {
  meta: Meta;
  batchSize: number;
  learningRate: number;
  augmentation: number; // views per sample; 1 = no augmentation
  epochs: number;
  seed: number;
  valFraction: number;
  patience: number; // early stopping on validation loss
}

export const DEFAULT_CONFIG: TrainConfig = {
  meta: DEFAULT_META,
  batchSize: 512,
  learningRate: 1e-4,
  augmentation: 10,
  epochs: 100,
  seed: 0,
  valFraction: 0.1,
  patience: 10,
};

export interface EpochStats {
  epoch: number;
  trainLoss: number;
  valLoss: number;
  valAccuracy: number;
}

export interface TrainResult {
  weights: Weights;
  curves: EpochStats[];
  bestEpoch: number;
}

/** One uniform permutation of 0..n-1; identity for the first view so that
 * multiplicity 1 reproduces the unaugmented pipeline exactly. */
export function viewPermutation(n: number, view: number, rand: () => number): number[] {
  const perm = Array.from({ length: n }, (_, i) => i);
  if (view > 0) shuffle(perm, rand);
  return perm;
}

interface Adam {
  m: Map<string, Float64Array>;
  v: Map<string, Float64Array>;
  t: number;
}

function adamStep(
  w: Weights,
  grads: Map<string, Float64Array>,
  state: Adam,
  lr: number,
): void {
  const b1 = 0.9;
  const b2 = 0.999;
  const eps = 1e-8;
  state.t += 1;
  const c1 = 1 - Math.pow(b1, state.t);
  const c2 = 1 - Math.pow(b2, state.t);
  for (const [name, g] of grads) {
    const t = w.tensors.get(name)!;
    const m = state.m.get(name)!;
    const v = state.v.get(name)!;
    for (let i = 0; i < t.length; i++) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      t[i] -= (lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + eps);
    }
  }
}

/** Forward/backward of one sample under `views` permutation views; returns
 * the summed loss and the number of views, accumulating into `grads`. */
function sampleStep(
  w: Weights,
  sample: Sample,
  views: number,
  wPos: number,
  rand: () => number,
  grads: Map<string, Float64Array>,
): { loss: number; views: number } {
  const { dH } = w.meta;
  const caches: GroupCache[] = encodeGroups(w, sample);
  const dEmb = caches.map((c) => new Float64Array(c.m * dH));
  let loss = 0;
  for (let view = 0; view < views; view++) {
    const perms = caches.map((c) => viewPermutation(c.m, view, rand));
    const rows: Float64Array[] = [];
    for (let g = 0; g < caches.length; g++) {
      const emb = groupEmbeddings(caches[g]);
      for (const i of perms[g]) rows.push(emb.subarray(i * dH, (i + 1) * dH));
    }
    const seq = headForward(w, rows, dH);
    loss += weightedBce(seq.p, sample.label, wPos);
    const dLogit = weightedBceLogitGrad(clampP(seq.p), sample.label, wPos);
    const dRows = headBackward(w, seq, dLogit, grads);
    let pos = 0;
    for (let g = 0; g < caches.length; g++) {
      for (const i of perms[g]) {
        const dst = dEmb[g];
        const src = dRows[pos++];
        for (let j = 0; j < dH; j++) dst[i * dH + j] += src[j];
      }
    }
  }
  encodeGroupsBackward(w, caches, dEmb, grads);
  return { loss, views };
}

export function evaluateLoss(
  w: Weights,
  samples: Sample[],
  wPos: number,
): { loss: number; accuracy: number } {
  let loss = 0;
  let correct = 0;
  for (const s of samples) {
    const caches = encodeGroups(w, s);
    const rows: Float64Array[] = [];
    for (const c of caches) {
      const emb = groupEmbeddings(c);
      for (let i = 0; i < c.m; i++) rows.push(emb.subarray(i * w.meta.dH, (i + 1) * w.meta.dH));
    }
    const p = headForward(w, rows, w.meta.dH).p;
    loss += weightedBce(p, s.label, wPos);
    if ((p >= 0.5 ? 1 : 0) === s.label) correct += 1;
  }
  return { loss: loss / samples.length, accuracy: correct / samples.length };
}

export function train(
  trainSet: Sample[],
  valSet: Sample[],
  config: TrainConfig,
  onEpoch?: (stats: EpochStats) => void,
): TrainResult {
  const wPos = positiveWeight(trainSet.map((s) => s.label));
  const rand = mulberry32(config.seed);
  const w = randomWeights(config.meta, rand);
  const adam: Adam = { m: zeroGrads(config.meta), v: zeroGrads(config.meta), t: 0 };

  const curves: EpochStats[] = [];
  let best = cloneWeights(w);
  let bestLoss = Infinity;
  let bestEpoch = -1;
  let sinceBest = 0;

  if (config.epochs === 0) {
    return { weights: best, curves, bestEpoch };
  }

  const order = trainSet.slice();
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    shuffle(order, rand);
    let epochLoss = 0;
    let epochViews = 0;
    for (let start = 0; start < order.length; start += config.batchSize) {
      const batch = order.slice(start, start + config.batchSize);
      const grads = zeroGrads(config.meta);
      let batchViews = 0;
      for (const sample of batch) {
        const r = sampleStep(w, sample, config.augmentation, wPos, rand, grads);
        epochLoss += r.loss;
        batchViews += r.views;
      }
      for (const g of grads.values()) {
        for (let i = 0; i < g.length; i++) g[i] /= batchViews;
      }
      epochViews += batchViews;
      adamStep(w, grads, adam, config.learningRate);
    }
    const val = evaluateLoss(w, valSet, wPos);
    const stats: EpochStats = {
      epoch,
      trainLoss: epochLoss / Math.max(epochViews, 1),
      valLoss: val.loss,
      valAccuracy: val.accuracy,
    };
    curves.push(stats);
    onEpoch?.(stats);
    if (val.loss < bestLoss - 1e-9) {
      bestLoss = val.loss;
      best = cloneWeights(w);
      bestEpoch = epoch;
      sinceBest = 0;
    } else {
      sinceBest += 1;
      if (sinceBest >= config.patience) break;
    }
  }
  return { weights: best, curves, bestEpoch };
}
