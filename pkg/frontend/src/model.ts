/**
 * Feasibility classifier: per-customer multi-head self-attention over item
 * embeddings, a GRU over the item sequence in visit order, and a sigmoid
 * head. Forward semantics mirror the solver's inference module exactly
 * (layer-norm epsilon, GRU gate convention, tensor names and shapes);
 * backward passes are hand-derived so training needs no framework.
 */

export interface Meta {
  dH: number;
  heads: number;
  layers: number;
  dFF: number;
  lnEps: number;
}

export const DEFAULT_META: Meta = {
  dH: 16,
  heads: 4,
  layers: 2,
  dFF: 64,
  lnEps: 1e-5,
};

export type Shape = readonly number[];

export interface Weights {
  meta: Meta;
  tensors: Map<string, Float64Array>;
}

export interface Sample {
  surface: [number, number]; // [H, W]
  groups: number[][][]; // groups -> items -> [w, h]
  label: number;
  pc?: number;
}

export function tensorSpecs(meta: Meta): Map<string, Shape> {
  const { dH, dFF } = meta;
  const specs = new Map<string, Shape>();
  specs.set("embed.W0", [dH, 2]);
  specs.set("embed.b0", [dH]);
  for (let l = 0; l < meta.layers; l++) {
    const p = `mha.${l}.`;
    specs.set(p + "Wq", [dH, dH]);
    specs.set(p + "Wk", [dH, dH]);
    specs.set(p + "Wv", [dH, dH]);
    specs.set(p + "Wo", [dH, dH]);
    specs.set(p + "ln1.gamma", [dH]);
    specs.set(p + "ln1.beta", [dH]);
    specs.set(p + "ln2.gamma", [dH]);
    specs.set(p + "ln2.beta", [dH]);
    specs.set(p + "ff.W1", [dFF, dH]);
    specs.set(p + "ff.b1", [dFF]);
    specs.set(p + "ff.W2", [dH, dFF]);
    specs.set(p + "ff.b2", [dH]);
  }
  for (const g of ["Wz", "Wr", "Wh", "Uz", "Ur", "Uh"]) {
    specs.set(`gru.${g}`, [dH, dH]);
  }
  for (const g of ["bz", "br", "bh"]) {
    specs.set(`gru.${g}`, [dH]);
  }
  specs.set("head.W1", [dFF, dH]);
  specs.set("head.b1", [dFF]);
  specs.set("head.W2", [1, dFF]);
  specs.set("head.b2", [1]);
  return specs;
}

export function numel(shape: Shape): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function zeroWeights(meta: Meta = DEFAULT_META): Weights {
  const tensors = new Map<string, Float64Array>();
  for (const [name, shape] of tensorSpecs(meta)) {
    tensors.set(name, new Float64Array(numel(shape)));
  }
  return { meta, tensors };
}

/** Deterministic uniform fan-in initialization (same scheme the solver's
 * bundled reference weights use). */
export function randomWeights(meta: Meta, rand: () => number): Weights {
  const tensors = new Map<string, Float64Array>();
  for (const [name, shape] of tensorSpecs(meta)) {
    const fanIn = shape.length === 2 ? shape[1] : shape[0];
    const bound = 1.0 / Math.sqrt(Math.max(fanIn, 1));
    const t = new Float64Array(numel(shape));
    for (let i = 0; i < t.length; i++) t[i] = (rand() * 2 - 1) * bound;
    tensors.set(name, t);
  }
  return { meta, tensors };
}

export function zeroGrads(meta: Meta): Map<string, Float64Array> {
  return zeroWeights(meta).tensors;
}

// ---------------------------------------------------------------------------
// Dense ops. Matrices are row-major; a linear layer stores W as (out, in)
// and computes y = W x, matching the inference module's `x @ W.T`.

function matVec(W: Float64Array, x: Float64Array, rows: number, cols: number, out: Float64Array): void {
  for (let i = 0; i < rows; i++) {
    let s = 0;
    const base = i * cols;
    for (let j = 0; j < cols; j++) s += W[base + j] * x[j];
    out[i] = s;
  }
}

function matTVec(W: Float64Array, x: Float64Array, rows: number, cols: number, out: Float64Array): void {
  out.fill(0);
  for (let i = 0; i < rows; i++) {
    const base = i * cols;
    const xi = x[i];
    for (let j = 0; j < cols; j++) out[j] += W[base + j] * xi;
  }
}

function addOuter(dW: Float64Array, dy: Float64Array, x: Float64Array, rows: number, cols: number): void {
  for (let i = 0; i < rows; i++) {
    const base = i * cols;
    const d = dy[i];
    for (let j = 0; j < cols; j++) dW[base + j] += d * x[j];
  }
}

function sigmoid(x: number): number {
  return 1 / (1 + Math.exp(-x));
}

// ---------------------------------------------------------------------------
// Layer norm

interface LnCache {
  xhat: Float64Array; // (m*d)
  invStd: Float64Array; // (m)
}

function layerNormForward(
  x: Float64Array,
  m: number,
  d: number,
  gamma: Float64Array,
  beta: Float64Array,
  eps: number,
  out: Float64Array,
): LnCache {
  const xhat = new Float64Array(m * d);
  const invStd = new Float64Array(m);
  for (let r = 0; r < m; r++) {
    const base = r * d;
    let mean = 0;
    for (let j = 0; j < d; j++) mean += x[base + j];
    mean /= d;
    let varsum = 0;
    for (let j = 0; j < d; j++) {
      const c = x[base + j] - mean;
      varsum += c * c;
    }
    const inv = 1 / Math.sqrt(varsum / d + eps);
    invStd[r] = inv;
    for (let j = 0; j < d; j++) {
      const h = (x[base + j] - mean) * inv;
      xhat[base + j] = h;
      out[base + j] = h * gamma[j] + beta[j];
    }
  }
  return { xhat, invStd };
}

function layerNormBackward(
  dOut: Float64Array,
  cache: LnCache,
  m: number,
  d: number,
  gamma: Float64Array,
  dGamma: Float64Array,
  dBeta: Float64Array,
  dX: Float64Array,
): void {
  for (let r = 0; r < m; r++) {
    const base = r * d;
    let meanG = 0;
    let meanGx = 0;
    for (let j = 0; j < d; j++) {
      const g = dOut[base + j] * gamma[j];
      const xh = cache.xhat[base + j];
      meanG += g;
      meanGx += g * xh;
      dGamma[j] += dOut[base + j] * xh;
      dBeta[j] += dOut[base + j];
    }
    meanG /= d;
    meanGx /= d;
    const inv = cache.invStd[r];
    for (let j = 0; j < d; j++) {
      const g = dOut[base + j] * gamma[j];
      dX[base + j] = inv * (g - meanG - cache.xhat[base + j] * meanGx);
    }
  }
}

// ---------------------------------------------------------------------------
// Attention block

interface MhaCache {
  hIn: Float64Array;
  q: Float64Array;
  k: Float64Array;
  v: Float64Array;
  probs: Float64Array[]; // per head, (m*m)
  concat: Float64Array;
  res1: Float64Array;
  ln1: LnCache;
  hat: Float64Array;
  ffPre: Float64Array; // (m*dFF) pre-ReLU
  res2: Float64Array;
  ln2: LnCache;
  out: Float64Array;
}

function projRows(h: Float64Array, W: Float64Array, m: number, d: number, out: Float64Array): void {
  const row = new Float64Array(d);
  const res = new Float64Array(d);
  for (let r = 0; r < m; r++) {
    row.set(h.subarray(r * d, (r + 1) * d));
    matVec(W, row, d, d, res);
    out.set(res, r * d);
  }
}

function projRowsBackward(
  dOut: Float64Array,
  h: Float64Array,
  W: Float64Array,
  m: number,
  d: number,
  dW: Float64Array,
  dH: Float64Array,
): void {
  // out = h @ W.T  =>  dh = dOut @ W, dW += dOut.T @ h
  const dRow = new Float64Array(d);
  const back = new Float64Array(d);
  for (let r = 0; r < m; r++) {
    dRow.set(dOut.subarray(r * d, (r + 1) * d));
    matTVec(W, dRow, d, d, back);
    for (let j = 0; j < d; j++) dH[r * d + j] += back[j];
    addOuter(dW, dRow, h.subarray(r * d, (r + 1) * d), d, d);
  }
}

function attentionForward(w: Weights, layer: number, h: Float64Array, m: number): MhaCache {
  const { dH, heads, dFF, lnEps } = w.meta;
  const dK = dH / heads;
  const p = `mha.${layer}.`;
  const T = (n: string) => w.tensors.get(p + n)!;

  const q = new Float64Array(m * dH);
  const k = new Float64Array(m * dH);
  const v = new Float64Array(m * dH);
  projRows(h, T("Wq"), m, dH, q);
  projRows(h, T("Wk"), m, dH, k);
  projRows(h, T("Wv"), m, dH, v);

  const scale = 1 / Math.sqrt(dK);
  const probs: Float64Array[] = [];
  const concat = new Float64Array(m * dH);
  for (let hd = 0; hd < heads; hd++) {
    const off = hd * dK;
    const P = new Float64Array(m * m);
    for (let a = 0; a < m; a++) {
      let maxS = -Infinity;
      const row = new Float64Array(m);
      for (let b = 0; b < m; b++) {
        let s = 0;
        for (let j = 0; j < dK; j++) s += q[a * dH + off + j] * k[b * dH + off + j];
        s *= scale;
        row[b] = s;
        if (s > maxS) maxS = s;
      }
      let sum = 0;
      for (let b = 0; b < m; b++) {
        const e = Math.exp(row[b] - maxS);
        row[b] = e;
        sum += e;
      }
      for (let b = 0; b < m; b++) P[a * m + b] = row[b] / sum;
    }
    probs.push(P);
    for (let a = 0; a < m; a++) {
      for (let j = 0; j < dK; j++) {
        let s = 0;
        for (let b = 0; b < m; b++) s += P[a * m + b] * v[b * dH + off + j];
        concat[a * dH + off + j] = s;
      }
    }
  }

  const mhaOut = new Float64Array(m * dH);
  projRows(concat, T("Wo"), m, dH, mhaOut);

  const res1 = new Float64Array(m * dH);
  for (let i = 0; i < m * dH; i++) res1[i] = h[i] + mhaOut[i];
  const hat = new Float64Array(m * dH);
  const ln1 = layerNormForward(res1, m, dH, T("ln1.gamma"), T("ln1.beta"), lnEps, hat);

  const ffPre = new Float64Array(m * dFF);
  const ffOut = new Float64Array(m * dH);
  const hidden = new Float64Array(dFF);
  const outRow = new Float64Array(dH);
  for (let r = 0; r < m; r++) {
    matVec(T("ff.W1"), hat.subarray(r * dH, (r + 1) * dH), dFF, dH, hidden);
    for (let j = 0; j < dFF; j++) {
      const a = hidden[j] + T("ff.b1")[j];
      ffPre[r * dFF + j] = a;
      hidden[j] = a > 0 ? a : 0;
    }
    matVec(T("ff.W2"), hidden, dH, dFF, outRow);
    for (let j = 0; j < dH; j++) ffOut[r * dH + j] = outRow[j] + T("ff.b2")[j];
  }

  const res2 = new Float64Array(m * dH);
  for (let i = 0; i < m * dH; i++) res2[i] = hat[i] + ffOut[i];
  const out = new Float64Array(m * dH);
  const ln2 = layerNormForward(res2, m, dH, T("ln2.gamma"), T("ln2.beta"), lnEps, out);

  return { hIn: h, q, k, v, probs, concat, res1, ln1, hat, ffPre, res2, ln2, out };
}

function attentionBackward(
  w: Weights,
  layer: number,
  cache: MhaCache,
  m: number,
  dOut: Float64Array,
  grads: Map<string, Float64Array>,
): Float64Array {
  const { dH, heads, dFF } = w.meta;
  const dK = dH / heads;
  const p = `mha.${layer}.`;
  const T = (n: string) => w.tensors.get(p + n)!;
  const G = (n: string) => grads.get(p + n)!;

  // ln2
  const dRes2 = new Float64Array(m * dH);
  layerNormBackward(dOut, cache.ln2, m, dH, T("ln2.gamma"), G("ln2.gamma"), G("ln2.beta"), dRes2);

  // feed-forward (res2 = hat + ff(hat))
  const dHat = new Float64Array(m * dH);
  dHat.set(dRes2);
  const dHidden = new Float64Array(dFF);
  const dRow = new Float64Array(dH);
  const hiddenAct = new Float64Array(dFF);
  for (let r = 0; r < m; r++) {
    dRow.set(dRes2.subarray(r * dH, (r + 1) * dH));
    for (let j = 0; j < dFF; j++) {
      const a = cache.ffPre[r * dFF + j];
      hiddenAct[j] = a > 0 ? a : 0;
    }
    // out = W2 hidden + b2
    addOuter(G("ff.W2"), dRow, hiddenAct, dH, dFF);
    for (let j = 0; j < dH; j++) G("ff.b2")[j] += dRow[j];
    matTVec(T("ff.W2"), dRow, dH, dFF, dHidden);
    for (let j = 0; j < dFF; j++) {
      if (cache.ffPre[r * dFF + j] <= 0) dHidden[j] = 0;
      G("ff.b1")[j] += dHidden[j];
    }
    addOuter(G("ff.W1"), dHidden, cache.hat.subarray(r * dH, (r + 1) * dH), dFF, dH);
    const back = new Float64Array(dH);
    matTVec(T("ff.W1"), dHidden, dFF, dH, back);
    for (let j = 0; j < dH; j++) dHat[r * dH + j] += back[j];
  }

  // ln1
  const dRes1 = new Float64Array(m * dH);
  layerNormBackward(dHat, cache.ln1, m, dH, T("ln1.gamma"), G("ln1.gamma"), G("ln1.beta"), dRes1);

  // res1 = h + Wo(concat)
  const dIn = new Float64Array(m * dH);
  dIn.set(dRes1);
  const dConcat = new Float64Array(m * dH);
  projRowsBackward(dRes1, cache.concat, T("Wo"), m, dH, G("Wo"), dConcat);

  // attention heads
  const dQ = new Float64Array(m * dH);
  const dKk = new Float64Array(m * dH);
  const dV = new Float64Array(m * dH);
  const scale = 1 / Math.sqrt(dK);
  for (let hd = 0; hd < heads; hd++) {
    const off = hd * dK;
    const P = cache.probs[hd];
    // dV = P^T dConcat_h ; dP = dConcat_h V^T
    for (let a = 0; a < m; a++) {
      // dP row a
      const dPRow = new Float64Array(m);
      for (let b = 0; b < m; b++) {
        let s = 0;
        for (let j = 0; j < dK; j++) {
          s += dConcat[a * dH + off + j] * cache.v[b * dH + off + j];
          // accumulate dV while here would double-count; done below
        }
        dPRow[b] = s;
      }
      // softmax backward for row a
      let dot = 0;
      for (let b = 0; b < m; b++) dot += dPRow[b] * P[a * m + b];
      for (let b = 0; b < m; b++) {
        const dS = P[a * m + b] * (dPRow[b] - dot) * scale;
        for (let j = 0; j < dK; j++) {
          dQ[a * dH + off + j] += dS * cache.k[b * dH + off + j];
          dKk[b * dH + off + j] += dS * cache.q[a * dH + off + j];
        }
      }
      for (let b = 0; b < m; b++) {
        const pv = P[a * m + b];
        for (let j = 0; j < dK; j++) {
          dV[b * dH + off + j] += pv * dConcat[a * dH + off + j];
        }
      }
    }
  }
  projRowsBackward(dQ, cache.hIn, T("Wq"), m, dH, G("Wq"), dIn);
  projRowsBackward(dKk, cache.hIn, T("Wk"), m, dH, G("Wk"), dIn);
  projRowsBackward(dV, cache.hIn, T("Wv"), m, dH, G("Wv"), dIn);
  return dIn;
}

// ---------------------------------------------------------------------------
// Group encoder (embedding + attention stack)

export interface GroupCache {
  x: Float64Array; // (m*2) normalized dims
  h0: Float64Array;
  layers: MhaCache[];
  m: number;
}

/** Per-group item embeddings after the attention stack: one cache per group,
 * final embeddings in `layers[last].out` (or `h0` with zero layers). */
export function encodeGroups(w: Weights, sample: Sample): GroupCache[] {
  const { dH } = w.meta;
  const [H, W] = sample.surface;
  const out: GroupCache[] = [];
  for (const group of sample.groups) {
    const m = group.length;
    const x = new Float64Array(m * 2);
    for (let i = 0; i < m; i++) {
      x[i * 2] = group[i][0] / W;
      x[i * 2 + 1] = group[i][1] / H;
    }
    const h0 = new Float64Array(m * dH);
    const W0 = w.tensors.get("embed.W0")!;
    const b0 = w.tensors.get("embed.b0")!;
    for (let i = 0; i < m; i++) {
      for (let j = 0; j < dH; j++) {
        h0[i * dH + j] = W0[j * 2] * x[i * 2] + W0[j * 2 + 1] * x[i * 2 + 1] + b0[j];
      }
    }
    const layers: MhaCache[] = [];
    let h: Float64Array = h0;
    for (let l = 0; l < w.meta.layers; l++) {
      const cache = attentionForward(w, l, h, m);
      layers.push(cache);
      h = cache.out;
    }
    out.push({ x, h0, layers, m });
  }
  return out;
}

export function groupEmbeddings(cache: GroupCache): Float64Array {
  return cache.layers.length > 0 ? cache.layers[cache.layers.length - 1].out : cache.h0;
}

export function encodeGroupsBackward(
  w: Weights,
  caches: GroupCache[],
  dEmb: Float64Array[], // gradient per group w.r.t. final embeddings
  grads: Map<string, Float64Array>,
): void {
  const { dH } = w.meta;
  const dW0 = grads.get("embed.W0")!;
  const dB0 = grads.get("embed.b0")!;
  for (let g = 0; g < caches.length; g++) {
    const cache = caches[g];
    let d = dEmb[g];
    for (let l = cache.layers.length - 1; l >= 0; l--) {
      d = attentionBackward(w, l, cache.layers[l], cache.m, d, grads);
    }
    for (let i = 0; i < cache.m; i++) {
      for (let j = 0; j < dH; j++) {
        const dv = d[i * dH + j];
        dW0[j * 2] += dv * cache.x[i * 2];
        dW0[j * 2 + 1] += dv * cache.x[i * 2 + 1];
        dB0[j] += dv;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// GRU + head over a flat item sequence

interface GruStepCache {
  x: Float64Array;
  hPrev: Float64Array;
  z: Float64Array;
  r: Float64Array;
  cand: Float64Array;
  hNext: Float64Array;
}

export interface SeqCache {
  steps: GruStepCache[];
  hidPre: Float64Array; // head layer 1 pre-ReLU
  logit: number;
  p: number;
}

/** GRU over the item rows in order, then the two-layer sigmoid head.
 * z = sig(Wz x + Uz h + bz); r alike; cand = tanh(Wh x + Uh (r*h) + bh);
 * h' = (1-z) h + z cand. */
export function headForward(w: Weights, rows: Float64Array[], dims: number): SeqCache {
  const { dH, dFF } = w.meta;
  const T = (n: string) => w.tensors.get(n)!;
  let h = new Float64Array(dH);
  const steps: GruStepCache[] = [];
  const a = new Float64Array(dH);
  const b = new Float64Array(dH);
  for (const x of rows) {
    const z = new Float64Array(dH);
    const r = new Float64Array(dH);
    const cand = new Float64Array(dH);
    matVec(T("gru.Wz"), x, dH, dims, a);
    matVec(T("gru.Uz"), h, dH, dH, b);
    for (let j = 0; j < dH; j++) z[j] = sigmoid(a[j] + b[j] + T("gru.bz")[j]);
    matVec(T("gru.Wr"), x, dH, dims, a);
    matVec(T("gru.Ur"), h, dH, dH, b);
    for (let j = 0; j < dH; j++) r[j] = sigmoid(a[j] + b[j] + T("gru.br")[j]);
    const rh = new Float64Array(dH);
    for (let j = 0; j < dH; j++) rh[j] = r[j] * h[j];
    matVec(T("gru.Wh"), x, dH, dims, a);
    matVec(T("gru.Uh"), rh, dH, dH, b);
    for (let j = 0; j < dH; j++) cand[j] = Math.tanh(a[j] + b[j] + T("gru.bh")[j]);
    const hNext = new Float64Array(dH);
    for (let j = 0; j < dH; j++) hNext[j] = (1 - z[j]) * h[j] + z[j] * cand[j];
    steps.push({ x, hPrev: h, z, r, cand, hNext });
    h = hNext;
  }
  const hidPre = new Float64Array(dFF);
  matVec(T("head.W1"), h, dFF, dH, hidPre);
  for (let j = 0; j < dFF; j++) hidPre[j] += T("head.b1")[j];
  let logit = T("head.b2")[0];
  const W2 = T("head.W2");
  for (let j = 0; j < dFF; j++) logit += W2[j] * Math.max(hidPre[j], 0);
  return { steps, hidPre, logit, p: sigmoid(logit) };
}

/** Backprop from dLoss/dLogit; returns the gradient for each input row. */
export function headBackward(
  w: Weights,
  cache: SeqCache,
  dLogit: number,
  grads: Map<string, Float64Array>,
): Float64Array[] {
  const { dH, dFF } = w.meta;
  const T = (n: string) => w.tensors.get(n)!;
  const G = (n: string) => grads.get(n)!;

  const hFinal =
    cache.steps.length > 0 ? cache.steps[cache.steps.length - 1].hNext : new Float64Array(dH);
  G("head.b2")[0] += dLogit;
  const dHid = new Float64Array(dFF);
  const W2 = T("head.W2");
  for (let j = 0; j < dFF; j++) {
    const act = Math.max(cache.hidPre[j], 0);
    G("head.W2")[j] += dLogit * act;
    dHid[j] = cache.hidPre[j] > 0 ? dLogit * W2[j] : 0;
    G("head.b1")[j] += dHid[j];
  }
  addOuter(G("head.W1"), dHid, hFinal, dFF, dH);
  let dh = new Float64Array(dH);
  matTVec(T("head.W1"), dHid, dFF, dH, dh);

  const dRows: Float64Array[] = [];
  const tmp = new Float64Array(dH);
  for (let t = cache.steps.length - 1; t >= 0; t--) {
    const st = cache.steps[t];
    const dims = st.x.length;
    const dx = new Float64Array(dims);
    const dhPrev = new Float64Array(dH);
    const dz = new Float64Array(dH);
    const dc = new Float64Array(dH);
    for (let j = 0; j < dH; j++) {
      dz[j] = (st.cand[j] - st.hPrev[j]) * dh[j];
      dc[j] = st.z[j] * dh[j];
      dhPrev[j] += (1 - st.z[j]) * dh[j];
    }
    // cand = tanh(Wh x + Uh (r h) + bh)
    const da = new Float64Array(dH);
    for (let j = 0; j < dH; j++) da[j] = (1 - st.cand[j] * st.cand[j]) * dc[j];
    addOuter(G("gru.Wh"), da, st.x, dH, dims);
    const rh = new Float64Array(dH);
    for (let j = 0; j < dH; j++) {
      rh[j] = st.r[j] * st.hPrev[j];
      G("gru.bh")[j] += da[j];
    }
    addOuter(G("gru.Uh"), da, rh, dH, dH);
    matTVec(T("gru.Wh"), da, dH, dims, tmp.subarray(0, dims));
    for (let j = 0; j < dims; j++) dx[j] += tmp[j];
    const dRh = new Float64Array(dH);
    matTVec(T("gru.Uh"), da, dH, dH, dRh);
    const dr = new Float64Array(dH);
    for (let j = 0; j < dH; j++) {
      dr[j] = dRh[j] * st.hPrev[j];
      dhPrev[j] += dRh[j] * st.r[j];
    }
    // gates
    const daz = new Float64Array(dH);
    const dar = new Float64Array(dH);
    for (let j = 0; j < dH; j++) {
      daz[j] = st.z[j] * (1 - st.z[j]) * dz[j];
      dar[j] = st.r[j] * (1 - st.r[j]) * dr[j];
      G("gru.bz")[j] += daz[j];
      G("gru.br")[j] += dar[j];
    }
    addOuter(G("gru.Wz"), daz, st.x, dH, dims);
    addOuter(G("gru.Uz"), daz, st.hPrev, dH, dH);
    addOuter(G("gru.Wr"), dar, st.x, dH, dims);
    addOuter(G("gru.Ur"), dar, st.hPrev, dH, dH);
    matTVec(T("gru.Wz"), daz, dH, dims, tmp.subarray(0, dims));
    for (let j = 0; j < dims; j++) dx[j] += tmp[j];
    matTVec(T("gru.Wr"), dar, dH, dims, tmp.subarray(0, dims));
    for (let j = 0; j < dims; j++) dx[j] += tmp[j];
    matTVec(T("gru.Uz"), daz, dH, dH, tmp);
    for (let j = 0; j < dH; j++) dhPrev[j] += tmp[j];
    matTVec(T("gru.Ur"), dar, dH, dH, tmp);
    for (let j = 0; j < dH; j++) dhPrev[j] += tmp[j];

    dRows.push(dx);
    dh = dhPrev;
  }
  dRows.reverse();
  return dRows;
}

// ---------------------------------------------------------------------------
// Whole-sample forward (inference path; identical math to the solver)

export function forward(w: Weights, sample: Sample): number {
  const { dH } = w.meta;
  const caches = encodeGroups(w, sample);
  const rows: Float64Array[] = [];
  for (const cache of caches) {
    const emb = groupEmbeddings(cache);
    for (let i = 0; i < cache.m; i++) rows.push(emb.subarray(i * dH, (i + 1) * dH));
  }
  return headForward(w, rows, dH).p;
}
