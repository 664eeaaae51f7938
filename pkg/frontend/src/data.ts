/** Dataset loading, stratified splitting, and the synthetic toyset. */

import * as fs from "node:fs";
import { Sample } from "./model.js";

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randInt(rand: () => number, lo: number, hi: number): number {
  return lo + Math.floor(rand() * (hi - lo + 1));
}

export function shuffle<T>(arr: T[], rand: () => number): void {
  for (let i = arr.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [arr[i], arr[j]] = [arr[j], arr[i]];
  }
}

export function parseDataset(text: string): Sample[] {
  const samples: Sample[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const obj = JSON.parse(line);
    if (obj.label !== 0 && obj.label !== 1) {
      throw new Error(`bad label ${obj.label}`);
    }
    samples.push({
      surface: [obj.surface[0], obj.surface[1]],
      groups: obj.groups,
      label: obj.label,
      pc: obj.pc,
    });
  }
  return samples;
}

export function loadDataset(path: string): Sample[] {
  return parseDataset(fs.readFileSync(path, "utf-8"));
}

/** Deterministic 90/10-style split, stratified by (label, packing class). */
export function stratifiedSplit(
  samples: Sample[],
  valFraction: number,
  seed: number,
): { train: Sample[]; val: Sample[] } {
  const buckets = new Map<string, Sample[]>();
  for (const s of samples) {
    const key = `${s.label}|${s.pc ?? "?"}`;
    let b = buckets.get(key);
    if (!b) buckets.set(key, (b = []));
    b.push(s);
  }
  const rand = mulberry32(seed);
  const train: Sample[] = [];
  const val: Sample[] = [];
  for (const key of [...buckets.keys()].sort()) {
    const bucket = buckets.get(key)!;
    shuffle(bucket, rand);
    const nVal = Math.round(bucket.length * valFraction);
    val.push(...bucket.slice(0, nVal));
    train.push(...bucket.slice(nVal));
  }
  shuffle(train, rand);
  shuffle(val, rand);
  return { train, val };
}

/** Linearly separable sanity set: feasible iff total item area is at most
 * half the surface area. */
export function makeToyset(count: number, seed: number): Sample[] {
  const rand = mulberry32(seed);
  const out: Sample[] = [];
  while (out.length < count) {
    const H = randInt(rand, 10, 40);
    const W = randInt(rand, 10, 40);
    const groups: number[][][] = [];
    let area = 0;
    const nGroups = randInt(rand, 1, 3);
    for (let g = 0; g < nGroups; g++) {
      const items: number[][] = [];
      for (let i = randInt(rand, 1, 3); i > 0; i--) {
        const iw = randInt(rand, 1, W);
        const ih = randInt(rand, 1, H);
        items.push([iw, ih]);
        area += iw * ih;
      }
      groups.push(items);
    }
    const ratio = area / (H * W);
    if (Math.abs(ratio - 0.5) < 0.05) continue; // keep a margin at the boundary
    out.push({ surface: [H, W], groups, label: ratio <= 0.5 ? 1 : 0 });
  }
  return out;
}
