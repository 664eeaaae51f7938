/** Weighted binary cross-entropy. The positive weight is the ratio of
 * positive to negative sample counts, applied to every positive term. */

export const EPS = 1e-7;

export function clampP(p: number): number {
  return Math.min(Math.max(p, EPS), 1 - EPS);
}

export function weightedBce(p: number, y: number, wPos: number): number {
  const q = clampP(p);
  return -(wPos * y * Math.log(q) + (1 - y) * Math.log(1 - q));
}

/** d(loss)/d(logit) for p = sigmoid(logit). */
export function weightedBceLogitGrad(p: number, y: number, wPos: number): number {
  return (1 - y) * p - wPos * y * (1 - p);
}

export function positiveWeight(labels: number[]): number {
  const pos = labels.filter((y) => y === 1).length;
  const neg = labels.length - pos;
  if (pos === 0 || neg === 0) {
    throw new Error("single-class dataset");
  }
  return pos / neg;
}
