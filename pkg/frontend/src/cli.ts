/** CLI: `train --data D --out W --fixtures F [--epochs E --seed S ...]`
 * and `eval --weights W --data D [--tau T]`. */

import * as fs from "node:fs";
import { loadDataset, stratifiedSplit } from "./data.js";
import { evaluate, makeFixtures } from "./evaluate.js";
import { DEFAULT_CONFIG, train } from "./train.js";
import { dumpWeights, loadWeights } from "./weights.js";

function parseArgs(argv: string[]): { command: string; opts: Record<string, string> } {
  const [command, ...rest] = argv;
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    if (!rest[i].startsWith("--") || i + 1 >= rest.length) {
      throw new Error(`bad argument ${rest[i]}`);
    }
    opts[rest[i].slice(2)] = rest[i + 1];
  }
  return { command, opts };
}

function main(): void {
  const { command, opts } = parseArgs(process.argv.slice(2));
  if (command === "train") {
    const samples = loadDataset(opts.data);
    const config = {
      ...DEFAULT_CONFIG,
      epochs: opts.epochs !== undefined ? Number(opts.epochs) : DEFAULT_CONFIG.epochs,
      seed: opts.seed !== undefined ? Number(opts.seed) : DEFAULT_CONFIG.seed,
      augmentation:
        opts.augmentation !== undefined
          ? Number(opts.augmentation)
          : DEFAULT_CONFIG.augmentation,
      batchSize:
        opts["batch-size"] !== undefined ? Number(opts["batch-size"]) : DEFAULT_CONFIG.batchSize,
      patience:
        opts.patience !== undefined ? Number(opts.patience) : DEFAULT_CONFIG.patience,
    };
    const { train: trainSet, val: valSet } = stratifiedSplit(
      samples,
      config.valFraction,
      config.seed,
    );
    console.log(
      `training on ${trainSet.length} samples, validating on ${valSet.length} ` +
        `(augmentation x${config.augmentation}, batch ${config.batchSize}, lr ${config.learningRate})`,
    );
    const result = train(trainSet, valSet, config, (s) => {
      console.log(
        `epoch ${s.epoch}: train ${s.trainLoss.toFixed(5)} ` +
          `val ${s.valLoss.toFixed(5)} acc ${(s.valAccuracy * 100).toFixed(2)}%`,
      );
    });
    fs.writeFileSync(opts.out, dumpWeights(result.weights));
    if (opts.fixtures) {
      const fixtures = makeFixtures(result.weights, valSet, Number(opts["fixture-count"] ?? 60));
      fs.writeFileSync(
        opts.fixtures,
        JSON.stringify({ weights: opts.out.split("/").pop(), cases: fixtures }, null, 1),
      );
    }
    if (opts.curves) {
      fs.writeFileSync(opts.curves, JSON.stringify(result.curves, null, 1));
    }
    const final = evaluate(result.weights, valSet);
    console.log(`best epoch ${result.bestEpoch}`);
    console.log(
      `held-out: accuracy ${(final.overall.accuracy * 100).toFixed(2)}% ` +
        `TPR ${final.overall.tpr} TNR ${final.overall.tnr}`,
    );
    for (const [pc, m] of Object.entries(final.perPc).sort()) {
      console.log(`  pc=${pc}: acc ${(m.accuracy * 100).toFixed(2)}% TPR ${m.tpr} TNR ${m.tnr}`);
    }
  } else if (command === "eval") {
    const w = loadWeights(fs.readFileSync(opts.weights, "utf-8"));
    const samples = loadDataset(opts.data);
    const tau = opts.tau !== undefined ? Number(opts.tau) : 0.5;
    const out = evaluate(w, samples, tau);
    console.log(JSON.stringify(out, null, 1));
  } else {
    console.error("usage: cli.js {train,eval} --flag value ...");
    process.exit(2);
  }
}

main();
