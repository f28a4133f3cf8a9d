// Multi-label fine-tuning: a 32-unit hidden layer and an independent-sigmoid
// classification layer are stacked on the pooled encoder output and trained
// with binary cross-entropy against the corpus category labels. The head is
// discarded afterwards; only the updated encoder weights are returned.

import * as tf from "@tensorflow/tfjs";

import { AtlasCorpus, AtlasRecord, SplitIndex } from "./atlas.js";
import { Checkpoint, CHECKPOINT_FORMAT } from "./checkpoint.js";
import { EarlyStopping, StopReason } from "./earlystop.js";
import { Encoder } from "./encoder.js";
import { preprocess } from "./preprocess.js";
import { WordPieceTokenizer, maxLenFromCorpus } from "./tokenizer.js";

export interface FtHyperparams {
  batchSize: number;
  learningRate: number;
  dropout: number;
  maxEpochs: number;
  patience: number;
  headWidth: number;
}

export const DEFAULT_HYPERPARAMS: FtHyperparams = {
  batchSize: 32,
  learningRate: 2e-5,
  dropout: 0.1,
  maxEpochs: 4,
  patience: 1,
  headWidth: 32,
};

export interface EpochRecord {
  epoch: number;
  trainLoss: number;
  valLoss: number;
  improved: boolean;
}

export interface FineTuneResult {
  checkpoint: Checkpoint; // encoder only, kind "ft"
  labelSpace: string[];
  history: EpochRecord[];
  restoredEpoch: number;
  stoppedBy: StopReason | "zero_epochs";
}

interface Example {
  ids: number[];
  mask: number[];
  target: Float32Array;
}

/** Multi-hot target: one 1 per category the record carries. */
export function multiHot(categories: string[], labelIndex: Map<string, number>): Float32Array {
  const target = new Float32Array(labelIndex.size);
  for (const cat of categories) {
    const idx = labelIndex.get(cat);
    if (idx !== undefined) target[idx] = 1;
  }
  return target;
}

function seededShuffle<T>(items: T[], seed: number): T[] {
  // small deterministic LCG; training order must be reproducible
  let state = (seed >>> 0) || 1;
  const next = () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
  const out = [...items];
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

export async function fineTune(
  corpus: AtlasCorpus,
  split: SplitIndex,
  hp: FtHyperparams,
  base: Checkpoint,
  opts: { maxLen?: number; seed?: number; log?: (msg: string) => void } = {},
): Promise<FineTuneResult> {
  const log = opts.log ?? (() => {});
  const labelSpace = [...new Set(corpus.records.flatMap((r) => r.categories))].sort();
  if (labelSpace.length < 2) {
    throw new Error(`label space needs >= 2 categories, found ${labelSpace.length}`);
  }
  const labelIndex = new Map(labelSpace.map((c, i) => [c, i]));
  const byId = new Map(corpus.records.map((r) => [r.id, r]));
  const tokenizer = new WordPieceTokenizer(base.vocab);
  const maxLen = opts.maxLen ?? maxLenFromCorpus(corpus.records);

  const toExample = (rec: AtlasRecord): Example | null => {
    const processed = preprocess(rec.abstract);
    if (!processed) return null;
    const { ids, mask } = tokenizer.encode(processed, maxLen);
    return { ids, mask, target: multiHot(rec.categories, labelIndex) };
  };

  const gather = (splitIds: string[], name: string): Example[] => {
    const examples: Example[] = [];
    for (const id of splitIds) {
      const rec = byId.get(id);
      if (!rec) continue;
      const ex = toExample(rec);
      if (ex) examples.push(ex);
    }
    if (!examples.length) throw new Error(`empty ${name} split`);
    return examples;
  };
  const trainSet = gather(split.trainIds, "train");
  const valSet = gather(split.valIds, "validation");

  if (hp.maxEpochs === 0) {
    return {
      checkpoint: { ...base },
      labelSpace,
      history: [],
      restoredEpoch: 0,
      stoppedBy: "zero_epochs",
    };
  }

  const encoder = new Encoder(base.config, base.weights, true);
  const h = base.config.hiddenSize;
  const seed = opts.seed ?? 0;
  const headVars = {
    hiddenKernel: tf.variable(tf.randomNormal([h, hp.headWidth], 0, 0.02, "float32", seed + 1)),
    hiddenBias: tf.variable(tf.zeros([hp.headWidth])),
    outKernel: tf.variable(
      tf.randomNormal([hp.headWidth, labelSpace.length], 0, 0.02, "float32", seed + 2),
    ),
    outBias: tf.variable(tf.zeros([labelSpace.length])),
  };
  const trainables = [...encoder.trainableVariables(), ...Object.values(headVars)];
  const optimizer = tf.train.adam(hp.learningRate);

  let dropSeed = seed + 1000;
  const logits = (batch: Example[], training: boolean): tf.Tensor => {
    const hidden = encoder.forward(
      batch.map((e) => e.ids),
      batch.map((e) => e.mask),
      { training, dropout: hp.dropout, seed: dropSeed },
    );
    const first = hidden
      .slice([0, 0, 0], [batch.length, 1, h])
      .reshape([batch.length, h]);
    const pooled = first.matMul(encoder.variables["pooler/kernel"])
      .add(encoder.variables["pooler/bias"]).tanh();
    let head = pooled.matMul(headVars.hiddenKernel).add(headVars.hiddenBias).relu();
    if (training && hp.dropout > 0) head = tf.dropout(head, hp.dropout, undefined, dropSeed++);
    return head.matMul(headVars.outKernel).add(headVars.outBias);
  };

  const batchLoss = (batch: Example[], training: boolean): tf.Scalar => {
    const targets = tf.tensor2d(
      batch.map((e) => Array.from(e.target)),
      [batch.length, labelSpace.length],
    );
    return tf.losses.sigmoidCrossEntropy(targets, logits(batch, training)) as tf.Scalar;
  };

  const evalLoss = (examples: Example[]): number => {
    let total = 0;
    for (let i = 0; i < examples.length; i += hp.batchSize) {
      const batch = examples.slice(i, i + hp.batchSize);
      const loss = tf.tidy(() => batchLoss(batch, false));
      total += loss.dataSync()[0] * batch.length;
      loss.dispose();
    }
    return total / examples.length;
  };

  const stopper = new EarlyStopping(hp.patience, hp.maxEpochs);
  const history: EpochRecord[] = [];
  let bestWeights = encoder.readWeights();
  let stoppedBy: StopReason = null;
  for (let epoch = 1; epoch <= hp.maxEpochs; epoch++) {
    const order = seededShuffle(trainSet, seed + epoch);
    let trainTotal = 0;
    for (let i = 0; i < order.length; i += hp.batchSize) {
      const batch = order.slice(i, i + hp.batchSize);
      const loss = optimizer.minimize(() => batchLoss(batch, true), true, trainables);
      trainTotal += (loss!.dataSync()[0] as number) * batch.length;
      loss!.dispose();
    }
    const valLoss = evalLoss(valSet);
    const decision = stopper.record(valLoss);
    if (decision.improved) bestWeights = encoder.readWeights();
    history.push({
      epoch,
      trainLoss: trainTotal / trainSet.length,
      valLoss,
      improved: decision.improved,
    });
    log(`epoch ${epoch}: train ${history[epoch - 1].trainLoss.toFixed(4)} `
        + `val ${valLoss.toFixed(4)}${decision.improved ? " *" : ""}`);
    if (decision.stop) {
      stoppedBy = decision.reason;
      break;
    }
  }

  encoder.dispose();
  for (const v of Object.values(headVars)) v.dispose();
  return {
    checkpoint: {
      format: CHECKPOINT_FORMAT,
      kind: "ft",
      config: base.config,
      vocab: base.vocab,
      weights: bestWeights,
    },
    labelSpace,
    history,
    restoredEpoch: stopper.bestEpoch,
    stoppedBy: stoppedBy ?? "max_epochs",
  };
}
