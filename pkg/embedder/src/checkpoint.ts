// Checkpoint files: JSON with base64-encoded float32 weights plus a JSON
// metadata sidecar (<path>.meta.json) recording hyperparameters and version
// stamps. A converted real encoder checkpoint drops into the same format.

import * as fs from "node:fs";

import { EncoderConfig, WeightArrays, initWeightArrays } from "./encoder.js";

export const CHECKPOINT_FORMAT = "embedder-checkpoint/1";
export const PACKAGE_VERSION = "0.1.0";

export type CheckpointKind = "base" | "ft";

export interface Checkpoint {
  format: string;
  kind: CheckpointKind;
  config: EncoderConfig;
  vocab: string[];
  weights: WeightArrays;
}

interface SerializedWeight {
  shape: number[];
  data: string; // base64 little-endian float32
}

function encodeWeights(weights: WeightArrays): Record<string, SerializedWeight> {
  const out: Record<string, SerializedWeight> = {};
  for (const name of Object.keys(weights).sort()) {
    const { shape, values } = weights[name];
    out[name] = {
      shape,
      data: Buffer.from(values.buffer, values.byteOffset, values.byteLength).toString("base64"),
    };
  }
  return out;
}

function decodeWeights(serialized: Record<string, SerializedWeight>): WeightArrays {
  const out: WeightArrays = {};
  for (const [name, w] of Object.entries(serialized)) {
    const buf = Buffer.from(w.data, "base64");
    out[name] = {
      shape: w.shape,
      values: new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4),
    };
  }
  return out;
}

export function initCheckpoint(
  config: EncoderConfig,
  vocab: string[],
  seed: number,
): Checkpoint {
  if (config.vocabSize !== vocab.length) {
    throw new Error(`config.vocabSize=${config.vocabSize} but vocab has ${vocab.length} tokens`);
  }
  if (config.hiddenSize % config.numHeads !== 0) {
    throw new Error("hiddenSize must be divisible by numHeads");
  }
  return {
    format: CHECKPOINT_FORMAT,
    kind: "base",
    config,
    vocab,
    weights: initWeightArrays(config, seed),
  };
}

export function saveCheckpoint(
  checkpoint: Checkpoint,
  path: string,
  metadata: Record<string, unknown> = {},
): void {
  const body = {
    format: checkpoint.format,
    kind: checkpoint.kind,
    config: checkpoint.config,
    vocab: checkpoint.vocab,
    weights: encodeWeights(checkpoint.weights),
  };
  fs.writeFileSync(path, JSON.stringify(body));
  const sidecar = {
    checkpoint: path,
    kind: checkpoint.kind,
    config: checkpoint.config,
    created_by: `embedder ${PACKAGE_VERSION}`,
    ...metadata,
  };
  fs.writeFileSync(`${path}.meta.json`, JSON.stringify(sidecar, null, 2) + "\n");
}

export function loadCheckpoint(path: string): Checkpoint {
  if (!fs.existsSync(path)) {
    throw new Error(`checkpoint missing: ${path}`);
  }
  const obj = JSON.parse(fs.readFileSync(path, "utf-8"));
  if (obj.format !== CHECKPOINT_FORMAT) {
    throw new Error(`${path}: unsupported checkpoint format ${obj.format}`);
  }
  return {
    format: obj.format,
    kind: obj.kind ?? "base",
    config: obj.config,
    vocab: obj.vocab,
    weights: decodeWeights(obj.weights),
  };
}
