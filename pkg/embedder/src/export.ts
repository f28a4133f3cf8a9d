// Embed every corpus abstract in corpus order and collect an EMB1 matrix.

import { AtlasCorpus } from "./atlas.js";
import { Checkpoint } from "./checkpoint.js";
import { Encoder } from "./encoder.js";
import { EmbMatrix } from "./emb1.js";
import { preprocess } from "./preprocess.js";
import { WordPieceTokenizer, maxLenFromCorpus } from "./tokenizer.js";

export type Variant = "t" | "cls";

export interface ExportOptions {
  variant: Variant;
  maxLen?: number; // default: rounded q75 of corpus word counts
  batchSize?: number;
  variantTag?: string; // default derived from checkpoint kind + variant
  log?: (msg: string) => void;
}

export interface ExportResult {
  matrix: EmbMatrix;
  skipped: string[]; // ids whose abstracts preprocess to nothing
}

export function defaultVariantTag(checkpoint: Checkpoint, variant: Variant): string {
  return `${checkpoint.kind === "ft" ? "ft-" : ""}scibert-${variant}`;
}

export function exportEmbeddings(
  corpus: AtlasCorpus,
  checkpoint: Checkpoint,
  opts: ExportOptions,
): ExportResult {
  const log = opts.log ?? (() => {});
  const tokenizer = new WordPieceTokenizer(checkpoint.vocab);
  const maxLen = opts.maxLen ?? maxLenFromCorpus(corpus.records);
  if (maxLen > checkpoint.config.maxPositions) {
    throw new Error(
      `max length ${maxLen} exceeds model maximum ${checkpoint.config.maxPositions}`,
    );
  }
  const batchSize = opts.batchSize ?? 8;
  const encoder = new Encoder(checkpoint.config, checkpoint.weights);

  const ids: string[] = [];
  const encodedIds: number[][] = [];
  const encodedMasks: number[][] = [];
  const skipped: string[] = [];
  for (const rec of corpus.records) {
    const processed = preprocess(rec.abstract);
    if (!processed) {
      log(`skipping ${rec.id}: abstract preprocesses to nothing`);
      skipped.push(rec.id);
      continue;
    }
    const { ids: tokenIds, mask } = tokenizer.encode(processed, maxLen);
    ids.push(rec.id);
    encodedIds.push(tokenIds);
    encodedMasks.push(mask);
  }

  const d = checkpoint.config.hiddenSize;
  const data = new Float32Array(ids.length * d);
  for (let i = 0; i < ids.length; i += batchSize) {
    const out = encoder.encode(
      encodedIds.slice(i, i + batchSize),
      encodedMasks.slice(i, i + batchSize),
    );
    const chosen = opts.variant === "t" ? out.t : out.cls;
    data.set(chosen.dataSync() as Float32Array, i * d);
    out.t.dispose();
    out.cls.dispose();
  }
  encoder.dispose();
  return {
    matrix: {
      ids,
      d,
      data,
      variant: opts.variantTag ?? defaultVariantTag(checkpoint, opts.variant),
    },
    skipped,
  };
}
