#!/usr/bin/env node
// embedder command line: init-checkpoint, export, finetune.

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { readCorpusAtlas, readSplit } from "./atlas.js";
import { initCheckpoint, loadCheckpoint, saveCheckpoint } from "./checkpoint.js";
import { writeEmb1 } from "./emb1.js";
import { DEFAULT_HYPERPARAMS, fineTune } from "./finetune.js";
import { exportEmbeddings, Variant } from "./export.js";
import { buildVocab } from "./tokenizer.js";
import { preprocess } from "./preprocess.js";

function resolveCheckpointPath(flag: string | undefined): string {
  const path = flag ?? process.env.EMBEDDER_CHECKPOINT;
  if (!path) {
    throw new Error(
      "checkpoint missing: pass --checkpoint or set EMBEDDER_CHECKPOINT",
    );
  }
  return path;
}

await yargs(hideBin(process.argv))
  .scriptName("embedder")
  .command(
    "init-checkpoint",
    "create a seeded base checkpoint with a corpus-derived vocabulary",
    (y) =>
      y
        .option("corpus", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("seed", { type: "number", default: 0 })
        .option("hidden", { type: "number", default: 768 })
        .option("layers", { type: "number", default: 1 })
        .option("heads", { type: "number", default: 4 })
        .option("intermediate", { type: "number", default: 512 })
        .option("max-positions", { type: "number", default: 192 })
        .option("vocab-size", { type: "number", default: 512 }),
    (argv) => {
      const corpus = readCorpusAtlas(argv.corpus);
      const vocab = buildVocab(
        corpus.records.map((r) => preprocess(r.abstract)),
        argv["vocab-size"],
      );
      const checkpoint = initCheckpoint(
        {
          vocabSize: vocab.length,
          hiddenSize: argv.hidden,
          numLayers: argv.layers,
          numHeads: argv.heads,
          intermediateSize: argv.intermediate,
          maxPositions: argv["max-positions"],
        },
        vocab,
        argv.seed,
      );
      saveCheckpoint(checkpoint, argv.out, { seed: argv.seed, corpus: argv.corpus });
      console.log(`wrote base checkpoint (${vocab.length} vocab tokens) -> ${argv.out}`);
    },
  )
  .command(
    "export",
    "embed all corpus abstracts and write an EMB1 file",
    (y) =>
      y
        .option("corpus", { type: "string", demandOption: true })
        .option("variant", { type: "string", choices: ["t", "cls"], demandOption: true })
        .option("checkpoint", { type: "string" })
        .option("out", { type: "string", demandOption: true })
        .option("max-len", { type: "number" })
        .option("batch-size", { type: "number", default: 8 })
        .option("tag", { type: "string", describe: "override the variant tag" }),
    (argv) => {
      const corpus = readCorpusAtlas(argv.corpus);
      const checkpoint = loadCheckpoint(resolveCheckpointPath(argv.checkpoint));
      const { matrix, skipped } = exportEmbeddings(corpus, checkpoint, {
        variant: argv.variant as Variant,
        maxLen: argv["max-len"],
        batchSize: argv["batch-size"],
        variantTag: argv.tag,
        log: (m) => console.error(m),
      });
      writeEmb1(matrix, argv.out);
      console.log(
        `exported ${matrix.ids.length} x ${matrix.d} embeddings `
        + `(variant ${matrix.variant}) -> ${argv.out}`,
      );
      if (skipped.length) console.log(`  skipped ${skipped.length} empty abstracts`);
    },
  )
  .command(
    "finetune",
    "fine-tune the encoder on corpus category labels",
    (y) =>
      y
        .option("corpus", { type: "string", demandOption: true })
        .option("split", { type: "string", demandOption: true })
        .option("checkpoint", { type: "string" })
        .option("out", { type: "string", demandOption: true })
        .option("batch-size", { type: "number", default: DEFAULT_HYPERPARAMS.batchSize })
        .option("learning-rate", { type: "number", default: DEFAULT_HYPERPARAMS.learningRate })
        .option("dropout", { type: "number", default: DEFAULT_HYPERPARAMS.dropout })
        .option("max-epochs", { type: "number", default: DEFAULT_HYPERPARAMS.maxEpochs })
        .option("patience", { type: "number", default: DEFAULT_HYPERPARAMS.patience })
        .option("head-width", { type: "number", default: DEFAULT_HYPERPARAMS.headWidth })
        .option("max-len", { type: "number" })
        .option("seed", { type: "number", default: 0 }),
    async (argv) => {
      const corpus = readCorpusAtlas(argv.corpus);
      const split = readSplit(argv.split);
      const base = loadCheckpoint(resolveCheckpointPath(argv.checkpoint));
      const hp = {
        batchSize: argv["batch-size"],
        learningRate: argv["learning-rate"],
        dropout: argv.dropout,
        maxEpochs: argv["max-epochs"],
        patience: argv.patience,
        headWidth: argv["head-width"],
      };
      const result = await fineTune(corpus, split, hp, base, {
        maxLen: argv["max-len"],
        seed: argv.seed,
        log: (m) => console.log(m),
      });
      saveCheckpoint(result.checkpoint, argv.out, {
        hyperparameters: {
          batch_size: hp.batchSize,
          learning_rate: hp.learningRate,
          dropout: hp.dropout,
          max_epochs: hp.maxEpochs,
          patience: hp.patience,
          head_width: hp.headWidth,
        },
        label_space: result.labelSpace,
        restored_epoch: result.restoredEpoch,
        stopped_by: result.stoppedBy,
        split_seed: split.seed,
      });
      console.log(
        `fine-tuned ${result.history.length} epochs, restored epoch `
        + `${result.restoredEpoch} -> ${argv.out}`,
      );
    },
  )
  .demandCommand(1)
  .strict()
  .fail((msg, err) => {
    console.error(err?.message ?? msg);
    process.exit(2);
  })
  .parseAsync();
