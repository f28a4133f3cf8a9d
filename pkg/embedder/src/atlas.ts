// Readers for the corpus-atlas interchange files: corpus.atlas (header line
// plus one JSON record per line) and split.json.

import * as fs from "node:fs";

export interface AtlasRecord {
  id: string;
  abstract: string;
  categories: string[];
  wordCount: number;
}

export interface AtlasCorpus {
  n: number;
  categoryCounts: Record<string, number>;
  records: AtlasRecord[];
}

export interface SplitIndex {
  seed: number;
  trainIds: string[];
  valIds: string[];
  testIds: string[];
}

export function readCorpusAtlas(path: string): AtlasCorpus {
  const lines = fs.readFileSync(path, "utf-8").split("\n");
  if (!lines.length) throw new Error(`${path}: empty atlas file`);
  const header = JSON.parse(lines[0]);
  if (header.format !== "atlas/1") {
    throw new Error(`${path}: not an atlas/1 file (format=${header.format})`);
  }
  const records: AtlasRecord[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const obj = JSON.parse(line);
    records.push({
      id: obj.id,
      abstract: obj.abstract,
      categories: obj.categories,
      wordCount: obj.word_count,
    });
  }
  if (records.length !== header.n) {
    throw new Error(`${path}: header declares ${header.n} records, found ${records.length}`);
  }
  return { n: header.n, categoryCounts: header.category_counts ?? {}, records };
}

export function readSplit(path: string): SplitIndex {
  const obj = JSON.parse(fs.readFileSync(path, "utf-8"));
  return {
    seed: obj.seed,
    trainIds: obj.train_ids,
    valIds: obj.val_ids,
    testIds: obj.test_ids,
  };
}
