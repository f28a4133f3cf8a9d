// WordPiece tokenizer over a checkpoint vocabulary, with the fixed-length
// truncate/pad convention used for encoder input: [CLS] pieces... [SEP] then
// [PAD] up to maxLen; over-long inputs keep maxLen-2 pieces so the end token
// is always present.

import type { AtlasRecord } from "./atlas.js";

export const DEFAULT_MAX_LEN = 157; // third quartile of abstract word counts

export const PAD = "[PAD]";
export const UNK = "[UNK]";
export const CLS = "[CLS]";
export const SEP = "[SEP]";
export const SPECIAL_TOKENS = [PAD, UNK, CLS, SEP];

export interface Encoded {
  ids: number[];
  mask: number[]; // 1 for real tokens, 0 for padding
}

export class WordPieceTokenizer {
  readonly vocab: string[];
  private index = new Map<string, number>();

  constructor(vocab: string[]) {
    for (const special of SPECIAL_TOKENS) {
      if (!vocab.includes(special)) throw new Error(`vocab missing ${special}`);
    }
    this.vocab = vocab;
    vocab.forEach((tok, i) => this.index.set(tok, i));
  }

  get padId(): number {
    return this.index.get(PAD)!;
  }

  tokenToId(token: string): number {
    return this.index.get(token) ?? this.index.get(UNK)!;
  }

  /** Greedy longest-match pieces for one whitespace-delimited word. */
  wordPieces(word: string): string[] {
    const pieces: string[] = [];
    let start = 0;
    while (start < word.length) {
      let end = word.length;
      let piece: string | null = null;
      while (end > start) {
        const candidate = (start > 0 ? "##" : "") + word.slice(start, end);
        if (this.index.has(candidate)) {
          piece = candidate;
          break;
        }
        end--;
      }
      if (piece === null) return [UNK]; // unknown character: whole word is UNK
      pieces.push(piece);
      start = end;
    }
    return pieces;
  }

  encode(text: string, maxLen: number = DEFAULT_MAX_LEN): Encoded {
    const pieces: string[] = [];
    for (const word of text.split(/\s+/)) {
      if (word) pieces.push(...this.wordPieces(word));
    }
    const kept = pieces.slice(0, maxLen - 2);
    const tokens = [CLS, ...kept, SEP];
    const ids = tokens.map((t) => this.tokenToId(t));
    const mask = ids.map(() => 1);
    while (ids.length < maxLen) {
      ids.push(this.padId);
      mask.push(0);
    }
    return { ids, mask };
  }
}

/** Linearly interpolated quantile of integer word counts (matches the engine). */
export function quantile(values: number[], q: number): number {
  if (!values.length) throw new Error("empty sample");
  const sorted = [...values].sort((a, b) => a - b);
  const h = (sorted.length - 1) * q;
  const lo = Math.floor(h);
  const hi = Math.min(lo + 1, sorted.length - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

/** Tokenization budget from the corpus: rounded q75 of abstract word counts. */
export function maxLenFromCorpus(records: AtlasRecord[]): number {
  if (!records.length) return DEFAULT_MAX_LEN;
  return Math.round(quantile(records.map((r) => r.wordCount), 0.75));
}

/** Deterministic vocabulary from corpus text: specials, frequent words, chars. */
export function buildVocab(texts: string[], maxWords = 512): string[] {
  const freq = new Map<string, number>();
  const chars = new Set<string>();
  for (const text of texts) {
    for (const word of text.split(/\s+/)) {
      if (!word) continue;
      freq.set(word, (freq.get(word) ?? 0) + 1);
      for (const ch of word) chars.add(ch);
    }
  }
  const words = [...freq.entries()]
    .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
    .slice(0, maxWords)
    .map(([w]) => w);
  const charPieces = [...chars].sort().flatMap((c) => [c, "##" + c]);
  const seen = new Set<string>(SPECIAL_TOKENS);
  const vocab = [...SPECIAL_TOKENS];
  for (const tok of [...words, ...charPieces]) {
    if (!seen.has(tok)) {
      seen.add(tok);
      vocab.push(tok);
    }
  }
  return vocab;
}
