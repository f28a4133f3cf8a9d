import * as fs from "node:fs";
import { describe, expect, it } from "vitest";

import { lemmatize, preprocess } from "../src/preprocess.js";

const golden: [string, string][] = JSON.parse(
  fs.readFileSync(new URL("./fixtures/golden_preprocess.json", import.meta.url), "utf-8"),
);

describe("preprocess", () => {
  it("matches the reference output for the canonical sentence", () => {
    expect(preprocess("The models were trained.")).toBe("model train");
  });

  it("matches all committed golden pairs", () => {
    for (const [input, expected] of golden) {
      expect(preprocess(input)).toBe(expected);
    }
  });

  it("is a fixed point on already-minimal input", () => {
    expect(preprocess("quantum entanglement")).toBe("quantum entanglement");
  });

  it("returns empty for all-stopword input", () => {
    expect(preprocess("and the of")).toBe("");
    expect(preprocess("And THE of!")).toBe("");
  });

  it("preserves token order", () => {
    expect(preprocess("galaxies reveal photons")).toBe("galaxy reveal photon");
  });

  it("drops punctuation-only tokens and strips edges", () => {
    expect(preprocess("photon -- detector ; (measured)")).toBe("photon detector measure");
  });

  it("lowercases", () => {
    expect(preprocess("Entangled Photons")).toBe("entangl photon");
  });

  it("keeps personal pronouns out of lemmatization but stopwords still drop them", () => {
    // "its" is not a personal pronoun here but is a stopword; "themselves" is a
    // pronoun and also a... non-stopword: it should survive unlemmatized
    expect(preprocess("particles arrange themselves")).toBe("particle arrange themselves");
  });
});

describe("lemmatize", () => {
  it("handles plurals", () => {
    expect(lemmatize("models")).toBe("model");
    expect(lemmatize("galaxies")).toBe("galaxy");
    expect(lemmatize("boxes")).toBe("box");
  });

  it("handles past tense with doubling undo", () => {
    expect(lemmatize("trained")).toBe("train");
    expect(lemmatize("stopped")).toBe("stop");
  });

  it("uses the exception table for irregular forms", () => {
    expect(lemmatize("were")).toBe("be");
    expect(lemmatize("uses")).toBe("use");
    expect(lemmatize("taken")).toBe("take");
  });
});
