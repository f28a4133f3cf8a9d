// BERT-family text encoder on the tfjs CPU backend: token + position
// embeddings, post-LN transformer blocks with multi-head self-attention and
// a GELU feed-forward, plus a tanh pooler over position 0. Inference is
// deterministic; dropout only runs when training is requested.

import * as tf from "@tensorflow/tfjs";

export interface EncoderConfig {
  vocabSize: number;
  hiddenSize: number;
  numLayers: number;
  numHeads: number;
  intermediateSize: number;
  maxPositions: number;
}

export type WeightArrays = Record<string, { shape: number[]; values: Float32Array }>;

function gelu(x: tf.Tensor): tf.Tensor {
  return x.mul(x.div(Math.SQRT2).erf().add(1)).mul(0.5);
}

function layerNorm(x: tf.Tensor, gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor {
  const mean = x.mean(-1, true);
  const centered = x.sub(mean);
  const variance = centered.square().mean(-1, true);
  return centered.div(variance.add(1e-5).sqrt()).mul(gamma).add(beta);
}

// (B, L, in) x (in, out) + (out); flattened to 2-D because the tfjs matMul
// gradient does not support broadcasting a rank-2 operand over a batch
function dense3(x: tf.Tensor, kernel: tf.Tensor, bias: tf.Tensor): tf.Tensor {
  const [b, l, inDim] = x.shape as [number, number, number];
  const outDim = kernel.shape[1] as number;
  return x.reshape([b * l, inDim]).matMul(kernel as tf.Tensor2D).add(bias)
    .reshape([b, l, outDim]);
}

export function weightSpecs(config: EncoderConfig): Record<string, number[]> {
  const h = config.hiddenSize;
  const specs: Record<string, number[]> = {
    "emb/word": [config.vocabSize, h],
    "emb/pos": [config.maxPositions, h],
    "emb/ln/gamma": [h],
    "emb/ln/beta": [h],
    "pooler/kernel": [h, h],
    "pooler/bias": [h],
  };
  for (let i = 0; i < config.numLayers; i++) {
    for (const part of ["q", "k", "v", "o"]) {
      specs[`layer${i}/attn/${part}/kernel`] = [h, h];
      specs[`layer${i}/attn/${part}/bias`] = [h];
    }
    specs[`layer${i}/attn_ln/gamma`] = [h];
    specs[`layer${i}/attn_ln/beta`] = [h];
    specs[`layer${i}/ffn/in/kernel`] = [h, config.intermediateSize];
    specs[`layer${i}/ffn/in/bias`] = [config.intermediateSize];
    specs[`layer${i}/ffn/out/kernel`] = [config.intermediateSize, h];
    specs[`layer${i}/ffn/out/bias`] = [h];
    specs[`layer${i}/ffn_ln/gamma`] = [h];
    specs[`layer${i}/ffn_ln/beta`] = [h];
  }
  return specs;
}

/** Seeded random weight arrays: N(0, 0.02) kernels, zero biases, unit LN gains. */
export function initWeightArrays(config: EncoderConfig, seed: number): WeightArrays {
  const out: WeightArrays = {};
  const specs = weightSpecs(config);
  let draw = 0;
  for (const name of Object.keys(specs).sort()) {
    const shape = specs[name];
    let values: Float32Array;
    if (name.endsWith("gamma")) {
      values = new Float32Array(shape[0]).fill(1);
    } else if (name.endsWith("bias") || name.endsWith("beta")) {
      values = new Float32Array(shape.reduce((a, b) => a * b, 1));
    } else {
      const t = tf.randomNormal(shape, 0, 0.02, "float32", seed + draw);
      values = t.dataSync() as Float32Array;
      t.dispose();
      draw++;
    }
    out[name] = { shape, values };
  }
  return out;
}

export interface EncodeOutput {
  /** last hidden state at sequence position 0, (batch, hidden) */
  t: tf.Tensor2D;
  /** pooled classification representation tanh(W h0 + b), (batch, hidden) */
  cls: tf.Tensor2D;
}

export class Encoder {
  readonly config: EncoderConfig;
  readonly variables: Record<string, tf.Variable>;

  constructor(config: EncoderConfig, weights: WeightArrays, trainable = false) {
    this.config = config;
    const specs = weightSpecs(config);
    this.variables = {};
    for (const name of Object.keys(specs).sort()) {
      const w = weights[name];
      if (!w) throw new Error(`checkpoint missing weight ${name}`);
      if (w.shape.join(",") !== specs[name].join(",")) {
        throw new Error(`weight ${name} has shape [${w.shape}], expected [${specs[name]}]`);
      }
      this.variables[name] = tf.variable(
        tf.tensor(w.values, w.shape, "float32"), trainable, name,
      );
    }
  }

  dispose(): void {
    for (const v of Object.values(this.variables)) v.dispose();
  }

  trainableVariables(): tf.Variable[] {
    return Object.keys(this.variables).sort().map((k) => this.variables[k]);
  }

  readWeights(): WeightArrays {
    const out: WeightArrays = {};
    for (const [name, v] of Object.entries(this.variables)) {
      out[name] = { shape: v.shape.slice(), values: v.dataSync().slice() as Float32Array };
    }
    return out;
  }

  /** Full sequence output, (batch, seqLen, hidden). */
  forward(
    ids: number[][],
    mask: number[][],
    opts: { training?: boolean; dropout?: number; seed?: number } = {},
  ): tf.Tensor3D {
    const cfg = this.config;
    const v = this.variables;
    const batch = ids.length;
    const seqLen = ids[0].length;
    if (seqLen > cfg.maxPositions) {
      throw new Error(`sequence length ${seqLen} exceeds model maximum ${cfg.maxPositions}`);
    }
    const dropRate = opts.training ? (opts.dropout ?? 0) : 0;
    let dropSeed = opts.seed ?? 1;

    const idTensor = tf.tensor2d(ids, [batch, seqLen], "int32");
    const wordEmb = tf.gather(v["emb/word"], idTensor);
    const posEmb = v["emb/pos"]
      .slice([0, 0], [seqLen, cfg.hiddenSize])
      .expandDims(0);
    let x = layerNorm(wordEmb.add(posEmb), v["emb/ln/gamma"], v["emb/ln/beta"]);

    // additive attention mask: 0 on real tokens, -1e9 on padding keys
    const maskAdd = tf
      .tensor2d(mask, [batch, seqLen], "float32")
      .sub(1)
      .mul(1e9)
      .reshape([batch, 1, 1, seqLen]);

    const headDim = cfg.hiddenSize / cfg.numHeads;
    const toHeads = (t: tf.Tensor) =>
      t.reshape([batch, seqLen, cfg.numHeads, headDim]).transpose([0, 2, 1, 3]);

    for (let i = 0; i < cfg.numLayers; i++) {
      const p = (part: string) => `layer${i}/${part}`;
      const q = toHeads(dense3(x, v[p("attn/q/kernel")], v[p("attn/q/bias")]));
      const k = toHeads(dense3(x, v[p("attn/k/kernel")], v[p("attn/k/bias")]));
      const val = toHeads(dense3(x, v[p("attn/v/kernel")], v[p("attn/v/bias")]));
      const scores = q.matMul(k, false, true).div(Math.sqrt(headDim)).add(maskAdd);
      const attn = tf.softmax(scores, -1);
      const merged = attn
        .matMul(val)
        .transpose([0, 2, 1, 3])
        .reshape([batch, seqLen, cfg.hiddenSize]);
      let ctx = dense3(merged, v[p("attn/o/kernel")], v[p("attn/o/bias")]);
      if (dropRate > 0) ctx = tf.dropout(ctx, dropRate, undefined, dropSeed++);
      x = layerNorm(x.add(ctx), v[p("attn_ln/gamma")], v[p("attn_ln/beta")]);

      let ffn = dense3(
        gelu(dense3(x, v[p("ffn/in/kernel")], v[p("ffn/in/bias")])),
        v[p("ffn/out/kernel")],
        v[p("ffn/out/bias")],
      );
      if (dropRate > 0) ffn = tf.dropout(ffn, dropRate, undefined, dropSeed++);
      x = layerNorm(x.add(ffn), v[p("ffn_ln/gamma")], v[p("ffn_ln/beta")]);
    }
    return x as tf.Tensor3D;
  }

  /** Position-0 hidden state and pooled representation for a batch. */
  encode(ids: number[][], mask: number[][]): EncodeOutput {
    return tf.tidy(() => {
      const hidden = this.forward(ids, mask);
      const first = hidden
        .slice([0, 0, 0], [ids.length, 1, this.config.hiddenSize])
        .reshape([ids.length, this.config.hiddenSize]) as tf.Tensor2D;
      const pooled = first
        .matMul(this.variables["pooler/kernel"])
        .add(this.variables["pooler/bias"])
        .tanh() as tf.Tensor2D;
      return { t: first, cls: pooled };
    });
  }
}
