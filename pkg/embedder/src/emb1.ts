// EMB1 writer/reader, byte-compatible with the corpus-atlas engine:
//   bytes 0-7   ASCII magic "EMBV0001"
//   bytes 8-11  uint32 LE header length H
//   bytes 12..  H bytes UTF-8 JSON {"n","d","dtype":"f32le","variant","ids"}
//   rest        n*d*4 bytes of little-endian float32, row-major

import * as fs from "node:fs";

const MAGIC = "EMBV0001";

export interface EmbMatrix {
  ids: string[];
  d: number;
  data: Float32Array; // length ids.length * d, row-major
  variant: string;
}

export function writeEmb1(m: EmbMatrix, path: string): void {
  const n = m.ids.length;
  if (m.data.length !== n * m.d) {
    throw new Error(`payload has ${m.data.length} floats, expected ${n
      } rows x ${m.d} dims`);
  }
  for (const v of m.data) {
    if (!Number.isFinite(v)) throw new Error("refusing to write non-finite values");
  }
  // key order is part of the byte-exact format
  const header = Buffer.from(
    JSON.stringify({ n, d: m.d, dtype: "f32le", variant: m.variant, ids: m.ids }),
    "utf-8",
  );
  const head = Buffer.alloc(12);
  head.write(MAGIC, 0, "ascii");
  head.writeUInt32LE(header.length, 8);
  const payload = Buffer.alloc(n * m.d * 4);
  for (let i = 0; i < m.data.length; i++) payload.writeFloatLE(m.data[i], i * 4);
  fs.writeFileSync(path, Buffer.concat([head, header, payload]));
}

export function readEmb1(path: string): EmbMatrix {
  const raw = fs.readFileSync(path);
  if (raw.length < 12 || raw.toString("ascii", 0, 8) !== MAGIC) {
    throw new Error(`${path}: bad EMB1 magic`);
  }
  const headerLen = raw.readUInt32LE(8);
  const header = JSON.parse(raw.toString("utf-8", 12, 12 + headerLen));
  const { n, d, dtype, variant, ids } = header;
  if (dtype !== "f32le") throw new Error(`${path}: unsupported dtype ${dtype}`);
  if (!Array.isArray(ids) || ids.length !== n) {
    throw new Error(`${path}: header declares n=${n} but carries ${ids?.length} ids`);
  }
  const payload = raw.subarray(12 + headerLen);
  if (payload.length !== n * d * 4) {
    throw new Error(
      `${path}: payload length mismatch, expected ${n * d * 4} bytes, found ${payload.length}`,
    );
  }
  const data = new Float32Array(n * d);
  for (let i = 0; i < data.length; i++) data[i] = payload.readFloatLE(i * 4);
  return { ids, d, data, variant };
}
