/**
 * FDBF1 feature-file writer (and a reader used for self-checks).
 *
 * Layout (all integers little-endian):
 *   magic "FDBF1" | n u64 | d u64 | dtype u8 (0 = float32) |
 *   checksum 8 bytes (first 8 of SHA-256 over the payload) |
 *   metaLen u32 | metadata UTF-8 JSON | payload n*d float32 row-major
 *
 * The byte format is owned by the metric engine; this writer must stay
 * bit-exact with its reader.
 */

import { createHash } from "node:crypto";
import { promises as fs } from "node:fs";

export const MAGIC = "FDBF1";
export const ROLES = ["generated", "real_test", "real_train"] as const;
export type Role = (typeof ROLES)[number];
export type PreprocessingTag = "legacy-resize" | "clean-resize" | "none";

export interface FeatureFileMeta {
  extractorId: string;
  preprocessingTag: PreprocessingTag;
  role: Role;
  sourceId: string;
}

const FIXED_HEADER_BYTES = 5 + 8 + 8 + 1 + 8 + 4;

function checksum(payload: Buffer): Buffer {
  return createHash("sha256").update(payload).digest().subarray(0, 8);
}

export function encodeFeatureFile(
  rows: number,
  cols: number,
  data: Float32Array,
  meta: FeatureFileMeta,
): Buffer {
  if (rows < 1 || cols < 1) {
    throw new Error(`feature matrix must be at least 1x1, got ${rows}x${cols}`);
  }
  if (data.length !== rows * cols) {
    throw new Error(
      `payload length ${data.length} does not match ${rows}x${cols}`,
    );
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new Error(`non-finite feature value at flat index ${i}`);
    }
  }
  // payload is serialized explicitly little-endian so the file is
  // identical on any host
  const payload = Buffer.allocUnsafe(data.length * 4);
  for (let i = 0; i < data.length; i++) {
    payload.writeFloatLE(data[i], i * 4);
  }
  const metaJson = Buffer.from(
    JSON.stringify({
      extractor_id: meta.extractorId,
      preprocessing_tag: meta.preprocessingTag,
      role: meta.role,
      source_id: meta.sourceId,
    }),
    "utf8",
  );
  const header = Buffer.alloc(FIXED_HEADER_BYTES);
  header.write(MAGIC, 0, "ascii");
  header.writeBigUInt64LE(BigInt(rows), 5);
  header.writeBigUInt64LE(BigInt(cols), 13);
  header.writeUInt8(0, 21);
  checksum(payload).copy(header, 22);
  header.writeUInt32LE(metaJson.length, 30);
  return Buffer.concat([header, metaJson, payload]);
}

export async function writeFeatureFile(
  path: string,
  rows: number,
  cols: number,
  data: Float32Array,
  meta: FeatureFileMeta,
): Promise<void> {
  await fs.writeFile(path, encodeFeatureFile(rows, cols, data, meta));
}

export interface DecodedFeatureFile {
  rows: number;
  cols: number;
  data: Float32Array;
  meta: Record<string, string>;
  payloadChecksumHex: string;
}

export function decodeFeatureFile(buf: Buffer): DecodedFeatureFile {
  if (buf.length < FIXED_HEADER_BYTES) {
    throw new Error("truncated header");
  }
  if (buf.toString("ascii", 0, 5) !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 5))}`);
  }
  const rows = Number(buf.readBigUInt64LE(5));
  const cols = Number(buf.readBigUInt64LE(13));
  if (buf.readUInt8(21) !== 0) {
    throw new Error(`unknown dtype code ${buf.readUInt8(21)}`);
  }
  const storedChecksum = buf.subarray(22, 30);
  const metaLen = buf.readUInt32LE(30);
  const metaEnd = FIXED_HEADER_BYTES + metaLen;
  const meta = JSON.parse(buf.toString("utf8", FIXED_HEADER_BYTES, metaEnd));
  const payload = buf.subarray(metaEnd);
  if (payload.length !== rows * cols * 4) {
    throw new Error(
      `payload is ${payload.length} bytes, header declares ${rows * cols * 4}`,
    );
  }
  if (!checksum(payload).equals(storedChecksum)) {
    throw new Error("payload checksum mismatch");
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = payload.readFloatLE(i * 4);
  }
  return {
    rows,
    cols,
    data,
    meta,
    payloadChecksumHex: storedChecksum.toString("hex"),
  };
}
