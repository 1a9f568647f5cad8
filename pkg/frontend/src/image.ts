/** PNG decoding into planar-free RGB buffers. */

import { promises as fs } from "node:fs";
import { PNG } from "pngjs";

/** 8-bit RGB image, row-major, 3 interleaved channels. */
export interface ByteImage {
  width: number;
  height: number;
  data: Uint8Array;
}

/** Float RGB image in [0, 1], row-major, 3 interleaved channels. */
export interface FloatImage {
  width: number;
  height: number;
  data: Float32Array;
}

export class ImageDecodeError extends Error {}

export async function decodePng(path: string): Promise<ByteImage> {
  const raw = await fs.readFile(path);
  let png: PNG;
  try {
    png = PNG.sync.read(raw);
  } catch (err) {
    throw new ImageDecodeError(`${path}: ${(err as Error).message}`);
  }
  const rgb = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, data: rgb };
}

export function toFloat(image: ByteImage): FloatImage {
  const out = new Float32Array(image.data.length);
  for (let i = 0; i < image.data.length; i++) {
    out[i] = image.data[i] / 255;
  }
  return { width: image.width, height: image.height, data: out };
}
