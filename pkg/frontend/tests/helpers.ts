import { promises as fs } from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { PNG } from "pngjs";
import * as tf from "@tensorflow/tfjs";

import { saveLayersModel } from "../src/model.js";
import { FloatImage } from "../src/image.js";

export async function makeTempDir(prefix: string): Promise<string> {
  return fs.mkdtemp(path.join(os.tmpdir(), prefix));
}

export function encodePng(
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number],
): Buffer {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixel(x, y);
      const i = (y * width + x) * 4;
      png.data[i] = r;
      png.data[i + 1] = g;
      png.data[i + 2] = b;
      png.data[i + 3] = 255;
    }
  }
  return PNG.sync.write(png);
}

export async function writePng(
  file: string,
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number],
): Promise<void> {
  await fs.writeFile(file, encodePng(width, height, pixel));
}

/**
 * A tiny deterministic vision backbone: one 3x3 conv over 12x12x3 inputs
 * followed by global average pooling, with hand-set weights so runs are
 * reproducible across processes.
 */
export async function saveTinyBackbone(dir: string): Promise<number> {
  await tf.setBackend("cpu");
  const model = tf.sequential();
  model.add(tf.layers.conv2d({
    inputShape: [12, 12, 3],
    filters: 6,
    kernelSize: 3,
    padding: "same",
    activation: "tanh",
  }));
  model.add(tf.layers.globalAveragePooling2d({}));
  const kernelSize = 3 * 3 * 3 * 6;
  const kernel = tf.tensor4d(
    Array.from({ length: kernelSize }, (_, i) => Math.sin(i + 1)),
    [3, 3, 3, 6],
  );
  const bias = tf.tensor1d(
    Array.from({ length: 6 }, (_, i) => 0.1 * (i - 2.5)));
  model.layers[0].setWeights([kernel, bias]);
  await saveLayersModel(model, dir);
  model.dispose();
  return 6;
}

/** Mean-over-channels 2-D DFT energy above the given frequency (cycles
 * per pixel) on both axes, DC excluded. Direct O(n^4) evaluation: this
 * is a test oracle, independence beats speed. */
export function highBandEnergy(image: FloatImage, cutoff: number): number {
  const { width: w, height: h } = image;
  const gray = new Float64Array(w * h);
  for (let i = 0; i < w * h; i++) {
    gray[i] = (image.data[i * 3] + image.data[i * 3 + 1]
               + image.data[i * 3 + 2]) / 3;
  }
  let energy = 0;
  for (let v = 0; v < h; v++) {
    for (let u = 0; u < w; u++) {
      const fu = u <= w / 2 ? u / w : (u - w) / w;
      const fv = v <= h / 2 ? v / h : (v - h) / h;
      if (Math.max(Math.abs(fu), Math.abs(fv)) <= cutoff) {
        continue;
      }
      let re = 0;
      let im = 0;
      for (let y = 0; y < h; y++) {
        for (let x = 0; x < w; x++) {
          const phase = -2 * Math.PI * ((u * x) / w + (v * y) / h);
          re += gray[y * w + x] * Math.cos(phase);
          im += gray[y * w + x] * Math.sin(phase);
        }
      }
      energy += re * re + im * im;
    }
  }
  return energy / (w * h);
}
