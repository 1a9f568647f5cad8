/**
 * The two resize paths feature files get tagged with.
 *
 * cleanResize converts to float first, then applies a separable triangle
 * filter whose support scales with the downsampling ratio, so content
 * above the target Nyquist rate is attenuated instead of aliased.
 * legacyResize reproduces the historical pipeline: nearest-neighbor
 * sampling on the quantized 8-bit image, float conversion afterwards.
 */

import { ByteImage, FloatImage, toFloat } from "./image.js";

const CHANNELS = 3;

interface Tap {
  index: number;
  weight: number;
}

function triangleTaps(srcSize: number, dstSize: number): Tap[][] {
  const scale = srcSize / dstSize;
  const support = Math.max(1, scale);
  const taps: Tap[][] = [];
  for (let i = 0; i < dstSize; i++) {
    const center = (i + 0.5) * scale - 0.5;
    const lo = Math.ceil(center - support);
    const hi = Math.floor(center + support);
    const row: Tap[] = [];
    let total = 0;
    for (let s = lo; s <= hi; s++) {
      const w = 1 - Math.abs(s - center) / support;
      if (w <= 0) continue;
      const clamped = Math.min(srcSize - 1, Math.max(0, s));
      row.push({ index: clamped, weight: w });
      total += w;
    }
    for (const tap of row) {
      tap.weight /= total;
    }
    taps.push(row);
  }
  return taps;
}

function resampleAxis(
  src: Float32Array,
  width: number,
  height: number,
  taps: Tap[][],
  horizontal: boolean,
): Float32Array {
  const outW = horizontal ? taps.length : width;
  const outH = horizontal ? height : taps.length;
  const out = new Float32Array(outW * outH * CHANNELS);
  for (let y = 0; y < outH; y++) {
    for (let x = 0; x < outW; x++) {
      const row = horizontal ? taps[x] : taps[y];
      for (let c = 0; c < CHANNELS; c++) {
        let acc = 0;
        for (const tap of row) {
          const sx = horizontal ? tap.index : x;
          const sy = horizontal ? y : tap.index;
          acc += tap.weight * src[(sy * width + sx) * CHANNELS + c];
        }
        out[(y * outW + x) * CHANNELS + c] = acc;
      }
    }
  }
  return out;
}

export function cleanResize(
  image: FloatImage,
  outWidth: number,
  outHeight: number,
): FloatImage {
  if (image.width === outWidth && image.height === outHeight) {
    return { width: outWidth, height: outHeight,
             data: Float32Array.from(image.data) };
  }
  const afterX = resampleAxis(image.data, image.width, image.height,
                              triangleTaps(image.width, outWidth), true);
  const afterY = resampleAxis(afterX, outWidth, image.height,
                              triangleTaps(image.height, outHeight), false);
  return { width: outWidth, height: outHeight, data: afterY };
}

export function legacyResize(
  image: ByteImage,
  outWidth: number,
  outHeight: number,
): FloatImage {
  const bytes = new Uint8Array(outWidth * outHeight * CHANNELS);
  const scaleX = image.width / outWidth;
  const scaleY = image.height / outHeight;
  for (let y = 0; y < outHeight; y++) {
    const sy = Math.min(image.height - 1, Math.floor((y + 0.5) * scaleY));
    for (let x = 0; x < outWidth; x++) {
      const sx = Math.min(image.width - 1, Math.floor((x + 0.5) * scaleX));
      for (let c = 0; c < CHANNELS; c++) {
        bytes[(y * outWidth + x) * CHANNELS + c] =
          image.data[(sy * image.width + sx) * CHANNELS + c];
      }
    }
  }
  return toFloat({ width: outWidth, height: outHeight, data: bytes });
}

export function preprocess(
  image: ByteImage,
  mode: "clean_resize" | "legacy_resize",
  outWidth: number,
  outHeight: number,
): FloatImage {
  if (mode === "clean_resize") {
    return cleanResize(toFloat(image), outWidth, outHeight);
  }
  return legacyResize(image, outWidth, outHeight);
}
