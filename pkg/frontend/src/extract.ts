/**
 * Directory-to-FDBF1 extraction: decode images in sorted-filename order,
 * preprocess through the selected resize path, batch them through the
 * backbone, and write one feature row per image.
 */

import { promises as fs } from "node:fs";
import * as path from "node:path";
import * as tf from "@tensorflow/tfjs";

import { BackboneChoice, loadBackbone } from "./backbones.js";
import { PreprocessingTag, Role, writeFeatureFile } from "./fdbf.js";
import { decodePng, ImageDecodeError } from "./image.js";
import { preprocess } from "./resize.js";

export type PreprocessingMode = "clean_resize" | "legacy_resize";

export interface ExtractorSpec extends BackboneChoice {
  preprocessing: PreprocessingMode;
  batchSize: number;
  /** execution hint; the pure-JS backend is always CPU */
  device: "cpu";
  role: Role;
  /** fail on the first undecodable image instead of skipping it */
  failFast: boolean;
  /** metadata source_id; defaults to the image directory's basename */
  sourceId?: string;
}

export interface ExtractSummary {
  imageCount: number;
  outputDim: number;
  skipped: string[];
  outPath: string;
}

const TAG_BY_MODE: Record<PreprocessingMode, PreprocessingTag> = {
  clean_resize: "clean-resize",
  legacy_resize: "legacy-resize",
};

export async function listImageFiles(imageDir: string): Promise<string[]> {
  const entries = await fs.readdir(imageDir);
  // plain code-unit sort: row order must be a pure function of filenames
  return entries.filter((name) => name.toLowerCase().endsWith(".png")).sort();
}

export async function extractFeatures(
  imageDir: string,
  spec: ExtractorSpec,
  outPath: string,
  log: (message: string) => void = console.error,
): Promise<ExtractSummary> {
  const files = await listImageFiles(imageDir);
  if (files.length === 0) {
    throw new Error(`${imageDir}: no .png images found`);
  }
  const model = await loadBackbone(spec);
  try {
    const rows: Float32Array[] = [];
    const skipped: string[] = [];
    const pending: Float32Array[] = [];

    const flush = () => {
      if (pending.length === 0) {
        return;
      }
      const batch = tf.tensor4d(
        concatPixels(pending),
        [pending.length, model.inputHeight, model.inputWidth, 3],
      );
      try {
        rows.push(...model.run(batch));
      } finally {
        batch.dispose();
      }
      pending.length = 0;
    };

    for (const name of files) {
      const file = path.join(imageDir, name);
      let image;
      try {
        image = await decodePng(file);
      } catch (err) {
        if (!(err instanceof ImageDecodeError) || spec.failFast) {
          throw err;
        }
        skipped.push(name);
        log(`skipping undecodable image: ${err.message}`);
        continue;
      }
      pending.push(
        preprocess(image, spec.preprocessing, model.inputWidth,
                   model.inputHeight).data,
      );
      if (pending.length >= spec.batchSize) {
        flush();
      }
    }
    flush();

    if (rows.length === 0) {
      throw new Error(`${imageDir}: every image failed to decode`);
    }
    const data = new Float32Array(rows.length * model.outputDim);
    rows.forEach((row, i) => data.set(row, i * model.outputDim));
    await writeFeatureFile(outPath, rows.length, model.outputDim, data, {
      extractorId: spec.backbone,
      preprocessingTag: TAG_BY_MODE[spec.preprocessing],
      role: spec.role,
      sourceId: spec.sourceId ?? path.basename(imageDir),
    });
    return {
      imageCount: rows.length,
      outputDim: model.outputDim,
      skipped,
      outPath,
    };
  } finally {
    model.dispose();
  }
}

function concatPixels(tensors: Float32Array[]): Float32Array {
  const out = new Float32Array(tensors.length * tensors[0].length);
  tensors.forEach((t, i) => out.set(t, i * tensors[0].length));
  return out;
}
