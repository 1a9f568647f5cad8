/**
 * tfjs model loading from plain files (no tfjs-node dependency): a
 * minimal IOHandler pair for the standard model.json + weight-shard
 * layout, plus a uniform wrapper that turns any vision model into a
 * fixed-width feature extractor.
 */

import { promises as fs } from "node:fs";
import * as path from "node:path";
import * as tf from "@tensorflow/tfjs";

export async function saveLayersModel(
  model: tf.LayersModel,
  dir: string,
): Promise<void> {
  await fs.mkdir(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer;
      const modelJson = {
        format: "layers-model",
        generatedBy: "fdbench-extract",
        convertedBy: null,
        modelTopology: artifacts.modelTopology,
        weightsManifest: [
          { paths: ["weights.bin"], weights: artifacts.weightSpecs ?? [] },
        ],
      };
      await fs.writeFile(path.join(dir, "model.json"),
                         JSON.stringify(modelJson));
      await fs.writeFile(path.join(dir, "weights.bin"),
                         Buffer.from(weightData));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON" as const,
        },
      };
    }),
  );
}

function fileLoadHandler(modelJsonPath: string): tf.io.IOHandler {
  return {
    load: async () => {
      const dir = path.dirname(modelJsonPath);
      const json = JSON.parse(await fs.readFile(modelJsonPath, "utf8"));
      const manifest: Array<{ paths: string[]; weights: tf.io.WeightsManifestEntry[] }> =
        json.weightsManifest ?? [];
      const weightSpecs = manifest.flatMap((group) => group.weights);
      const shards: Buffer[] = [];
      for (const group of manifest) {
        for (const shard of group.paths) {
          shards.push(await fs.readFile(path.join(dir, shard)));
        }
      }
      const joined = Buffer.concat(shards);
      const weightData = joined.buffer.slice(
        joined.byteOffset,
        joined.byteOffset + joined.byteLength,
      );
      return {
        modelTopology: json.modelTopology,
        weightSpecs,
        weightData,
        format: json.format,
        generatedBy: json.generatedBy,
        convertedBy: json.convertedBy,
      };
    },
  };
}

/** A loaded backbone reduced to "images in, one feature row per image". */
export interface FeatureModel {
  inputHeight: number;
  inputWidth: number;
  outputDim: number;
  /** batch shaped [n, h, w, 3], values in [0, 1] */
  run(batch: tf.Tensor4D): Float32Array[];
  dispose(): void;
}

export async function loadFeatureModel(
  modelJsonPath: string,
): Promise<FeatureModel> {
  await tf.setBackend("cpu");
  const model = await tf.loadLayersModel(fileLoadHandler(modelJsonPath));
  const inputShape = model.inputs[0].shape;
  if (inputShape.length !== 4 || inputShape[3] !== 3) {
    throw new Error(
      `backbone must take [batch, h, w, 3] images, got ${JSON.stringify(inputShape)}`,
    );
  }
  const inputHeight = inputShape[1] as number;
  const inputWidth = inputShape[2] as number;

  const probe = tf.tidy(() => {
    const zeros = tf.zeros([1, inputHeight, inputWidth, 3]);
    return pooled(model.predict(zeros) as tf.Tensor);
  });
  const outputDim = probe.shape[1] as number;
  probe.dispose();

  return {
    inputHeight,
    inputWidth,
    outputDim,
    run(batch: tf.Tensor4D): Float32Array[] {
      const features = tf.tidy(
        () => pooled(model.predict(batch) as tf.Tensor));
      const flat = features.dataSync() as Float32Array;
      const rows: Float32Array[] = [];
      const n = features.shape[0] as number;
      const d = features.shape[1] as number;
      for (let i = 0; i < n; i++) {
        rows.push(flat.slice(i * d, (i + 1) * d));
      }
      features.dispose();
      return rows;
    },
    dispose() {
      model.dispose();
    },
  };
}

/** Spatial outputs are mean-pooled so every backbone yields flat rows. */
function pooled(output: tf.Tensor): tf.Tensor2D {
  if (output.rank === 2) {
    return output as tf.Tensor2D;
  }
  if (output.rank === 4) {
    return tf.mean(output, [1, 2]) as tf.Tensor2D;
  }
  throw new Error(`unsupported backbone output rank ${output.rank}`);
}
