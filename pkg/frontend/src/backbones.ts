/**
 * Backbone registry. Pretrained entries resolve published weights in
 * tfjs layout under <weights root>/<name>/model.json; the weights root
 * comes from --weights-dir or FDBENCH_WEIGHTS_DIR. They are optional
 * per install: a missing directory raises BackboneUnavailableError with
 * instructions instead of failing hard, so pipelines can skip cleanly.
 * The "custom" backbone loads any tfjs layers model from an explicit
 * path.
 */

import { constants, promises as fs } from "node:fs";
import * as path from "node:path";
import { FeatureModel, loadFeatureModel } from "./model.js";

export const PRETRAINED_BACKBONES: Record<string, { expectedDim: number }> = {
  inception_v3_pool: { expectedDim: 2048 },
  clip_image: { expectedDim: 512 },
  dinov2: { expectedDim: 768 },
  retfound: { expectedDim: 1024 },
};

export const BACKBONE_NAMES = [
  ...Object.keys(PRETRAINED_BACKBONES),
  "custom",
];

export class BackboneUnavailableError extends Error {}

export interface BackboneChoice {
  backbone: string;
  /** model.json path; required for "custom" */
  weightsPath?: string;
  /** root directory holding pretrained weights */
  weightsDir?: string;
}

export async function loadBackbone(
  choice: BackboneChoice,
): Promise<FeatureModel> {
  if (choice.backbone === "custom") {
    if (!choice.weightsPath) {
      throw new Error("custom backbone requires --weights <model.json>");
    }
    return loadFeatureModel(choice.weightsPath);
  }
  const info = PRETRAINED_BACKBONES[choice.backbone];
  if (!info) {
    throw new Error(
      `unknown backbone ${JSON.stringify(choice.backbone)}; ` +
        `choose from ${BACKBONE_NAMES.join(", ")}`,
    );
  }
  const root = choice.weightsDir ?? process.env.FDBENCH_WEIGHTS_DIR;
  if (!root) {
    throw new BackboneUnavailableError(
      `${choice.backbone}: no weights root configured; pass --weights-dir ` +
        `or set FDBENCH_WEIGHTS_DIR (skipping this backbone is safe)`,
    );
  }
  const modelJson = path.join(root, choice.backbone, "model.json");
  try {
    await fs.access(modelJson, constants.R_OK);
  } catch {
    throw new BackboneUnavailableError(
      `${choice.backbone}: weights not found at ${modelJson} ` +
        `(skipping this backbone is safe)`,
    );
  }
  const model = await loadFeatureModel(modelJson);
  if (model.outputDim !== info.expectedDim) {
    throw new Error(
      `${choice.backbone}: weights emit ${model.outputDim}-wide features, ` +
        `expected ${info.expectedDim}`,
    );
  }
  return model;
}
