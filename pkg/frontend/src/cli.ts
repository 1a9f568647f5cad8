#!/usr/bin/env node
/**
 * fdbench-extract: image directory -> FDBF1 feature file.
 *
 * Exit codes: 0 success, 1 bad usage or unavailable backbone,
 * 2 extraction/I-O failure.
 */

import { BACKBONE_NAMES, BackboneUnavailableError } from "./backbones.js";
import { ROLES, Role } from "./fdbf.js";
import { ExtractorSpec, extractFeatures } from "./extract.js";

const USAGE = `usage: fdbench-extract --images <dir> --out <file.fdbf>
                       --backbone <${BACKBONE_NAMES.join("|")}>
                       [--weights <model.json>]      (custom backbone)
                       [--weights-dir <dir>]         (pretrained backbones)
                       [--preprocessing clean_resize|legacy_resize]
                       [--batch-size <n>] [--role generated|real_test|real_train]
                       [--source note] [--device cpu] [--fail-fast]`;

interface CliOptions {
  images: string;
  out: string;
  spec: ExtractorSpec;
}

export function parseArgs(argv: string[]): CliOptions {
  const flags = new Map<string, string | boolean>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      throw new Error(`unexpected argument ${JSON.stringify(arg)}`);
    }
    const name = arg.slice(2);
    if (name === "fail-fast" || name === "help") {
      flags.set(name, true);
    } else {
      const value = argv[++i];
      if (value === undefined) {
        throw new Error(`--${name} needs a value`);
      }
      flags.set(name, value);
    }
  }
  if (flags.get("help")) {
    throw new HelpRequested();
  }
  const required = (name: string): string => {
    const v = flags.get(name);
    if (typeof v !== "string") {
      throw new Error(`--${name} is required`);
    }
    return v;
  };
  const optional = (name: string, fallback: string): string => {
    const v = flags.get(name);
    return typeof v === "string" ? v : fallback;
  };

  const backbone = required("backbone");
  if (!BACKBONE_NAMES.includes(backbone)) {
    throw new Error(
      `unknown backbone ${backbone}; choose from ${BACKBONE_NAMES.join(", ")}`);
  }
  const preprocessing = optional("preprocessing", "clean_resize");
  if (preprocessing !== "clean_resize" && preprocessing !== "legacy_resize") {
    throw new Error("--preprocessing must be clean_resize or legacy_resize");
  }
  const role = optional("role", "generated") as Role;
  if (!ROLES.includes(role)) {
    throw new Error(`--role must be one of ${ROLES.join(", ")}`);
  }
  const batchSize = Number(optional("batch-size", "16"));
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error("--batch-size must be a positive integer");
  }
  const device = optional("device", "cpu");
  if (device !== "cpu") {
    throw new Error("only --device cpu is supported by this build");
  }
  const known = new Set([
    "images", "out", "backbone", "weights", "weights-dir", "preprocessing",
    "batch-size", "role", "source", "device", "fail-fast",
  ]);
  for (const name of flags.keys()) {
    if (!known.has(name)) {
      throw new Error(`unknown flag --${name}`);
    }
  }
  return {
    images: required("images"),
    out: required("out"),
    spec: {
      backbone,
      weightsPath: typeof flags.get("weights") === "string"
        ? (flags.get("weights") as string) : undefined,
      weightsDir: typeof flags.get("weights-dir") === "string"
        ? (flags.get("weights-dir") as string) : undefined,
      preprocessing,
      batchSize,
      device: "cpu",
      role,
      failFast: flags.get("fail-fast") === true,
      sourceId: typeof flags.get("source") === "string"
        ? (flags.get("source") as string) : undefined,
    },
  };
}

class HelpRequested extends Error {}

export async function main(argv: string[]): Promise<number> {
  let options: CliOptions;
  try {
    options = parseArgs(argv);
  } catch (err) {
    if (err instanceof HelpRequested) {
      console.log(USAGE);
      return 0;
    }
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  try {
    const summary = await extractFeatures(options.images, options.spec,
                                          options.out);
    const skipped = summary.skipped.length
      ? `, skipped ${summary.skipped.length}` : "";
    console.log(
      `wrote ${summary.outPath} (${summary.imageCount} x ` +
        `${summary.outputDim}${skipped})`);
    return 0;
  } catch (err) {
    if (err instanceof BackboneUnavailableError) {
      console.error(`backbone unavailable: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js")
  || process.argv[1]?.endsWith("fdbench-extract");
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
