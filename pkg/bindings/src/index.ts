/**
 * Node/TypeScript bindings for the st-simdiff video token selection core.
 *
 * The core is consumed only through its external interfaces: the STSD
 * container format, the command-line tool, and the result JSON schema.
 * Every call is stateless and reentrant; input arrays are never mutated
 * and results are freshly allocated arrays owned by the caller.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir, endianness } from "node:os";
import { join } from "node:path";

/** Grid dimensions of the token tensor: T frames of H x W patches, d features. */
export interface GridDims {
  frames: number;
  height: number;
  width: number;
  dim: number;
}

/**
 * Flat mirror of the core's selection configuration. Omitted fields use the
 * core defaults (ratio 0.3, tauSim 0.8, fixed tauDiff 0.2, auto cap, proxy
 * importance, fill on). Values are validated with the core's own rules and
 * message wording before anything is spawned.
 */
export interface BoundConfig {
  ratio?: number;
  tauSim?: number;
  tauDiff?: number;
  diffMode?: "fixed" | "percentile";
  percentile?: number;
  communityCap?: number | "auto";
  /** "proxy", "uniform", or "external:PATH" */
  importance?: string;
  fill?: boolean;
  threads?: number;
}

/** Provenance byte codes, matching the core's PROV_* constants. */
export const PROV_REP = 0;
export const PROV_EVENT = 1;
export const PROV_BOTH = 2;
export const PROV_FILL = 3;
export const PROV_NAMES = ["rep", "event", "both", "fill"] as const;

export interface SelectStats {
  n: number;
  nTarget: number;
  communities: number;
  repCount: number;
  eventCount: number;
  fillCount: number;
}

export interface SelectResult {
  /** Retained token indices, strictly ascending. */
  indices: Uint32Array;
  /** Parallel provenance byte codes (PROV_*). */
  provenance: Uint8Array;
  stats: SelectStats;
}

const PYTHON = process.env.ST_SIMDIFF_PYTHON ?? "python3";
const STSD_HEADER_BYTES = 32;

function checkPositiveInt(name: string, value: number): void {
  if (!Number.isInteger(value) || value < 1) {
    throw new RangeError(`${name} must be >= 1, got ${value}`);
  }
}

function validateConfig(config: BoundConfig): void {
  if (config.ratio !== undefined && !(config.ratio > 0 && config.ratio <= 1)) {
    throw new RangeError(`ratio must be in (0, 1], got ${config.ratio}`);
  }
  if (config.tauSim !== undefined && !(config.tauSim >= -1 && config.tauSim <= 1)) {
    throw new RangeError(`tau_sim must be in [-1, 1], got ${config.tauSim}`);
  }
  if (config.tauDiff !== undefined && !(config.tauDiff >= -1 && config.tauDiff <= 1)) {
    throw new RangeError(`tau_diff must be in [-1, 1], got ${config.tauDiff}`);
  }
  if (config.diffMode !== undefined && config.diffMode !== "fixed" && config.diffMode !== "percentile") {
    throw new RangeError(
      `argument --diff-mode: invalid choice: '${config.diffMode}' (choose from 'fixed', 'percentile')`,
    );
  }
  if (config.percentile !== undefined && !(config.percentile > 0 && config.percentile < 100)) {
    throw new RangeError(`percentile must be in (0, 100), got ${config.percentile}`);
  }
  if (config.communityCap !== undefined && config.communityCap !== "auto") {
    if (!Number.isInteger(config.communityCap)) {
      throw new RangeError(
        `community cap must be 'auto' or an integer, got '${config.communityCap}'`,
      );
    }
    if (config.communityCap < 1) {
      throw new RangeError(`community cap must be >= 1 or auto, got ${config.communityCap}`);
    }
  }
  if (config.importance !== undefined) {
    const v = config.importance;
    if (v !== "proxy" && v !== "uniform" && !v.startsWith("external:")) {
      throw new RangeError(`importance must be proxy, uniform, or external:PATH, got '${v}'`);
    }
    if (v === "external:") {
      throw new RangeError("external importance needs a path");
    }
  }
  if (config.threads !== undefined && (!Number.isInteger(config.threads) || config.threads < 1)) {
    throw new RangeError(`threads must be >= 1, got ${config.threads}`);
  }
}

function configArgs(config: BoundConfig): string[] {
  const args: string[] = [];
  if (config.ratio !== undefined) args.push("--ratio", String(config.ratio));
  if (config.tauSim !== undefined) args.push("--tau-sim", String(config.tauSim));
  if (config.tauDiff !== undefined) args.push("--tau-diff", String(config.tauDiff));
  if (config.diffMode !== undefined) args.push("--diff-mode", config.diffMode);
  if (config.percentile !== undefined) args.push("--percentile", String(config.percentile));
  if (config.communityCap !== undefined) args.push("--community-cap", String(config.communityCap));
  if (config.importance !== undefined) args.push("--importance", config.importance);
  if (config.fill === false) args.push("--no-fill");
  if (config.threads !== undefined) args.push("--threads", String(config.threads));
  return args;
}

/** Serialize features into the STSD container (little-endian, version 1). */
function encodeStsd(features: Float32Array | Float64Array, dims: GridDims): Buffer {
  const n = dims.frames * dims.height * dims.width;
  const buf = Buffer.alloc(STSD_HEADER_BYTES + n * dims.dim * 4);
  buf.write("STSD", 0, "ascii");
  buf.writeUInt32LE(1, 4);
  buf.writeUInt32LE(dims.frames, 8);
  buf.writeUInt32LE(dims.height, 12);
  buf.writeUInt32LE(dims.width, 16);
  buf.writeUInt32LE(dims.dim, 20);
  buf.writeUInt8(0, 24); // dtype code: float32
  // bytes 25..31 stay zero (padding)

  if (features instanceof Float32Array && endianness() === "LE") {
    Buffer.from(features.buffer, features.byteOffset, features.byteLength).copy(
      buf,
      STSD_HEADER_BYTES,
    );
  } else {
    for (let i = 0; i < features.length; i++) {
      buf.writeFloatLE(Math.fround(features[i] as number), STSD_HEADER_BYTES + 4 * i);
    }
  }
  return buf;
}

function runCore(args: string[]): string {
  const proc = spawnSync(PYTHON, ["-m", "st_simdiff", ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`failed to launch the st-simdiff core: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    // core stderr lines look like "error [stage]: message"; surface the
    // core's message text under the host error convention
    const line = (proc.stderr ?? "").trim().split("\n").pop() ?? "";
    const message = line.replace(/^error \[[^\]]*\]: /, "");
    throw new Error(message || `st-simdiff core exited with status ${proc.status}`);
  }
  return proc.stdout;
}

/**
 * Run the core selection pipeline on an in-memory token tensor.
 *
 * `features` must be a contiguous Float32Array or Float64Array holding
 * frames*height*width*dim values in raster order (frame-major, then row,
 * then column); 64-bit input is converted to the core's 32-bit storage.
 * The input array is never modified. Returns indices identical to the
 * `st-simdiff compress` CLI on the same data and configuration.
 */
export function select(
  features: Float32Array | Float64Array,
  dims: GridDims,
  config: BoundConfig = {},
): SelectResult {
  if (!(features instanceof Float32Array) && !(features instanceof Float64Array)) {
    throw new TypeError(
      "features must be contiguous data: pass a Float32Array or Float64Array",
    );
  }
  checkPositiveInt("frames", dims.frames);
  checkPositiveInt("height", dims.height);
  checkPositiveInt("width", dims.width);
  checkPositiveInt("dim", dims.dim);
  const expected = dims.frames * dims.height * dims.width * dims.dim;
  if (features.length !== expected) {
    throw new RangeError(`feature array has ${features.length} values, expected ${expected}`);
  }
  validateConfig(config);

  const workdir = mkdtempSync(join(tmpdir(), "st-simdiff-"));
  try {
    const inputPath = join(workdir, "input.stsd");
    writeFileSync(inputPath, encodeStsd(features, dims));
    const stdout = runCore(["compress", inputPath, "--output", "-", ...configArgs(config)]);
    const doc = JSON.parse(stdout) as {
      n: number;
      n_target: number;
      indices: number[];
      provenance: string[];
      stats: {
        communities: number;
        rep_count: number;
        event_count: number;
        fill_count: number;
      };
    };
    const provenance = new Uint8Array(doc.provenance.length);
    doc.provenance.forEach((name, i) => {
      const code = PROV_NAMES.indexOf(name as (typeof PROV_NAMES)[number]);
      if (code < 0) throw new Error(`unknown provenance tag '${name}' in core output`);
      provenance[i] = code;
    });
    return {
      indices: Uint32Array.from(doc.indices),
      provenance,
      stats: {
        n: doc.n,
        nTarget: doc.n_target,
        communities: doc.stats.communities,
        repCount: doc.stats.rep_count,
        eventCount: doc.stats.event_count,
        fillCount: doc.stats.fill_count,
      },
    };
  } finally {
    rmSync(workdir, { recursive: true, force: true });
  }
}

/** Core version banner, e.g. "st-simdiff 0.1.0 (schema 1)". */
export function version(): string {
  return runCore(["--version"]).trim();
}
