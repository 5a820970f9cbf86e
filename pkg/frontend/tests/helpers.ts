import { readFile } from "node:fs/promises";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { BundleModel, loadBundle } from "../src/runtime/model.js";
import { CaptureResult } from "../src/guard/state.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export function fixturePath(...parts: string[]): string {
  return join(FIXTURES, ...parts);
}

export async function loadFixtureBundle(name: string): Promise<BundleModel> {
  const files = await loadBundle(async (file) => {
    const buf = await readFile(fixturePath(name, file));
    return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
  });
  return new BundleModel(files);
}

/** Raw page captures: uint32le width, uint32le height, then RGBA bytes. */
export function loadPage(name: string): CaptureResult {
  const buf = readFileSync(fixturePath("pages", `${name}.rgba`));
  const width = buf.readUInt32LE(0);
  const height = buf.readUInt32LE(4);
  const data = new Uint8ClampedArray(buf.buffer, buf.byteOffset + 8, width * height * 4);
  return { width, height, data };
}

export function expectedScores(): Record<string, { p_benign: number; p_se: number; device_class: string }> {
  return JSON.parse(readFileSync(fixturePath("expected_scores.json"), "utf-8"));
}
