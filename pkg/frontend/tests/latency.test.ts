import { describe, expect, it } from "vitest";

import { deviceClassOf, preprocess } from "../src/preprocess.js";
import { fromImageData } from "../src/runtime/tensor.js";
import { loadFixtureBundle, loadPage } from "./helpers.js";

function percentile(samples: number[], q: number): number {
  const sorted = [...samples].sort((a, b) => a - b);
  return sorted[Math.min(sorted.length - 1, Math.floor(q * sorted.length))];
}

describe("end-to-end latency with the lightweight backbone", () => {
  it("p50 capture-to-verdict stays under 1000ms on a laptop-class viewport", async () => {
    const model = await loadFixtureBundle("mobilenet");
    const page = loadPage("se_page"); // 1024x576 viewport
    const samples: number[] = [];
    for (let i = 0; i < 5; i++) {
      const started = performance.now();
      const raw = fromImageData(page);
      const device = deviceClassOf(page.width, page.height);
      const probs = model.run(preprocess(raw, model.preprocess, device));
      samples.push(performance.now() - started);
      expect(probs[0] + probs[1]).toBeCloseTo(1.0, 4);
    }
    const p50 = percentile(samples, 0.5);
    // eslint-disable-next-line no-console
    console.log(`mobilenet bundle latency: p50=${p50.toFixed(0)}ms`,
                samples.map((s) => s.toFixed(0)).join(","));
    expect(p50).toBeLessThan(1000);
  }, 120_000);
});
