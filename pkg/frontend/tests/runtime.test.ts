import { describe, expect, it } from "vitest";

import { deviceClassOf, preprocess, scaledSize } from "../src/preprocess.js";
import { fromImageData } from "../src/runtime/tensor.js";
import { expectedScores, loadFixtureBundle, loadPage } from "./helpers.js";

describe("bundle runtime on the fixture model", () => {
  it("scores the attack fixture page above 0.9", async () => {
    const model = await loadFixtureBundle("fixture_model");
    const raw = fromImageData(loadPage("se_page"));
    const probs = model.run(preprocess(raw, model.preprocess, "desktop"));
    expect(probs[1]).toBeGreaterThan(0.9);
    expect(probs[0] + probs[1]).toBeCloseTo(1.0, 5);
  });

  it("scores the benign fixture page below 0.1", async () => {
    const model = await loadFixtureBundle("fixture_model");
    const raw = fromImageData(loadPage("benign_page"));
    const probs = model.run(preprocess(raw, model.preprocess, "desktop"));
    expect(probs[1]).toBeLessThan(0.1);
  });

  it("matches the native runtime within 1e-3 on every fixture page", async () => {
    const model = await loadFixtureBundle("fixture_model");
    for (const [name, expected] of Object.entries(expectedScores())) {
      const raw = fromImageData(loadPage(name));
      const device = expected.device_class as "desktop" | "mobile";
      const probs = model.run(preprocess(raw, model.preprocess, device));
      expect(Math.abs(probs[1] - expected.p_se)).toBeLessThan(1e-3);
      expect(Math.abs(probs[0] - expected.p_benign)).toBeLessThan(1e-3);
    }
  });

  it("portrait captures use the mobile divisor", async () => {
    const model = await loadFixtureBundle("fixture_model");
    expect(deviceClassOf(360, 640)).toBe("mobile");
    expect(deviceClassOf(1024, 576)).toBe("desktop");
    expect(scaledSize(360, 640, model.preprocess, "mobile")).toEqual({
      width: 180, height: 320,
    });
    expect(scaledSize(1366, 728, model.preprocess, "desktop")).toEqual({
      width: 342, height: 182,
    });
  });

  it("rejects viewports that scale below the model minimum", async () => {
    const model = await loadFixtureBundle("fixture_model");
    const tiny = fromImageData({
      width: 40, height: 24, data: new Uint8ClampedArray(40 * 24 * 4),
    });
    expect(() => preprocess(tiny, model.preprocess, "desktop")).toThrow(/too small/);
  });

  it("bundle is self-describing: classes and threshold come from the card", async () => {
    const model = await loadFixtureBundle("fixture_model");
    expect(model.card.classes).toEqual(["benign", "se"]);
    expect(model.card.alert_threshold).toBeGreaterThan(0);
    expect(model.card.alert_threshold).toBeLessThanOrEqual(1);
  });
});
