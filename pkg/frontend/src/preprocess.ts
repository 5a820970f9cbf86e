// Capture-to-tensor preprocessing, mirroring the bundle's descriptor: ceil
// division by the device-class divisor, half-pixel bilinear resampling, then
// per-channel normalization.

import { PreprocessJson } from "./runtime/model.js";
import { Tensor3, zeros } from "./runtime/tensor.js";

export type DeviceClass = "desktop" | "mobile";

/** Portrait captures are treated as mobile viewports. */
export function deviceClassOf(width: number, height: number): DeviceClass {
  return height > width ? "mobile" : "desktop";
}

export function scaledSize(
  width: number, height: number, desc: PreprocessJson, device: DeviceClass,
): { width: number; height: number } {
  const divisor = device === "desktop" ? desc.desktop_scale : desc.mobile_scale;
  return { width: Math.ceil(width / divisor), height: Math.ceil(height / divisor) };
}

export function bilinearResize(src: Tensor3, outH: number, outW: number): Tensor3 {
  if (src.height === outH && src.width === outW) return src;
  const c = src.channels;
  const out = zeros(outH, outW, c);
  const scaleY = src.height / outH;
  const scaleX = src.width / outW;
  const x0 = new Int32Array(outW);
  const x1 = new Int32Array(outW);
  const fx = new Float32Array(outW);
  for (let ox = 0; ox < outW; ox++) {
    let sx = (ox + 0.5) * scaleX - 0.5;
    if (sx < 0) sx = 0;
    if (sx > src.width - 1) sx = src.width - 1;
    x0[ox] = Math.floor(sx);
    x1[ox] = Math.min(x0[ox] + 1, src.width - 1);
    fx[ox] = sx - x0[ox];
  }
  for (let oy = 0; oy < outH; oy++) {
    let sy = (oy + 0.5) * scaleY - 0.5;
    if (sy < 0) sy = 0;
    if (sy > src.height - 1) sy = src.height - 1;
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, src.height - 1);
    const fy = sy - y0;
    for (let ox = 0; ox < outW; ox++) {
      const w00 = (1 - fy) * (1 - fx[ox]);
      const w01 = (1 - fy) * fx[ox];
      const w10 = fy * (1 - fx[ox]);
      const w11 = fy * fx[ox];
      const p00 = (y0 * src.width + x0[ox]) * c;
      const p01 = (y0 * src.width + x1[ox]) * c;
      const p10 = (y1 * src.width + x0[ox]) * c;
      const p11 = (y1 * src.width + x1[ox]) * c;
      const dst = (oy * outW + ox) * c;
      for (let ch = 0; ch < c; ch++) {
        out.data[dst + ch] =
          w00 * src.data[p00 + ch] + w01 * src.data[p01 + ch] +
          w10 * src.data[p10 + ch] + w11 * src.data[p11 + ch];
      }
    }
  }
  return out;
}

export function preprocess(
  raw: Tensor3, desc: PreprocessJson, device: DeviceClass,
): Tensor3 {
  const target = scaledSize(raw.width, raw.height, desc, device);
  if (target.width < desc.min_dim || target.height < desc.min_dim) {
    throw new Error(
      `viewport too small: ${target.width}x${target.height} after scaling ` +
      `(minimum ${desc.min_dim})`,
    );
  }
  const scaled = bilinearResize(raw, target.height, target.width);
  const { mean, std } = desc.normalize;
  const out = scaled === raw
    ? { ...scaled, data: scaled.data.slice() }
    : scaled;
  const n = out.height * out.width;
  for (let p = 0; p < n; p++) {
    const base = p * 3;
    out.data[base] = (out.data[base] - mean[0]) / std[0];
    out.data[base + 1] = (out.data[base + 1] - mean[1]) / std[1];
    out.data[base + 2] = (out.data[base + 2] - mean[2]) / std[2];
  }
  return out;
}
