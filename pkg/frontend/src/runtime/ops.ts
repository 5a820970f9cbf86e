// Inference kernels for the bundle op graph. Weights arrive in the bundle's
// [cout, cin/groups, kh, kw] layout and are repacked once at load time into
// matmul-friendly matrices (see model.ts).

import { Tensor3, zeros } from "./tensor.js";

/**
 * C[n x m] = A[n x k] * B[k x m]. Saxpy ordering (B streamed row-wise) with a
 * 4-wide unroll over k: the inner loop then does four multiply-accumulates
 * per C access, which roughly doubles throughput on V8.
 */
export function matmul(
  a: Float32Array, b: Float32Array, n: number, k: number, m: number,
): Float32Array {
  const c = new Float32Array(n * m);
  const k4 = k - (k % 4);
  for (let i = 0; i < n; i++) {
    const aRow = i * k;
    const cRow = i * m;
    let kk = 0;
    for (; kk < k4; kk += 4) {
      const s0 = a[aRow + kk];
      const s1 = a[aRow + kk + 1];
      const s2 = a[aRow + kk + 2];
      const s3 = a[aRow + kk + 3];
      if (s0 === 0 && s1 === 0 && s2 === 0 && s3 === 0) continue;
      const b0 = kk * m;
      const b1 = b0 + m;
      const b2 = b1 + m;
      const b3 = b2 + m;
      for (let j = 0; j < m; j++) {
        c[cRow + j] += s0 * b[b0 + j] + s1 * b[b1 + j] + s2 * b[b2 + j] + s3 * b[b3 + j];
      }
    }
    for (; kk < k; kk++) {
      const scale = a[aRow + kk];
      if (scale === 0) continue;
      const bRow = kk * m;
      for (let j = 0; j < m; j++) {
        c[cRow + j] += scale * b[bRow + j];
      }
    }
  }
  return c;
}

export function addBiasActivate(
  data: Float32Array, bias: Float32Array, channels: number, activation: string | null,
): void {
  const n = data.length / channels;
  for (let p = 0; p < n; p++) {
    const base = p * channels;
    for (let c = 0; c < channels; c++) {
      let v = data[base + c] + bias[c];
      if (activation === "relu") v = v < 0 ? 0 : v;
      else if (activation === "relu6") v = v < 0 ? 0 : v > 6 ? 6 : v;
      data[base + c] = v;
    }
  }
}

export interface ConvParams {
  strideH: number;
  strideW: number;
  padH: number;
  padW: number;
  kh: number;
  kw: number;
  cout: number;
  groups: number;
}

function outSize(inSize: number, k: number, stride: number, pad: number): number {
  return Math.floor((inSize + 2 * pad - k) / stride) + 1;
}

/** Dense convolution via im2col (patch layout: (dy, dx, ci) to match packing). */
export function conv2d(
  x: Tensor3, packedWeights: Float32Array, bias: Float32Array,
  p: ConvParams, activation: string | null,
): Tensor3 {
  const outH = outSize(x.height, p.kh, p.strideH, p.padH);
  const outW = outSize(x.width, p.kw, p.strideW, p.padW);
  const cin = x.channels;

  if (p.kh === 1 && p.kw === 1 && p.strideH === 1 && p.strideW === 1 && p.padH === 0 && p.padW === 0) {
    const flat = matmul(x.data, packedWeights, x.height * x.width, cin, p.cout);
    const out: Tensor3 = { height: outH, width: outW, channels: p.cout, data: flat };
    addBiasActivate(out.data, bias, p.cout, activation);
    return out;
  }

  const patch = p.kh * p.kw * cin;
  const cols = new Float32Array(outH * outW * patch);
  let row = 0;
  for (let oy = 0; oy < outH; oy++) {
    const baseY = oy * p.strideH - p.padH;
    for (let ox = 0; ox < outW; ox++) {
      const baseX = ox * p.strideW - p.padW;
      let offset = row * patch;
      for (let dy = 0; dy < p.kh; dy++) {
        const sy = baseY + dy;
        const inRow = sy >= 0 && sy < x.height;
        for (let dx = 0; dx < p.kw; dx++) {
          const sx = baseX + dx;
          if (inRow && sx >= 0 && sx < x.width) {
            const src = (sy * x.width + sx) * cin;
            cols.set(x.data.subarray(src, src + cin), offset);
          }
          offset += cin;
        }
      }
      row++;
    }
  }
  const flat = matmul(cols, packedWeights, outH * outW, patch, p.cout);
  const out: Tensor3 = { height: outH, width: outW, channels: p.cout, data: flat };
  addBiasActivate(out.data, bias, p.cout, activation);
  return out;
}

/** Depthwise convolution; weights packed as [kh*kw, channels]. */
export function depthwiseConv2d(
  x: Tensor3, packedWeights: Float32Array, bias: Float32Array,
  p: ConvParams, activation: string | null,
): Tensor3 {
  const outH = outSize(x.height, p.kh, p.strideH, p.padH);
  const outW = outSize(x.width, p.kw, p.strideW, p.padW);
  const c = x.channels;
  const out = zeros(outH, outW, c);
  for (let oy = 0; oy < outH; oy++) {
    const baseY = oy * p.strideH - p.padH;
    for (let ox = 0; ox < outW; ox++) {
      const baseX = ox * p.strideW - p.padW;
      const dst = (oy * outW + ox) * c;
      for (let dy = 0; dy < p.kh; dy++) {
        const sy = baseY + dy;
        if (sy < 0 || sy >= x.height) continue;
        for (let dx = 0; dx < p.kw; dx++) {
          const sx = baseX + dx;
          if (sx < 0 || sx >= x.width) continue;
          const src = (sy * x.width + sx) * c;
          const wBase = (dy * p.kw + dx) * c;
          for (let ch = 0; ch < c; ch++) {
            out.data[dst + ch] += packedWeights[wBase + ch] * x.data[src + ch];
          }
        }
      }
    }
  }
  addBiasActivate(out.data, bias, c, activation);
  return out;
}

export function maxPool2d(
  x: Tensor3, kh: number, kw: number, strideH: number, strideW: number,
  padH: number, padW: number,
): Tensor3 {
  const outH = outSize(x.height, kh, strideH, padH);
  const outW = outSize(x.width, kw, strideW, padW);
  const c = x.channels;
  const out = zeros(outH, outW, c);
  out.data.fill(-Infinity);
  for (let oy = 0; oy < outH; oy++) {
    for (let ox = 0; ox < outW; ox++) {
      const dst = (oy * outW + ox) * c;
      for (let dy = 0; dy < kh; dy++) {
        const sy = oy * strideH - padH + dy;
        if (sy < 0 || sy >= x.height) continue;
        for (let dx = 0; dx < kw; dx++) {
          const sx = ox * strideW - padW + dx;
          if (sx < 0 || sx >= x.width) continue;
          const src = (sy * x.width + sx) * c;
          for (let ch = 0; ch < c; ch++) {
            const v = x.data[src + ch];
            if (v > out.data[dst + ch]) out.data[dst + ch] = v;
          }
        }
      }
    }
  }
  return out;
}

export function addTensors(a: Tensor3, b: Tensor3): Tensor3 {
  const out = zeros(a.height, a.width, a.channels);
  for (let i = 0; i < a.data.length; i++) out.data[i] = a.data[i] + b.data[i];
  return out;
}

export function globalMaxPool(x: Tensor3): Float32Array {
  const c = x.channels;
  const out = new Float32Array(c).fill(-Infinity);
  const n = x.height * x.width;
  for (let p = 0; p < n; p++) {
    const base = p * c;
    for (let ch = 0; ch < c; ch++) {
      const v = x.data[base + ch];
      if (v > out[ch]) out[ch] = v;
    }
  }
  return out;
}

export function dense(
  x: Float32Array, weights: Float32Array, bias: Float32Array, outDim: number,
): Float32Array {
  const inDim = x.length;
  const out = new Float32Array(outDim);
  for (let o = 0; o < outDim; o++) {
    let acc = bias[o];
    const row = o * inDim;
    for (let i = 0; i < inDim; i++) acc += weights[row + i] * x[i];
    out[o] = acc;
  }
  return out;
}

export function softmax(x: Float32Array): Float32Array {
  let max = -Infinity;
  for (const v of x) if (v > max) max = v;
  let sum = 0;
  const out = new Float32Array(x.length);
  for (let i = 0; i < x.length; i++) {
    out[i] = Math.exp(x[i] - max);
    sum += out[i];
  }
  for (let i = 0; i < x.length; i++) out[i] /= sum;
  return out;
}
