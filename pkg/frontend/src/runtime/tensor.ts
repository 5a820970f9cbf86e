// NHWC tensors over flat Float32Arrays; all runtime kernels share this shape.

export interface Tensor3 {
  height: number;
  width: number;
  channels: number;
  data: Float32Array; // index = (y * width + x) * channels + c
}

export function zeros(height: number, width: number, channels: number): Tensor3 {
  return { height, width, channels, data: new Float32Array(height * width * channels) };
}

export interface ImageData3 {
  width: number;
  height: number;
  data: Uint8ClampedArray; // RGBA, as produced by canvas getImageData
}

/** RGBA bytes -> RGB float tensor in [0, 1]. */
export function fromImageData(image: ImageData3): Tensor3 {
  const out = zeros(image.height, image.width, 3);
  const n = image.width * image.height;
  for (let p = 0; p < n; p++) {
    out.data[p * 3] = image.data[p * 4] / 255;
    out.data[p * 3 + 1] = image.data[p * 4 + 1] / 255;
    out.data[p * 3 + 2] = image.data[p * 4 + 2] / 255;
  }
  return out;
}
