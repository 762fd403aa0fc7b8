/**
 * Reference CPU decoder: the same math the fragment shader runs, in plain
 * TypeScript. Used for parity tests against the producing toolkit's CPU
 * decode and as a WebGL-free fallback for tiny previews.
 */

import { Header } from "./format.js";

export function elu(x: number): number {
  return x > 0 ? x : Math.expm1(x);
}

/** Dequantize one pixel's K latent bytes. */
export function dequantize(
  bytes: ArrayLike<number>,
  offsets: ArrayLike<number>,
  scales: ArrayLike<number>,
): Float64Array {
  const out = new Float64Array(offsets.length);
  for (let k = 0; k < out.length; k++) {
    out[k] = offsets[k] + bytes[k] * scales[k];
  }
  return out;
}

/** One dense layer: y = W x + b, weights row-major (out x in). */
function dense(
  x: Float64Array,
  weights: number[],
  biases: number[],
  activate: boolean,
): Float64Array {
  const outDim = biases.length;
  const inDim = x.length;
  const y = new Float64Array(outDim);
  for (let j = 0; j < outDim; j++) {
    let acc = biases[j];
    const row = j * inDim;
    for (let i = 0; i < inDim; i++) {
      acc += weights[row + i] * x[i];
    }
    y[j] = activate ? elu(acc) : acc;
  }
  return y;
}

/** Decode one pixel: latent code + light (lx, ly) -> clamped RGB in [0, 1]. */
export function decodePixel(
  code: Float64Array,
  lx: number,
  ly: number,
  header: Header,
): [number, number, number] {
  const k = header.K;
  const input = new Float64Array(k + 2);
  input.set(code);
  input[k] = lx;
  input[k + 1] = ly;
  const { weights, biases } = header.decoder;
  const h1 = dense(input, weights[0], biases[0], true);
  const h2 = dense(h1, weights[1], biases[1], true);
  const out = dense(h2, weights[2], biases[2], false);
  return [
    Math.min(1, Math.max(0, out[0])),
    Math.min(1, Math.max(0, out[1])),
    Math.min(1, Math.max(0, out[2])),
  ];
}

/**
 * Decode a whole byte-plane image (H*W*K, pixel-major) under one light.
 * Returns float RGB rows (H*W*3). `scale` decodes every scale-th pixel
 * and repeats it, matching the renderer's resolution toggle.
 */
export function decodeImage(
  planes: Uint8Array,
  header: Header,
  lx: number,
  ly: number,
  scale = 1,
): Float64Array {
  const { width: w, height: h, K: k } = header;
  const offsets = header.quant.offsets;
  const scales = header.quant.scales;
  const out = new Float64Array(h * w * 3);
  for (let r = 0; r < h; r += scale) {
    for (let c = 0; c < w; c += scale) {
      const code = dequantize(
        planes.subarray((r * w + c) * k, (r * w + c) * k + k),
        offsets,
        scales,
      );
      const rgb = decodePixel(code, lx, ly, header);
      for (let rr = r; rr < Math.min(r + scale, h); rr++) {
        for (let cc = c; cc < Math.min(c + scale, w); cc++) {
          const o = (rr * w + cc) * 3;
          out[o] = rgb[0];
          out[o + 1] = rgb[1];
          out[o + 2] = rgb[2];
        }
      }
    }
  }
  return out;
}
