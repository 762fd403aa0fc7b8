/**
 * Packed relightable-file format: header schema and validation.
 *
 * A file is a directory of `info.json` plus `plane_<i>.png` images whose
 * RGB bytes hold the quantized latent codes, three features per plane.
 * Validation mirrors the producing toolkit: every header key is required,
 * weight/bias array lengths must match `layer_sizes`, and this viewer
 * only renders K=9, format_version 1 files.
 */

export class FormatError extends Error {}

export interface DecoderJson {
  layer_sizes: number[];
  activation: string;
  weights: number[][];
  biases: number[][];
}

export interface QuantJson {
  offsets: number[];
  scales: number[];
}

export interface Header {
  format_version: number;
  method: string;
  width: number;
  height: number;
  K: number;
  decoder: DecoderJson;
  quant: QuantJson;
  lights_trained: number;
}

export const NEURAL_METHODS = ["disk-neuralrti", "neuralrti"];
export const SUPPORTED_K = 9;
export const SUPPORTED_FORMAT_VERSION = 1;

const HEADER_KEYS = [
  "format_version",
  "method",
  "width",
  "height",
  "K",
  "decoder",
  "quant",
  "lights_trained",
];
const DECODER_KEYS = ["layer_sizes", "activation", "weights", "biases"];

function requireKeys(obj: Record<string, unknown>, keys: string[], context: string): void {
  for (const key of keys) {
    if (!(key in obj)) {
      throw new FormatError(`${context} is missing required key '${key}'`);
    }
  }
}

/** Parse and validate an info.json document. */
export function parseHeader(json: unknown): Header {
  if (typeof json !== "object" || json === null) {
    throw new FormatError("info.json is not an object");
  }
  const obj = json as Record<string, unknown>;
  requireKeys(obj, HEADER_KEYS, "info.json");

  const header = obj as unknown as Header;
  if (header.format_version !== SUPPORTED_FORMAT_VERSION) {
    throw new FormatError(
      `unsupported format_version ${header.format_version}`,
    );
  }
  if (!NEURAL_METHODS.includes(header.method)) {
    throw new FormatError(`unsupported method tag '${header.method}'`);
  }
  if (header.K !== SUPPORTED_K) {
    throw new FormatError(
      `unsupported latent size K=${header.K}; this viewer renders K=${SUPPORTED_K} files`,
    );
  }
  if (!(header.width > 0) || !(header.height > 0)) {
    throw new FormatError("width and height must be positive");
  }

  requireKeys(
    header.decoder as unknown as Record<string, unknown>,
    DECODER_KEYS,
    "decoder",
  );
  requireKeys(
    header.quant as unknown as Record<string, unknown>,
    ["offsets", "scales"],
    "quant",
  );

  const { layer_sizes: sizes, activation, weights, biases } = header.decoder;
  if (activation !== "elu") {
    throw new FormatError(`decoder.activation must be 'elu', got '${activation}'`);
  }
  if (sizes.length !== 4 || sizes[0] !== header.K + 2 || sizes[3] !== 3 || sizes[1] !== sizes[2]) {
    throw new FormatError(
      `decoder layer_sizes [${sizes}] do not describe a ${header.K + 2}->N->N->3 decoder`,
    );
  }
  if (weights.length !== 3 || biases.length !== 3) {
    throw new FormatError("decoder must carry 3 weight and 3 bias arrays");
  }
  for (let i = 0; i < 3; i++) {
    const expectW = sizes[i] * sizes[i + 1];
    if (weights[i].length !== expectW) {
      throw new FormatError(
        `decoder layer ${i}: ${weights[i].length} weights, expected ${expectW}`,
      );
    }
    if (biases[i].length !== sizes[i + 1]) {
      throw new FormatError(
        `decoder layer ${i}: ${biases[i].length} biases, expected ${sizes[i + 1]}`,
      );
    }
  }
  if (
    header.quant.offsets.length !== header.K ||
    header.quant.scales.length !== header.K
  ) {
    throw new FormatError(`quant arrays must each hold K=${header.K} values`);
  }
  return header;
}

export function planeCount(k: number): number {
  return Math.ceil(k / 3);
}

/** Hidden-layer width N of the decoder. */
export function decoderWidth(header: Header): number {
  return header.decoder.layer_sizes[1];
}

/** Total parameter count (weights + biases). */
export function parameterCount(header: Header): number {
  let total = 0;
  for (const w of header.decoder.weights) total += w.length;
  for (const b of header.decoder.biases) total += b.length;
  return total;
}

/**
 * Flatten decoder parameters in shader upload order:
 * w0, b0, w1, b1, w2, b2 (weights row-major, output-neuron major).
 */
export function packParameters(header: Header): Float32Array {
  const parts: number[] = [];
  for (let i = 0; i < 3; i++) {
    parts.push(...header.decoder.weights[i], ...header.decoder.biases[i]);
  }
  return new Float32Array(parts);
}
