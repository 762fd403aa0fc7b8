/**
 * GLSL ES 3.0 shader source generation.
 *
 * The decoder's weights and biases travel in one std140 uniform block of
 * vec4s (an N=20 decoder is 723 floats, an N=50 one 3303; both fit the
 * guaranteed 16 KiB block size). Layer sizes are baked into the source so
 * loops have compile-time bounds; latent planes are sampled with
 * texelFetch, which is inherently nearest-neighbor — filtering quantized
 * codes as if they were colors would corrupt them.
 */

import { Header, decoderWidth, packParameters } from "./format.js";

export const VERTEX_SHADER = `#version 300 es
in vec2 aPosition;
out vec2 vUv;
void main() {
  vUv = 0.5 * (aPosition + 1.0);
  gl_Position = vec4(aPosition, 0.0, 1.0);
}
`;

export interface ShaderBundle {
  vertex: string;
  fragment: string;
  params: Float32Array; // vec4-padded std140 payload
  paramCount: number;
}

/** Pad a flat float array to a whole number of vec4s. */
export function padToVec4(params: Float32Array): Float32Array {
  const padded = new Float32Array(Math.ceil(params.length / 4) * 4);
  padded.set(params);
  return padded;
}

export function buildShaders(header: Header): ShaderBundle {
  const k = header.K;
  const n = decoderWidth(header);
  const params = packParameters(header);
  const padded = padToVec4(params);
  const nVec4 = padded.length / 4;

  // parameter layout: w0 (n x (k+2)), b0 (n), w1 (n x n), b1 (n), w2 (3 x n), b2 (3)
  const w0 = 0;
  const b0 = w0 + n * (k + 2);
  const w1 = b0 + n;
  const b1 = w1 + n * n;
  const w2 = b1 + n;
  const b2 = w2 + 3 * n;

  const fragment = `#version 300 es
precision highp float;
precision highp int;

uniform sampler2D uPlane0;
uniform sampler2D uPlane1;
uniform sampler2D uPlane2;
uniform float uOffsets[${k}];
uniform float uScales[${k}];
uniform vec2 uLight;
uniform vec2 uViewOrigin;   // image-space coordinate of the viewport origin
uniform vec2 uViewSpan;     // image-space extent of the viewport
uniform ivec2 uImageSize;

layout(std140) uniform Params {
  vec4 data[${nVec4}];
} uParams;

in vec2 vUv;
out vec4 outColor;

float p(int i) {
  vec4 v = uParams.data[i >> 2];
  int r = i & 3;
  return r == 0 ? v.x : (r == 1 ? v.y : (r == 2 ? v.z : v.w));
}

float elu(float x) {
  return x > 0.0 ? x : exp(x) - 1.0;
}

void main() {
  vec2 imagePos = uViewOrigin + vUv * uViewSpan;
  if (imagePos.x < 0.0 || imagePos.y < 0.0 ||
      imagePos.x >= float(uImageSize.x) || imagePos.y >= float(uImageSize.y)) {
    outColor = vec4(0.08, 0.08, 0.1, 1.0);
    return;
  }
  ivec2 texel = ivec2(imagePos);

  vec3 c0 = texelFetch(uPlane0, texel, 0).rgb * 255.0;
  vec3 c1 = texelFetch(uPlane1, texel, 0).rgb * 255.0;
  vec3 c2 = texelFetch(uPlane2, texel, 0).rgb * 255.0;

  float x[${k + 2}];
  x[0] = uOffsets[0] + c0.r * uScales[0];
  x[1] = uOffsets[1] + c0.g * uScales[1];
  x[2] = uOffsets[2] + c0.b * uScales[2];
  x[3] = uOffsets[3] + c1.r * uScales[3];
  x[4] = uOffsets[4] + c1.g * uScales[4];
  x[5] = uOffsets[5] + c1.b * uScales[5];
  x[6] = uOffsets[6] + c2.r * uScales[6];
  x[7] = uOffsets[7] + c2.g * uScales[7];
  x[8] = uOffsets[8] + c2.b * uScales[8];
  x[${k}] = uLight.x;
  x[${k + 1}] = uLight.y;

  float h1[${n}];
  for (int j = 0; j < ${n}; j++) {
    float acc = p(${b0} + j);
    for (int i = 0; i < ${k + 2}; i++) {
      acc += p(${w0} + j * ${k + 2} + i) * x[i];
    }
    h1[j] = elu(acc);
  }

  float h2[${n}];
  for (int j = 0; j < ${n}; j++) {
    float acc = p(${b1} + j);
    for (int i = 0; i < ${n}; i++) {
      acc += p(${w1} + j * ${n} + i) * h1[i];
    }
    h2[j] = elu(acc);
  }

  vec3 rgb;
  for (int j = 0; j < 3; j++) {
    float acc = p(${b2} + j);
    for (int i = 0; i < ${n}; i++) {
      acc += p(${w2} + j * ${n} + i) * h2[i];
    }
    rgb[j] = acc;
  }
  outColor = vec4(clamp(rgb, 0.0, 1.0), 1.0);
}
`;

  return { vertex: VERTEX_SHADER, fragment, params: padded, paramCount: params.length };
}
