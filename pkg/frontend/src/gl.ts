/**
 * WebGL2 plumbing: program setup, plane textures, the parameter uniform
 * block, and an offscreen framebuffer for the resolution-scale mode.
 */

import { Header, planeCount } from "./format.js";
import { ShaderBundle } from "./shader.js";

export class GlError extends Error {}

function compile(gl: WebGL2RenderingContext, type: number, source: string): WebGLShader {
  const shader = gl.createShader(type);
  if (!shader) throw new GlError("could not allocate shader");
  gl.shaderSource(shader, source);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    const log = gl.getShaderInfoLog(shader);
    gl.deleteShader(shader);
    throw new GlError(`shader compile failed: ${log}`);
  }
  return shader;
}

export interface RendererResources {
  program: WebGLProgram;
  vao: WebGLVertexArrayObject;
  planeTextures: WebGLTexture[];
  paramBuffer: WebGLBuffer;
  lowResFramebuffer: WebGLFramebuffer;
  lowResTexture: WebGLTexture;
}

export function createProgram(
  gl: WebGL2RenderingContext,
  bundle: ShaderBundle,
): WebGLProgram {
  const program = gl.createProgram();
  if (!program) throw new GlError("could not allocate program");
  gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, bundle.vertex));
  gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, bundle.fragment));
  gl.linkProgram(program);
  if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
    throw new GlError(`program link failed: ${gl.getProgramInfoLog(program)}`);
  }
  return program;
}

/** Upload one RGB(A) plane as a nearest-filtered, unfiltered texture. */
export function uploadPlaneTexture(
  gl: WebGL2RenderingContext,
  image: TexImageSource,
): WebGLTexture {
  const tex = gl.createTexture();
  if (!tex) throw new GlError("could not allocate texture");
  gl.bindTexture(gl.TEXTURE_2D, tex);
  gl.pixelStorei(gl.UNPACK_FLIP_Y_WEBGL, false);
  gl.texImage2D(gl.TEXTURE_2D, 0, gl.RGBA8, gl.RGBA, gl.UNSIGNED_BYTE, image);
  gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.NEAREST);
  gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MAG_FILTER, gl.NEAREST);
  gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_S, gl.CLAMP_TO_EDGE);
  gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_T, gl.CLAMP_TO_EDGE);
  return tex;
}

export function setupRenderer(
  gl: WebGL2RenderingContext,
  header: Header,
  bundle: ShaderBundle,
  planeImages: TexImageSource[],
): RendererResources {
  if (planeImages.length !== planeCount(header.K)) {
    throw new GlError(
      `${planeImages.length} planes for K=${header.K}; expected ${planeCount(header.K)}`,
    );
  }
  const program = createProgram(gl, bundle);

  const vao = gl.createVertexArray();
  if (!vao) throw new GlError("could not allocate vertex array");
  gl.bindVertexArray(vao);
  const quad = gl.createBuffer();
  gl.bindBuffer(gl.ARRAY_BUFFER, quad);
  gl.bufferData(
    gl.ARRAY_BUFFER,
    new Float32Array([-1, -1, 3, -1, -1, 3]), // fullscreen triangle
    gl.STATIC_DRAW,
  );
  const loc = gl.getAttribLocation(program, "aPosition");
  gl.enableVertexAttribArray(loc);
  gl.vertexAttribPointer(loc, 2, gl.FLOAT, false, 0, 0);

  const planeTextures = planeImages.map((img) => uploadPlaneTexture(gl, img));

  const paramBuffer = gl.createBuffer();
  if (!paramBuffer) throw new GlError("could not allocate uniform buffer");
  gl.bindBuffer(gl.UNIFORM_BUFFER, paramBuffer);
  gl.bufferData(gl.UNIFORM_BUFFER, bundle.params, gl.STATIC_DRAW);
  const blockIndex = gl.getUniformBlockIndex(program, "Params");
  gl.uniformBlockBinding(program, blockIndex, 0);
  gl.bindBufferBase(gl.UNIFORM_BUFFER, 0, paramBuffer);

  // constant uniforms
  gl.useProgram(program);
  gl.uniform1fv(
    gl.getUniformLocation(program, "uOffsets"),
    new Float32Array(header.quant.offsets),
  );
  gl.uniform1fv(
    gl.getUniformLocation(program, "uScales"),
    new Float32Array(header.quant.scales),
  );
  gl.uniform2i(
    gl.getUniformLocation(program, "uImageSize"),
    header.width,
    header.height,
  );
  planeTextures.forEach((tex, i) => {
    gl.activeTexture(gl.TEXTURE0 + i);
    gl.bindTexture(gl.TEXTURE_2D, tex);
    gl.uniform1i(gl.getUniformLocation(program, `uPlane${i}`), i);
  });

  // offscreen target for scaled-down rendering
  const lowResTexture = gl.createTexture();
  const lowResFramebuffer = gl.createFramebuffer();
  if (!lowResTexture || !lowResFramebuffer) {
    throw new GlError("could not allocate low-res render target");
  }

  return { program, vao, planeTextures, paramBuffer, lowResFramebuffer, lowResTexture };
}
