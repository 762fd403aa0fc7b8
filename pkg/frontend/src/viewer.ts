/**
 * Viewer orchestration: fetch and validate a packed relightable file,
 * upload decoder parameters and latent planes to the GPU, and redraw on
 * every interaction with an fps readout.
 *
 * Rendering happens at full resolution by default; at resolution scale s
 * the frame renders into a 1/s offscreen buffer and is blitted up with
 * nearest filtering, trading sharpness for decode throughput.
 */

import { FormatError, Header, parameterCount, parseHeader, planeCount } from "./format.js";
import { setupRenderer, RendererResources } from "./gl.js";
import { buildShaders, ShaderBundle } from "./shader.js";
import { ViewerState } from "./state.js";

async function fetchJson(url: string): Promise<unknown> {
  const res = await fetch(url);
  if (!res.ok) {
    throw new FormatError(`fetch ${url}: HTTP ${res.status}`);
  }
  return res.json();
}

function fetchImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.crossOrigin = "anonymous";
    img.onload = () => resolve(img);
    img.onerror = () => reject(new FormatError(`could not load ${url}`));
    img.src = url;
  });
}

export class Viewer {
  state: ViewerState;
  private gl: WebGL2RenderingContext;
  private resources: RendererResources;
  private bundle: ShaderBundle;
  private lowResSize: [number, number] = [0, 0];

  private constructor(
    public readonly header: Header,
    private canvas: HTMLCanvasElement,
    gl: WebGL2RenderingContext,
    resources: RendererResources,
    bundle: ShaderBundle,
  ) {
    this.gl = gl;
    this.resources = resources;
    this.bundle = bundle;
    this.state = new ViewerState(
      header.width,
      header.height,
      canvas.width,
      canvas.height,
    );
  }

  /** Fetch info.json + planes from a directory URL and bring up the GL
   * pipeline; the first frame renders at the zenith light. */
  static async load(baseUrl: string, canvas: HTMLCanvasElement): Promise<Viewer> {
    const base = baseUrl.replace(/\/$/, "");
    const header = parseHeader(await fetchJson(`${base}/info.json`));
    const planes = await Promise.all(
      Array.from({ length: planeCount(header.K) }, (_, i) =>
        fetchImage(`${base}/plane_${i}.png`),
      ),
    );
    for (const img of planes) {
      if (img.naturalWidth !== header.width || img.naturalHeight !== header.height) {
        throw new FormatError(
          `plane is ${img.naturalWidth}x${img.naturalHeight}, ` +
            `header says ${header.width}x${header.height}`,
        );
      }
    }
    const gl = canvas.getContext("webgl2", { preserveDrawingBuffer: true });
    if (!gl) {
      throw new FormatError("WebGL2 is not available in this browser");
    }
    const bundle = buildShaders(header);
    const resources = setupRenderer(gl, header, bundle, planes);
    const viewer = new Viewer(header, canvas, gl, resources, bundle);
    viewer.renderFrame();
    return viewer;
  }

  get uniformCount(): number {
    return this.bundle.paramCount;
  }

  /** Draw once with the current state; returns the frame time estimate. */
  renderFrame(): void {
    const start = performance.now();
    const gl = this.gl;
    const state = this.state;
    const scale = state.resolutionScale;
    const targetW = Math.max(1, Math.floor(this.canvas.width / scale));
    const targetH = Math.max(1, Math.floor(this.canvas.height / scale));

    gl.useProgram(this.resources.program);
    gl.bindVertexArray(this.resources.vao);
    gl.uniform2f(
      gl.getUniformLocation(this.resources.program, "uLight"),
      state.light.lx,
      state.light.ly,
    );
    const rect = state.viewRect();
    gl.uniform2f(
      gl.getUniformLocation(this.resources.program, "uViewOrigin"),
      rect.originX,
      rect.originY,
    );
    gl.uniform2f(
      gl.getUniformLocation(this.resources.program, "uViewSpan"),
      rect.spanX,
      rect.spanY,
    );

    if (scale === 1) {
      gl.bindFramebuffer(gl.FRAMEBUFFER, null);
      gl.viewport(0, 0, this.canvas.width, this.canvas.height);
      gl.drawArrays(gl.TRIANGLES, 0, 3);
    } else {
      this.ensureLowResTarget(targetW, targetH);
      gl.bindFramebuffer(gl.FRAMEBUFFER, this.resources.lowResFramebuffer);
      gl.viewport(0, 0, targetW, targetH);
      gl.drawArrays(gl.TRIANGLES, 0, 3);
      // nearest-upscale blit to the default framebuffer
      gl.bindFramebuffer(gl.READ_FRAMEBUFFER, this.resources.lowResFramebuffer);
      gl.bindFramebuffer(gl.DRAW_FRAMEBUFFER, null);
      gl.blitFramebuffer(
        0, 0, targetW, targetH,
        0, 0, this.canvas.width, this.canvas.height,
        gl.COLOR_BUFFER_BIT,
        gl.NEAREST,
      );
    }
    gl.finish();
    const seconds = (performance.now() - start) / 1000;
    state.fps.update(seconds);
    state.adaptResolution();
  }

  private ensureLowResTarget(w: number, h: number): void {
    if (this.lowResSize[0] === w && this.lowResSize[1] === h) {
      return;
    }
    const gl = this.gl;
    gl.bindTexture(gl.TEXTURE_2D, this.resources.lowResTexture);
    gl.texImage2D(gl.TEXTURE_2D, 0, gl.RGBA8, w, h, 0, gl.RGBA, gl.UNSIGNED_BYTE, null);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.NEAREST);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MAG_FILTER, gl.NEAREST);
    gl.bindFramebuffer(gl.FRAMEBUFFER, this.resources.lowResFramebuffer);
    gl.framebufferTexture2D(
      gl.FRAMEBUFFER,
      gl.COLOR_ATTACHMENT0,
      gl.TEXTURE_2D,
      this.resources.lowResTexture,
      0,
    );
    this.lowResSize = [w, h];
    // restore texture units used by the planes
    this.resources.planeTextures.forEach((tex, i) => {
      gl.activeTexture(gl.TEXTURE0 + i);
      gl.bindTexture(gl.TEXTURE_2D, tex);
    });
  }

  /** Read back the currently displayed frame (for the parity harness). */
  capturePixels(): Uint8Array {
    const gl = this.gl;
    const out = new Uint8Array(this.canvas.width * this.canvas.height * 4);
    gl.bindFramebuffer(gl.FRAMEBUFFER, null);
    gl.readPixels(
      0, 0, this.canvas.width, this.canvas.height,
      gl.RGBA, gl.UNSIGNED_BYTE, out,
    );
    return out;
  }

  describe(): string {
    return (
      `${this.header.method} ${this.header.width}x${this.header.height} ` +
      `K=${this.header.K}, decoder N=${this.header.decoder.layer_sizes[1]}, ` +
      `${parameterCount(this.header)} parameters`
    );
  }
}
