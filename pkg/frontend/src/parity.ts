/**
 * GPU parity harness: renders the committed fixture with the real WebGL2
 * pipeline and compares every pixel against the producing toolkit's CPU
 * decode at five light directions. Open parity.html from a static server
 * and read the table; the displayed tolerance (2/255 per channel) covers
 * 8-bit readback plus float32 shader arithmetic.
 */

import { parseHeader, planeCount } from "./format.js";
import { buildShaders } from "./shader.js";
import { setupRenderer } from "./gl.js";

interface Fixture {
  header: unknown;
  planes: number[];
  lights: [number, number][];
  expected_rgb: number[][];
  tolerance: number;
}

function bytesToImageData(
  bytes: Uint8Array,
  width: number,
  height: number,
  k: number,
  plane: number,
): ImageData {
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let p = 0; p < width * height; p++) {
    rgba[p * 4] = bytes[p * k + plane * 3];
    rgba[p * 4 + 1] = bytes[p * k + plane * 3 + 1];
    rgba[p * 4 + 2] = bytes[p * k + plane * 3 + 2];
    rgba[p * 4 + 3] = 255;
  }
  return new ImageData(rgba, width, height);
}

async function run(): Promise<void> {
  const report = document.getElementById("report")!;
  const fixture = (await (
    await fetch("./test/fixtures/viewer_fixture.json")
  ).json()) as Fixture;
  const header = parseHeader(fixture.header);
  const bytes = Uint8Array.from(fixture.planes);

  const canvas = document.createElement("canvas");
  canvas.width = header.width;
  canvas.height = header.height;
  document.body.appendChild(canvas);
  const gl = canvas.getContext("webgl2", { preserveDrawingBuffer: true });
  if (!gl) {
    report.textContent = "WebGL2 unavailable";
    return;
  }

  const planes: ImageData[] = [];
  for (let p = 0; p < planeCount(header.K); p++) {
    planes.push(bytesToImageData(bytes, header.width, header.height, header.K, p));
  }
  const bundle = buildShaders(header);
  const resources = setupRenderer(gl, header, bundle, planes);
  gl.useProgram(resources.program);
  gl.bindVertexArray(resources.vao);
  gl.uniform2f(gl.getUniformLocation(resources.program, "uViewOrigin"), 0, 0);
  gl.uniform2f(
    gl.getUniformLocation(resources.program, "uViewSpan"),
    header.width,
    header.height,
  );
  gl.viewport(0, 0, header.width, header.height);

  const rows: string[] = [];
  let allPass = true;
  for (let i = 0; i < fixture.lights.length; i++) {
    const [lx, ly] = fixture.lights[i];
    gl.uniform2f(gl.getUniformLocation(resources.program, "uLight"), lx, ly);
    gl.drawArrays(gl.TRIANGLES, 0, 3);
    const pixels = new Uint8Array(header.width * header.height * 4);
    gl.readPixels(
      0, 0, header.width, header.height, gl.RGBA, gl.UNSIGNED_BYTE, pixels,
    );
    const expected = fixture.expected_rgb[i];
    let worst = 0;
    for (let p = 0; p < header.width * header.height; p++) {
      for (let c = 0; c < 3; c++) {
        const got = pixels[p * 4 + c] / 255;
        worst = Math.max(worst, Math.abs(got - expected[p * 3 + c]));
      }
    }
    const pass = worst <= fixture.tolerance;
    allPass &&= pass;
    rows.push(
      `light (${lx.toFixed(2)}, ${ly.toFixed(2)}): max |gpu - cpu| = ` +
        `${worst.toFixed(5)} (limit ${fixture.tolerance.toFixed(5)}) ` +
        (pass ? "PASS" : "FAIL"),
    );
  }
  report.innerHTML =
    rows.map((r) => `<div>${r}</div>`).join("") +
    `<strong>shader parity: ${allPass ? "PASS" : "FAIL"}</strong>`;
}

run().catch((err) => {
  document.getElementById("report")!.textContent = String(err);
});
