/**
 * DOM wiring: light-disc widget, pan/zoom on the image canvas, resolution
 * toggle, fps overlay, and an error banner for load or shader failures.
 *
 * The file to view comes from the `src` query parameter and defaults to
 * ./data (a directory containing info.json and the plane PNGs).
 */

import { RESOLUTION_SCALES } from "./state.js";
import { Viewer } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message;
  banner.style.display = "block";
}

function drawLightWidget(
  ctx: CanvasRenderingContext2D,
  lx: number,
  ly: number,
): void {
  const size = ctx.canvas.width;
  const r = size / 2;
  ctx.clearRect(0, 0, size, size);
  ctx.beginPath();
  ctx.arc(r, r, r - 2, 0, 2 * Math.PI);
  ctx.fillStyle = "#1c2333";
  ctx.fill();
  ctx.strokeStyle = "#51607e";
  ctx.stroke();
  // screen y grows downward; light y grows upward
  const px = r + lx * (r - 6);
  const py = r - ly * (r - 6);
  ctx.beginPath();
  ctx.arc(px, py, 6, 0, 2 * Math.PI);
  ctx.fillStyle = "#ffd75e";
  ctx.fill();
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const source = params.get("src") ?? "./data";
  const canvas = el<HTMLCanvasElement>("view");
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;

  let viewer: Viewer;
  try {
    viewer = await Viewer.load(source, canvas);
  } catch (err) {
    showError(err instanceof Error ? err.message : String(err));
    return;
  }
  el<HTMLSpanElement>("file-info").textContent = viewer.describe();

  const widget = el<HTMLCanvasElement>("light-widget");
  const wctx = widget.getContext("2d")!;
  const fpsLabel = el<HTMLSpanElement>("fps");

  const redraw = () => {
    viewer.renderFrame();
    drawLightWidget(wctx, viewer.state.light.lx, viewer.state.light.ly);
    fpsLabel.textContent = `${viewer.state.fps.value.toFixed(1)} fps @ 1/${viewer.state.resolutionScale}`;
  };

  // light-disc dragging
  let draggingLight = false;
  const updateLightFromEvent = (ev: PointerEvent) => {
    const rect = widget.getBoundingClientRect();
    const r = rect.width / 2;
    const lx = (ev.clientX - rect.left - r) / (r - 6);
    const ly = -(ev.clientY - rect.top - r) / (r - 6);
    viewer.state.setLight(lx, ly);
    redraw();
  };
  widget.addEventListener("pointerdown", (ev) => {
    draggingLight = true;
    widget.setPointerCapture(ev.pointerId);
    updateLightFromEvent(ev);
  });
  widget.addEventListener("pointermove", (ev) => {
    if (draggingLight) updateLightFromEvent(ev);
  });
  widget.addEventListener("pointerup", () => (draggingLight = false));

  // pan / zoom on the image
  let panning = false;
  let last: [number, number] = [0, 0];
  canvas.addEventListener("pointerdown", (ev) => {
    panning = true;
    last = [ev.clientX, ev.clientY];
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!panning) return;
    viewer.state.pan(ev.clientX - last[0], ev.clientY - last[1]);
    last = [ev.clientX, ev.clientY];
    redraw();
  });
  canvas.addEventListener("pointerup", () => (panning = false));
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
    viewer.state.zoomAt(ev.clientX - rect.left, ev.clientY - rect.top, factor);
    redraw();
  });

  // resolution toggle
  const scaleBox = el<HTMLSpanElement>("scales");
  for (const scale of RESOLUTION_SCALES) {
    const button = document.createElement("button");
    button.textContent = `1/${scale}`;
    button.addEventListener("click", () => {
      viewer.state.setResolutionScale(scale);
      redraw();
    });
    scaleBox.appendChild(button);
  }
  el<HTMLInputElement>("auto-scale").addEventListener("change", (ev) => {
    viewer.state.autoScale = (ev.target as HTMLInputElement).checked;
  });

  redraw();
}

start();
