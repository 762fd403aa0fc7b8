/**
 * Viewer state: light direction on the unit disc, resolution scale,
 * pan/zoom transform, and the smoothed fps readout.
 */

export const RESOLUTION_SCALES = [1, 2, 4] as const;
export type ResolutionScale = (typeof RESOLUTION_SCALES)[number];

export interface LightXY {
  lx: number;
  ly: number;
}

/** Clamp a light to the unit disc (projected hemisphere widget). */
export function clampLightToDisc(lx: number, ly: number): LightXY {
  const r = Math.hypot(lx, ly);
  if (r <= 1.0 || r === 0) {
    return { lx, ly };
  }
  return { lx: lx / r, ly: ly / r };
}

/** Exponentially smoothed frames/second with smoothing factor 0.1. */
export class FpsMeter {
  static readonly ALPHA = 0.1;
  private ema: number | null = null;

  update(frameSeconds: number): number {
    const instant = frameSeconds > 0 ? 1.0 / frameSeconds : 0.0;
    this.ema =
      this.ema === null
        ? instant
        : FpsMeter.ALPHA * instant + (1 - FpsMeter.ALPHA) * this.ema;
    return this.ema;
  }

  get value(): number {
    return this.ema ?? 0;
  }
}

export interface PanZoom {
  centerX: number; // image-space point at the canvas center
  centerY: number;
  zoom: number; // canvas pixels per image pixel
}

export class ViewerState {
  light: LightXY = { lx: 0, ly: 0 }; // zenith until the user drags
  resolutionScale: ResolutionScale = 1;
  autoScale = false; // optional mode: drop resolution to hold 20 fps
  view: PanZoom;
  fps = new FpsMeter();

  constructor(
    public imageWidth: number,
    public imageHeight: number,
    public canvasWidth: number,
    public canvasHeight: number,
  ) {
    const fit = Math.min(
      canvasWidth / imageWidth,
      canvasHeight / imageHeight,
    );
    this.view = {
      centerX: imageWidth / 2,
      centerY: imageHeight / 2,
      zoom: fit,
    };
  }

  setLight(lx: number, ly: number): void {
    this.light = clampLightToDisc(lx, ly);
  }

  setResolutionScale(scale: number): void {
    if (!(RESOLUTION_SCALES as readonly number[]).includes(scale)) {
      throw new RangeError(`resolution scale must be one of ${RESOLUTION_SCALES}`);
    }
    this.resolutionScale = scale as ResolutionScale;
  }

  pan(dxCanvas: number, dyCanvas: number): void {
    this.view.centerX -= dxCanvas / this.view.zoom;
    this.view.centerY -= dyCanvas / this.view.zoom;
  }

  /** Zoom about a canvas point so the pixel under the cursor stays put. */
  zoomAt(canvasX: number, canvasY: number, factor: number): void {
    const before = this.canvasToImage(canvasX, canvasY);
    this.view.zoom = Math.min(64, Math.max(0.05, this.view.zoom * factor));
    const after = this.canvasToImage(canvasX, canvasY);
    this.view.centerX += before.x - after.x;
    this.view.centerY += before.y - after.y;
  }

  canvasToImage(canvasX: number, canvasY: number): { x: number; y: number } {
    return {
      x: this.view.centerX + (canvasX - this.canvasWidth / 2) / this.view.zoom,
      y: this.view.centerY + (canvasY - this.canvasHeight / 2) / this.view.zoom,
    };
  }

  /** Image-space origin and span of the current viewport. */
  viewRect(): { originX: number; originY: number; spanX: number; spanY: number } {
    const spanX = this.canvasWidth / this.view.zoom;
    const spanY = this.canvasHeight / this.view.zoom;
    return {
      originX: this.view.centerX - spanX / 2,
      originY: this.view.centerY - spanY / 2,
      spanX,
      spanY,
    };
  }

  /** Optional auto mode: degrade resolution below 20 fps, restore above 40. */
  adaptResolution(): void {
    if (!this.autoScale) {
      return;
    }
    const fps = this.fps.value;
    const idx = RESOLUTION_SCALES.indexOf(this.resolutionScale);
    if (fps > 0 && fps < 20 && idx < RESOLUTION_SCALES.length - 1) {
      this.resolutionScale = RESOLUTION_SCALES[idx + 1];
    } else if (fps > 40 && idx > 0) {
      this.resolutionScale = RESOLUTION_SCALES[idx - 1];
    }
  }
}
