// Color mapping is the only pixel math the client performs: counts and DPC
// values arrive fully computed from the server and are only mapped to RGBA.

export type Rgb = [number, number, number];

/** Grayscale-with-warmth ramp for count images, scaled to the frame maximum. */
export function countsToRgb(value: number, maxValue: number): Rgb {
  const t = maxValue > 0 ? Math.min(value / maxValue, 1) : 0;
  // dark blue -> orange -> white, perceptually monotone enough for counts
  const r = Math.round(255 * Math.min(1, 1.8 * t));
  const g = Math.round(255 * Math.min(1, Math.max(0, 1.6 * t - 0.25)));
  const b = Math.round(255 * Math.max(0, Math.min(1, 0.35 + 1.2 * (t - 0.7))));
  return [r, g, b];
}

/**
 * Fixed diverging map over [-2, 2] for DPC frames: blue for negative, white
 * at zero, red for positive. Invalid pixels are drawn mid-gray by the caller.
 */
export function dpcToRgb(value: number): Rgb {
  const t = Math.max(-1, Math.min(1, value / 2));
  if (t < 0) {
    const s = 1 + t; // 0 at -2, 1 at 0
    return [Math.round(255 * (0.2 + 0.8 * s)), Math.round(255 * (0.3 + 0.7 * s)), 255];
  }
  const s = 1 - t;
  return [255, Math.round(255 * (0.3 + 0.7 * s)), Math.round(255 * (0.2 + 0.8 * s))];
}

export const DPC_INVALID_RGB: Rgb = [128, 128, 128];

export function renderCounts(pixels: Uint16Array, out: Uint8ClampedArray): void {
  let max = 0;
  for (let i = 0; i < pixels.length; i++) {
    if (pixels[i] > max) max = pixels[i];
  }
  for (let i = 0; i < pixels.length; i++) {
    const [r, g, b] = countsToRgb(pixels[i], max);
    out[4 * i] = r;
    out[4 * i + 1] = g;
    out[4 * i + 2] = b;
    out[4 * i + 3] = 255;
  }
}

export function renderDpc(values: Float32Array, valid: Uint8Array,
                          out: Uint8ClampedArray): void {
  for (let i = 0; i < values.length; i++) {
    const [r, g, b] = valid[i] ? dpcToRgb(values[i]) : DPC_INVALID_RGB;
    out[4 * i] = r;
    out[4 * i + 1] = g;
    out[4 * i + 2] = b;
    out[4 * i + 3] = 255;
  }
}
