// Aperture mask model mirroring the server schema. The serialized form is the
// UI<->service contract: {kind, label, parameters}; bitmap rows are
// run-length encoded, alternating false/true and starting with a false count.

export type MaskKind = "full" | "half_plane" | "disk" | "annulus" | "bitmap";

export interface FullMask {
  kind: "full";
  label?: string;
}

export interface HalfPlaneMask {
  kind: "half_plane";
  label?: string;
  angle: number;   // rad, normal direction of the kept side
  offset: number;  // px, signed distance of the boundary from region center
}

export interface DiskMask {
  kind: "disk";
  label?: string;
  center: [number, number]; // px relative to region center
  radius: number;
}

export interface AnnulusMask {
  kind: "annulus";
  label?: string;
  center: [number, number];
  r_in: number;
  r_out: number;
}

export interface BitmapMask {
  kind: "bitmap";
  label?: string;
  width: number;
  height: number;
  rows: number[][];
}

export type Mask = FullMask | HalfPlaneMask | DiskMask | AnnulusMask | BitmapMask;

const TWO_PI = 2 * Math.PI;

export function normalizeAngle(angle: number): number {
  const a = angle % TWO_PI;
  return a < 0 ? a + TWO_PI : a;
}

export function halfPlane(angle: number, offset: number, label?: string): HalfPlaneMask {
  return { kind: "half_plane", angle: normalizeAngle(angle), offset, label };
}

/** Complement used by the DPC toggle; matches the server's closed-boundary rule. */
export function complementHalfPlane(mask: HalfPlaneMask): HalfPlaneMask {
  return halfPlane(mask.angle + Math.PI, -mask.offset,
    mask.label ? `not(${mask.label})` : undefined);
}

export function rleEncodeRow(row: boolean[] | Uint8Array): number[] {
  const runs: number[] = [];
  let current = false;
  let count = 0;
  for (let i = 0; i < row.length; i++) {
    const v = Boolean(row[i]);
    if (v === current) {
      count++;
    } else {
      runs.push(count);
      current = v;
      count = 1;
    }
  }
  runs.push(count);
  return runs;
}

export function rleDecodeRow(runs: number[], width: number): Uint8Array {
  const out = new Uint8Array(width);
  let pos = 0;
  let value = 0;
  for (const n of runs) {
    if (n < 0 || pos + n > width) {
      throw new Error("bitmap row run lengths exceed row width");
    }
    out.fill(value, pos, pos + n);
    pos += n;
    value = 1 - value;
  }
  if (pos !== width) {
    throw new Error("bitmap row run lengths do not cover the row");
  }
  return out;
}

/** Serialize a painted brush grid (row-major, height x width) to the schema. */
export function bitmapFromGrid(grid: Uint8Array, width: number, height: number,
                               label?: string): BitmapMask {
  if (grid.length !== width * height) {
    throw new Error(`grid length ${grid.length} != ${width}x${height}`);
  }
  const rows: number[][] = [];
  for (let y = 0; y < height; y++) {
    rows.push(rleEncodeRow(grid.subarray(y * width, (y + 1) * width)));
  }
  return { kind: "bitmap", width, height, rows, label };
}

export function gridFromBitmap(mask: BitmapMask): Uint8Array {
  const grid = new Uint8Array(mask.width * mask.height);
  if (mask.rows.length !== mask.height) {
    throw new Error(`bitmap has ${mask.rows.length} rows, header says ${mask.height}`);
  }
  for (let y = 0; y < mask.height; y++) {
    grid.set(rleDecodeRow(mask.rows[y], mask.width), y * mask.width);
  }
  return grid;
}

/**
 * Request body object for a mask. JSON.stringify of the result is the exact
 * wire form; undefined labels are omitted so payloads stay minimal.
 */
export function maskToSchema(mask: Mask): Record<string, unknown> {
  switch (mask.kind) {
    case "full":
      return withLabel({ kind: "full" }, mask.label);
    case "half_plane":
      return withLabel(
        { kind: "half_plane", angle: normalizeAngle(mask.angle), offset: mask.offset },
        mask.label);
    case "disk":
      return withLabel(
        { kind: "disk", center: [...mask.center], radius: mask.radius }, mask.label);
    case "annulus":
      return withLabel(
        { kind: "annulus", center: [...mask.center], r_in: mask.r_in, r_out: mask.r_out },
        mask.label);
    case "bitmap":
      return withLabel(
        { kind: "bitmap", width: mask.width, height: mask.height, rows: mask.rows },
        mask.label);
  }
}

function withLabel(obj: Record<string, unknown>, label?: string) {
  if (label !== undefined) {
    obj.label = label;
  }
  return obj;
}

export function maskFromSchema(obj: Record<string, unknown>): Mask {
  const kind = obj.kind as MaskKind;
  switch (kind) {
    case "full":
      return { kind, label: obj.label as string | undefined };
    case "half_plane":
      return {
        kind,
        angle: Number(obj.angle ?? 0),
        offset: Number(obj.offset ?? 0),
        label: obj.label as string | undefined,
      };
    case "disk":
      return {
        kind,
        center: (obj.center as [number, number]) ?? [0, 0],
        radius: Number(obj.radius),
        label: obj.label as string | undefined,
      };
    case "annulus":
      return {
        kind,
        center: (obj.center as [number, number]) ?? [0, 0],
        r_in: Number(obj.r_in),
        r_out: Number(obj.r_out),
        label: obj.label as string | undefined,
      };
    case "bitmap":
      return {
        kind,
        width: Number(obj.width),
        height: Number(obj.height),
        rows: obj.rows as number[][],
        label: obj.label as string | undefined,
      };
    default:
      throw new Error(`unknown mask kind ${String(obj.kind)}`);
  }
}

/**
 * Client-side membership preview so the editor can outline the mask before the
 * server render returns. Display-only; all image math stays on the server.
 */
export function maskContains(mask: Mask, x: number, y: number,
                             centerX: number, centerY: number): boolean {
  const rx = x - centerX;
  const ry = y - centerY;
  switch (mask.kind) {
    case "full":
      return true;
    case "half_plane":
      return rx * Math.cos(mask.angle) + ry * Math.sin(mask.angle) >= mask.offset;
    case "disk":
      return Math.hypot(rx - mask.center[0], ry - mask.center[1]) <= mask.radius;
    case "annulus": {
      const d = Math.hypot(rx - mask.center[0], ry - mask.center[1]);
      return d >= mask.r_in && d <= mask.r_out;
    }
    case "bitmap": {
      const ix = Math.round(x);
      const iy = Math.round(y);
      if (ix < 0 || ix >= mask.width || iy < 0 || iy >= mask.height) {
        return false;
      }
      return gridFromBitmap(mask)[iy * mask.width + ix] === 1;
    }
  }
}
