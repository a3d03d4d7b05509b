// DOM panels. All numbers on screen come from server responses; the only
// client-side pixel work is color mapping and the mask outline overlay.

import { ApiClient, ApiError, DpcPayload, FramePayload, SingleFlight,
         VisibilityPayload, isAbort } from "./api.js";
import { renderCounts, renderDpc } from "./color.js";
import { Mask, bitmapFromGrid, maskContains } from "./masks.js";
import { base64ToBytes, decodeFloat32, decodePgm, unpackBits } from "./pgm.js";
import { ViewState, dpcRequestBody, exportBundle, renderRequestBody,
         visibilityRequestBody } from "./state.js";
import { complementHalfPlane } from "./masks.js";

const SCALE = 3; // screen pixels per image pixel

export function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Record<string, string> = {}, text?: string) {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function showError(container: HTMLElement, err: unknown) {
  container.textContent = "";
  if (isAbort(err)) {
    return;
  }
  const box = el("div", { class: "error" });
  if (err instanceof ApiError) {
    box.appendChild(el("div", {}, `server error ${err.status}`));
    const body = el("pre", {}, JSON.stringify(err.body, null, 2));
    const req = el("pre", {},
      `request: ${err.request.method} ${err.request.url}\n` +
      JSON.stringify(err.request.body ?? null, null, 2));
    box.appendChild(body);
    box.appendChild(req);
  } else {
    box.appendChild(el("div", {}, String(err)));
  }
  container.appendChild(box);
}

export function downloadJson(filename: string, text: string) {
  const blob = new Blob([text], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const a = el("a", { href: url, download: filename });
  document.body.appendChild(a);
  a.click();
  a.remove();
  URL.revokeObjectURL(url);
}

function paintFrame(canvas: HTMLCanvasElement, payload: FramePayload) {
  const img = decodePgm(base64ToBytes(payload.counts_pgm_b64));
  canvas.width = img.width;
  canvas.height = img.height;
  canvas.style.width = `${img.width * SCALE}px`;
  canvas.style.height = `${img.height * SCALE}px`;
  const ctx = canvas.getContext("2d")!;
  const data = ctx.createImageData(img.width, img.height);
  renderCounts(img.pixels, data.data);
  ctx.putImageData(data, 0, 0);
}

function paintDpc(canvas: HTMLCanvasElement, payload: DpcPayload) {
  const n = payload.width * payload.height;
  const values = decodeFloat32(base64ToBytes(payload.values_b64), n);
  const valid = unpackBits(base64ToBytes(payload.valid_b64), n);
  canvas.width = payload.width;
  canvas.height = payload.height;
  canvas.style.width = `${payload.width * SCALE}px`;
  canvas.style.height = `${payload.height * SCALE}px`;
  const ctx = canvas.getContext("2d")!;
  const data = ctx.createImageData(payload.width, payload.height);
  renderDpc(values, valid, data.data);
  ctx.putImageData(data, 0, 0);
}

// ---------------------------------------------------------------------------

export class FarFieldPanel {
  root: HTMLElement;
  onMaskChange: (mask: Mask) => void = () => {};
  private canvas: HTMLCanvasElement;
  private overlay: HTMLCanvasElement;
  private occupancy: FramePayload | null = null;
  private mask: Mask = { kind: "half_plane", angle: 0, offset: 0 };
  private brushGrid: Uint8Array | null = null;
  private painting = false;
  private controls: HTMLElement;

  constructor() {
    this.root = el("section", { class: "panel" });
    this.root.appendChild(el("h2", {}, "Far field / aperture"));
    const stack = el("div", { class: "canvas-stack" });
    this.canvas = el("canvas");
    this.overlay = el("canvas", { class: "overlay" });
    stack.appendChild(this.canvas);
    stack.appendChild(this.overlay);
    this.root.appendChild(stack);
    this.controls = el("div", { class: "controls" });
    this.root.appendChild(this.controls);
    this.buildControls();
    this.overlay.addEventListener("pointerdown", (e) => this.brushStart(e));
    this.overlay.addEventListener("pointermove", (e) => this.brushMove(e));
    window.addEventListener("pointerup", () => { this.painting = false; });
  }

  setOccupancy(payload: FramePayload) {
    this.occupancy = payload;
    paintFrame(this.canvas, payload);
    this.overlay.width = payload.width;
    this.overlay.height = payload.height;
    this.overlay.style.width = this.canvas.style.width;
    this.overlay.style.height = this.canvas.style.height;
    this.drawOverlay();
  }

  getMask(): Mask {
    return this.mask;
  }

  private setMask(mask: Mask) {
    this.mask = mask;
    this.drawOverlay();
    this.onMaskChange(mask);
  }

  private buildControls() {
    const kindSelect = el("select") as HTMLSelectElement;
    for (const kind of ["half_plane", "disk", "annulus", "bitmap", "full"]) {
      kindSelect.appendChild(el("option", { value: kind }, kind));
    }
    const angleDial = slider(0, 360, 1, 0, "angle (deg)");
    const offsetSlider = slider(-50, 50, 0.5, 0, "offset (px)");
    const radiusSlider = slider(1, 55, 0.5, 20, "radius (px)");
    const rInSlider = slider(1, 54, 0.5, 10, "r_in (px)");
    const rOutSlider = slider(2, 55, 0.5, 25, "r_out (px)");
    const clearBrush = el("button", {}, "clear brush");

    const update = () => {
      const kind = kindSelect.value;
      if (kind === "half_plane") {
        this.setMask({
          kind: "half_plane",
          angle: (Number(angleDial.input.value) * Math.PI) / 180,
          offset: Number(offsetSlider.input.value),
        });
      } else if (kind === "disk") {
        this.setMask({ kind: "disk", center: [0, 0],
                       radius: Number(radiusSlider.input.value) });
      } else if (kind === "annulus") {
        this.setMask({ kind: "annulus", center: [0, 0],
                       r_in: Number(rInSlider.input.value),
                       r_out: Number(rOutSlider.input.value) });
      } else if (kind === "full") {
        this.setMask({ kind: "full" });
      } else {
        this.emitBitmap();
      }
    };
    kindSelect.addEventListener("change", update);
    for (const s of [angleDial, offsetSlider, radiusSlider, rInSlider, rOutSlider]) {
      s.input.addEventListener("input", update);
    }
    clearBrush.addEventListener("click", () => {
      this.brushGrid = null;
      this.emitBitmap();
    });
    this.controls.appendChild(labelled("kind", kindSelect));
    this.controls.appendChild(angleDial.root);
    this.controls.appendChild(offsetSlider.root);
    this.controls.appendChild(radiusSlider.root);
    this.controls.appendChild(rInSlider.root);
    this.controls.appendChild(rOutSlider.root);
    this.controls.appendChild(clearBrush);
  }

  private emitBitmap() {
    if (!this.occupancy) {
      return;
    }
    const { width, height } = this.occupancy;
    if (!this.brushGrid) {
      this.brushGrid = new Uint8Array(width * height);
    }
    this.setMask(bitmapFromGrid(this.brushGrid, width, height, "brush"));
  }

  private brushStart(e: PointerEvent) {
    if (this.mask.kind !== "bitmap" || !this.occupancy) {
      return;
    }
    this.painting = true;
    this.brushMove(e);
  }

  private brushMove(e: PointerEvent) {
    if (!this.painting || !this.occupancy || !this.brushGrid) {
      return;
    }
    const rect = this.overlay.getBoundingClientRect();
    const x = Math.floor((e.clientX - rect.left) / rect.width * this.occupancy.width);
    const y = Math.floor((e.clientY - rect.top) / rect.height * this.occupancy.height);
    const r = 3;
    for (let dy = -r; dy <= r; dy++) {
      for (let dx = -r; dx <= r; dx++) {
        if (dx * dx + dy * dy > r * r) continue;
        const px = x + dx;
        const py = y + dy;
        if (px >= 0 && px < this.occupancy.width &&
            py >= 0 && py < this.occupancy.height) {
          this.brushGrid[py * this.occupancy.width + px] = 1;
        }
      }
    }
    this.emitBitmap();
  }

  private drawOverlay() {
    if (!this.occupancy) {
      return;
    }
    const { width, height } = this.occupancy;
    const ctx = this.overlay.getContext("2d")!;
    ctx.clearRect(0, 0, width, height);
    const cx = (width - 1) / 2;
    const cy = (height - 1) / 2;
    const data = ctx.createImageData(width, height);
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        if (maskContains(this.mask, x, y, cx, cy)) {
          const i = 4 * (y * width + x);
          data.data[i] = 64;
          data.data[i + 1] = 255;
          data.data[i + 2] = 128;
          data.data[i + 3] = 70;
        }
      }
    }
    ctx.putImageData(data, 0, 0);
  }
}

function slider(min: number, max: number, step: number, value: number,
                label: string) {
  const input = el("input", {
    type: "range", min: String(min), max: String(max),
    step: String(step), value: String(value),
  }) as HTMLInputElement;
  const readout = el("span", {}, String(value));
  input.addEventListener("input", () => { readout.textContent = input.value; });
  const root = el("label", { class: "slider" });
  root.appendChild(el("span", {}, label));
  root.appendChild(input);
  root.appendChild(readout);
  return { root, input };
}

function labelled(text: string, node: HTMLElement) {
  const root = el("label", { class: "labelled" });
  root.appendChild(el("span", {}, text));
  root.appendChild(node);
  return root;
}

// ---------------------------------------------------------------------------

export class NearFieldPanel {
  root: HTMLElement;
  private canvas: HTMLCanvasElement;
  private status: HTMLElement;
  private errorBox: HTMLElement;
  private flight = new SingleFlight();
  private lastRequest: { endpoint: string; body: unknown; response: unknown } | null = null;

  constructor(private api: ApiClient) {
    this.root = el("section", { class: "panel" });
    this.root.appendChild(el("h2", {}, "Near field"));
    this.canvas = el("canvas");
    this.root.appendChild(this.canvas);
    this.status = el("div", { class: "status" });
    this.errorBox = el("div");
    this.root.appendChild(this.status);
    this.root.appendChild(this.errorBox);
    const exportBtn = el("button", {}, "export payload");
    exportBtn.addEventListener("click", () => this.export());
    this.root.appendChild(exportBtn);
  }

  async refresh(state: ViewState) {
    if (!state.datasetId) {
      return;
    }
    this.errorBox.textContent = "";
    try {
      if (state.mode === "render") {
        const body = renderRequestBody(state);
        const endpoint = `/datasets/${state.datasetId}/render`;
        const payload = await this.flight.run(
          (signal) => this.api.render(state.datasetId!, body, signal));
        paintFrame(this.canvas, payload);
        this.status.textContent =
          `${payload.selected_pairs} pairs selected, total ${payload.total}` +
          ` | ${endpoint} mask=${JSON.stringify(body.mask)}`;
        this.lastRequest = { endpoint, body, response: payload };
      } else {
        const body = dpcRequestBody(state);
        const endpoint = `/datasets/${state.datasetId}/dpc`;
        const payload = await this.flight.run(
          (signal) => this.api.dpc(state.datasetId!, body, signal));
        paintDpc(this.canvas, payload);
        this.status.textContent =
          `DPC R/L pairs ${payload.selected_pairs.join("/")}` +
          ` | ${endpoint} min_counts=${state.minCounts}`;
        this.lastRequest = { endpoint, body, response: payload };
      }
    } catch (err) {
      showError(this.errorBox, err);
    }
  }

  private export() {
    if (!this.lastRequest) {
      return;
    }
    const { endpoint, body, response } = this.lastRequest;
    downloadJson("qpcm-payload.json", exportBundle(endpoint, body, response));
  }
}

// ---------------------------------------------------------------------------

export class RoiPanel {
  root: HTMLElement;
  private flight = new SingleFlight();
  private table: HTMLElement;
  private profile: HTMLCanvasElement;
  private errorBox: HTMLElement;

  constructor(private api: ApiClient) {
    this.root = el("section", { class: "panel" });
    this.root.appendChild(el("h2", {}, "Line visibility"));
    this.table = el("div", { class: "vis-table" });
    this.profile = el("canvas", { width: "400", height: "120" });
    this.errorBox = el("div");
    this.root.appendChild(this.table);
    this.root.appendChild(this.profile);
    this.root.appendChild(this.errorBox);
  }

  async refresh(state: ViewState) {
    if (!state.datasetId || !state.roi) {
      return;
    }
    this.errorBox.textContent = "";
    const masks: Array<[string, Mask]> = [["current", state.mask]];
    if (state.mask.kind === "half_plane") {
      masks.push(["complement", complementHalfPlane(state.mask)]);
    }
    masks.push(["full", { kind: "full" }]);
    try {
      const reports = await this.flight.run((signal) => Promise.all(
        masks.map(([, m]) => this.api.visibility(
          state.datasetId!, visibilityRequestBody(state, m), signal))));
      this.show(masks.map(([name], i) => [name, reports[i]]));
    } catch (err) {
      showError(this.errorBox, err);
    }
  }

  private show(rows: Array<[string, VisibilityPayload]>) {
    this.table.textContent = "";
    for (const [name, rep] of rows) {
      this.table.appendChild(
        el("div", {}, `${name}: V = ${rep.v.toFixed(4)} ` +
          `(Imax ${rep.i_max_bar.toFixed(1)}, Imin ${rep.i_min_bar.toFixed(1)})`));
    }
    const [, first] = rows[0];
    this.drawProfile(first.profile, first.peak_positions, first.trough_positions);
  }

  private drawProfile(profile: number[], peaks: number[], troughs: number[]) {
    const ctx = this.profile.getContext("2d")!;
    const w = this.profile.width;
    const h = this.profile.height;
    ctx.clearRect(0, 0, w, h);
    const max = Math.max(...profile, 1);
    ctx.strokeStyle = "#58c";
    ctx.beginPath();
    profile.forEach((v, i) => {
      const x = (i / (profile.length - 1)) * w;
      const y = h - (v / max) * (h - 10) - 5;
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.fillStyle = "#e66";
    for (const p of peaks) {
      ctx.fillRect((p / (profile.length - 1)) * w - 2,
                   h - (profile[p] / max) * (h - 10) - 7, 4, 4);
    }
    ctx.fillStyle = "#6a6";
    for (const t of troughs) {
      ctx.fillRect((t / (profile.length - 1)) * w - 2,
                   h - (profile[t] / max) * (h - 10) - 3, 4, 4);
    }
  }
}
