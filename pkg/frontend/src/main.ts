// Entry point: wires the toolbar and panels to the aperture service. The
// service URL defaults to the local dev port and can be overridden with
// ?api=http://host:port in the page URL.

import { ApiClient, DatasetMeta, SingleFlight, isAbort } from "./api.js";
import { FarFieldPanel, NearFieldPanel, RoiPanel, el, showError } from "./panels.js";
import { ViewState, initialState } from "./state.js";

function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  return param ?? "http://127.0.0.1:8321";
}

class App {
  private api = new ApiClient(apiBase());
  private state: ViewState = initialState();
  private farPanel = new FarFieldPanel();
  private nearPanel: NearFieldPanel;
  private roiPanel: RoiPanel;
  private datasetSelect: HTMLSelectElement;
  private errorBox = el("div");
  private listFlight = new SingleFlight();

  constructor(toolbar: HTMLElement, panels: HTMLElement) {
    this.nearPanel = new NearFieldPanel(this.api);
    this.roiPanel = new RoiPanel(this.api);

    this.datasetSelect = el("select") as HTMLSelectElement;
    this.datasetSelect.addEventListener("change", () => {
      this.state.datasetId = this.datasetSelect.value || null;
      void this.loadOccupancy();
      void this.nearPanel.refresh(this.state);
    });
    const pathInput = el("input", {
      type: "text", placeholder: "/path/to/pairs.qpcm",
    }) as HTMLInputElement;
    const registerBtn = el("button", {}, "register");
    registerBtn.addEventListener("click", () => {
      void this.register(pathInput.value.trim());
    });
    const refreshBtn = el("button", {}, "refresh list");
    refreshBtn.addEventListener("click", () => { void this.loadList(); });

    const modeToggle = el("select") as HTMLSelectElement;
    modeToggle.appendChild(el("option", { value: "render" }, "counts"));
    modeToggle.appendChild(el("option", { value: "dpc" }, "DPC"));
    modeToggle.addEventListener("change", () => {
      this.state.mode = modeToggle.value as ViewState["mode"];
      void this.nearPanel.refresh(this.state);
    });
    const minCounts = el("input", {
      type: "number", min: "0", value: String(this.state.minCounts),
    }) as HTMLInputElement;
    minCounts.addEventListener("change", () => {
      this.state.minCounts = Number(minCounts.value);
      if (this.state.mode === "dpc") {
        void this.nearPanel.refresh(this.state);
      }
    });
    const roiInput = el("input", {
      type: "text", placeholder: "ROI x0,y0,x1,y1,width",
    }) as HTMLInputElement;
    const nLines = el("input", {
      type: "number", min: "1", value: "3", title: "n_lines",
    }) as HTMLInputElement;
    const roiBtn = el("button", {}, "measure V");
    roiBtn.addEventListener("click", () => {
      const parts = roiInput.value.split(",").map(Number);
      if (parts.length === 5 && parts.every((p) => Number.isFinite(p))) {
        this.state.roi = {
          x0: parts[0], y0: parts[1], x1: parts[2], y1: parts[3],
          width: parts[4], nLines: Number(nLines.value),
        };
        void this.roiPanel.refresh(this.state);
      }
    });

    toolbar.appendChild(pathInput);
    toolbar.appendChild(registerBtn);
    toolbar.appendChild(this.datasetSelect);
    toolbar.appendChild(refreshBtn);
    toolbar.appendChild(modeToggle);
    toolbar.appendChild(el("span", {}, "min_counts"));
    toolbar.appendChild(minCounts);
    toolbar.appendChild(roiInput);
    toolbar.appendChild(nLines);
    toolbar.appendChild(roiBtn);
    toolbar.appendChild(this.errorBox);

    this.farPanel.onMaskChange = (mask) => {
      this.state.mask = mask;
      void this.nearPanel.refresh(this.state);
    };
    panels.appendChild(this.farPanel.root);
    panels.appendChild(this.nearPanel.root);
    panels.appendChild(this.roiPanel.root);
  }

  async start() {
    await this.loadList();
  }

  private async loadList() {
    try {
      const datasets = await this.listFlight.run(
        (signal) => this.api.listDatasets(signal));
      this.fillSelect(datasets);
    } catch (err) {
      if (!isAbort(err)) {
        showError(this.errorBox, err);
      }
    }
  }

  private fillSelect(datasets: DatasetMeta[]) {
    const current = this.state.datasetId;
    this.datasetSelect.textContent = "";
    this.datasetSelect.appendChild(el("option", { value: "" }, "-- dataset --"));
    for (const ds of datasets) {
      const label = `${ds.path} (${ds.pairs} pairs)`;
      this.datasetSelect.appendChild(el("option", { value: ds.id }, label));
    }
    if (current && datasets.some((d) => d.id === current)) {
      this.datasetSelect.value = current;
    }
  }

  private async register(path: string) {
    if (!path) {
      return;
    }
    this.errorBox.textContent = "";
    try {
      const ds = await this.api.registerDataset(path);
      await this.loadList();
      this.datasetSelect.value = ds.id;
      this.state.datasetId = ds.id;
      this.farPanel.setOccupancy(ds.far_occupancy);
      await this.nearPanel.refresh(this.state);
    } catch (err) {
      showError(this.errorBox, err);
    }
  }

  private async loadOccupancy() {
    if (!this.state.datasetId) {
      return;
    }
    try {
      const payload = await this.api.occupancy(this.state.datasetId);
      this.farPanel.setOccupancy(payload);
    } catch (err) {
      showError(this.errorBox, err);
    }
  }
}

const toolbar = document.getElementById("toolbar");
const panels = document.getElementById("panels");
if (toolbar && panels) {
  const app = new App(toolbar, panels);
  void app.start();
}
