"""Command-line pipeline driver.

Each stage reads/writes the binary event-store formats and drops a manifest
(inputs, config hash, seed, versions) next to its output.  Report commands
write delimited output (CSV/PGM) plus a rendered PNG figure.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import click
import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__, aperture, image, store  # noqa: E402
from .coinc import dt_histogram  # noqa: E402
from .config import RunConfig, load_run_config  # noqa: E402
from .errors import ConfigError, QpcmError  # noqa: E402
from .image import LineRoi  # noqa: E402
from .pipeline import centroid_raw, pair_photons, run_pipeline, simulate_raw  # noqa: E402

CONFIG_DIR_ENV = "QPCM_CONFIG_DIR"


def _resolve_config(path):
    if path is None:
        return None
    if not os.path.exists(path):
        candidate = Path(os.environ.get(CONFIG_DIR_ENV, ".")) / path
        if candidate.exists():
            return str(candidate)
    return path


def _load_config(path) -> RunConfig:
    resolved = _resolve_config(path)
    if resolved is None or not os.path.exists(resolved):
        raise ConfigError(f"config file not found: {path}")
    return load_run_config(resolved)


def _config_hash(cfg: RunConfig | None) -> str:
    if cfg is None:
        return ""
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(out_path, command, inputs, cfg, extra=None):
    manifest = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "config_hash": _config_hash(cfg),
        "seed": cfg.seed if cfg is not None else None,
        "versions": {"qpcm": __version__, "numpy": np.__version__},
    }
    if extra:
        manifest.update(extra)
    with open(f"{out_path}.manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header_for(cfg: RunConfig, kind: int) -> store.EventFileHeader:
    return store.EventFileHeader(
        record_kind=kind,
        sensor_size=cfg.optics.sensor_size,
        time_bin=cfg.camera.time_bin,
        near_region=cfg.optics.near_region,
        far_region=cfg.optics.far_region,
        meta={"config": cfg.to_dict()},
    )


def _save_frame(frame: image.ImageFrame, out_stem: str, title: str):
    image.frame_to_pgm(frame, f"{out_stem}.pgm")
    image.frame_to_csv(frame, f"{out_stem}.csv")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(frame.counts, origin="lower", cmap="inferno")
    ax.set_title(title)
    ax.set_xlabel("x (binned px)")
    ax.set_ylabel("y (binned px)")
    fig.colorbar(ax.images[0], ax=ax, label="coincidence counts")
    fig.savefig(f"{out_stem}.png", dpi=120)
    plt.close(fig)


@click.group()
def main():
    """Correlated photon-pair phase-contrast microscope toolkit."""


def _fail(err: QpcmError):
    click.echo(json.dumps({"category": err.category, "message": str(err)}), err=True)
    sys.exit(1)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except QpcmError as err:
            _fail(err)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@main.command()
@click.option("--config", "config_path", required=True, help="run configuration YAML")
@click.option("--out", "out_path", required=True, help="output raw event file")
@click.option("--workers", default=os.cpu_count() or 1, show_default="cores")
@_guarded
def simulate(config_path, out_path, workers):
    """Simulate the microscope and write a raw camera event file."""
    cfg = _load_config(config_path)
    raw, stats = simulate_raw(cfg, workers=workers)
    store.write_events(out_path, raw, _header_for(cfg, store.KIND_RAW))
    _write_manifest(out_path, "simulate", [config_path], cfg, {"stats": stats})
    click.echo(f"wrote {len(raw)} raw events to {out_path}")


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--in", "in_path", required=True, help="raw event file")
@click.option("--out", "out_path", required=True, help="output photon event file")
@_guarded
def centroid(config_path, in_path, out_path):
    """Cluster and centroid a raw event file into photon events."""
    raw, header = store.read_events(in_path)
    cfg = _load_config(config_path) if config_path else _cfg_from_header(header)
    photons, stats = centroid_raw(raw, cfg)
    out_header = _header_for(cfg, store.KIND_PHOTON)
    store.write_events(out_path, photons, out_header)
    _write_manifest(out_path, "centroid", [in_path], cfg, {"stats": stats})
    click.echo(f"wrote {len(photons)} photon events to {out_path}")


def _cfg_from_header(header: store.EventFileHeader) -> RunConfig:
    meta_cfg = header.meta.get("config")
    if meta_cfg is not None:
        return RunConfig.from_dict(meta_cfg)
    cfg = RunConfig()
    cfg.optics.sensor_size = header.sensor_size
    cfg.optics.near_region = header.near_region
    cfg.optics.far_region = header.far_region
    cfg.camera.time_bin = header.time_bin
    cfg.camera.sensor_size = header.sensor_size
    return cfg


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--in", "in_path", required=True, help="photon event file")
@click.option("--out", "out_path", required=True, help="output pair file")
@click.option("--hist", "hist_path", default=None,
              help="dt histogram CSV (default: <out>_dt.csv)")
@_guarded
def pair(config_path, in_path, out_path, hist_path):
    """Match near/far photon events into coincidence pairs."""
    photons, header = store.read_events(in_path)
    cfg = _load_config(config_path) if config_path else _cfg_from_header(header)
    pairs, stats = pair_photons(photons, cfg)
    store.write_events(out_path, pairs, _header_for(cfg, store.KIND_PAIR))
    hist_path = hist_path or f"{Path(out_path).with_suffix('')}_dt.csv"
    bins, counts = dt_histogram(pairs, cfg.coincidence.window)
    with open(hist_path, "w") as fh:
        fh.write("bin_start_ns,count\n")
        for b, c in zip(bins, counts):
            fh.write(f"{b:.9g},{c}\n")
    _write_manifest(out_path, "pair", [in_path], cfg, {"stats": stats})
    click.echo(f"wrote {len(pairs)} pairs to {out_path} "
               f"(singles near/far: {stats['singles_near']}/{stats['singles_far']})")


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--in", "in_path", required=True, help="pair file")
@click.option("--mask", "mask_path", required=True, help="aperture mask JSON")
@click.option("--out", "out_stem", required=True, help="output stem (.pgm/.csv/.png)")
@click.option("--bin", "bin_factor", default=1, show_default=True)
@_guarded
def render(config_path, in_path, mask_path, out_stem, bin_factor):
    """Accumulate the aperture-selected coincidence image."""
    pairs, header = store.read_events(in_path)
    cfg = _load_config(config_path) if config_path else _cfg_from_header(header)
    mask = aperture.load_mask(mask_path)
    selected, n_sel = aperture.select_pairs(pairs, mask, cfg.optics.far_region)
    frame = image.accumulate(selected, cfg.optics.near_region, bin_factor,
                             exposure=cfg.source.duration,
                             meta={"mask": mask.label or mask.kind})
    _save_frame(frame, out_stem, f"coincidence image [{mask.label or mask.kind}]")
    _write_manifest(out_stem, "render", [in_path, mask_path], cfg,
                    {"selected_pairs": n_sel, "total_counts": frame.total})
    click.echo(f"selected {n_sel}/{len(pairs)} pairs, total counts {frame.total}")


@main.command(name="dpc")
@click.option("--config", "config_path", default=None)
@click.option("--in", "in_path", required=True, help="pair file")
@click.option("--mask-a", "mask_a_path", required=True, help="aperture mask JSON (R)")
@click.option("--mask-b", "mask_b_path", default=None,
              help="aperture mask JSON (L); default: complement of mask A")
@click.option("--out", "out_stem", required=True, help="output stem (.csv/.pgm/.png)")
@click.option("--min-counts", default=10, show_default=True)
@click.option("--bin", "bin_factor", default=1, show_default=True)
@_guarded
def dpc_cmd(config_path, in_path, mask_a_path, mask_b_path, out_stem,
            min_counts, bin_factor):
    """Differential phase contrast image from two complementary apertures."""
    pairs, header = store.read_events(in_path)
    cfg = _load_config(config_path) if config_path else _cfg_from_header(header)
    far = cfg.optics.far_region
    mask_a = aperture.load_mask(mask_a_path)
    mask_b = aperture.load_mask(mask_b_path) if mask_b_path \
        else aperture.complement(mask_a, far)
    sel_a, _ = aperture.select_pairs(pairs, mask_a, far)
    sel_b, _ = aperture.select_pairs(pairs, mask_b, far)
    frame_a = image.accumulate(sel_a, cfg.optics.near_region, bin_factor,
                               meta={"mask": mask_a.label or mask_a.kind})
    frame_b = image.accumulate(sel_b, cfg.optics.near_region, bin_factor,
                               meta={"mask": mask_b.label or mask_b.kind})
    result = image.dpc(frame_a, frame_b, min_counts=min_counts)
    image.dpc_to_csv(result, f"{out_stem}.csv")
    image.dpc_to_pgm(result, f"{out_stem}.pgm")
    fig, ax = plt.subplots(figsize=(5, 5))
    im = ax.imshow(result.values, origin="lower", cmap="RdBu_r", vmin=-2, vmax=2)
    ax.set_title("DPC")
    fig.colorbar(im, ax=ax, label="2(R-L)/(R+L)")
    fig.savefig(f"{out_stem}.png", dpi=120)
    plt.close(fig)
    _write_manifest(out_stem, "dpc", [in_path, mask_a_path, mask_b_path or ""], cfg,
                    {"min_counts": min_counts})
    click.echo(f"wrote DPC frame to {out_stem}.csv "
               f"({int(result.valid.sum())} valid pixels)")


@main.command(name="visibility")
@click.option("--config", "config_path", default=None)
@click.option("--in", "in_path", required=True, help="pair file")
@click.option("--mask", "mask_path", required=True, help="aperture mask JSON")
@click.option("--roi", "roi_spec", required=True,
              help="line ROI: x0,y0,x1,y1,width in frame pixels")
@click.option("--n-lines", default=3, show_default=True)
@click.option("--out", "out_stem", required=True, help="output stem (.json/.csv/.png)")
@click.option("--bin", "bin_factor", default=1, show_default=True)
@_guarded
def visibility_cmd(config_path, in_path, mask_path, roi_spec, n_lines,
                   out_stem, bin_factor):
    """Line visibility of an aperture-selected coincidence image."""
    pairs, header = store.read_events(in_path)
    cfg = _load_config(config_path) if config_path else _cfg_from_header(header)
    mask = aperture.load_mask(mask_path)
    selected, _ = aperture.select_pairs(pairs, mask, cfg.optics.far_region)
    frame = image.accumulate(selected, cfg.optics.near_region, bin_factor,
                             meta={"mask": mask.label or mask.kind})
    parts = roi_spec.split(",")
    if len(parts) not in (4, 5):
        raise ConfigError(f"--roi expects x0,y0,x1,y1[,width], got {roi_spec!r}")
    roi = LineRoi(*(float(p) for p in parts))
    report = image.visibility(frame, roi, n_lines=n_lines)
    with open(f"{out_stem}.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    image.profile_to_csv(report, f"{out_stem}_profile.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.profile, label="integrated counts")
    ax.plot(report.peak_positions, report.profile[report.peak_positions], "v",
            label="peaks")
    ax.plot(report.trough_positions, report.profile[report.trough_positions], "^",
            label="troughs")
    ax.set_xlabel("position along ROI (px)")
    ax.set_ylabel("integrated counts")
    ax.set_title(f"V = {report.v:.3f}")
    ax.legend()
    fig.savefig(f"{out_stem}.png", dpi=120)
    plt.close(fig)
    _write_manifest(out_stem, "visibility", [in_path, mask_path], cfg,
                    {"v": report.v})
    click.echo(f"V = {report.v:.4f} (Imax {report.i_max_bar:.1f}, "
               f"Imin {report.i_min_bar:.1f})")


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--param", default="efficiency", show_default=True,
              help="camera parameter to sweep")
@click.option("--values", required=True, help="comma-separated values")
@click.option("--out", "out_path", required=True, help="output CSV")
@click.option("--workers", default=os.cpu_count() or 1, show_default="cores")
@_guarded
def sweep(config_path, param, values, out_path, workers):
    """Re-run detection + pairing over a parameter grid and tabulate pair counts."""
    base = _load_config(config_path)
    if not hasattr(base.camera, param):
        raise ConfigError(f"camera has no parameter {param!r}")
    rows = []
    for val in (float(v) for v in values.split(",")):
        cfg = load_run_config(_resolve_config(config_path))
        setattr(cfg.camera, param, val)
        cfg.validate()
        result = run_pipeline(cfg, workers=workers)
        rows.append((val, result.stats["coinc_pairs"],
                     result.stats["coinc_singles_near"],
                     result.stats["coinc_singles_far"]))
        click.echo(f"{param}={val}: {rows[-1][1]} pairs")
    with open(out_path, "w") as fh:
        fh.write(f"{param},pairs,singles_near,singles_far\n")
        for row in rows:
            fh.write(f"{row[0]:.9g},{row[1]},{row[2]},{row[3]}\n")
    vals = np.array([r[0] for r in rows])
    counts = np.array([r[1] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(vals, counts, "o-")
    ax.set_xlabel(param)
    ax.set_ylabel("coincidence pairs")
    if np.all(counts > 0):
        slope = np.polyfit(np.log(vals), np.log(counts), 1)[0]
        ax.set_title(f"log-log slope = {slope:.3f}")
    fig.savefig(f"{Path(out_path).with_suffix('')}.png", dpi=120)
    plt.close(fig)
    _write_manifest(out_path, "sweep", [config_path], base,
                    {"param": param, "values": [r[0] for r in rows]})


if __name__ == "__main__":
    main()
