"""HTTP service for interactive aperture exploration over pair datasets.

Datasets are registered pair files held memory-resident as immutable column
arrays; every endpoint is a pure, deterministic function of (dataset, request
body).  Rendering shares the accumulate/dpc/visibility code paths with the
CLI, so server payloads are byte-identical to CLI outputs.
"""

from __future__ import annotations

import base64
import threading
import uuid
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import aperture, image
from .coinc import CoincidencePairStream
from .errors import ConfigError, QpcmError
from .image import LineRoi
from .store import KIND_PAIR, EventFileHeader, read_events


@dataclass
class Dataset:
    pairs: CoincidencePairStream
    header: EventFileHeader
    path: str


class DatasetRegistry:
    def __init__(self, max_pairs: int):
        self.max_pairs = max_pairs
        self._datasets: dict[str, Dataset] = {}
        self._lock = threading.Lock()
        self._loading: dict[str, threading.Event] = {}

    def register(self, path: str) -> str:
        # Single-flight: concurrent registrations of one path coalesce.
        with self._lock:
            for did, ds in self._datasets.items():
                if ds.path == path:
                    return did
            pending = self._loading.get(path)
        if pending is not None:
            pending.wait()
            with self._lock:
                for did, ds in self._datasets.items():
                    if ds.path == path:
                        return did
            raise ConfigError(f"concurrent load of {path} failed")
        with self._lock:
            self._loading[path] = threading.Event()
        try:
            try:
                pairs, header = read_events(path)
            except OSError as e:
                raise ConfigError(f"cannot read {path}: {e}")
            if header.record_kind != KIND_PAIR:
                raise ConfigError(f"{path} is not a pair file")
            if len(pairs) > self.max_pairs:
                raise MemoryBudgetError(
                    f"dataset has {len(pairs)} pairs, budget is {self.max_pairs}"
                )
            did = uuid.uuid5(uuid.NAMESPACE_URL, path).hex
            with self._lock:
                self._datasets[did] = Dataset(pairs=pairs, header=header, path=path)
            return did
        finally:
            with self._lock:
                self._loading.pop(path).set()

    def get(self, did: str) -> Dataset | None:
        with self._lock:
            return self._datasets.get(did)

    def items(self):
        with self._lock:
            return list(self._datasets.items())


class MemoryBudgetError(QpcmError):
    category = "memory_budget"


class RegisterRequest(BaseModel):
    path: str


class RenderRequest(BaseModel):
    mask: dict
    bin: int = 1


class DpcRequest(BaseModel):
    mask_a: dict
    mask_b: dict | None = None
    min_counts: int = 10
    bin: int = 1


class VisibilityRequest(BaseModel):
    mask: dict
    roi: dict
    n_lines: int = 3
    bin: int = 1


def _dataset_meta(did: str, ds: Dataset) -> dict:
    n, f = ds.header.near_region, ds.header.far_region
    return {
        "id": did,
        "path": ds.path,
        "pairs": len(ds.pairs),
        "exposure": ds.header.meta.get("config", {}).get("source", {}).get("duration"),
        "near_region": [n.x0, n.y0, n.x1, n.y1],
        "far_region": [f.x0, f.y0, f.x1, f.y1],
        "time_bin": ds.header.time_bin,
    }


def _far_occupancy(ds: Dataset) -> image.ImageFrame:
    far = ds.header.far_region
    ix = np.round(ds.pairs.far_x).astype(np.int64) - far.x0
    iy = np.round(ds.pairs.far_y).astype(np.int64) - far.y0
    ok = (ix >= 0) & (ix < far.width) & (iy >= 0) & (iy < far.height)
    flat = np.bincount(iy[ok] * far.width + ix[ok], minlength=far.width * far.height)
    return image.ImageFrame(counts=flat.reshape(far.height, far.width).astype(np.int64),
                            exposure=0.0, meta={"view": "far_occupancy"})


def _frame_payload(frame: image.ImageFrame, selected: int) -> dict:
    return {
        "width": frame.counts.shape[1],
        "height": frame.counts.shape[0],
        "counts_pgm_b64": base64.b64encode(image.frame_pgm_bytes(frame)).decode(),
        "total": frame.total,
        "max": int(frame.counts.max()) if frame.counts.size else 0,
        "selected_pairs": selected,
        "meta": frame.meta,
    }


def create_app(max_pairs: int = 50_000_000) -> FastAPI:
    app = FastAPI(title="qpcm aperture service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    registry = DatasetRegistry(max_pairs)
    app.state.registry = registry

    @app.exception_handler(QpcmError)
    async def handle_qpcm_error(request: Request, err: QpcmError):
        status = 507 if isinstance(err, MemoryBudgetError) else 422
        return JSONResponse(status_code=status,
                            content={"category": err.category, "message": str(err)})

    def _get(did: str) -> Dataset:
        ds = registry.get(did)
        if ds is None:
            raise UnknownDataset(did)
        return ds

    class UnknownDataset(Exception):
        def __init__(self, did):
            self.did = did

    @app.exception_handler(UnknownDataset)
    async def handle_unknown(request: Request, err: UnknownDataset):
        return JSONResponse(status_code=404, content={
            "category": "unknown_dataset", "message": f"no dataset {err.did}",
        })

    @app.get("/datasets")
    def list_datasets():
        return [_dataset_meta(did, ds) for did, ds in registry.items()]

    @app.post("/datasets")
    def register_dataset(req: RegisterRequest):
        did = registry.register(req.path)
        ds = _get(did)
        occupancy = _far_occupancy(ds)
        return {
            **_dataset_meta(did, ds),
            "far_occupancy": _frame_payload(occupancy, len(ds.pairs)),
        }

    @app.get("/datasets/{did}")
    def dataset_meta(did: str):
        return _dataset_meta(did, _get(did))

    @app.get("/datasets/{did}/occupancy")
    def dataset_occupancy(did: str):
        ds = _get(did)
        return _frame_payload(_far_occupancy(ds), len(ds.pairs))

    @app.post("/datasets/{did}/render")
    def render(did: str, req: RenderRequest):
        ds = _get(did)
        mask = aperture.mask_from_dict(req.mask)
        selected, n_sel = aperture.select_pairs(ds.pairs, mask, ds.header.far_region)
        frame = image.accumulate(selected, ds.header.near_region, req.bin,
                                 meta={"mask": mask.label or mask.kind})
        return _frame_payload(frame, n_sel)

    @app.post("/datasets/{did}/dpc")
    def dpc(did: str, req: DpcRequest):
        ds = _get(did)
        far = ds.header.far_region
        mask_a = aperture.mask_from_dict(req.mask_a)
        mask_b = aperture.mask_from_dict(req.mask_b) if req.mask_b is not None \
            else aperture.complement(mask_a, far)
        sel_a, n_a = aperture.select_pairs(ds.pairs, mask_a, far)
        sel_b, n_b = aperture.select_pairs(ds.pairs, mask_b, far)
        frame_a = image.accumulate(sel_a, ds.header.near_region, req.bin,
                                   meta={"mask": mask_a.label or mask_a.kind})
        frame_b = image.accumulate(sel_b, ds.header.near_region, req.bin,
                                   meta={"mask": mask_b.label or mask_b.kind})
        result = image.dpc(frame_a, frame_b, min_counts=req.min_counts)
        return {
            "width": result.values.shape[1],
            "height": result.values.shape[0],
            "values_b64": base64.b64encode(
                result.values.astype("<f4").tobytes()).decode(),
            "valid_b64": base64.b64encode(
                np.packbits(result.valid.ravel()).tobytes()).decode(),
            "selected_pairs": [n_a, n_b],
            "meta": result.meta,
        }

    @app.post("/datasets/{did}/visibility")
    def visibility(did: str, req: VisibilityRequest):
        ds = _get(did)
        mask = aperture.mask_from_dict(req.mask)
        selected, _ = aperture.select_pairs(ds.pairs, mask, ds.header.far_region)
        frame = image.accumulate(selected, ds.header.near_region, req.bin,
                                 meta={"mask": mask.label or mask.kind})
        report = image.visibility(frame, LineRoi.from_dict(req.roi), req.n_lines)
        return report.to_dict()

    return app


def serve():
    """Console entry point: qpcm-svc --host --port --budget."""
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="qpcm aperture exploration service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8321)
    parser.add_argument("--budget", type=int, default=50_000_000,
                        help="max memory-resident pairs per dataset")
    args = parser.parse_args()
    uvicorn.run(create_app(args.budget), host=args.host, port=args.port)
