"""Correlated photon-pair phase-contrast microscope simulator and
reconfigurable coincidence-image post-processor."""

__version__ = "0.1.0"

from .aperture import ApertureMask, complement, contains, select_pairs
from .centroid import PhotonEventStream, cluster_and_centroid
from .coinc import CoincidenceConfig, CoincidencePairStream, accidental_rate, pair_events
from .config import RunConfig, load_run_config
from .detector import CameraConfig, RawEventStream, detect, generate_darks
from .image import DpcFrame, ImageFrame, LineRoi, VisibilityReport, accumulate, dpc, visibility
from .optics import OpticsConfig, Region, map_far, map_near, objective_accept
from .pairgen import PairStream, SourceConfig, generate_pairs
from .pipeline import PipelineResult, run_pipeline, simulate_raw
from .sample import TargetMap, TargetSpec, build_target, interact, phase_from_etch
