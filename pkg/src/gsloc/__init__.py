"""Group-sparse WLAN fingerprint localization, outlier detection, and
radio-map interpolation on synthetic scenes."""

from .ap_selection import (
    SelectionMatrix,
    apply_selection,
    fisher_scores,
    select_fisher,
    select_strongest,
)
from .clustering import (
    CoverageProfile,
    Grouping,
    build_coverage,
    hamming,
    layered_cluster,
    online_coverage,
)
from .errors import DataError, GslocError, SolverDivergenceError
from .evaluation import (
    ErrorReport,
    desk_scene,
    evaluate_localization,
    mae,
    reconstruction_error,
    run_experiment,
)
from .interpolation import (
    SamplingPlan,
    interpolate_ap,
    interpolate_map,
    make_sampling,
    periodic_pathology_check,
    serpentine_order,
)
from .localization import LocalizationResult, LocalizerConfig, centroid, cs_baseline, localize
from .radio_map import (
    SENTINEL_DBM,
    FingerprintTensor,
    OnlineMeasurement,
    RadioMap,
    ReferencePoint,
    build_radio_map,
    load_online,
    load_radio_map,
    load_tensor,
    save_online,
    save_radio_map,
    save_tensor,
)
from .simulator import OutlierSpec, SyntheticScene, generate_online, generate_tensor
from .solver import (
    LinearDesign,
    SglProblem,
    SglSolution,
    kkt_residual,
    objective,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "CoverageProfile",
    "DataError",
    "ErrorReport",
    "FingerprintTensor",
    "Grouping",
    "GslocError",
    "LinearDesign",
    "LocalizationResult",
    "LocalizerConfig",
    "OnlineMeasurement",
    "OutlierSpec",
    "RadioMap",
    "ReferencePoint",
    "SENTINEL_DBM",
    "SamplingPlan",
    "SelectionMatrix",
    "SglProblem",
    "SglSolution",
    "SolverDivergenceError",
    "SyntheticScene",
    "apply_selection",
    "build_coverage",
    "build_radio_map",
    "centroid",
    "cs_baseline",
    "desk_scene",
    "evaluate_localization",
    "fisher_scores",
    "generate_online",
    "generate_tensor",
    "hamming",
    "interpolate_ap",
    "interpolate_map",
    "kkt_residual",
    "layered_cluster",
    "load_online",
    "load_radio_map",
    "load_tensor",
    "localize",
    "mae",
    "make_sampling",
    "objective",
    "online_coverage",
    "periodic_pathology_check",
    "reconstruction_error",
    "run_experiment",
    "save_online",
    "save_radio_map",
    "save_tensor",
    "select_fisher",
    "select_strongest",
    "serpentine_order",
    "solve",
]
