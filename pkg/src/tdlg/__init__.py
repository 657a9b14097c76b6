"""Time-decayed line graph embeddings for continuous-time temporal networks."""

from .graph import (
    EdgeListError,
    IncidenceView,
    TemporalEdge,
    TemporalGraph,
    build_incidence,
    load_dataset,
    load_edge_list,
    bundled_manifest,
    load_manifest,
    time_std,
)
from .linegraph import (
    TdlgConfig,
    build_cross_tdlg,
    build_tdlg,
    normalize,
)

__version__ = "0.1.0"
