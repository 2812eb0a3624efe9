"""Overlay-layer construction on random geometric networks via guided random walks.

The pipeline in one line: drop n nodes uniformly in the unit square, connect
pairs within radius r (unit disk graph), launch one walk per initiator and
grow them until every walk has intersected another one. The union of the
recruited nodes is the active path of the overlay layer; nodes recruited by
two or more walks act as brokers. Directional walks pick the candidate with
the fewest already-marked neighbors, which straightens the walk without any
coordinate information; pure random walks are the baseline.
"""

from .geom_graph import (
    GraphGenConfig,
    Network,
    NotConnected,
    generate_network,
    load_network,
    save_network,
)
from .metrics import BoxStats, active_path_size, box_stats, depth
from .overlay import (
    BuildFailed,
    OverlayBuildConfig,
    OverlayResult,
    build_overlay,
)
from .walk_engine import CostStrategy, default_step_budget, parse_strategy

__version__ = "0.1.0"

__all__ = [
    "BoxStats",
    "BuildFailed",
    "CostStrategy",
    "GraphGenConfig",
    "Network",
    "NotConnected",
    "OverlayBuildConfig",
    "OverlayResult",
    "active_path_size",
    "box_stats",
    "build_overlay",
    "default_step_budget",
    "depth",
    "generate_network",
    "load_network",
    "parse_strategy",
    "save_network",
    "__version__",
]
