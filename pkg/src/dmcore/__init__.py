"""Coresets, robust coresets and centroid sets for (k, z)-clustering in doubling metrics."""

from .errors import GuardExceeded, InvariantViolation, ValidationError
from .metric import (CostQuery, MetricSpace, estimate_doubling_dim, from_coords, from_matrix,
                     hard_instance, kdist, kdist_trimmed, load_metric)
from .nets import (NetHierarchy, NetTree, build_decomposition_tree, build_hierarchy,
                   build_simple_tree, parent_at)
from .smoothing import SmoothedMetric, ball_delta, delta, smoothing_level
from .coreset import WeightedCoreset, build_coreset, evaluate_coreset

__version__ = "0.1.0"
