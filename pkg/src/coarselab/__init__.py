"""coarselab: desk-scale computational coarse geometry.

Finite metric spaces and graphs, uniformly bounded covers and their
nerves with 1-Lipschitz projections, metric simplicial complexes with
Lipschitz-controlled simplicial approximation, the explicit Hilbert
embedding of asymptotic polyhedra, and the spectral/Poincare obstruction
audit showing expander families admit no good coarse embedding.
"""

from coarselab.metric import (
    FiniteMetricSpace,
    Graph,
    PointMap,
    GraphError,
    MetricError,
    ball,
    ball_growth_check,
    graph_metric,
    lipschitz_constant,
)

__all__ = [
    "FiniteMetricSpace",
    "Graph",
    "PointMap",
    "GraphError",
    "MetricError",
    "ball",
    "ball_growth_check",
    "graph_metric",
    "lipschitz_constant",
]

__version__ = "0.1.0"
