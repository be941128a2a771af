"""Auricular sensing toolkit.

Curvature-aware electrode sensing-area design on triangle meshes, a
deterministic multiplexed-acquisition simulator, and the spatiotemporal
signal-analysis chain (normalization, contour interpolation, PCA, k-means
with elbow/silhouette, correlation statistics).
"""

from ._accel import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
