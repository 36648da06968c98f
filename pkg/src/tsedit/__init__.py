"""Guided-sampling engine for editing diffusion-generated time series.

Point anchors with confidences, trend curves, and segment statistics are
imposed on samples during reverse diffusion only; the trained model is
never touched.
"""

__version__ = "0.1.0"

from tsedit.backend import kernels  # noqa: F401  (backend selected at import)
