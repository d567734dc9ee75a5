"""Semi-supervised anomaly monitor for cyclic stamping-stroke signals."""

__version__ = "0.1.0"

from ._kernels import backend_name

__all__ = ["backend_name", "__version__"]
