"""Social-network-aware D2D traffic offloading simulator and tail analysis."""
from .kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
