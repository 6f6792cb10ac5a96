"""Two-echelon (RDC/FDC) assortment and inventory allocation toolkit."""
from .kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
