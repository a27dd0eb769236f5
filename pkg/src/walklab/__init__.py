"""walklab: a desk-scale planar-walker lab for autonomous, safety-constrained
locomotion learning — multi-task scheduling plus constrained soft actor-critic
against a deterministic seeded simulator."""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
