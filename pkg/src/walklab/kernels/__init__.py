"""Kernel backend selection.

The compiled core is preferred when present; set WALKLAB_KERNELS=python (or
=compiled) to force a backend. Both backends implement the ABI documented
in `pykernels` and agree to float64 rounding noise, so everything above
this layer is backend-agnostic.
"""

import os

from . import pykernels

_choice = os.environ.get("WALKLAB_KERNELS", "auto").lower()

if _choice in ("python", "py"):
    impl = pykernels
elif _choice in ("compiled", "cy", "c"):
    from . import _core as impl  # hard import error on purpose when forced
else:
    try:
        from . import _core as impl
    except ImportError:
        impl = pykernels

BACKEND = impl.BACKEND

mlp_forward = impl.mlp_forward
mlp_forward_cached = impl.mlp_forward_cached
mlp_backward = impl.mlp_backward
mlp_backward_input = impl.mlp_backward_input
adam_step_inplace = impl.adam_step_inplace
polyak_inplace = impl.polyak_inplace
head_sample = impl.head_sample
head_sample_grad = impl.head_sample_grad
soft_backup = impl.soft_backup
value_backup = impl.value_backup
mse_upstream = impl.mse_upstream
