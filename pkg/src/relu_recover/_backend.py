"""Pick the compiled kernels when available, numpy otherwise.

Set ``RELU_RECOVER_PURE=1`` to force the numpy path.  Results of the two
backends agree to rounding but are not bit-identical to each other.
"""

import os

from . import _fallback

NAME = "numpy"
loss_and_grad = _fallback.loss_and_grad
loss_only = _fallback.loss_only

if os.environ.get("RELU_RECOVER_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        NAME = "cython"
        loss_and_grad = _kernels.loss_and_grad
        loss_only = _kernels.loss_only
