"""Backend selection for the hot numerical kernels.

The compiled extension ``d2dsim._kernels`` is used when it imports cleanly;
otherwise (or with ``D2DSIM_PURE_PYTHON=1``) the NumPy versions in
``d2dsim._kernels_py`` are used. Both expose the same three functions.
"""
import logging
import os

import numpy as np

from . import _kernels_py

log = logging.getLogger(__name__)

if os.environ.get("D2DSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        log.debug("compiled kernels unavailable, using pure Python fallback")
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

gammainc_lower = _impl.gammainc_lower
ibp_old_counts = _impl.ibp_old_counts
skellam_pmf = _impl.skellam_pmf


def uniforms_needed(new_counts):
    """Length of the uniform stream ``ibp_old_counts`` consumes."""
    new_counts = np.asarray(new_counts, dtype=np.int64)
    cum = np.cumsum(new_counts, axis=1)
    return int(cum[:, :-1].sum())
