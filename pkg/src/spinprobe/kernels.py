"""Backend selection for the RK4 chain kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback.  Set SPINPROBE_PURE_PYTHON=1 to force the fallback.
"""
import os

import numpy as np

from . import _rk4_py

try:
    if os.environ.get("SPINPROBE_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _rk4 as _backend
    BACKEND = "cython"
except ImportError:
    _backend = _rk4_py
    BACKEND = "python"

rk4_chain = _backend.rk4_chain
rk4_chain_batch = _backend.rk4_chain_batch
chain_generator = _rk4_py.chain_generator

# above this many steps, squaring the one-step propagator beats stepping
SQUARING_THRESHOLD = 1024


def advance(up, down, p0, h, nsteps):
    """n RK4 steps of size h, by stepping or by propagator squaring for long spans."""
    if nsteps > SQUARING_THRESHOLD:
        return _rk4_py.rk4_chain_power(up, down, p0, h, nsteps)
    return rk4_chain(up, down, p0, h, nsteps)


def advance_batch(up, down, p0, h, nsteps):
    nsteps = np.asarray(nsteps, dtype=np.int64)
    long_ = nsteps > SQUARING_THRESHOLD
    out = np.empty_like(np.asarray(p0, dtype=float))
    if (~long_).any():
        out[~long_] = rk4_chain_batch(up[~long_], down[~long_], p0[~long_], h[~long_], nsteps[~long_])
    for k in np.flatnonzero(long_):
        out[k] = _rk4_py.rk4_chain_power(up[k], down[k], p0[k], h[k], nsteps[k])
    return out


__all__ = ["BACKEND", "SQUARING_THRESHOLD", "rk4_chain", "rk4_chain_batch", "advance",
           "advance_batch", "chain_generator"]
