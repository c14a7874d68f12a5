"""Pure numpy fallback for the compiled RK4 chain stepping."""
import numpy as np


def chain_generator(up, down):
    up = np.asarray(up, dtype=float)
    down = np.asarray(down, dtype=float)
    n = up.size + 1
    g = np.zeros((n, n))
    idx = np.arange(n - 1)
    g[idx + 1, idx] = up
    g[idx, idx + 1] = down
    g[idx, idx] -= up
    g[idx + 1, idx + 1] -= down
    return g


def rk4_propagator(g, h):
    """One classical RK4 step for dP/dt = G P, written as a matrix."""
    a = h * g
    a2 = a @ a
    a3 = a2 @ a
    return np.eye(len(g)) + a + a2 / 2.0 + a3 / 6.0 + a3 @ a / 24.0


def rk4_chain(up, down, p0, h, nsteps):
    m = rk4_propagator(chain_generator(up, down), h)
    p = np.array(p0, dtype=float, copy=True)
    for _ in range(int(nsteps)):
        p = m @ p
    return p


def rk4_chain_batch(up, down, p0, h, nsteps):
    p0 = np.asarray(p0, dtype=float)
    out = np.empty_like(p0)
    for k in range(p0.shape[0]):
        out[k] = rk4_chain(up[k], down[k], p0[k], h[k], nsteps[k])
    return out


def _fix_column_sums(m):
    # columns of an exact RK4 propagator sum to one; rebuild the diagonal from that
    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, 1.0 - m.sum(axis=0))
    return m


def rk4_chain_power(up, down, p0, h, nsteps):
    """Same n fixed RK4 steps as rk4_chain, applied as M**n by repeated squaring."""
    m = _fix_column_sums(rk4_propagator(chain_generator(up, down), h))
    p = np.array(p0, dtype=float, copy=True)
    n = int(nsteps)
    while n:
        if n & 1:
            p = m @ p
        n >>= 1
        if n:
            m = _fix_column_sums(m @ m)
    return p
