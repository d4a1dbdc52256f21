"""Pure numpy implementations of the hot kernels.

Each function here has a twin with the same name and signature in the
compiled ``_kernels`` extension. Integer outputs must match exactly and float outputs bit for bit.
"""
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(key, start, n):
    """Counter-based uniforms in [0, 1) for event indices ``start .. start+n-1``."""
    idx = np.arange(start, start + n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (idx + np.uint64(1)) * GOLDEN
        z = _mix(z)
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def sample_categorical(u, cdf):
    """Inverse-CDF draw; ``cdf`` is nondecreasing with ``cdf[-1] == 1``."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    out = np.searchsorted(cdf, u, side="right").astype(np.int64)
    np.minimum(out, len(cdf) - 1, out=out)
    return out


def sprt_scan(increments, upper, lower):
    """Cumulative log-likelihood ratio and the first boundary crossing.

    Returns ``(trajectory, stop, decision)`` where ``stop`` is the 0-based
    event index of the first crossing (-1 if none) and ``decision`` is +1 for
    the upper boundary, -1 for the lower one and 0 when undecided.
    """
    inc = np.ascontiguousarray(increments, dtype=np.float64)
    traj = np.cumsum(inc)
    hit = np.flatnonzero((traj >= upper) | (traj <= lower))
    if hit.size == 0:
        return traj, -1, 0
    stop = int(hit[0])
    return traj, stop, 1 if traj[stop] >= upper else -1


def effect_grid_search(effects, r_a, r_b, eps):
    """First grid effect that answers 1 on state ``a`` and 0 on state ``b``.

    ``effects`` rows are ``(e0, ex, ey, ez)`` for ``E = e0*I + e.sigma`` and
    ``r_a``, ``r_b`` are Bloch vectors, so ``Tr(E rho) = e0 + e.r``. The
    complementary orientation (1 on ``b``, 0 on ``a``) is accepted too.
    Returns the row index or -1.
    """
    effects = np.ascontiguousarray(effects, dtype=np.float64)
    ta = effects[:, 0] + effects[:, 1:] @ np.asarray(r_a, dtype=np.float64)
    tb = effects[:, 0] + effects[:, 1:] @ np.asarray(r_b, dtype=np.float64)
    ok = ((np.abs(ta - 1.0) <= eps) & (np.abs(tb) <= eps)) | (
        (np.abs(ta) <= eps) & (np.abs(tb - 1.0) <= eps)
    )
    hit = np.flatnonzero(ok)
    return int(hit[0]) if hit.size else -1
