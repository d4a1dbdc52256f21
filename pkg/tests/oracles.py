"""Independent reference computations used as test oracles.

Everything here is written with explicit index loops or textbook formulas and
shares no code with the package.
"""
import itertools

import numpy as np
import scipy.linalg

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def counter_uniform(seed, stream, i):
    key = splitmix(splitmix(seed) + (stream + 1) * GOLDEN)
    return (splitmix(key + (i + 1) * GOLDEN) >> 11) * 2.0**-53


def loop_partial_trace(rho, dims, keep):
    """Reduced matrix by summing over every traced multi-index."""
    n = len(dims)
    traced = [k for k in range(n) if k not in keep]
    kd = [dims[k] for k in keep]
    td = [dims[k] for k in traced]
    dk = int(np.prod(kd)) if kd else 1
    out = np.zeros((dk, dk), dtype=complex)
    for a in itertools.product(*[range(d) for d in kd]):
        for b in itertools.product(*[range(d) for d in kd]):
            s = 0j
            for t in itertools.product(*[range(d) for d in td]):
                ia = [0] * n
                ib = [0] * n
                for pos, k in enumerate(keep):
                    ia[k], ib[k] = a[pos], b[pos]
                for pos, k in enumerate(traced):
                    ia[k] = ib[k] = t[pos]
                s += rho[np.ravel_multi_index(ia, dims), np.ravel_multi_index(ib, dims)]
            out[np.ravel_multi_index(a, kd) if kd else 0, np.ravel_multi_index(b, kd) if kd else 0] = s
    return out


def charpoly_eigenvalues(m):
    """Eigenvalues as roots of the characteristic polynomial, sorted descending."""
    roots = np.roots(np.poly(np.asarray(m)))
    return np.sort(roots.real)[::-1]


def sqrtm_trace_distance(a, b):
    d = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.trace(scipy.linalg.sqrtm(d.conj().T @ d)).real)


def measurement_ket(a1, a2):
    """``a1|s1 O1> + a2|s2 O2>`` in the S (x) O product basis."""
    return np.array([a1, 0, 0, a2], dtype=complex)


def mixed_density(a1, a2):
    return np.diag([abs(a1) ** 2, 0, 0, abs(a2) ** 2]).astype(complex)


def binomial_pmf(n, k, p):
    from math import comb

    return comb(n, k) * p**k * (1 - p) ** (n - k)
