"""Environment-induced suppression of branch coherence.

Attaching ``N_E`` environment qubits that record the pointer branch
multiplies the coherence between the two branches by the product of the
environment overlaps ``<E^j_2|E^j_1>``; the branch weights are untouched.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .chain import EnvironmentSpec, SpinState, extend_with_environment, measurement_state
from .qcore import DensityMatrix, Ket, partial_trace
from .restrict import branch_vectors
from .rng import as_rng

BARE_FRACTION = 0.1


def decohere_pointer(psi_ms: Ket, env: EnvironmentSpec, pointer: str = "O") -> DensityMatrix:
    """State of the measuring system after the environment is traced out."""
    extended = extend_with_environment(psi_ms, env, pointer)
    return partial_trace(extended, psi_ms.layout.labels)


def _unit_branches(psi_ms: Ket, pointer: str) -> list:
    """Branch vectors normalized with their largest component real positive.

    Returns ``(unit_vector, amplitude)`` pairs, with ``amplitude`` equal to
    ``a_i`` when the branch is a product basis vector.
    """
    out = []
    for b in branch_vectors(psi_ms, pointer):
        n = np.linalg.norm(b)
        if n == 0:
            out.append((None, 0j))
            continue
        k = int(np.argmax(np.abs(b)))
        u = b / n / (b[k] / abs(b[k]))
        out.append((u, complex(np.vdot(u, b))))
    return out


def branch_coherence(rho: DensityMatrix, psi_ms: Ket, pointer: str = "O") -> complex:
    """Element of ``rho`` between the first two branches of ``psi_ms``.

    For ``psi_ms = a1|s1 O1> + a2|s2 O2>`` this is ``<s1 O1|rho|s2 O2>``, and
    for a bare pointer it is ``rho[0, 1]``.
    """
    (u1, _), (u2, _) = _unit_branches(psi_ms, pointer)[:2]
    if u1 is None or u2 is None:
        return 0j
    return complex(np.vdot(u1, rho.matrix @ u2))


def predicted_coherence(psi_ms: Ket, env: EnvironmentSpec, pointer: str = "O") -> complex:
    """``a1 a2* prod_j <E^j_2|E^j_1>``."""
    (_, c1), (_, c2) = _unit_branches(psi_ms, pointer)[:2]
    return c1 * np.conj(c2) * env.overlap_product()


@dataclass(frozen=True, eq=False)
class SuppressionReport:
    """Per-trial branch coherence for one environment size."""

    n_env: int
    offdiag: np.ndarray
    prediction: np.ndarray
    bare: float

    @property
    def median(self) -> float:
        return float(np.median(self.offdiag))

    @property
    def quartiles(self) -> tuple:
        q1, q3 = np.percentile(self.offdiag, [25, 75])
        return float(q1), float(q3)

    @property
    def suppression_factors(self) -> np.ndarray:
        return self.offdiag / self.bare if self.bare > 0 else np.zeros_like(self.offdiag)

    @property
    def median_suppression(self) -> float:
        return float(np.median(self.suppression_factors))

    @property
    def max_law_error(self) -> float:
        return float(np.max(np.abs(self.offdiag - self.prediction))) if self.offdiag.size else 0.0

    def basis_selected(self, fraction: float = BARE_FRACTION) -> bool:
        """Median coherence below ``fraction`` of its bare value."""
        return self.median <= fraction * self.bare

    def summary(self) -> dict:
        q1, q3 = self.quartiles
        return {
            "N_E": self.n_env,
            "trials": int(self.offdiag.size),
            "median": self.median,
            "q1": q1,
            "q3": q3,
            "median_suppression": self.median_suppression,
            "max_law_error": self.max_law_error,
        }


def _overlap_env(model: str, value: float, n: int, gen: np.random.Generator) -> EnvironmentSpec:
    if model == "fixed":
        return EnvironmentSpec.fixed_overlap(n, value)
    if model == "haar":
        return EnvironmentSpec.haar_random(n, gen)
    raise ValueError(f"unknown overlap model {model!r}")


def suppression_study(a: SpinState, n_env: Iterable[int], model: str = "haar", overlap: float = 0.5,
                      trials: int = 1000, rng=0) -> list:
    """Branch coherence over ``trials`` environments for each size in ``n_env``.

    Trial ``t`` at size ``n`` draws its environment from the substream keyed
    by ``(n, t)``, so any subset of trials can be recomputed alone.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_rng(rng)
    psi = measurement_state(a)
    bare = abs(a.a1 * np.conj(a.a2))
    reports = []
    for n in n_env:
        off = np.empty(trials)
        pred = np.empty(trials)
        for t in range(trials):
            sub = rng.substream(n).substream(t)
            gen = np.random.default_rng([sub.seed, sub.stream])
            env = _overlap_env(model, overlap, n, gen)
            rho = decohere_pointer(psi, env)
            off[t] = abs(branch_coherence(rho, psi))
            pred[t] = bare * float(np.prod(np.abs(env.overlaps()))) if n else bare
        reports.append(SuppressionReport(n, off, pred, bare))
    return reports


def write_suppression_csv(path, reports: Iterable[SuppressionReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N_E", "trial", "offdiag", "prediction"])
        for rep in reports:
            for t, (o, p) in enumerate(zip(rep.offdiag, rep.prediction)):
                w.writerow([rep.n_env, t, repr(float(o)), repr(float(p))])
