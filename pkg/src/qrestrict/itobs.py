"""Interference-term observables and pure-versus-mixed discrimination.

An interference observable couples two measurement branches,
``B = |b1><b2| + |b2><b1|``, and so responds to their coherence. Its
statistics separate a superposition from the corresponding mixture only
over many events; :func:`discrimination_test` measures how many.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import DimensionError, LayoutError
from .qcore import CompositeLayout, HermitianObservable, Ket, as_density, spectral_decompose
from .restrict import Gemenge
from .rng import as_rng, draw_categorical


def make_interference_observable(layout: CompositeLayout,
                                 branches: Sequence[Sequence[int]] = ((0, 0), (1, 1)),
                                 label: str = "B") -> HermitianObservable:
    """``|b1><b2| + |b2><b1|`` for two product basis vectors of ``layout``.

    Each entry of ``branches`` gives one basis index per subsystem; the
    default pairs ``|s1>|O1>`` with ``|s2>|O2>`` on a spin-observer layout.
    """
    if len(branches) != 2:
        raise ValueError("exactly two branches are needed")
    vecs = []
    for br in branches:
        if len(br) != len(layout) or any(not 0 <= i < d for i, d in zip(br, layout.dims)):
            raise ValueError(f"invalid branch indices {tuple(br)} for layout {layout.dims}")
        vecs.append(Ket.basis(layout, br).amplitudes)
    if np.allclose(vecs[0], vecs[1]):
        raise ValueError("the two branches must be distinct basis vectors")
    b = np.outer(vecs[0], vecs[1].conj())
    return HermitianObservable(b + b.conj().T, layout, label)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Eigenvalues (descending) and their probabilities, zeros kept."""

    values: tuple
    probabilities: tuple

    def __post_init__(self):
        if len(set(self.values)) != len(self.values):
            raise ValueError("outcome values must be distinct")
        if abs(sum(self.probabilities) - 1.0) > 1e-9:
            raise ValueError("outcome probabilities do not sum to 1")

    def prob(self, value: float, tol: float = 1e-9) -> float:
        for v, p in zip(self.values, self.probabilities):
            if abs(v - value) <= tol:
                return p
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.values, self.probabilities))

    def items(self):
        return zip(self.values, self.probabilities)


def outcome_distribution(state, obs: HermitianObservable) -> OutcomeDistribution:
    """Born probabilities ``Tr(rho P_k)`` over the spectral projectors of ``obs``."""
    if isinstance(state, Gemenge):
        state = state.density()
    rho = as_density(state)
    if obs.layout != rho.layout:
        if obs.dim != rho.dim and not set(obs.layout.labels) <= set(rho.layout.labels):
            raise DimensionError("observable and state dimensions differ")
        obs = obs.on(rho.layout) if obs.dim != rho.dim else obs
    spec = spectral_decompose(obs)
    probs = [float(np.einsum("ij,ji->", rho.matrix, p.matrix).real) for p in spec.projectors]
    # round-off residue on empty eigenspaces
    probs = [p if p > 1e-14 else 0.0 for p in probs]
    total = sum(probs)
    return OutcomeDistribution(tuple(spec.eigenvalues), tuple(p / total for p in probs))


@dataclass(frozen=True, eq=False)
class DiscriminationResult:
    """Sequential likelihood-ratio test of pure (upper) against mixed (lower).

    ``trajectory[k]`` is ``log L_pure / L_mixed`` after event ``k``.
    ``events_to_decision`` is ``None`` while undecided. ``type2_error`` is the
    exact probability that a mixed source yields ``events`` outcomes whose
    likelihood does not favour the mixture.
    """

    events: int
    truth: str
    outcomes: np.ndarray = field(repr=False)
    outcome_values: tuple = ()
    trajectory: np.ndarray = field(default=None, repr=False)
    upper: float = 0.0
    lower: float = 0.0
    decision: str = "undecided"
    events_to_decision: int | None = None
    type2_error: float | None = 1.0
    single_event_error: float | None = 1.0
    undecidable: bool = False

    def write_csv(self, path) -> None:
        """Columns: event, outcome, cumulative_llr."""
        _write_trajectory(path, self)

    def as_dict(self) -> dict:
        return {
            "events": self.events,
            "truth": self.truth,
            "decision": self.decision,
            "events_to_decision": self.events_to_decision,
            "upper_threshold": self.upper,
            "lower_threshold": self.lower,
            "type2_error": self.type2_error,
            "single_event_error": self.single_event_error,
            "undecidable": self.undecidable,
        }


def _write_trajectory(path, res: DiscriminationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["event", "outcome", "cumulative_llr"])
        for k, (o, llr) in enumerate(zip(res.outcomes, res.trajectory), start=1):
            w.writerow([k, repr(float(res.outcome_values[o])), repr(float(llr))])


def _llr_increments(p_pure: np.ndarray, p_mix: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        inc = np.log(p_pure) - np.log(p_mix)
    inc[(p_pure == 0) & (p_mix == 0)] = 0.0
    return inc


ENUMERATION_LIMIT = 5_000_000


def _compositions(n: int, k: int) -> np.ndarray:
    """All length-``k`` nonnegative integer vectors summing to ``n``."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    if k == 2:
        first = np.arange(n + 1, dtype=np.int64)
        return np.stack([first, n - first], axis=1)
    parts = []
    for first in range(n + 1):
        rest = _compositions(n - first, k - 1)
        parts.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(parts)


def ml_type2_error(p_pure: Sequence[float], p_mix: Sequence[float], n: int) -> float | None:
    """Exact ``P_mixed(log L_pure / L_mixed >= 0)`` after ``n`` i.i.d. outcomes.

    This is the chance that ``n`` events from the mixture still do not favour
    it. Outcome-count vectors are enumerated over the outcomes the mixture can
    produce; ``None`` is returned when there are more than
    ``ENUMERATION_LIMIT`` of them.
    """
    p_pure = np.asarray(p_pure, dtype=float)
    p_mix = np.asarray(p_mix, dtype=float)
    keep = p_mix > 0
    pp, pm = p_pure[keep], p_mix[keep]
    k = len(pm)
    if math.comb(n + k - 1, k - 1) > ENUMERATION_LIMIT:
        return None
    inc = _llr_increments(pp, pm)
    dead = np.isneginf(inc)
    counts = _compositions(n, k)
    llr = counts @ np.where(dead, 0.0, inc)
    if dead.any():
        llr = np.where((counts[:, dead] > 0).any(axis=1), -np.inf, llr)
    logp = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) + counts @ np.log(pm)
    # tolerate round-off on exact ties such as llr == 0
    sel = llr >= -1e-12
    return float(np.exp(logp[sel]).sum()) if sel.any() else 0.0


def discrimination_test(pure_src: Ket, mixed_src: Gemenge, obs: HermitianObservable,
                        alpha: float, n_events: int, rng, truth: str = "pure") -> DiscriminationResult:
    """Run a sequential probability-ratio test on simulated outcomes of ``obs``.

    Outcomes are drawn from ``truth`` (``"pure"`` or ``"mixed"``). The test
    stops once the likelihood ratio leaves ``[alpha, 1/alpha]``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if n_events < 1:
        raise ValueError("need at least one event")
    if pure_src.layout != mixed_src.layout:
        raise LayoutError("sources must share a layout")
    dp = outcome_distribution(pure_src, obs)
    dm = outcome_distribution(mixed_src, obs)
    p_pure = np.array(dp.probabilities)
    p_mix = np.array(dm.probabilities)
    upper, lower = math.log(1 / alpha), math.log(alpha)
    undecidable = bool(np.allclose(p_pure, p_mix, atol=1e-12))

    src = p_pure if truth == "pure" else p_mix
    if truth not in ("pure", "mixed"):
        raise ValueError("truth must be 'pure' or 'mixed'")
    outcomes = draw_categorical(as_rng(rng), src, n_events)
    inc = _llr_increments(p_pure, p_mix)[outcomes]
    traj, stop, dec = kernels.sprt_scan(inc, upper, lower)

    decision = "undecided"
    if undecidable:
        decision = "undecidable"
    elif dec == 1:
        decision = "pure"
    elif dec == -1:
        decision = "mixed"
    return DiscriminationResult(
        events=n_events,
        truth=truth,
        outcomes=outcomes,
        outcome_values=dp.values,
        trajectory=traj,
        upper=upper,
        lower=lower,
        decision=decision,
        events_to_decision=None if stop < 0 or undecidable else stop + 1,
        type2_error=ml_type2_error(p_pure, p_mix, n_events),
        single_event_error=ml_type2_error(p_pure, p_mix, 1),
        undecidable=undecidable,
    )


def events_to_decision_bound(p_pure: Sequence[float], p_mix: Sequence[float], alpha: float) -> int | None:
    """Events a pure source needs when every outcome is its most likely one.

    For the symmetric case this is ``ceil(log2(1/alpha))``.
    """
    inc = _llr_increments(np.asarray(p_pure, float), np.asarray(p_mix, float))
    best = inc[np.asarray(p_pure) > 0].max()
    if best <= 0:
        return None
    if np.isinf(best):
        return 1
    return int(math.ceil(math.log(1 / alpha) / best - 1e-12))
