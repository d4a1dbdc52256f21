"""Inference maps from the total measurement state to the observer's state.

Two competing restrictions are provided: the partial-trace restriction,
which assigns the observer one fixed mixed state, and the stochastic
restriction, which assigns a pointer eigenstate drawn with Born weights in
each event. Sampling uses :class:`~qrestrict.rng.CounterRNG`, so event ``k``
of any ensemble depends only on ``(seed, k)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import LayoutError, NormalizationError, StructureError
from .qcore import (
    TOL,
    DensityMatrix,
    HermitianObservable,
    Ket,
    as_density,
    eigen_residual,
    expectation_power,
    is_eigenstate,
    partial_trace,
    spectral_decompose,
)
from .rng import as_rng, cdf_from_probabilities, draw_categorical
from . import kernels


@dataclass(frozen=True, eq=False)
class Gemenge:
    """Classical ensemble of states with known probabilities."""

    components: tuple

    def __post_init__(self):
        comps = tuple((state, float(p)) for state, p in self.components)
        if not comps:
            raise ValueError("gemenge needs at least one component")
        probs = np.array([p for _, p in comps])
        if (probs < -TOL.decision).any():
            raise NormalizationError("negative gemenge probability")
        if abs(probs.sum() - 1.0) > TOL.decision:
            raise NormalizationError(f"gemenge probabilities sum to {probs.sum()!r}")
        layout = comps[0][0].layout
        if any(state.layout != layout for state, _ in comps):
            raise LayoutError("gemenge components must share a layout")
        object.__setattr__(self, "components", comps)

    @property
    def layout(self):
        return self.components[0][0].layout

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.components])

    @property
    def states(self) -> list:
        return [s for s, _ in self.components]

    def density(self) -> DensityMatrix:
        return DensityMatrix.mixture(self.components)

    def __len__(self):
        return len(self.components)


def branch_decomposition(psi: Ket, pointer: str = "O", tol: float | None = None) -> list:
    """Rest-of-system vectors ``phi_i`` with ``psi = sum_i phi_i (x) |x_i>``.

    Each ``phi_i`` is unnormalized and laid out over the non-pointer factors
    in their original order. Raises :class:`StructureError` unless the
    ``phi_i`` are mutually orthogonal; a bare pointer (no other factors) is
    accepted as is.
    """
    tol = TOL.decision if tol is None else tol
    layout = psi.layout
    if pointer not in layout:
        raise StructureError(f"state has no pointer subsystem {pointer!r}")
    k = layout.index(pointer)
    t = np.moveaxis(psi.amplitudes.reshape(layout.dims), k, 0)
    phis = [t[i].reshape(-1) for i in range(layout.dims[k])]
    if phis[0].size > 1:
        for a in range(len(phis)):
            for b in range(a + 1, len(phis)):
                if abs(np.vdot(phis[a], phis[b])) > tol:
                    raise StructureError("pointer branches overlap: state is not of branch form")
    return phis


def branch_vectors(psi: Ket, pointer: str = "O") -> list:
    """Full-space branch components ``phi_i (x) |x_i>`` (unnormalized)."""
    layout = psi.layout
    k = layout.index(pointer)
    phis = branch_decomposition(psi, pointer)
    out = []
    for i, phi in enumerate(phis):
        t = np.zeros((layout.dims[k],) + phi.shape, dtype=complex)
        t[i] = phi
        rest = [d for j, d in enumerate(layout.dims) if j != k]
        t = np.moveaxis(t.reshape([layout.dims[k]] + rest), 0, k)
        out.append(t.reshape(-1))
    return out


def partial_trace_restriction(rho_ms, observer: str = "O") -> DensityMatrix:
    """Partial trace of the total state onto the observer factor."""
    if observer not in rho_ms.layout:
        raise LayoutError(f"state has no observer subsystem {observer!r}")
    return partial_trace(rho_ms, [observer])


# name used in the operation contract
breuer_restriction = partial_trace_restriction


def gemenge_sample(g: Gemenge, rng, event: int = 0) -> tuple:
    """Component ``(index, state)`` drawn for event number ``event``."""
    rng = as_rng(rng)
    idx = int(draw_categorical(rng, g.probabilities, 1, start=event)[0])
    return idx, g.components[idx][0]


def gemenge_sample_many(g: Gemenge, rng, n: int, start: int = 0) -> np.ndarray:
    return draw_categorical(as_rng(rng), g.probabilities, n, start)


def pointer_weights(psi: Ket, pointer: str = "O") -> np.ndarray:
    """Born weights ``||phi_i||^2`` of the pointer branches."""
    phis = branch_decomposition(psi, pointer)
    w = np.array([np.vdot(p, p).real for p in phis])
    return w / w.sum()


def _pointer_state(psi: Ket, pointer: str, i: int) -> DensityMatrix:
    d = psi.layout.dim_of(pointer)
    m = np.zeros((d, d), dtype=complex)
    m[i, i] = 1.0
    return DensityMatrix(m, psi.layout.sub([pointer]))


def stochastic_restriction(psi_ms: Ket, rng, q=(1.0, -1.0), pointer: str = "O",
                           event: int = 0) -> tuple:
    """One event of the stochastic inference map.

    Returns ``(q_i, xi_i)`` with ``xi_i = |O_i><O_i|`` chosen with probability
    equal to the weight of branch ``i``.
    """
    w = pointer_weights(psi_ms, pointer)
    i = int(draw_categorical(as_rng(rng), w, 1, start=event)[0])
    return q[i], _pointer_state(psi_ms, pointer, i)


def collapse_log(psi_ms: Ket, rng, n: int, pointer: str = "O", start: int = 0) -> np.ndarray:
    """Branch indices for events ``start .. start+n-1``.

    Event ``k`` here is the same draw as ``stochastic_restriction(..., event=k)``.
    """
    return draw_categorical(as_rng(rng), pointer_weights(psi_ms, pointer), n, start)


def restriction_gemenge(psi_ms: Ket, pointer: str = "O") -> Gemenge:
    """Ensemble ``{xi_i, P_i}`` induced by the stochastic restriction."""
    w = pointer_weights(psi_ms, pointer)
    return Gemenge([(_pointer_state(psi_ms, pointer, i), p) for i, p in enumerate(w)])


@dataclass(frozen=True)
class InformationPattern:
    """Definite values registered in one event.

    ``entries`` maps observable labels to eigenvalues; labels whose value is
    not definite for the state go to ``uncertain`` instead.
    """

    entries: Mapping = field(default_factory=dict)
    uncertain: tuple = ()

    def __getitem__(self, label):
        return self.entries[label]

    def __len__(self):
        return len(self.entries)

    def as_dict(self) -> dict:
        return {"entries": dict(self.entries), "uncertain": list(self.uncertain)}


def _labelled(observables) -> list:
    if isinstance(observables, Mapping):
        return list(observables.items())
    out = []
    for k, obs in enumerate(observables):
        out.append((obs.label if obs.label is not None else f"G{k}", obs))
    return out


def information_pattern(state, observables, tol: float | None = None) -> InformationPattern:
    """Record each observable whose value is definite for ``state``.

    An entry is kept only if the moment test finds an eigenvalue, the direct
    residual ``||G rho - g rho||`` is below ``tol`` as well, and ``g`` matches
    a point of the observable's spectrum (to which it is snapped).
    """
    tol = TOL.decision if tol is None else tol
    entries, uncertain = {}, []
    for label, obs in _labelled(observables):
        g = is_eigenstate(state, obs, tol)
        value = None
        if g is not None and eigen_residual(state, obs, g) < tol:
            spec = np.array(spectral_decompose(obs).eigenvalues)
            k = int(np.argmin(np.abs(spec - g)))
            if abs(spec[k] - g) <= tol * max(1.0, abs(spec).max()):
                value = float(spec[k])
        if value is None:
            uncertain.append(label)
        else:
            entries[label] = value
    return InformationPattern(entries, tuple(uncertain))


@dataclass(frozen=True, eq=False)
class EnsembleReport:
    """Outcome log and moment statistics of a simulated ensemble."""

    events: int
    outcome_values: tuple
    outcomes: np.ndarray = field(repr=False)
    empirical_moments: np.ndarray
    reference_moments: np.ndarray
    sigma: np.ndarray
    label: str = "G"

    @property
    def frequencies(self) -> dict:
        counts = np.bincount(self.outcomes, minlength=len(self.outcome_values))
        return {v: c / self.events for v, c in zip(self.outcome_values, counts)}

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.outcomes, minlength=len(self.outcome_values))

    def deviations(self) -> np.ndarray:
        """``|empirical - reference| / sigma`` per moment order (0 where both agree exactly)."""
        diff = np.abs(self.empirical_moments - self.reference_moments)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.sigma > 0, diff / np.where(self.sigma > 0, self.sigma, 1.0),
                         np.where(diff <= 1e-12, 0.0, np.inf))
        return z

    def within(self, k: float = 4.0) -> bool:
        return bool(np.all(self.deviations() <= k))

    def ip_log(self) -> list:
        """Per-event information patterns ``{label: value}``."""
        vals = np.asarray(self.outcome_values)[self.outcomes]
        return [{self.label: float(v)} for v in vals]


def _moment_table(values: np.ndarray, probs: np.ndarray, L: int) -> np.ndarray:
    return np.array([np.dot(probs, values**l) for l in range(1, L + 1)])


def ensemble_moments(source: Union[Ket, DensityMatrix, Gemenge], obs: HermitianObservable,
                     L: int, N: int, rng, start: int = 0) -> EnsembleReport:
    """Simulate ``N`` projective measurements of ``obs`` and compare moments.

    A pure (or density-matrix) source is Born-sampled directly. A gemenge first
    draws its component from substream 0, then Born-samples from substream 1.
    """
    if L < 1 or N < 1:
        raise ValueError("need L >= 1 and N >= 1")
    rng = as_rng(rng)
    layout = source.layout
    spec = spectral_decompose(obs.on(layout) if obs.layout != layout else obs)
    values = np.array(spec.eigenvalues)
    born_rng = rng.substream(1)

    def born_probs(state):
        rho = as_density(state).matrix
        p = np.array([np.einsum("ij,ji->", rho, P.matrix).real for P in spec.projectors])
        return np.clip(p, 0.0, None)

    if isinstance(source, Gemenge):
        table = np.array([born_probs(s) for s in source.states])
        comp = draw_categorical(rng.substream(0), source.probabilities, N, start)
        u = born_rng.uniforms(N, start)
        outcomes = np.empty(N, dtype=np.int64)
        for c in range(len(source)):
            sel = np.flatnonzero(comp == c)
            if sel.size:
                outcomes[sel] = kernels.sample_categorical(u[sel], cdf_from_probabilities(table[c]))
        probs = source.probabilities @ table
    else:
        probs = born_probs(source)
        outcomes = draw_categorical(born_rng, probs, N, start)

    ref = _moment_table(values, probs, 2 * L)
    samples = values[outcomes]
    emp = np.array([np.mean(samples**l) for l in range(1, L + 1)])
    even = ref[1::2][:L]
    var = even - ref[:L] ** 2
    # cancellation residue, e.g. for observables with G^2 = I
    var[var <= 1e-12 * np.maximum(1.0, even)] = 0.0
    return EnsembleReport(
        events=N,
        outcome_values=tuple(float(v) for v in values),
        outcomes=outcomes,
        empirical_moments=emp,
        reference_moments=ref[:L],
        sigma=np.sqrt(var / N),
        label=obs.label or "G",
    )


def analytic_moments(state, obs: HermitianObservable, L: int) -> np.ndarray:
    """``Tr(rho G^l)`` for ``l = 1..L``; gemenge sources average over components."""
    if isinstance(state, Gemenge):
        return sum(p * analytic_moments(s, obs, L) for s, p in state.components)
    return np.array([expectation_power(state, obs, l) for l in range(1, L + 1)])
