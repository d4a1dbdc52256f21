"""Finite-dimensional states, observables and their basic algebra.

Every object carries a :class:`CompositeLayout` naming the tensor factors it
lives on, so reductions and embeddings are done by label rather than by
position. All values are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    CompositionError,
    DimensionError,
    LayoutError,
    NormalizationError,
    NotHermitianError,
)


@dataclass
class Tolerances:
    """Numerical thresholds used as defaults throughout the package.

    ``decision`` governs feasibility and orthogonality verdicts, ``identity``
    exact-equality checks, and ``cluster`` the relative spread under which
    eigenvalues count as degenerate.
    """

    decision: float = 1e-9
    identity: float = 1e-12
    cluster: float = 1e-8


TOL = Tolerances()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CompositeLayout:
    """Ordered subsystem labels and dimensions of a tensor-product space."""

    labels: tuple
    dims: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dims = tuple(int(d) for d in self.dims)
        if len(labels) != len(dims):
            raise LayoutError("labels and dims differ in length")
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels in {labels}")
        if any(d < 1 for d in dims):
            raise LayoutError(f"subsystem dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, *pairs) -> "CompositeLayout":
        """``CompositeLayout.of(("S", 2), ("O", 2))``."""
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem {label!r}; layout has {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def concat(self, other: "CompositeLayout") -> "CompositeLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise CompositionError(f"subsystem labels collide: {sorted(clash)}")
        return CompositeLayout(self.labels + other.labels, self.dims + other.dims)

    def sub(self, labels: Iterable[str]) -> "CompositeLayout":
        """Sub-layout on ``labels``, kept in this layout's order."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        keep = [i for i, lab in enumerate(self.labels) if lab in wanted]
        return CompositeLayout(
            tuple(self.labels[i] for i in keep), tuple(self.dims[i] for i in keep)
        )


def _single(label: str, dim: int) -> CompositeLayout:
    return CompositeLayout((label,), (dim,))


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state."""

    amplitudes: np.ndarray
    layout: CompositeLayout

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.dim:
            raise DimensionError(
                f"{amps.size} amplitudes for layout of dimension {self.layout.dim}"
            )
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > TOL.decision:
            raise NormalizationError(f"ket has squared norm {norm2!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes, layout: CompositeLayout) -> "Ket":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = np.linalg.norm(amps)
        if n == 0:
            raise NormalizationError("zero vector cannot be normalized")
        return cls(amps / n, layout)

    @classmethod
    def basis(cls, layout: CompositeLayout, indices: Sequence[int]) -> "Ket":
        """Product basis vector with one index per subsystem."""
        if len(indices) != len(layout):
            raise DimensionError("one basis index per subsystem required")
        amps = np.zeros(layout.dim, dtype=complex)
        amps[np.ravel_multi_index(tuple(indices), layout.dims)] = 1.0
        return cls(amps, layout)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator."""

    matrix: np.ndarray
    layout: CompositeLayout

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.dim
        if m.shape != (d, d):
            raise DimensionError(f"matrix shape {m.shape} does not match layout dimension {d}")
        if not np.allclose(m, m.conj().T, atol=TOL.decision, rtol=0):
            raise NotHermitianError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TOL.decision:
            raise NormalizationError(f"density matrix has trace {tr!r}")
        m = 0.5 * (m + m.conj().T)
        if d <= 4096 and np.linalg.eigvalsh(m)[0] < -1e-9:
            raise NormalizationError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def from_ket(cls, ket: Ket) -> "DensityMatrix":
        return ket.density()

    @classmethod
    def mixture(cls, weighted: Iterable) -> "DensityMatrix":
        """Convex combination of ``(state, probability)`` pairs."""
        total = None
        layout = None
        for state, p in weighted:
            rho = as_density(state)
            if layout is None:
                layout = rho.layout
            elif rho.layout != layout:
                raise LayoutError("mixture components have different layouts")
            term = p * rho.matrix
            total = term if total is None else total + term
        if total is None:
            raise ValueError("empty mixture")
        return cls(total, layout)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


State = Union[Ket, DensityMatrix]


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    matrix: np.ndarray
    layout: CompositeLayout
    label: str | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.dim
        if m.shape != (d, d):
            raise DimensionError(f"matrix shape {m.shape} does not match layout dimension {d}")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if not np.allclose(m, m.conj().T, atol=TOL.decision * scale, rtol=0):
            raise NotHermitianError("observable matrix is not Hermitian")
        object.__setattr__(self, "matrix", _frozen(0.5 * (m + m.conj().T)))

    @classmethod
    def identity(cls, layout: CompositeLayout, label: str | None = "I") -> "HermitianObservable":
        return cls(np.eye(layout.dim), layout, label)

    @classmethod
    def projector_onto(cls, ket: Ket, label: str | None = None) -> "HermitianObservable":
        return cls(np.outer(ket.amplitudes, ket.amplitudes.conj()), ket.layout, label)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def with_label(self, label: str) -> "HermitianObservable":
        return HermitianObservable(self.matrix, self.layout, label)

    def on(self, layout: CompositeLayout) -> "HermitianObservable":
        """This observable embedded into a larger ``layout`` (identity elsewhere)."""
        if layout == self.layout:
            return self
        return HermitianObservable(embed_operator(self.matrix, self.layout, layout), layout, self.label)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Distinct eigenvalues (descending) with their orthogonal projectors."""

    eigenvalues: tuple
    projectors: tuple
    layout: CompositeLayout = field(repr=False)

    @property
    def multiplicities(self) -> tuple:
        return tuple(int(round(np.trace(p.matrix).real)) for p in self.projectors)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.layout.dim, self.layout.dim), dtype=complex)
        for g, p in zip(self.eigenvalues, self.projectors):
            out += g * p.matrix
        return out


def as_density(state: State) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, Ket):
        return state.density()
    raise TypeError(f"expected Ket or DensityMatrix, got {type(state).__name__}")


def embed_operator(matrix: np.ndarray, sub: CompositeLayout, full: CompositeLayout) -> np.ndarray:
    """Lift an operator on the ``sub`` factors to ``full``, acting as identity on the rest."""
    for lab in sub.labels:
        if lab not in full:
            raise DimensionError(f"operator subsystem {lab!r} not present in {full.labels}")
        if full.dim_of(lab) != sub.dim_of(lab):
            raise DimensionError(f"subsystem {lab!r} has mismatched dimension")
    rest = [lab for lab in full.labels if lab not in sub.labels]
    rest_dim = int(np.prod([full.dim_of(lab) for lab in rest], dtype=np.int64)) if rest else 1
    big = np.kron(np.eye(rest_dim), np.asarray(matrix, dtype=complex))
    order = rest + list(sub.labels)
    dims = [full.dim_of(lab) for lab in order]
    n = len(order)
    # axes currently in `order`; move them into `full` order
    perm = [order.index(lab) for lab in full.labels]
    t = big.reshape(dims + dims).transpose(perm + [p + n for p in perm])
    return t.reshape(full.dim, full.dim)


def _operator_for(obs: HermitianObservable, layout: CompositeLayout) -> np.ndarray:
    if obs.layout == layout:
        return obs.matrix
    if set(obs.layout.labels) <= set(layout.labels):
        return embed_operator(obs.matrix, obs.layout, layout)
    raise DimensionError(
        f"observable on {obs.layout.labels} cannot act on state over {layout.labels}"
    )


def tensor(a: State, b: State) -> State:
    """Tensor product; the layout of ``b`` is appended to that of ``a``."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes), layout)
    ra, rb = as_density(a), as_density(b)
    return DensityMatrix(np.kron(ra.matrix, rb.matrix), layout)


def tensor_all(*states: State) -> State:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def partial_trace(state: State, keep: Iterable[str]) -> DensityMatrix:
    """Reduced state on the ``keep`` subsystems.

    Kets are reduced without forming the full density matrix, which keeps
    large environments cheap.
    """
    layout = state.layout
    kept = layout.sub(keep)
    traced = [lab for lab in layout.labels if lab not in kept.labels]
    ki = [layout.index(lab) for lab in kept.labels]
    ti = [layout.index(lab) for lab in traced]
    dk = kept.dim
    dt = layout.dim // dk
    if isinstance(state, Ket):
        m = state.amplitudes.reshape(layout.dims).transpose(ki + ti).reshape(dk, dt)
        return DensityMatrix(m @ m.conj().T, kept)
    rho = as_density(state).matrix
    n = len(layout)
    t = rho.reshape(layout.dims + layout.dims)
    t = t.transpose(ki + ti + [i + n for i in ki] + [i + n for i in ti]).reshape(dk, dt, dk, dt)
    return DensityMatrix(np.einsum("aibi->ab", t), kept)


def expectation_power(state: State, obs: HermitianObservable, l: int = 1) -> float:
    """``Tr(rho G^l)``; the observable is embedded if it acts on a subset of factors."""
    if l < 1:
        raise ValueError("moment order must be >= 1")
    g = _operator_for(obs, state.layout)
    gl = np.linalg.matrix_power(g, l)
    if isinstance(state, Ket):
        val = np.vdot(state.amplitudes, gl @ state.amplitudes)
    else:
        val = np.einsum("ij,ji->", state.matrix, gl)
    scale = max(1.0, float(np.linalg.norm(gl, 2)))
    if abs(val.imag) > TOL.decision * scale:
        raise ArithmeticError(f"expectation has imaginary residue {val.imag!r}")
    return float(val.real)


def spectral_decompose(obs: HermitianObservable, cluster: float | None = None) -> SpectralDecomposition:
    """Eigenvalues in descending order with degenerate ones merged.

    Eigenvalues closer than ``cluster`` times the spectral range fall into one
    projector.
    """
    m = np.asarray(obs.matrix)
    if not np.allclose(m, m.conj().T, atol=TOL.decision, rtol=0):
        raise NotHermitianError("spectral_decompose needs a Hermitian operator")
    rel = TOL.cluster if cluster is None else cluster
    w, v = np.linalg.eigh(m)
    w, v = w[::-1], v[:, ::-1]
    spread = float(w[0] - w[-1])
    thresh = rel * spread
    groups: list[list[int]] = [[0]]
    for k in range(1, len(w)):
        if w[groups[-1][0]] - w[k] <= thresh:
            groups[-1].append(k)
        else:
            groups.append([k])
    values, projs = [], []
    for grp in groups:
        vecs = v[:, grp]
        values.append(float(np.mean(w[grp])))
        projs.append(HermitianObservable(vecs @ vecs.conj().T, obs.layout))
    return SpectralDecomposition(tuple(values), tuple(projs), obs.layout)


def trace_distance(r1: State, r2: State) -> float:
    a, b = as_density(r1), as_density(r2)
    if a.layout.dims != b.layout.dims:
        raise DimensionError("trace distance of states with different dimensions")
    ev = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(min(1.0, 0.5 * np.abs(ev).sum()))


def eigen_residual(state: State, obs: HermitianObservable, value: float) -> float:
    """Frobenius norm of ``G rho - value * rho``."""
    rho = as_density(state).matrix
    g = _operator_for(obs, state.layout)
    return float(np.linalg.norm(g @ rho - value * rho))


def is_eigenstate(state: State, obs: HermitianObservable, tol: float | None = None) -> float | None:
    """Eigenvalue ``g`` if ``<G^l> == <G>^l`` for ``l = 1..d``, else ``None``.

    ``d`` moments pin down a distribution on at most ``d`` eigenvalues, so a
    finite check is enough. Moment errors are compared against
    ``tol * max(1, ||G||)^l``.
    """
    tol = TOL.decision if tol is None else tol
    g_op = _operator_for(obs, state.layout)
    d = state.layout.dim
    rho = as_density(state).matrix
    scale = max(1.0, float(np.linalg.norm(g_op, 2)))
    g = float(np.einsum("ij,ji->", rho, g_op).real)
    power = g_op
    for l in range(2, d + 1):
        power = power @ g_op
        m = float(np.einsum("ij,ji->", rho, power).real)
        if abs(m - g**l) > tol * scale**l:
            return None
    return g


def random_ket(layout: CompositeLayout, rng: np.random.Generator) -> Ket:
    """Haar-random pure state."""
    z = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return Ket.normalized(z, layout)


def random_density(layout: CompositeLayout, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from the induced (Ginibre) measure."""
    k = layout.dim if rank is None else rank
    z = rng.normal(size=(layout.dim, k)) + 1j * rng.normal(size=(layout.dim, k))
    m = z @ z.conj().T
    return DensityMatrix(m / np.trace(m).real, layout)


def random_observable(layout: CompositeLayout, rng: np.random.Generator) -> HermitianObservable:
    z = rng.normal(size=(layout.dim, layout.dim)) + 1j * rng.normal(size=(layout.dim, layout.dim))
    return HermitianObservable((z + z.conj().T) / 2, layout)
