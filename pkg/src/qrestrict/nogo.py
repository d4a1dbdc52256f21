"""Feasibility certificates for single-event (Boolean) state discrimination.

The question "is there an observable with distinct definite values on these
states?" is turned into linear algebra. A Hermitian ``G`` on a subsystem has
``ψ`` as an eigenvector iff ``(I - P) G P = 0`` with ``P = |ψ><ψ|``; stacking
these conditions gives a real linear system in the ``d^2`` coordinates of
``G`` whose null space is every admissible observable. Eigenvalues are then
linear functionals on that null space, and a required distinction that
vanishes identically certifies that no such observable exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from . import kernels
from .errors import CompletenessError, DimensionError, LayoutError, NotHermitianError
from .qcore import (
    TOL,
    CompositeLayout,
    DensityMatrix,
    HermitianObservable,
    Ket,
    as_density,
    embed_operator,
    partial_trace,
    trace_distance,
)


@dataclass(frozen=True, eq=False)
class EigenConstraint:
    """``state`` must be an eigenvector of ``G`` acting on ``subsystem``.

    Constraints with different ``klass`` tags must receive different
    eigenvalues.
    """

    state: Ket
    subsystem: tuple
    klass: int = 0
    name: str = ""

    def __post_init__(self):
        sub = (self.subsystem,) if isinstance(self.subsystem, str) else tuple(self.subsystem)
        for lab in sub:
            self.state.layout.index(lab)
        object.__setattr__(self, "subsystem", sub)


def hermitian_basis(d: int) -> list:
    """Orthonormal (Hilbert-Schmidt) real basis of ``d x d`` Hermitian matrices."""
    out = []
    for k in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[k, k] = 1.0
        out.append(m)
    r = 1 / np.sqrt(2)
    for k in range(d):
        for l in range(k + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[k, l] = m[l, k] = r
            out.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[k, l] = -1j * r
            m[l, k] = 1j * r
            out.append(m)
    return out


def nullspace(a: np.ndarray, rtol: float) -> np.ndarray:
    """Columns spanning the numerical null space of ``a``.

    Singular values at or below ``rtol * s_max`` are treated as zero.
    """
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    cutoff = rtol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    """Outcome of :func:`eigen_observable_feasibility`.

    ``functionals[k]`` gives eigenvalue ``g_k`` of constraint ``k`` as a row
    vector acting on solution-space coordinates. ``certificate`` lists the
    constraint pairs whose eigenvalue difference vanishes on the whole
    solution space.
    """

    subsystem: CompositeLayout
    dimension: int
    basis: tuple
    functionals: np.ndarray
    classes: tuple
    feasible: bool
    witness: HermitianObservable | None = None
    witness_eigenvalues: tuple = ()
    certificate: tuple = ()
    names: tuple = field(default=())

    @property
    def verdict(self) -> str:
        return "feasible" if self.feasible else "infeasible"

    def to_dict(self) -> dict:
        """Plain-data form; matrices row-major as ``[re, im]`` pairs."""

        def mat(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]

        return {
            "verdict": self.verdict,
            "solution_dimension": self.dimension,
            "subsystem": list(self.subsystem.labels),
            "basis": [mat(b) for b in self.basis],
            "functionals": [[float(x) for x in row] for row in self.functionals],
            "classes": list(self.classes),
            "constraints": list(self.names),
            "witness": None if self.witness is None else mat(self.witness.matrix),
            "witness_eigenvalues": [float(g) for g in self.witness_eigenvalues],
            "certificate": [list(p) for p in self.certificate],
        }


def _constraint_rows(c: EigenConstraint, basis: list, sub: CompositeLayout) -> np.ndarray:
    psi = c.state.amplitudes
    layout = c.state.layout
    d = layout.dim
    comp = np.eye(d) - np.outer(psi, psi.conj())
    cols = []
    for b in basis:
        v = comp @ (embed_operator(b, sub, layout) @ psi)
        cols.append(np.concatenate([v.real, v.imag]))
    return np.array(cols).T


def _functional(c: EigenConstraint, basis: list, sub: CompositeLayout) -> np.ndarray:
    psi = c.state.amplitudes
    return np.array(
        [np.vdot(psi, embed_operator(b, sub, c.state.layout) @ psi).real for b in basis]
    )


def eigen_observable_feasibility(constraints: Sequence[EigenConstraint],
                                 tol: float | None = None, gap: float = 1e-6,
                                 seed: int = 0) -> FeasibilityReport:
    """Decide whether one Hermitian observable separates all constraint classes.

    The solution space always contains the identity. The verdict is
    infeasible when some pair of constraints in different classes gets equal
    eigenvalues from every admissible observable; otherwise a witness with
    spectrum rescaled to ``[0, 1]`` is returned.
    """
    tol = TOL.decision if tol is None else tol
    if not constraints:
        raise ValueError("no constraints given")
    subsys = constraints[0].subsystem
    if any(c.subsystem != subsys for c in constraints):
        raise LayoutError("all constraints must act on the same subsystem")
    sub = constraints[0].state.layout.sub(subsys)
    for c in constraints:
        if c.state.layout.sub(subsys) != sub:
            raise LayoutError("constraint subsystems have inconsistent dimensions")
    classes = tuple(c.klass for c in constraints)
    if len(set(classes)) < 2:
        raise ValueError("at least two distinctness classes are required")

    basis = hermitian_basis(sub.dim)
    a = np.vstack([_constraint_rows(c, basis, sub) for c in constraints])
    ns = nullspace(a, tol)
    sol = [sum(x * b for x, b in zip(col, basis)) for col in ns.T]
    funcs = np.array([_functional(c, basis, sub) @ ns for c in constraints])

    scale = max(1.0, float(np.abs(funcs).max(initial=0.0)))
    vanishing = []
    for j, k in combinations(range(len(constraints)), 2):
        if classes[j] != classes[k] and np.linalg.norm(funcs[j] - funcs[k]) <= tol * scale:
            vanishing.append((j, k))
    names = tuple(c.name or f"c{k}" for k, c in enumerate(constraints))
    base = dict(subsystem=sub, dimension=ns.shape[1], basis=tuple(sol),
                functionals=funcs, classes=classes, names=names)
    if vanishing:
        return FeasibilityReport(feasible=False, certificate=tuple(vanishing), **base)

    witness, gvals = _witness(ns, basis, funcs, classes, seed)
    ok = witness is not None and _witness_valid(witness, constraints, gvals, classes, tol, gap)
    if not ok:
        return FeasibilityReport(feasible=False, **base)
    return FeasibilityReport(feasible=True, witness=HermitianObservable(witness, sub, "witness"),
                             witness_eigenvalues=tuple(gvals), **base)


def _witness(ns, basis, funcs, classes, seed):
    # generic point of the solution space; a fixed seed keeps it reproducible
    rng = np.random.default_rng(seed)
    best, best_gap = None, -1.0
    for _ in range(8):
        x = rng.normal(size=ns.shape[1])
        g = funcs @ x
        gaps = [abs(g[j] - g[k]) for j, k in combinations(range(len(g)), 2)
                if classes[j] != classes[k]]
        if min(gaps) > best_gap:
            best, best_gap = x, min(gaps)
    coords = ns @ best
    m = sum(c * b for c, b in zip(coords, basis))
    ev = np.linalg.eigvalsh(m)
    span = ev[-1] - ev[0]
    if span <= 0:
        return None, ()
    m = (m - ev[0] * np.eye(len(m))) / span
    g = (funcs @ best - ev[0]) / span
    if g[0] < np.mean(g):
        m = np.eye(len(m)) - m
        g = 1.0 - g
    return m, g


def _witness_valid(w, constraints, gvals, classes, tol, gap) -> bool:
    sub_labels = constraints[0].subsystem
    for c, g in zip(constraints, gvals):
        layout = c.state.layout
        lifted = embed_operator(w, layout.sub(sub_labels), layout)
        if np.linalg.norm(lifted @ c.state.amplitudes - g * c.state.amplitudes) > tol:
            return False
    for j, k in combinations(range(len(gvals)), 2):
        if classes[j] != classes[k] and abs(gvals[j] - gvals[k]) <= gap:
            return False
    return True


@dataclass(frozen=True, eq=False)
class ProjectorCheck:
    """Result of :func:`projector_completeness_check`."""

    orthogonal_to_all: bool
    forced_zero: bool
    products: tuple
    total: np.ndarray
    norm: float
    overlaps: tuple


def projector_completeness_check(pointer_projectors: Sequence[HermitianObservable],
                                 candidate: HermitianObservable,
                                 tol: float | None = None) -> ProjectorCheck:
    """Test whether orthogonality to a complete projector set forces ``candidate = 0``.

    Computes ``sum_i P_R P_i``, which equals ``P_R`` whenever the ``P_i``
    resolve the identity. If the candidate is orthogonal to every ``P_i`` that
    sum is a sum of zeros, so ``P_R`` is zero.
    """
    tol = TOL.decision if tol is None else tol
    d = candidate.dim
    mats = [p.matrix for p in pointer_projectors]
    if any(m.shape != (d, d) for m in mats):
        raise DimensionError("projectors and candidate differ in dimension")
    for m in mats:
        if np.linalg.norm(m @ m - m) > tol:
            raise NotHermitianError("pointer operator is not a projector")
    if np.linalg.norm(sum(mats) - np.eye(d)) > tol:
        raise CompletenessError("pointer projectors do not sum to the identity")
    pr = candidate.matrix
    if np.linalg.norm(pr @ pr - pr) > tol:
        raise ValueError("candidate is not idempotent")
    products = tuple(pr @ m for m in mats)
    overlaps = tuple(float(np.linalg.norm(p)) for p in products)
    total = sum(products)
    norm = float(np.linalg.norm(total))
    orthogonal = all(o <= tol for o in overlaps)
    return ProjectorCheck(
        orthogonal_to_all=orthogonal,
        forced_zero=orthogonal and norm <= TOL.identity,
        products=products,
        total=total,
        norm=norm,
        overlaps=overlaps,
    )


def orthogonal_projector(pointer_projectors: Sequence[HermitianObservable],
                         tol: float | None = None) -> HermitianObservable:
    """Largest projector orthogonal to all given projectors.

    Solves ``P_i v = 0`` for every ``i`` by null-space extraction and returns
    the projector onto the solutions (zero when the set is complete).
    """
    tol = TOL.decision if tol is None else tol
    layout = pointer_projectors[0].layout
    stacked = np.vstack([p.matrix for p in pointer_projectors])
    v = nullspace(stacked, tol)
    return HermitianObservable(v @ v.conj().T if v.size else np.zeros((layout.dim, layout.dim)),
                               layout, "P_R")


def support_projector(rho: DensityMatrix, tol: float | None = None) -> np.ndarray:
    tol = TOL.decision if tol is None else tol
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > tol
    vv = v[:, keep]
    return vv @ vv.conj().T


@dataclass(frozen=True, eq=False)
class BooleanDifference:
    """Verdict of :func:`boolean_difference_possible`.

    ``witness`` is a projective observable whose outcome is certain and
    different on every state (when possible); otherwise ``pair`` names the
    most overlapping states and ``overlap`` their ``Tr(rho_i rho_j)``.
    """

    possible: bool
    witness: HermitianObservable | None
    pair: tuple | None
    overlap: float


def boolean_difference_possible(states: Sequence, values: Sequence[float] | None = None,
                                tol: float | None = None) -> BooleanDifference:
    """Single-shot certain discrimination exists iff supports are pairwise orthogonal."""
    tol = TOL.decision if tol is None else tol
    rhos = [as_density(s) for s in states]
    if len(rhos) < 2:
        raise ValueError("need at least two states")
    d = rhos[0].dim
    if any(r.dim != d for r in rhos):
        raise DimensionError("states differ in dimension")
    worst, worst_pair = -1.0, None
    for i, j in combinations(range(len(rhos)), 2):
        ov = float(np.einsum("ij,ji->", rhos[i].matrix, rhos[j].matrix).real)
        if ov > worst:
            worst, worst_pair = ov, (i, j)
    if worst > tol:
        return BooleanDifference(False, None, worst_pair, worst)
    n = len(rhos)
    if values is None:
        values = (1.0, -1.0) if n == 2 else tuple(float(k) for k in range(n, 0, -1))
    projs = [support_projector(r, tol) for r in rhos]
    w = sum(v * p for v, p in zip(values, projs))
    return BooleanDifference(True, HermitianObservable(w, rhos[0].layout, "BD"), None, max(worst, 0.0))


def bloch_vector(rho: DensityMatrix) -> np.ndarray:
    m = rho.matrix
    if m.shape != (2, 2):
        raise DimensionError("Bloch vectors exist for qubit states only")
    return np.array([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real])


@lru_cache(maxsize=4)
def effect_grid(points: int = 41) -> np.ndarray:
    """All grid effects ``E = e0 I + e.sigma`` with ``0 <= E <= I``.

    ``e0`` runs over ``[0, 1]`` and each component of ``e`` over
    ``[-1/2, 1/2]`` with ``points`` values per axis; the eigenvalues
    ``e0 +- |e|`` must lie in ``[0, 1]``.
    """
    e0 = np.linspace(0.0, 1.0, points)
    ax = np.linspace(-0.5, 0.5, points)
    g0, gx, gy, gz = np.meshgrid(e0, ax, ax, ax, indexing="ij")
    r = np.sqrt(gx**2 + gy**2 + gz**2)
    ok = (g0 - r >= -1e-12) & (g0 + r <= 1.0 + 1e-12)
    grid = np.stack([g0[ok], gx[ok], gy[ok], gz[ok]], axis=1)
    grid.setflags(write=False)
    return grid


def grid_boolean_difference(states: Sequence, points: int = 41, eps: float = 0.1) -> bool:
    """Brute-force check over a grid of qubit effects.

    For every pair of states, look for a grid effect that answers 1 on one
    and 0 on the other to within ``eps`` (the grid resolution bound). Only
    qubit states are supported.
    """
    grid = effect_grid(points)
    vecs = [bloch_vector(as_density(s)) for s in states]
    for a, b in combinations(vecs, 2):
        if kernels.effect_grid_search(grid, a, b, eps) < 0:
            return False
    return True


def restricted_trace_distance(r1, r2, subsystem) -> tuple:
    """Trace distance of the full states and of their reductions to ``subsystem``."""
    a, b = as_density(r1), as_density(r2)
    if a.layout != b.layout:
        raise LayoutError("states must share a layout")
    keep = [subsystem] if isinstance(subsystem, str) else list(subsystem)
    return trace_distance(a, b), trace_distance(partial_trace(a, keep), partial_trace(b, keep))


def measurement_constraints(psi_sd: Ket, pointer: str = "D", branch_classes=None) -> list:
    """Constraints for the pointer eigenstates ``|x_1>, |x_2>`` and the entangled state.

    By default the two pointer eigenstates and ``psi_sd`` form three classes.
    When one amplitude vanishes ``psi_sd`` coincides with a product branch, so
    callers pass ``branch_classes`` to put it in that branch's class.
    """
    d = psi_sd.layout.dim_of(pointer)
    lay = CompositeLayout((pointer,), (d,))
    cls = (0, 1, 2) if branch_classes is None else tuple(branch_classes)
    return [
        EigenConstraint(Ket.basis(lay, [0]), (pointer,), cls[0], f"{pointer}1"),
        EigenConstraint(Ket.basis(lay, [1]), (pointer,), cls[1], f"{pointer}2"),
        EigenConstraint(psi_sd, (pointer,), cls[2], "Psi"),
    ]
