"""Measurement chain: spin system, pointer systems and their environment.

Premeasurement is modelled by the unitary it induces rather than by
integrating a Hamiltonian. For a pointer with ready state
``|x0> = (|x1> + |x2>)/sqrt(2)`` the interaction is the controlled unitary

    U = sum_i |s_i><s_i| (x) V_i,      V_i |x0> = |x_i>

with ``V_i |x0_perp> = +-|x_other>`` fixing the action on the rest of the
space (``V_1`` is the Hadamard matrix, ``V_2`` a real rotation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import NormalizationError, PreconditionError, StructureError
from .qcore import TOL, CompositeLayout, HermitianObservable, Ket, tensor
from .restrict import Gemenge, branch_vectors

SPIN = "S"


@dataclass(frozen=True)
class SpinState:
    """``a1|s1> + a2|s2>``."""

    a1: complex
    a2: complex

    def __post_init__(self):
        n2 = abs(self.a1) ** 2 + abs(self.a2) ** 2
        if abs(n2 - 1.0) > TOL.decision:
            raise NormalizationError(f"|a1|^2 + |a2|^2 = {n2!r}, expected 1")

    @classmethod
    def normalized(cls, a1: complex, a2: complex) -> "SpinState":
        n = np.sqrt(abs(a1) ** 2 + abs(a2) ** 2)
        if n == 0:
            raise NormalizationError("both amplitudes are zero")
        return cls(complex(a1) / n, complex(a2) / n)

    @classmethod
    def symmetric(cls) -> "SpinState":
        r = 1 / np.sqrt(2)
        return cls(r, r)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.a1, self.a2], dtype=complex)

    @property
    def probabilities(self) -> tuple:
        return (abs(self.a1) ** 2, abs(self.a2) ** 2)

    def ket(self, label: str = SPIN) -> Ket:
        return Ket(self.amplitudes, CompositeLayout((label,), (2,)))


def spin_basis(i: int, label: str = SPIN) -> Ket:
    """``|s_1>`` for ``i = 0``, ``|s_2>`` for ``i = 1``."""
    return Ket.basis(CompositeLayout((label,), (2,)), [i])


def ready_state(label: str) -> Ket:
    r = 1 / np.sqrt(2)
    return Ket([r, r], CompositeLayout((label,), (2,)))


@dataclass(frozen=True)
class PointerSystem:
    """Two-level pointer (detector ``D`` or observer ``O``).

    ``initial`` defaults to the ready state ``(|x1> + |x2>)/sqrt(2)``; any
    other value makes :func:`premeasure` refuse to run.
    """

    label: str = "O"
    q1: float = 1.0
    q2: float = -1.0
    initial: Ket | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.q1 == self.q2:
            raise ValueError("pointer eigenvalues must differ")
        if self.initial is None:
            object.__setattr__(self, "initial", ready_state(self.label))
        elif self.initial.layout != CompositeLayout((self.label,), (2,)):
            raise ValueError("initial state must live on the pointer's own 2-dim space")

    @property
    def layout(self) -> CompositeLayout:
        return CompositeLayout((self.label,), (2,))

    @property
    def eigenvalues(self) -> tuple:
        return (self.q1, self.q2)

    def basis(self, i: int) -> Ket:
        return Ket.basis(self.layout, [i])

    def is_ready(self, tol: float | None = None) -> bool:
        tol = TOL.decision if tol is None else tol
        ov = abs(np.vdot(ready_state(self.label).amplitudes, self.initial.amplitudes))
        return abs(ov - 1.0) <= tol


def pointer_observable(p: PointerSystem) -> HermitianObservable:
    return HermitianObservable(np.diag([p.q1, p.q2]), p.layout, f"Q_{p.label}")


def pointer_projectors(p: PointerSystem) -> list:
    return [
        HermitianObservable(np.diag([1.0, 0.0]), p.layout, f"P_{p.label}1"),
        HermitianObservable(np.diag([0.0, 1.0]), p.layout, f"P_{p.label}2"),
    ]


_R = 1 / np.sqrt(2)
# V_1 sends x0 -> x1, x0_perp -> x2; V_2 sends x0 -> x2, x0_perp -> x1
_V = (
    np.array([[1, 1], [1, -1]], dtype=complex) * _R,
    np.array([[1, -1], [1, 1]], dtype=complex) * _R,
)


def premeasurement_unitary(control_dim: int = 2) -> np.ndarray:
    """Controlled unitary on ``control (x) pointer`` (4x4 for a spin)."""
    if control_dim != 2:
        raise ValueError("only two-outcome premeasurements are supported")
    u = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        proj = np.zeros((2, 2))
        proj[i, i] = 1.0
        u += np.kron(proj, _V[i])
    return u


def _apply_controlled(psi: Ket, control: str, pointer: PointerSystem) -> Ket:
    joined = tensor(psi, pointer.initial)
    layout = joined.layout
    n = len(layout)
    ci, pi = layout.index(control), layout.index(pointer.label)
    others = [k for k in range(n) if k not in (ci, pi)]
    order = [ci, pi] + others
    t = joined.amplitudes.reshape(layout.dims).transpose(order).reshape(4, -1)
    t = premeasurement_unitary() @ t
    back = np.argsort(order)
    rest_dims = [layout.dims[k] for k in others]
    t = t.reshape([2, 2] + rest_dims).transpose(back).reshape(-1)
    return Ket(t, layout)


def premeasure(
    s: Union[SpinState, Ket, Gemenge], p: PointerSystem, control: str = SPIN
) -> Union[Ket, Gemenge]:
    """Couple pointer ``p`` to the spin.

    A pure spin (or any ket containing the spin factor) maps to
    ``sum_i a_i |s_i>...|x_i>``; a gemenge maps component by component with
    its probabilities unchanged. Chaining ``premeasure(premeasure(s, D), O)``
    gives ``sum_i a_i |s_i>|D_i>|O_i>``.
    """
    if not p.is_ready():
        raise PreconditionError(f"pointer {p.label!r} is not in its ready state")
    if isinstance(s, Gemenge):
        comps = [(premeasure(state, p, control), prob) for state, prob in s.components]
        return Gemenge(comps)
    psi = s.ket(control) if isinstance(s, SpinState) else s
    if not isinstance(psi, Ket):
        raise TypeError("premeasure takes a SpinState, Ket or Gemenge of kets")
    if control not in psi.layout or psi.layout.dim_of(control) != 2:
        raise StructureError(f"state has no two-level {control!r} factor to control on")
    return _apply_controlled(psi, control, p)


def make_test_mixture(s: SpinState, label: str = SPIN) -> Gemenge:
    """Gemenge of spin eigenstates with weights ``|a_i|^2``; phases are dropped."""
    comps = [(spin_basis(i, label), prob) for i, prob in enumerate(s.probabilities) if prob > 0]
    return Gemenge(comps)


def measurement_state(s: SpinState, observer: PointerSystem | None = None,
                      detector: PointerSystem | None = None) -> Ket:
    """``Psi_MS`` (or ``Psi_SDO`` when a detector stage is included)."""
    observer = PointerSystem("O") if observer is None else observer
    psi = s.ket()
    if detector is not None:
        psi = premeasure(psi, detector)
    return premeasure(psi, observer)


def mixed_measurement_ensemble(s: SpinState, observer: PointerSystem | None = None) -> Gemenge:
    """Premeasured test mixture: ``{|s_i>|O_i>, |a_i|^2}``."""
    observer = PointerSystem("O") if observer is None else observer
    return premeasure(make_test_mixture(s), observer)


@dataclass(frozen=True, eq=False)
class EnvironmentSpec:
    """``N_E`` environment qubits, each holding a pair of branch states.

    ``branches[j]`` is ``(|E^j_1>, |E^j_2>)`` as length-2 complex vectors.
    """

    branches: tuple = ()

    def __post_init__(self):
        pairs = []
        for j, (e1, e2) in enumerate(self.branches):
            e1 = np.asarray(e1, dtype=complex).reshape(2)
            e2 = np.asarray(e2, dtype=complex).reshape(2)
            for e in (e1, e2):
                if abs(np.linalg.norm(e) - 1.0) > TOL.decision:
                    raise NormalizationError(f"environment qubit {j} branch state not normalized")
            pairs.append((e1, e2))
        object.__setattr__(self, "branches", tuple(pairs))

    @property
    def count(self) -> int:
        return len(self.branches)

    @classmethod
    def fixed_overlap(cls, n: int, overlap: float) -> "EnvironmentSpec":
        """Every qubit has ``<E_1|E_2> = overlap`` (real, in [-1, 1])."""
        if not -1.0 <= overlap <= 1.0:
            raise ValueError("overlap must lie in [-1, 1]")
        e1 = np.array([1.0, 0.0])
        e2 = np.array([overlap, np.sqrt(max(0.0, 1.0 - overlap**2))])
        return cls(tuple((e1, e2) for _ in range(n)))

    @classmethod
    def haar_random(cls, n: int, rng: np.random.Generator) -> "EnvironmentSpec":
        """Independent Haar-random branch states for each qubit."""
        def draw():
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            return z / np.linalg.norm(z)

        return cls(tuple((draw(), draw()) for _ in range(n)))

    def overlaps(self) -> np.ndarray:
        """``<E^j_2|E^j_1>`` per qubit."""
        return np.array([np.vdot(e2, e1) for e1, e2 in self.branches], dtype=complex)

    def overlap_product(self) -> complex:
        return complex(np.prod(self.overlaps())) if self.count else 1.0 + 0j


def env_label(j: int) -> str:
    return f"E{j + 1}"


def extend_with_environment(psi: Ket, env: EnvironmentSpec, pointer: str = "O") -> Ket:
    """Attach environment records: branch ``i`` gets ``prod_j |E^j_i>``."""
    if env.count == 0:
        return psi
    branches = branch_vectors(psi, pointer)
    labels = tuple(env_label(j) for j in range(env.count))
    env_layout = CompositeLayout(labels, (2,) * env.count)
    out = np.zeros(psi.layout.dim * env_layout.dim, dtype=complex)
    for i, br in enumerate(branches):
        rec = np.ones(1, dtype=complex)
        for pair in env.branches:
            rec = np.kron(rec, pair[i])
        out += np.kron(br, rec)
    return Ket(out, psi.layout.concat(env_layout))
