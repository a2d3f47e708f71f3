"""Pure-state algebra for polarization ququarts.

A ququart is stored as four complex amplitudes over the product basis
``|H1H2>, |H1V2>, |V1H2>, |V1V2>`` where the index 1/2 labels the two
frequency modes of the photon pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import QuquartError

BASIS_LABELS = ("HH", "HV", "VH", "VV")

SEPARABILITY_TOL = 1e-10
_NORM_SLACK = 1e-9
_PHASE_CUTOFF = 1e-9


@dataclass(frozen=True, eq=False)
class QuquartState:
    """Normalized pure state of a photon pair.

    Inputs within ``1e-9`` of unit norm are rescaled to unit norm; anything
    further off is rejected (use :meth:`from_unnormalized` for raw vectors).
    The global phase is kept exactly as given.
    """

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=complex).reshape(-1)
        if c.shape != (4,):
            raise QuquartError(f"a ququart needs 4 amplitudes, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise QuquartError("amplitudes must be finite")
        norm2 = float(np.vdot(c, c).real)
        if abs(norm2 - 1.0) > _NORM_SLACK:
            raise QuquartError(f"state is not normalized (|c|^2 = {norm2:.6g})")
        c = c / np.sqrt(norm2)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_unnormalized(cls, c) -> "QuquartState":
        c = np.asarray(c, dtype=complex).reshape(-1)
        norm = np.linalg.norm(c)
        if not np.isfinite(norm) or norm < 1e-300:
            raise QuquartError("cannot normalize a zero vector")
        return cls(c / norm)

    @classmethod
    def from_reals(cls, values, normalize: bool = True) -> "QuquartState":
        """Build from ``(Re c1, Im c1, ..., Re c4, Im c4)``."""
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.shape != (8,):
            raise QuquartError(f"expected 8 real numbers, got {v.size}")
        c = v[0::2] + 1j * v[1::2]
        return cls.from_unnormalized(c) if normalize else cls(c)

    @classmethod
    def product(cls, first, second) -> "QuquartState":
        """Tensor product of two single-photon (H, V) amplitude pairs."""
        return cls.from_unnormalized(np.kron(np.asarray(first, complex), np.asarray(second, complex)))

    @classmethod
    def basis(cls, label: str) -> "QuquartState":
        c = np.zeros(4, dtype=complex)
        c[BASIS_LABELS.index(label.upper())] = 1.0
        return cls(c)

    def to_reals(self) -> list[float]:
        out = []
        for z in self.c:
            out.extend((float(z.real), float(z.imag)))
        return out

    def canonical(self) -> "QuquartState":
        """Copy with the first non-negligible amplitude made real and positive."""
        for z in self.c:
            if abs(z) > _PHASE_CUTOFF:
                return QuquartState(self.c * (np.conj(z) / abs(z)))
        return self  # unreachable for a normalized state

    def isclose(self, other: "QuquartState", atol: float = 1e-10) -> bool:
        """Equality up to global phase."""
        return bool(np.allclose(self.canonical().c, other.canonical().c, atol=atol, rtol=0))

    def __repr__(self):
        parts = ", ".join(f"{z.real:+.4f}{z.imag:+.4f}j" for z in self.canonical().c)
        return f"QuquartState([{parts}])"


@dataclass(frozen=True, eq=False)
class QutritState:
    """Degenerate-mode biphoton: amplitudes of ``|2,0>, |1,1>, |0,2>``."""

    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=complex).reshape(-1)
        if c.shape != (3,):
            raise QuquartError("a qutrit needs 3 amplitudes")
        norm = np.linalg.norm(c)
        if norm < 1e-300:
            raise QuquartError("cannot normalize a zero vector")
        c = c / norm
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_symmetric_ququart(cls, state: QuquartState) -> "QutritState":
        """Map a state with ``c2 == c3`` onto the qutrit ``(c1, sqrt(2) c2, c4)``."""
        c = state.c
        if abs(c[1] - c[2]) > 1e-9:
            raise QuquartError("ququart is not symmetric under photon exchange (c2 != c3)")
        return cls(np.array([c[0], np.sqrt(2) * c[1], c[3]]))


class StokesVector(NamedTuple):
    s0: float
    s1: float
    s2: float
    s3: float

    @property
    def polarized(self) -> float:
        return float(np.sqrt(self.s1**2 + self.s2**2 + self.s3**2))


# Named states --------------------------------------------------------------

_R2 = 1 / np.sqrt(2)
PHI_PLUS = QuquartState([_R2, 0, 0, _R2])
PHI_MINUS = QuquartState([_R2, 0, 0, -_R2])
PSI_PLUS = QuquartState([0, _R2, _R2, 0])
PSI_MINUS = QuquartState([0, _R2, -_R2, 0])


def _amplitudes(state) -> np.ndarray:
    return state.c if isinstance(state, (QuquartState, QutritState)) else np.asarray(state, dtype=complex)


def reduced_density(state: QuquartState, subsystem: str = "second") -> np.ndarray:
    """Single-photon density matrix in the (H, V) basis.

    ``subsystem`` names the photon that is kept; the other one is traced out.
    """
    c = _amplitudes(state).reshape(2, 2)  # c[photon1, photon2]
    if subsystem == "second":
        return c.T @ c.conj()
    if subsystem == "first":
        return c @ c.conj().T
    raise QuquartError(f"subsystem must be 'first' or 'second', not {subsystem!r}")


def hermitian_eigvals_2x2(m: np.ndarray) -> tuple[float, float]:
    """Eigenvalues of a 2x2 Hermitian matrix from trace and determinant, ascending."""
    tr = float((m[0, 0] + m[1, 1]).real)
    det = float((m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real)
    disc = np.sqrt(max(tr * tr - 4.0 * det, 0.0))
    return (tr - disc) / 2, (tr + disc) / 2


def separability_defect(state: QuquartState) -> float:
    """``|c1 c4 - c2 c3|^2``; zero exactly for product states, 1/4 for Bell states."""
    c = _amplitudes(state)
    return float(abs(c[0] * c[3] - c[1] * c[2]) ** 2)


def factorize(state: QuquartState, tol: float = SEPARABILITY_TOL):
    """Split a product state into its two photon states.

    Returns ``(psi1, psi2)`` as normalized (H, V) amplitude arrays, or ``None``
    when the state is entangled. The tensor product reproduces the input up
    to a global phase.
    """
    if separability_defect(state) >= tol:
        return None
    c = _amplitudes(state).reshape(2, 2)
    # rank-1 matrix: pick its largest row and column
    i, j = np.unravel_index(np.argmax(np.abs(c)), c.shape)
    first = c[:, j] / np.linalg.norm(c[:, j])
    second = c[i, :] / np.linalg.norm(c[i, :])
    # fold the residual phase into the first photon
    phase = np.vdot(np.kron(first, second), c.reshape(-1))
    first = first * np.exp(1j * np.angle(phase))
    return first, second


def stokes(state: QuquartState) -> StokesVector:
    """Stokes parameters summed over the two frequency modes."""
    c1, c2, c3, c4 = _amplitudes(state)
    cross = np.conj(c1) * (c2 + c3) + c4 * (np.conj(c2) + np.conj(c3))
    s0 = 2.0 * float(np.sum(np.abs(_amplitudes(state)) ** 2))
    return StokesVector(s0, 2.0 * float(abs(c1) ** 2 - abs(c4) ** 2), 2.0 * float(cross.real), 2.0 * float(cross.imag))


MOMENT_NAMES = ("A", "B", "C", "D", "ReE", "ImE", "ReF", "ImF", "ReG", "ImG", "ReI", "ImI", "ReK", "ImK", "ReL", "ImL")

# (row, column) of each complex moment inside the density matrix rho = c c^dagger
_OFFDIAG = {"E": (1, 0), "F": (2, 0), "G": (3, 0), "I": (2, 1), "K": (3, 1), "L": (3, 2)}


class CoherenceMatrix4:
    """Fourth-order moment matrix of the biphoton field.

    ``matrix`` holds ``rho = c c^dagger``. The named moments follow the usual
    definitions (``E = c1* c2``, ``F = c1* c3`` ...), so ``E`` sits at
    ``rho[1, 0]``. :meth:`moment_layout` returns the transposed arrangement
    with ``A E F G`` along the first row.
    """

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.shape != (4, 4):
            raise QuquartError("coherence matrix must be 4x4")
        self.matrix = m

    @classmethod
    def from_moments(cls, moments) -> "CoherenceMatrix4":
        """Assemble from the 16 reals ordered as :data:`MOMENT_NAMES`."""
        v = dict(zip(MOMENT_NAMES, np.asarray(moments, dtype=float)))
        m = np.diag([v["A"], v["B"], v["C"], v["D"]]).astype(complex)
        for name, (i, j) in _OFFDIAG.items():
            z = v["Re" + name] + 1j * v["Im" + name]
            m[i, j] = z
            m[j, i] = np.conj(z)
        return cls(m)

    def moment(self, name: str) -> complex | float:
        if name in "ABCD" and len(name) == 1:
            k = "ABCD".index(name)
            return float(self.matrix[k, k].real)
        i, j = _OFFDIAG[name]
        return complex(self.matrix[i, j])

    def moments(self) -> np.ndarray:
        out = []
        for name in MOMENT_NAMES:
            if len(name) == 1:
                out.append(self.moment(name))
            else:
                z = self.moment(name[2:])
                out.append(z.real if name.startswith("Re") else z.imag)
        return np.array(out, dtype=float)

    def moment_layout(self) -> np.ndarray:
        return self.matrix.T.copy()

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def __getattr__(self, name):
        if name in ("A", "B", "C", "D", "E", "F", "G", "I", "K", "L"):
            return self.moment(name)
        raise AttributeError(name)


def coherence_matrix(state: QuquartState) -> CoherenceMatrix4:
    c = _amplitudes(state)
    return CoherenceMatrix4(np.outer(c, c.conj()))


def single_photon_coherence(state: QuquartState, photon: int) -> np.ndarray:
    """2x2 coherence matrix ``[[<a+a>, <a+b>], [<a b+>, <b+b>]]`` of photon 1 or 2."""
    keep = {1: "first", 2: "second"}[photon]
    return reduced_density(state, keep).T


def polarization_degree_p4(state: QuquartState) -> float:
    s = stokes(state)
    return s.polarized / s.s0


def polarization_degree_p4_from_coherence(state: QuquartState) -> float:
    """Same quantity built from the two single-photon coherence matrices.

    Uses ``|S|^2 = sum_j (Tr^2 K_j - 4 det K_j) + 2 s(1).s(2)`` where ``s(j)``
    are the single-photon Stokes vectors.
    """
    num = 0.0
    svec = []
    tr_sum = 0.0
    for photon in (1, 2):
        k = single_photon_coherence(state, photon)
        tr = float(np.trace(k).real)
        det = float(np.linalg.det(k).real)
        num += tr * tr - 4.0 * det
        tr_sum += tr
        svec.append(np.array([(k[0, 0] - k[1, 1]).real, 2 * k[0, 1].real, 2 * k[0, 1].imag]))
    num += 2.0 * float(svec[0] @ svec[1])
    return float(np.sqrt(max(num, 0.0)) / tr_sum)


def local_purity_invariant(state: QuquartState) -> float:
    """``sum_j (Tr^2 K_j - 2 det K_j)``, unchanged by any local unitary."""
    total = 0.0
    for photon in (1, 2):
        k = single_photon_coherence(state, photon)
        total += float(np.trace(k).real) ** 2 - 2.0 * float(np.linalg.det(k).real)
    return total


def polarization_degree_p3(state: QutritState) -> float:
    c1, c2, c3 = _amplitudes(state)
    val = (abs(c1) ** 2 - abs(c3) ** 2) ** 2 + 2.0 * abs(np.conj(c1) * c2 + np.conj(c2) * c3) ** 2
    return float(np.sqrt(val))


def fidelity(a, b) -> float:
    """Squared overlap ``|<a|b>|^2`` of two pure states (amplitude arrays are normalized first)."""
    x = _amplitudes(a)
    y = _amplitudes(b)
    return float(abs(np.vdot(x, y)) ** 2 / (np.vdot(x, x).real * np.vdot(y, y).real))


def random_pure_state(seed=None) -> QuquartState:
    """Haar-random ququart; ``seed`` may be an int, a sequence or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    return QuquartState.from_unnormalized(z)


def random_product_state(seed=None) -> QuquartState:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    b = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QuquartState.product(a / np.linalg.norm(a), b / np.linalg.norm(b))


# Serialization -------------------------------------------------------------

def state_to_json(state: QuquartState) -> str:
    return json.dumps({"amplitudes": state.to_reals()})


def state_from_json(text: str) -> QuquartState:
    """Read a state record; accepts ``{"amplitudes": [8 reals]}`` or a bare list."""
    data = json.loads(text)
    if isinstance(data, dict):
        if "amplitudes" not in data:
            raise QuquartError("state record needs an 'amplitudes' field")
        data = data["amplitudes"]
    return QuquartState.from_reals(data, normalize=True)
