"""Key distribution with biphoton ququarts over mutually unbiased bases.

Symbols are indices 0..3 into a basis listing. A symbol maps to two bits,
one per photon, with ``H`` (or its image ``D``/``R``) encoded as 1, so
``HH -> "11"`` and ``VV -> "00"``.

Alice prepares basis-I states from ``|V1V2>`` with a dichroic plate at 45
degrees and moves to basis II or III with a zero-order half-wave plate at
22.5 degrees or a quarter-wave plate at 45 degrees acting on both photons.
Bob undoes that plate (half-wave at 22.5, quarter-wave at -45) and reads
the pair in the H/V basis with four detectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .core import QuquartState
from .errors import QuquartError, UnsupportedBasisError
from .optics import (WavePlate, apply, plate_coeffs, qubit_transform, retardance_target_scan,
                     stack_thickness, transform_from_retardances)

BASES = ("I", "II", "III", "IV", "V")
OPERATIONAL_BASES = ("I", "II", "III")

# Fired detector pair for each H/V outcome HH, HV, VH, VV.
DETECTOR_PAIRS = ("D4D2", "D4D1", "D3D2", "D3D1")

_R2 = 1 / np.sqrt(2)
H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
D = np.array([_R2, _R2], dtype=complex)
DBAR = np.array([_R2, -_R2], dtype=complex)
R = np.array([_R2, 1j * _R2], dtype=complex)
L = np.array([_R2, -1j * _R2], dtype=complex)


@dataclass(frozen=True)
class MubBasis:
    index: str
    states: tuple[QuquartState, ...]

    def matrix(self) -> np.ndarray:
        """Columns are the basis states."""
        return np.column_stack([s.c for s in self.states])


def _products(pairs):
    return tuple(QuquartState(np.kron(a, b)) for a, b in pairs)


def _entangled(pairs):
    out = []
    for (a1, b1), sign, (a2, b2) in pairs:
        out.append(QuquartState.from_unnormalized(np.kron(a1, b1) + sign * np.kron(a2, b2)))
    return tuple(out)


def mub_states(index: str) -> MubBasis:
    """The five bases, each in its standard listing order."""
    return _mub_states(str(index).upper())


@lru_cache(maxsize=None)
def _mub_states(index: str) -> MubBasis:
    if index == "I":
        states = _products([(H, H), (H, V), (V, H), (V, V)])
    elif index == "II":
        states = _products([(D, D), (D, DBAR), (DBAR, D), (DBAR, DBAR)])
    elif index == "III":
        states = _products([(R, R), (R, L), (L, R), (L, L)])
    elif index == "IV":
        states = _entangled([((R, H), 1, (L, V)), ((R, H), -1, (L, V)),
                             ((L, H), 1, (R, V)), ((L, H), -1, (R, V))])
    elif index == "V":
        states = _entangled([((H, R), 1, (V, L)), ((H, R), -1, (V, L)),
                             ((H, L), 1, (V, R)), ((H, L), -1, (V, R))])
    else:
        raise UnsupportedBasisError(f"unknown basis {index!r}; expected one of {BASES}")
    return MubBasis(index, states)


def symbol_bits(symbol: int) -> str:
    if symbol not in range(4):
        raise QuquartError(f"symbol must be 0..3, got {symbol}")
    return f"{1 - symbol // 2}{1 - symbol % 2}"


def _check_operational(basis: str) -> str:
    b = str(basis).upper()
    if b not in OPERATIONAL_BASES:
        raise UnsupportedBasisError(
            f"basis {basis!r} is not operational; only {OPERATIONAL_BASES} can be prepared and measured")
    return b


# Preparation ---------------------------------------------------------------

HALF_WAVE = np.pi / 2
QUARTER_WAVE = np.pi / 4

# Dichroic (delta1, delta2) taking |V1V2> to each basis-I state; None means no plate.
_DICHROIC = {0: (HALF_WAVE, HALF_WAVE), 1: (HALF_WAVE, np.pi), 2: (np.pi, HALF_WAVE), 3: None}

# Zero-order plates acting identically on both photons: (optical thickness, orientation).
_ALICE_PLATE = {"I": None, "II": (HALF_WAVE, np.radians(22.5)), "III": (QUARTER_WAVE, np.radians(45.0))}
_BOB_PLATE = {"I": None, "II": (HALF_WAVE, np.radians(22.5)), "III": (QUARTER_WAVE, np.radians(-45.0))}


def zero_order_transform(delta: float, alpha: float) -> np.ndarray:
    g = qubit_transform(plate_coeffs(delta, alpha))
    return np.kron(g, g)


@dataclass(frozen=True)
class AliceRecipe:
    """Optical elements that turn ``|V1V2>`` into a chosen basis state.

    ``dichroic`` holds the plate's optical thickness at the two wavelengths
    (plate at 45 degrees); ``zero_order`` is ``(delta, alpha)`` of the basis
    plate, both ``None`` when absent.
    """

    basis: str
    symbol: int
    dichroic: tuple[float, float] | None
    zero_order: tuple[float, float] | None

    def transform(self) -> np.ndarray:
        g = np.eye(4, dtype=complex)
        if self.dichroic is not None:
            g = transform_from_retardances(self.dichroic[0], self.dichroic[1], np.radians(45.0)) @ g
        if self.zero_order is not None:
            g = zero_order_transform(*self.zero_order) @ g
        return g

    def describe(self) -> str:
        parts = []
        if self.dichroic is None:
            parts.append("no dichroic plate")
        else:
            d1, d2 = (x / np.pi for x in self.dichroic)
            parts.append(f"dichroic plate at 45 deg with delta1={d1:g}pi, delta2={d2:g}pi")
        if self.zero_order is not None:
            delta, alpha = self.zero_order
            kind = "half-wave" if np.isclose(delta, HALF_WAVE) else "quarter-wave"
            parts.append(f"zero-order {kind} plate at {np.degrees(alpha):g} deg")
        return "; ".join(parts)


def alice_recipe(basis: str, symbol: int) -> AliceRecipe:
    b = _check_operational(basis)
    if symbol not in range(4):
        raise QuquartError(f"symbol must be 0..3, got {symbol}")
    return AliceRecipe(b, symbol, _DICHROIC[symbol], _ALICE_PLATE[b])


def alice_prepare(basis: str, symbol: int) -> QuquartState:
    return mub_states(_check_operational(basis)).states[symbol]


def prepare_from_recipe(recipe: AliceRecipe) -> QuquartState:
    return apply(recipe.transform(), QuquartState.basis("VV"))


def dichroic_thickness(targets: tuple[float, float], lambda1: float, lambda2: float,
                       lo_mm: float = 3.3, hi_mm: float = 3.5, step_mm: float = 1e-5,
                       material: str = "quartz") -> tuple[float, float]:
    """Single-plate thickness closest to the target optical thicknesses (mod pi).

    Returns ``(thickness_mm, mismatch)``.
    """
    h, mism = retardance_target_scan(targets, lambda1, lambda2, np.arange(lo_mm, hi_mm, step_mm), material)
    k = int(np.argmin(mism))
    return float(h[k]), float(mism[k])


# Measurement ---------------------------------------------------------------

def bob_transform(basis: str) -> np.ndarray:
    return _bob_transform(_check_operational(basis)).copy()


@lru_cache(maxsize=None)
def _bob_transform(basis: str) -> np.ndarray:
    plate = _BOB_PLATE[basis]
    g = np.eye(4, dtype=complex) if plate is None else zero_order_transform(*plate)
    g.setflags(write=False)
    return g


def outcome_probabilities(state: QuquartState, basis: str) -> np.ndarray:
    """Probabilities of the four detector pairs after Bob's basis plate."""
    p = np.abs(_bob_transform(_check_operational(basis)) @ state.c) ** 2
    return p / p.sum()


def bob_measure(state: QuquartState, guess_basis: str, rng=None) -> str:
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return DETECTOR_PAIRS[int(gen.choice(4, p=outcome_probabilities(state, guess_basis)))]


def outcome_symbol(pair: str) -> int:
    return DETECTOR_PAIRS.index(pair)


def outcome_diagonal(counts: Sequence[float]) -> np.ndarray:
    """Relative frequencies of the four detector pairs (diagonal of the measured state)."""
    n = np.asarray(counts, dtype=float)
    if n.shape != (4,) or np.any(n < 0) or n.sum() <= 0:
        raise QuquartError("need four non-negative counts with a positive sum")
    return n / n.sum()


# Sessions ------------------------------------------------------------------

Channel = Callable[[QuquartState, np.random.Generator], QuquartState]


def intercept_resend(bases: Sequence[str] = OPERATIONAL_BASES) -> Channel:
    """Eavesdropper that measures in a random basis and resends what she saw."""
    bases = tuple(_check_operational(b) for b in bases)

    def channel(state, rng):
        b = bases[int(rng.integers(len(bases)))]
        return alice_prepare(b, outcome_symbol(bob_measure(state, b, rng)))

    return channel


@dataclass
class SessionResult:
    sent: int
    sifted: int
    key_alice: list[int]
    key_bob: list[int]
    qber: float
    per_basis: dict = field(default_factory=dict)
    transcript: list[dict] | None = None

    def key_bits(self, who: str = "alice") -> str:
        key = self.key_alice if who == "alice" else self.key_bob
        return "".join(symbol_bits(s) for s in key)

    def to_dict(self) -> dict:
        return {"sent": self.sent, "sifted": self.sifted, "qber": self.qber, "per_basis": self.per_basis}


def run_session(n: int, bases: Sequence[str] = OPERATIONAL_BASES, p: float = 0.0, dark_rate: float = 0.0,
                seed: int = 0, eve: Channel | None = None, transcript: bool = False) -> SessionResult:
    """Simulate ``n`` rounds.

    With probability ``p`` the channel depolarizes the pair and with
    probability ``dark_rate`` an accidental coincidence replaces the event;
    both give a uniformly random detector pair. Round ``k`` uses its own
    stream seeded by ``(seed, k)``.
    """
    if n <= 0:
        raise QuquartError("number of rounds must be positive")
    bases = tuple(_check_operational(b) for b in bases)
    if not bases or len(set(bases)) != len(bases):
        raise QuquartError("bases must be a nonempty set")
    for name, val in (("p", p), ("dark_rate", dark_rate)):
        if not 0.0 <= val <= 1.0:
            raise QuquartError(f"{name} must lie in [0, 1], got {val}")

    key_a, key_b, rows = [], [], []
    table = {b: {"sent": 0, "sifted": 0, "errors": 0, "outcomes": [0, 0, 0, 0]} for b in bases}
    for k in range(n):
        rng = np.random.default_rng([seed, k])
        ba = bases[int(rng.integers(len(bases)))]
        sym = int(rng.integers(4))
        bb = bases[int(rng.integers(len(bases)))]
        state = alice_prepare(ba, sym)
        if eve is not None:
            state = eve(state, rng)
        noisy = rng.random() < p
        dark = rng.random() < dark_rate
        if noisy or dark:
            pair = DETECTOR_PAIRS[int(rng.integers(4))]
        else:
            pair = bob_measure(state, bb, rng)
        got = outcome_symbol(pair)
        table[ba]["sent"] += 1
        if ba == bb:
            key_a.append(sym)
            key_b.append(got)
            table[ba]["sifted"] += 1
            table[ba]["errors"] += int(got != sym)
            table[ba]["outcomes"][got] += 1
        if transcript:
            rows.append({"round": k, "alice_basis": ba, "symbol": sym, "bob_basis": bb,
                         "detectors": pair, "bob_symbol": got, "sifted": ba == bb})
    sifted = len(key_a)
    errors = sum(a != b for a, b in zip(key_a, key_b))
    qber = errors / sifted if sifted else 0.0
    return SessionResult(n, sifted, key_a, key_b, qber, table, rows if transcript else None)


def write_transcript(result: SessionResult, path) -> None:
    with open(path, "w") as fh:
        for row in result.transcript or []:
            fh.write(json.dumps(row) + "\n")


# Tilt calibration ----------------------------------------------------------

def tilt_rates(delta1, delta2):
    """``(singles, coincidence)`` for the ``|H1V2>`` target: ``sin^2 d1`` and ``sin^2 d1 cos^2 d2``."""
    s = np.sin(delta1) ** 2
    return s, s * np.cos(delta2) ** 2


@dataclass
class TiltScan:
    theta_deg: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    singles: np.ndarray
    coincidence: np.ndarray

    def coincidence_maxima(self) -> np.ndarray:
        """Indices of interior local maxima of the coincidence curve."""
        c = self.coincidence
        return np.flatnonzero((c[1:-1] > c[:-2]) & (c[1:-1] >= c[2:])) + 1


def _pair_deltas(plates, lambda1, lambda2, theta_rad):
    return (stack_thickness(plates, lambda1, theta_rad), stack_thickness(plates, lambda2, theta_rad))


def tilt_scan(plates: Sequence[WavePlate], lambda1: float, lambda2: float, theta_deg) -> TiltScan:
    """Singles and coincidences versus tilt for coaxial plates (use ``axis_sense='crossed'`` to subtract)."""
    th = np.asarray(theta_deg, dtype=float)
    d1 = np.array([stack_thickness(plates, lambda1, t) for t in np.radians(th)])
    d2 = np.array([stack_thickness(plates, lambda2, t) for t in np.radians(th)])
    s, c = tilt_rates(d1, d2)
    return TiltScan(th, d1, d2, s, c)


def best_tilt(plates: Sequence[WavePlate], lambda1: float, lambda2: float,
              lo_deg: float = 0.0, hi_deg: float = 15.0, step_deg: float = 0.05) -> tuple[float, float]:
    """Tilt of the highest coincidence in a range, refined by a bounded 1-D search.

    Returns ``(theta_deg, coincidence)``.
    """
    scan = tilt_scan(plates, lambda1, lambda2, np.arange(lo_deg, hi_deg + step_deg / 2, step_deg))
    k = int(np.argmax(scan.coincidence))
    a = scan.theta_deg[max(k - 1, 0)]
    b = scan.theta_deg[min(k + 1, len(scan.theta_deg) - 1)]

    def neg(t):
        return -tilt_rates(*_pair_deltas(plates, lambda1, lambda2, np.radians(t)))[1]

    res = minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-9})
    return float(res.x), float(-res.fun)


def dichroic_pair(thick_mm: float = 3.716, thin_mm: float = 0.315) -> tuple[WavePlate, WavePlate]:
    """Two quartz plates with orthogonal axes, acting as one thinner dichroic plate."""
    return (WavePlate(thick_mm, np.radians(45.0)), WavePlate(thin_mm, np.radians(45.0), axis_sense="crossed"))
