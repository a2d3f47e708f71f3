"""Measurement protocols for biphoton polarization tomography.

Every setting reduces to a complex row vector ``v`` such that the expected
coincidence rate of a pure state ``c`` is ``|v . c|^2``. Protocol 1 uses a
quarter- and half-wave plate in each arm of a Brown-Twiss scheme followed by
frequency-selective detection of vertical polarization. Protocol 2 rotates
two fixed thick plates in front of a single vertical analyzer.

Setting angles are stored in degrees so record files round-trip exactly;
they are converted to radians at evaluation time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .core import MOMENT_NAMES, CoherenceMatrix4, QuquartState
from .errors import ProtocolError, QuquartError
from .optics import WavePlate, ququart_transform

DEFAULT_LAMBDAS_P1 = (702.0, 605.0)
DEFAULT_LAMBDAS_P2 = (667.0, 635.0)

# Thick plates QP1 and QP2 of the rotating-plate protocol.
DEFAULT_P2_PLATES = (WavePlate(0.821), WavePlate(0.715))
DEFAULT_P2_THETAS = (90.0, 105.0, 120.0, 135.0)

RECORDS_FORMAT = "ququart-records"

_SQ2 = np.sqrt(2.0)


# Protocol 1 ----------------------------------------------------------------

@dataclass(frozen=True)
class Protocol1Setting:
    """Quarter-wave (chi) and half-wave (theta) orientations, in degrees.

    The ``_s`` plates sit in the transmitted arm and analyse photon 1, the
    ``_i`` plates sit in the reflected arm and analyse photon 2. Reflected-arm
    angles carry the mirror sign of the laboratory frame.
    """

    chi_s: float
    theta_s: float
    chi_i: float
    theta_i: float

    protocol = "P1"

    def angles_deg(self) -> tuple[float, float, float, float]:
        return (self.chi_s, self.theta_s, self.chi_i, self.theta_i)

    def to_record(self) -> dict:
        return {"chi_s_deg": self.chi_s, "theta_s_deg": self.theta_s,
                "chi_i_deg": self.chi_i, "theta_i_deg": self.theta_i}

    @classmethod
    def from_record(cls, rec: dict) -> "Protocol1Setting":
        return cls(rec["chi_s_deg"], rec["theta_s_deg"], rec["chi_i_deg"], rec["theta_i_deg"])


_CANONICAL_ROWS = (
    (0, 45, 0, -45), (0, 45, 0, 0), (0, 0, 0, 0), (0, 0, 0, -45),
    (0, 22.5, 0, -45), (0, 22.5, 0, 0), (45, 22.5, 0, 0), (45, 22.5, 0, -45),
    (45, 22.5, 0, -22.5), (45, 22.5, -45, -22.5), (0, 22.5, -45, -22.5), (0, 45, -45, -22.5),
    (0, 0, -45, -22.5), (0, 0, -90, -22.5), (0, 45, -90, -22.5), (0, 22.5, -90, -22.5),
)


def protocol1_settings() -> list[Protocol1Setting]:
    """The sixteen canonical settings in their standard order."""
    return [Protocol1Setting(*map(float, row)) for row in _CANONICAL_ROWS]


def arm_coefficients(chi: float, theta: float) -> tuple[complex, complex]:
    """Amplitudes ``(a, b)`` with which H and V reach the vertical analyzer of one arm.

    ``chi`` and ``theta`` are the quarter- and half-wave orientations in radians;
    both plates are ideal zero-order retarders.
    """
    tq = (1 + 1j * np.cos(2 * chi)) / _SQ2
    rq = 1j * np.sin(2 * chi) / _SQ2
    th = 1j * np.cos(2 * theta)
    rh = 1j * np.sin(2 * theta)
    a = -rh * np.conj(tq) - th * rq
    b = -rh * np.conj(rq) + th * tq
    return complex(a), complex(b)


def _p1_arms(setting: Protocol1Setting):
    chi_s, th_s, chi_i, th_i = np.radians(setting.angles_deg())
    return arm_coefficients(chi_s, th_s), arm_coefficients(chi_i, th_i)


def _p1_vector(first, second) -> np.ndarray:
    a1, b1 = first
    a2, b2 = second
    return 0.5 * np.array([a1 * a2, a1 * b2, b1 * a2, b1 * b2])


def protocol1_vector(setting: Protocol1Setting) -> np.ndarray:
    """Row ``v`` with ``M = v . c``; the 1/2 is the beamsplitter amplitude."""
    return _p1_vector(*_p1_arms(setting))


def protocol1_amplitude(setting: Protocol1Setting, state: QuquartState, lambda1=None, lambda2=None) -> complex:
    """Process amplitude for one setting.

    The plates are zero-order, so the wavelengths do not enter; they are
    accepted to keep the signature parallel to :func:`protocol2_rate`.
    """
    return complex(protocol1_vector(setting) @ state.c)


def protocol1_rate(setting: Protocol1Setting, state: QuquartState, lambda1=None, lambda2=None) -> float:
    return abs(protocol1_amplitude(setting, state)) ** 2


def nonselective_rate(setting: Protocol1Setting, state: QuquartState, lambda1=None, lambda2=None) -> float:
    """Coincidence rate with frequency-blind detectors.

    Both photon-to-arm assignments contribute; the rate is normalized to the
    events where the photons leave through different ports, so ``|VV>``
    with every plate at zero gives 1.
    """
    arm_s, arm_i = _p1_arms(setting)
    m = _p1_vector(arm_s, arm_i) @ state.c
    m_swapped = _p1_vector(arm_i, arm_s) @ state.c
    return float(2.0 * (abs(m) ** 2 + abs(m_swapped) ** 2))


# Protocol 2 ----------------------------------------------------------------

@dataclass(frozen=True)
class Protocol2Setting:
    """Orientations (degrees) of the two rotating thick plates."""

    theta: float
    phi: float
    plate1: WavePlate = DEFAULT_P2_PLATES[0]
    plate2: WavePlate = DEFAULT_P2_PLATES[1]

    protocol = "P2"

    def to_record(self) -> dict:
        return {"theta_deg": self.theta, "phi_deg": self.phi}


def protocol2_grid(thetas: Sequence[float] = DEFAULT_P2_THETAS, phi_count: int = 36,
                   plates: tuple[WavePlate, WavePlate] = DEFAULT_P2_PLATES) -> list[Protocol2Setting]:
    """Cartesian grid of first-plate angles and ``phi_count`` uniform second-plate angles on [0, 180)."""
    if phi_count < 4:
        raise QuquartError(f"phi_count must be at least 4, got {phi_count}")
    step = 180.0 / phi_count
    return [Protocol2Setting(float(t), k * step, plates[0], plates[1])
            for t in thetas for k in range(phi_count)]


@lru_cache(maxsize=4096)
def _protocol2_row(setting: Protocol2Setting, lambda1: float, lambda2: float) -> np.ndarray:
    g1 = ququart_transform(setting.plate1.rotated(np.radians(setting.theta)), lambda1, lambda2)
    g2 = ququart_transform(setting.plate2.rotated(np.radians(setting.phi)), lambda1, lambda2)
    row = (g1 @ g2)[3]
    row.setflags(write=False)
    return row


def protocol2_vector(setting: Protocol2Setting, lambda1: float, lambda2: float) -> np.ndarray:
    """Row 4 of the product of both plate transforms (the ``|V1V2>`` projection)."""
    return _protocol2_row(setting, float(lambda1), float(lambda2))


def protocol2_rate(setting: Protocol2Setting, state: QuquartState,
                   lambda1: float = DEFAULT_LAMBDAS_P2[0], lambda2: float = DEFAULT_LAMBDAS_P2[1]) -> float:
    """Probability of ``|V1V2>`` after both plates."""
    return float(abs(protocol2_vector(setting, lambda1, lambda2) @ state.c) ** 2)


Setting = Union[Protocol1Setting, Protocol2Setting]


# Linear structure ----------------------------------------------------------

def measurement_vector(setting: Setting, lambdas=None) -> np.ndarray:
    if isinstance(setting, Protocol1Setting):
        return protocol1_vector(setting)
    if isinstance(setting, Protocol2Setting):
        lam = DEFAULT_LAMBDAS_P2 if lambdas is None else lambdas
        return protocol2_vector(setting, *lam)
    raise ProtocolError(f"unknown setting type {type(setting).__name__}")


def measurement_matrix(settings: Sequence[Setting], lambdas=None) -> np.ndarray:
    return np.array([measurement_vector(s, lambdas) for s in settings])


def moment_design_matrix(settings: Sequence[Setting], lambdas=None) -> np.ndarray:
    """Real matrix ``W`` with ``rates = W @ moments`` (moments ordered as MOMENT_NAMES).

    Rates are linear in the coherence matrix, so column ``k`` is the rate
    vector of the Hermitian matrix whose only nonzero moment is the ``k``-th.
    """
    vs = measurement_matrix(settings, lambdas)
    cols = []
    for k in range(len(MOMENT_NAMES)):
        e = np.zeros(len(MOMENT_NAMES))
        e[k] = 1.0
        rho = CoherenceMatrix4.from_moments(e).matrix
        cols.append(np.einsum("ni,ij,nj->n", vs, rho, vs.conj()).real)
    return np.column_stack(cols)


# Records -------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementRecord:
    setting: Setting
    counts: float
    exposure_s: float = 1.0

    def __post_init__(self):
        if not self.counts >= 0:
            raise QuquartError(f"counts must be non-negative, got {self.counts}")
        if not self.exposure_s > 0:
            raise QuquartError(f"exposure must be positive, got {self.exposure_s}")


@dataclass
class RecordSet:
    """Records of one protocol run plus the metadata needed to model them."""

    protocol: str
    records: list[MeasurementRecord]
    lambdas_nm: tuple[float, float] = DEFAULT_LAMBDAS_P1
    brightness: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.protocol not in ("P1", "P2"):
            raise ProtocolError(f"protocol must be 'P1' or 'P2', not {self.protocol!r}")
        for rec in self.records:
            if rec.setting.protocol != self.protocol:
                raise ProtocolError(f"{self.protocol} record set contains a {rec.setting.protocol} setting")
        if self.protocol == "P2" and self.records:
            p = (self.records[0].setting.plate1, self.records[0].setting.plate2)
            if any((r.setting.plate1, r.setting.plate2) != p for r in self.records):
                raise ProtocolError("all P2 records must share the same plate pair")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def settings(self) -> list[Setting]:
        return [r.setting for r in self.records]

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.counts for r in self.records], dtype=float)

    @property
    def exposures(self) -> np.ndarray:
        return np.array([r.exposure_s for r in self.records], dtype=float)

    def vectors(self) -> np.ndarray:
        """Measurement rows, each scaled by the square root of its exposure."""
        return measurement_matrix(self.settings, self.lambdas_nm) * np.sqrt(self.exposures)[:, None]

    def truncated(self, n: int) -> "RecordSet":
        return RecordSet(self.protocol, self.records[:n], self.lambdas_nm, self.brightness, dict(self.meta))

    def scaled(self, k: int) -> "RecordSet":
        recs = [MeasurementRecord(r.setting, r.counts * k, r.exposure_s) for r in self.records]
        return RecordSet(self.protocol, recs, self.lambdas_nm, self.brightness, dict(self.meta))


def simulate_counts(predicted_rate: float, brightness: float, exposure: float, rng=None) -> int:
    """Poisson draw with mean ``rate * brightness * exposure``."""
    if not 0.0 <= predicted_rate <= 1.0 + 1e-12:
        raise QuquartError(f"rate must lie in [0, 1], got {predicted_rate}")
    if not brightness > 0:
        raise QuquartError("brightness must be positive")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return int(gen.poisson(predicted_rate * brightness * exposure))


def run_experiment(state: QuquartState, protocol: str = "P1", brightness: float = 1e4,
                   exposure: float = 1.0, seed: int = 0, noiseless: bool = False,
                   settings: Sequence[Setting] | None = None, lambdas=None,
                   visibility: float = 1.0, expected_total: float | None = None) -> RecordSet:
    """Simulate one record per setting.

    ``visibility < 1`` mixes each predicted rate with that of the maximally
    mixed state. Record ``k`` draws from its own stream seeded by
    ``(seed, k)``, so the result does not depend on evaluation order.
    In noiseless mode the counts are the exact expectations.
    ``expected_total`` overrides ``brightness`` so that the expected counts
    summed over all records equal the given number.
    """
    if protocol not in ("P1", "P2"):
        raise ProtocolError(f"protocol must be 'P1' or 'P2', not {protocol!r}")
    if settings is None:
        settings = protocol1_settings() if protocol == "P1" else protocol2_grid()
    if lambdas is None:
        lambdas = DEFAULT_LAMBDAS_P1 if protocol == "P1" else DEFAULT_LAMBDAS_P2
    if not 0.0 <= visibility <= 1.0:
        raise QuquartError(f"visibility must lie in [0, 1], got {visibility}")
    vs = measurement_matrix(settings, lambdas)
    rates = np.abs(vs @ state.c) ** 2
    if visibility < 1.0:
        mixed = np.sum(np.abs(vs) ** 2, axis=1) / 4.0
        rates = visibility * rates + (1.0 - visibility) * mixed
    rates = np.clip(rates, 0.0, 1.0)
    if expected_total is not None:
        brightness = expected_total / (exposure * rates.sum())
    records = []
    for k, (s, rate) in enumerate(zip(settings, rates)):
        if noiseless:
            n = float(rate * brightness * exposure)
        else:
            n = simulate_counts(rate, brightness, exposure, np.random.default_rng([seed, k]))
        records.append(MeasurementRecord(s, n, exposure))
    return RecordSet(protocol, records, tuple(float(x) for x in lambdas), brightness)


# Record files --------------------------------------------------------------

def records_to_dict(rs: RecordSet) -> dict:
    doc = {"format": RECORDS_FORMAT, "version": 1, "protocol": rs.protocol,
           "lambdas_nm": list(rs.lambdas_nm)}
    if rs.brightness is not None:
        doc["brightness"] = rs.brightness
    if rs.protocol == "P2" and rs.records:
        s0 = rs.records[0].setting
        doc["plates"] = [s0.plate1.to_record(), s0.plate2.to_record()]
    if rs.meta:
        doc["meta"] = rs.meta
    doc["records"] = [dict(r.setting.to_record(), counts=r.counts, exposure_s=r.exposure_s)
                      for r in rs.records]
    return doc


def records_from_dict(doc: dict) -> RecordSet:
    if doc.get("format") != RECORDS_FORMAT:
        raise ProtocolError(f"not a records document (format={doc.get('format')!r})")
    protocol = doc.get("protocol")
    if protocol not in ("P1", "P2"):
        raise ProtocolError(f"records document lacks a valid protocol (got {protocol!r})")
    if "lambdas_nm" not in doc:
        raise ProtocolError("records document lacks 'lambdas_nm'")
    if protocol == "P2":
        if "plates" not in doc:
            raise ProtocolError("P2 records document lacks 'plates'")
        plates = [WavePlate.from_record(p) for p in doc["plates"]]
    records = []
    for rec in doc.get("records", []):
        try:
            if protocol == "P1":
                s = Protocol1Setting.from_record(rec)
            else:
                s = Protocol2Setting(rec["theta_deg"], rec["phi_deg"], plates[0], plates[1])
            records.append(MeasurementRecord(s, rec["counts"], rec.get("exposure_s", 1.0)))
        except KeyError as exc:
            raise ProtocolError(f"{protocol} record is missing field {exc}") from None
    return RecordSet(protocol, records, tuple(doc["lambdas_nm"]), doc.get("brightness"), doc.get("meta", {}))


def write_records(rs: RecordSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(records_to_dict(rs), fh, indent=1)
        fh.write("\n")


def read_records(path) -> RecordSet:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"{path}: not valid JSON ({exc})") from None
    return records_from_dict(doc)
