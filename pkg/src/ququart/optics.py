"""Retardation plates acting on frequency-nondegenerate photon pairs.

Conventions used throughout the package:

* optical thickness ``delta = pi (n_o - n_e) h / lambda`` (negative for a
  positive-uniaxial crystal such as quartz); ``axis_sense="crossed"``
  flips its sign, which is the same as turning the plate by 90 degrees;
* the orientation ``alpha`` is the angle between the optical axis and the
  vertical, in radians;
* a plate maps the mode operators of photon ``j`` as
  ``a' = t a + r b, b' = -r* a + t* b`` with
  ``t = cos(delta) + i sin(delta) cos(2 alpha)``, ``r = i sin(delta) sin(2 alpha)``.

Global phases are never removed; compare states with :func:`ququart.core.fidelity`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import QuquartState
from .dispersion import get_model
from .errors import ContractViolation, QuquartError

UNITARY_TOL = 1e-9

# Swaps the polarization of photon 1 only: |VV> -> |HV>, Phi -> Psi.
DICHROIC_SWAP = np.array(
    [[0, 0, 1, 0],
     [0, 0, 0, 1],
     [1, 0, 0, 0],
     [0, 1, 0, 0]], dtype=complex)


@dataclass(frozen=True)
class WavePlate:
    thickness_mm: float
    orientation: float = 0.0
    material: str = "quartz"
    axis_sense: str = "normal"

    def __post_init__(self):
        if not self.thickness_mm > 0:
            raise QuquartError(f"plate thickness must be positive, got {self.thickness_mm}")
        if self.axis_sense not in ("normal", "crossed"):
            raise QuquartError(f"axis_sense must be 'normal' or 'crossed', not {self.axis_sense!r}")
        get_model(self.material)

    @property
    def sign(self) -> int:
        return 1 if self.axis_sense == "normal" else -1

    def rotated(self, orientation: float) -> "WavePlate":
        return WavePlate(self.thickness_mm, orientation, self.material, self.axis_sense)

    def to_record(self) -> dict:
        return {
            "thickness_mm": self.thickness_mm,
            "orientation_deg": float(np.degrees(self.orientation)),
            "material": self.material,
            "axis_sense": self.axis_sense,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "WavePlate":
        allowed = {"thickness_mm", "orientation_deg", "material", "axis_sense"}
        extra = set(rec) - allowed
        if extra:
            raise QuquartError(f"unknown plate fields: {sorted(extra)}")
        return cls(
            float(rec["thickness_mm"]),
            float(np.radians(rec.get("orientation_deg", 0.0))),
            rec.get("material", "quartz"),
            rec.get("axis_sense", "normal"),
        )


class PlateCoeffs(NamedTuple):
    t: complex
    r: complex


def optical_thickness(plate: WavePlate, wavelength_nm: float) -> float:
    no, ne = get_model(plate.material).indices(wavelength_nm)
    return plate.sign * np.pi * (no - ne) * plate.thickness_mm * 1e6 / wavelength_nm


def tilted_optical_thickness(plate: WavePlate, wavelength_nm: float, tilt: float) -> float:
    """Optical thickness of a plate tilted by ``tilt`` radians.

    Reduces to :func:`optical_thickness` at zero tilt; even in ``tilt``.
    """
    no, ne = get_model(plate.material).indices(wavelength_nm)
    s2 = np.sin(tilt) ** 2
    bracket = no**2 / np.sqrt(no**2 - s2) - ne**2 / np.sqrt(ne**2 - s2)
    return plate.sign * np.pi * plate.thickness_mm * 1e6 / wavelength_nm * bracket


def plate_coeffs(delta: float, alpha: float) -> PlateCoeffs:
    t = np.cos(delta) + 1j * np.sin(delta) * np.cos(2 * alpha)
    r = 1j * np.sin(delta) * np.sin(2 * alpha)
    return PlateCoeffs(complex(t), complex(r))


def qubit_transform(coeffs: PlateCoeffs) -> np.ndarray:
    t, r = coeffs
    return np.array([[t, r], [-np.conj(r), np.conj(t)]], dtype=complex)


def transform_from_retardances(delta1: float, delta2: float, alpha: float) -> np.ndarray:
    """4x4 transform of a plate with the given optical thickness at each wavelength."""
    return np.kron(qubit_transform(plate_coeffs(delta1, alpha)), qubit_transform(plate_coeffs(delta2, alpha)))


def ququart_transform(plate: WavePlate, lambda1: float, lambda2: float) -> np.ndarray:
    d1 = optical_thickness(plate, lambda1)
    d2 = optical_thickness(plate, lambda2)
    return transform_from_retardances(d1, d2, plate.orientation)


def unitarity_error(transform: np.ndarray) -> float:
    g = np.asarray(transform)
    return float(np.max(np.abs(g.conj().T @ g - np.eye(g.shape[0]))))


def apply(transform: np.ndarray, state: QuquartState) -> QuquartState:
    g = np.asarray(transform, dtype=complex)
    if g.shape != (4, 4):
        raise ContractViolation(f"transform must be 4x4, got {g.shape}")
    err = unitarity_error(g)
    if err > UNITARY_TOL:
        raise ContractViolation(f"transform is not unitary (|G^+G - I| = {err:.3g})")
    return QuquartState(g @ state.c)


def prepare_psi_I(plate: WavePlate, lambda1: float, lambda2: float) -> QuquartState:
    """Image of ``|V1V2>`` under a single plate: ``(r1 r2, r1 t2*, t1* r2, t1* t2*)``."""
    return apply(ququart_transform(plate, lambda1, lambda2), QuquartState.basis("VV"))


def prepare_psi_II(amp_ratio: float, phi14: float) -> QuquartState:
    """Two-crystal family ``(|c1|, 0, 0, |c4| exp(-i phi14))`` with ``|c1| = amp_ratio``."""
    if not 0.0 <= amp_ratio <= 1.0:
        raise QuquartError(f"amp_ratio must lie in [0, 1], got {amp_ratio}")
    c4 = np.sqrt(1.0 - amp_ratio**2)
    return QuquartState([amp_ratio, 0.0, 0.0, c4 * np.exp(-1j * phi14)])


def stack_thickness(plates, wavelength_nm: float, tilt: float = 0.0) -> float:
    """Net optical thickness of coaxial plates traversed in sequence (crossed ones subtract)."""
    return float(sum(tilted_optical_thickness(p, wavelength_nm, tilt) for p in plates))


def retardance_target_scan(targets, lambda1: float, lambda2: float, thickness_mm,
                           material: str = "quartz"):
    """Mismatch of a single plate against target optical thicknesses.

    ``targets`` are the wanted ``(delta1, delta2)``, compared modulo pi since
    a shift by pi only changes the global phase. Returns
    ``(thickness_mm, mismatch)`` arrays where mismatch is
    ``|sin(delta1 - target1)| + |sin(delta2 - target2)|``.
    """
    h = np.atleast_1d(np.asarray(thickness_mm, dtype=float))
    model = get_model(material)
    mism = np.zeros_like(h)
    for lam, target in zip((lambda1, lambda2), targets):
        no, ne = model.indices(lam)
        delta = np.pi * (no - ne) * h * 1e6 / lam
        mism += np.abs(np.sin(delta - target))
    return h, mism
