"""Measured reconstructions of prepared ququarts, kept as test fixtures.

Each row lists the nominal plate angle, the predicted amplitude vector,
the reconstructed vector and the fidelity reported with it. Vectors are
stored exactly as listed (four decimals, not renormalized).

The listed plate angle is measured from the horizontal, whereas
:class:`ququart.optics.WavePlate` measures from the vertical; use
:func:`plate_orientation` to convert.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ReferenceRow:
    alpha_deg: float
    theory: np.ndarray
    experiment: np.ndarray
    fidelity: float


def _v(*z):
    return np.array(z, dtype=complex)


# Single 0.315 mm quartz plate, 702/605 nm pair, frequency-selective tomography.
THIN_PLATE = {"thickness_mm": 0.315, "lambdas_nm": (702.0, 605.0)}
THIN_PLATE_SERIES = (
    ReferenceRow(0, _v(0, 0, 0, 1),
                 _v(-0.0295 - 0.0306j, 0.0543 - 0.0202j, -0.0154 - 0.0093j, 0.9972), 0.995),
    ReferenceRow(10, _v(-0.0015 - 0.0229j, 0.0038 - 0.0050j, 0.2013 + 0.1735j, 0.9638),
                 _v(0.0584 - 0.1926j, 0.0073 + 0.0170j, 0.1633 + 0.1233j, 0.9577), 0.963),
    ReferenceRow(20, _v(-0.0021 - 0.0386j, 0.0154 - 0.0162j, 0.3430 + 0.3625j, 0.8654),
                 _v(0.0015 - 0.0326j, 0.0019 - 0.0660j, 0.3967 + 0.2085j, 0.8909), 0.976),
    ReferenceRow(30, _v(-0.0015 - 0.0445j, 0.0337 - 0.0225j, 0.3530 + 0.5716j, 0.7383),
                 _v(-0.0310 - 0.0542j, 0.0166 - 0.0416j, 0.4526 + 0.5386j, 0.7065), 0.991),
    ReferenceRow(40, _v(-0.0005 - 0.0440j, 0.0511 - 0.0116j, 0.1601 + 0.7466j, 0.6421),
                 _v(0.0112 - 0.0823j, 0.1174 - 0.0328j, 0.1087 + 0.8363j, 0.5167), 0.970),
)

# Single 0.988 mm quartz plate, 667/635 nm pair, rotating-plate tomography.
THICK_PLATE = {"thickness_mm": 0.988, "lambdas_nm": (667.0, 635.0)}
THICK_PLATE_SERIES = (
    ReferenceRow(0, _v(0, 0, 0, 1),
                 _v(-0.0555 - 0.0204j, -0.0059 + 0.005j, -0.0425 + 0.0052j, 0.9973), 0.996),
    ReferenceRow(20, _v(0.8097, -0.4568 - 0.3527j, -0.0103 - 0.0859j, -0.0316 + 0.0529j),
                 _v(0.8067, -0.4847 - 0.3304j, 0.023 - 0.0554j, -0.0174 + 0.0413j), 0.998),
)

# Bell states from two crystals, frequency-selective tomography.
BELL_ROWS = (
    ("phi+", _v(0.707, 0, 0, 0.707),
     _v(0.7326, 0.0818 - 0.0963j, 0.0003 - 0.0281j, 0.6131 + 0.2657j), 0.941),
    ("phi-", _v(0.707, 0, 0, -0.707),
     _v(0.6597, 0.2518 + 0.4692j, 0.0897 - 0.0319j, -0.6155 + 0.3261j), 0.934),
)

# Fidelities of the twelve prepared key-distribution states, by basis and symbol.
QKD_STATE_FIDELITIES = {
    "I": (0.98, 0.94, 0.98, 0.98),
    "II": (0.97, 0.96, 0.95, 0.99),
    "III": (0.95, 0.95, 0.96, 0.97),
}

# |R1 L2> measured in the circular basis over 30 s: counts on D4D2, D4D1, D3D2, D3D1
# and the diagonal reported from them.
CIRCULAR_BASIS_COUNTS = (0, 220, 6, 0)
CIRCULAR_BASIS_DIAGONAL = (0.0, 0.973, 0.027, 0.0)


def plate_orientation(alpha_deg: float) -> float:
    """Orientation from the vertical (radians) of a plate listed at ``alpha_deg`` from the horizontal."""
    return float(np.radians(90.0 - alpha_deg))


def exchange_first_pair(vector) -> np.ndarray:
    """Swap the ``HH`` and ``HV`` amplitudes."""
    v = np.array(vector, dtype=complex)
    v[[0, 1]] = v[[1, 0]]
    return v
