"""Sellmeier dispersion models for uniaxial crystals.

Each model maps a vacuum wavelength in nanometres to the ordinary and
extraordinary refractive indices. Only crystalline quartz is bundled.

Quartz uses the two-pole form fitted by G. Ghosh (Opt. Commun. 163, 95,
1999), valid from 198 nm to 2050 nm at room temperature::

    n^2 = A + B l^2 / (l^2 - C) + D l^2 / (l^2 - E),   l in microns
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuquartError, WavelengthRangeError


@dataclass(frozen=True)
class SellmeierModel:
    name: str
    ordinary: tuple[float, float, float, float, float]
    extraordinary: tuple[float, float, float, float, float]
    valid_nm: tuple[float, float]

    def _check(self, wavelength_nm):
        lo, hi = self.valid_nm
        w = np.asarray(wavelength_nm, dtype=float)
        if np.any(w < lo) or np.any(w > hi):
            raise WavelengthRangeError(
                f"{self.name}: wavelength {wavelength_nm} nm outside valid range [{lo:g}, {hi:g}] nm"
            )
        return w

    @staticmethod
    def _index(coeffs, wavelength_nm):
        a, b, c, d, e = coeffs
        l2 = (wavelength_nm / 1000.0) ** 2
        return np.sqrt(a + b * l2 / (l2 - c) + d * l2 / (l2 - e))

    def indices(self, wavelength_nm):
        """Return ``(n_o, n_e)`` at the given wavelength(s)."""
        w = self._check(wavelength_nm)
        no = self._index(self.ordinary, w)
        ne = self._index(self.extraordinary, w)
        if np.ndim(no) == 0:
            return float(no), float(ne)
        return no, ne


QUARTZ = SellmeierModel(
    name="quartz",
    ordinary=(1.28604141, 1.07044083, 1.00585997e-2, 1.10202242, 100.0),
    extraordinary=(1.28851804, 1.09509924, 1.02101864e-2, 1.15662475, 100.0),
    valid_nm=(198.0, 2050.0),
)

MODELS = {"quartz": QUARTZ}


def get_model(name: str) -> SellmeierModel:
    try:
        return MODELS[name.lower()]
    except KeyError:
        raise QuquartError(f"unknown dispersion model {name!r}; known: {sorted(MODELS)}") from None
