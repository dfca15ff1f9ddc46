from dataclasses import dataclass
from math import pi

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used for every unit conversion.

    ``flux_quantum`` is derived from ``planck`` and ``electron_charge`` so the
    superconducting relation Φ₀ = h/2e holds exactly.
    """

    planck: float = _sc.h
    electron_charge: float = _sc.e

    @property
    def flux_quantum(self) -> float:
        return self.planck / (2 * self.electron_charge)

    @property
    def hbar(self) -> float:
        return self.planck / (2 * pi)


DEFAULT_CONSTANTS = PhysicalConstants()
GHZ = 1e9
