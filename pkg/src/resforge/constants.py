"""Physical constants (CODATA, via :mod:`scipy.constants`)."""
from __future__ import annotations

from dataclasses import dataclass
import math

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar
    k_B: float = _sc.k
    e_charge: float = _sc.e

    @property
    def h(self) -> float:
        # Kept as 2*pi*hbar so that h/hbar round-trips exactly.
        return 2.0 * math.pi * self.hbar


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B
E_CHARGE = CONSTANTS.e_charge
H_PLANCK = CONSTANTS.h

# Ratio of the zero-temperature BCS gap to k_B*T_C.
BCS_GAP_RATIO = 1.764
TWO_PI = 2.0 * math.pi
