"""Fundamental physical constants used throughout the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values for the constants entering the collapse-time and
    light-cone calculations.

    All values are SI. The instance is frozen; simulations share the
    module-level ``CODATA`` singleton.
    """

    hbar: float = 1.054571817e-34  # J s
    G: float = 6.67430e-11         # m^3 kg^-1 s^-2
    c: float = 299792458.0         # m/s

    def __post_init__(self):
        if not (self.hbar > 0 and self.G > 0 and self.c > 0):
            raise ValueError("physical constants must be strictly positive")


CODATA = PhysicalConstants()
