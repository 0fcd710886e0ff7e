"""Hourly solar and wind production from irradiance and wind-speed samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RenewableParams", "solar_power", "wind_power"]


@dataclass(frozen=True)
class RenewableParams:
    """Plant sizing and physics constants for the solar array and wind farm."""

    eta_solar: float
    cell_area_m2: float
    cells_per_panel: int
    panels: int
    eta_wind: float
    air_density: float
    rotor_area_m2: float
    turbines: int
    cut_in_ms: float
    cut_out_ms: float
    # 3 gives the kinetic-energy law; 1 reproduces a linear power curve.
    wind_exponent: int = 3

    def __post_init__(self) -> None:
        if not 0 < self.eta_solar <= 1:
            raise ValueError(f"eta_solar out of (0, 1]: {self.eta_solar}")
        if not 0 < self.eta_wind <= 1:
            raise ValueError(f"eta_wind out of (0, 1]: {self.eta_wind}")
        for name in ("cell_area_m2", "cells_per_panel", "panels", "air_density",
                     "rotor_area_m2", "turbines"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cut_in_ms >= self.cut_out_ms:
            raise ValueError("cut-in speed must be below cut-out speed")
        if self.wind_exponent not in (1, 3):
            raise ValueError(f"wind_exponent must be 1 or 3, got {self.wind_exponent}")


def solar_power(irradiance: float, p: RenewableParams):
    """Array output in kWh for one hour at the given irradiance in kW/m^2.

    Accepts a scalar or an ndarray of irradiance samples.
    """
    if np.any(np.asarray(irradiance) < 0):
        raise ValueError("irradiance must be non-negative")
    return p.eta_solar * p.cell_area_m2 * p.cells_per_panel * p.panels * irradiance


def wind_power(speed: float, p: RenewableParams):
    """Farm output in kWh for one hour at the given wind speed in m/s.

    Zero outside the (cut-in, cut-out) band. Accepts a scalar or an ndarray.
    """
    speed = np.asarray(speed, dtype=float)
    if np.any(speed < 0):
        raise ValueError("wind speed must be non-negative")
    # 1/2 rho A W^x is in watts; divide by 1000 for kW over the hour
    raw = 0.5 * p.eta_wind * p.air_density * p.rotor_area_m2 * p.turbines / 1000.0
    power = np.where((speed > p.cut_in_ms) & (speed < p.cut_out_ms),
                     raw * speed ** p.wind_exponent, 0.0)
    return float(power) if power.ndim == 0 else power
