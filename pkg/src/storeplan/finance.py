"""Annuity amortization of storage purchases and per-period investment cost."""

from __future__ import annotations

__all__ = ["annuity", "investment_cost"]


def annuity(principal: float, rate: float, lifetime_years: float) -> float:
    """Equal annual payment amortizing `principal` at `rate` over the lifetime.

    The zero-rate case uses the analytic limit principal / lifetime.
    """
    if principal < 0:
        raise ValueError(f"principal must be >= 0, got {principal}")
    if lifetime_years < 1:
        raise ValueError(f"lifetime must be >= 1 year, got {lifetime_years}")
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0:
        return principal / lifetime_years
    if lifetime_years == 1:
        # the closed form reduces to a single balloon payment; computing it
        # directly avoids the cancellation in (1+r)^L - 1
        return principal * (1.0 + rate)
    growth = (1.0 + rate) ** lifetime_years
    return principal * rate * growth / (growth - 1.0)


def investment_cost(level_kwh: float, unit_price: float, period: int,
                    horizon_periods: int, years_per_period: int, rate: float,
                    lifetime_years: float) -> float:
    """Total of the annuity payments booked for a purchase made at `period`.

    Payments run for the remaining (horizon_periods - period + 1) decision
    periods; the principal is the purchased capacity times the unit's current
    price in $/kWh.
    """
    if not 1 <= period <= horizon_periods:
        raise ValueError(f"period {period} outside 1..{horizon_periods}")
    remaining_years = (horizon_periods - period + 1) * years_per_period
    payment = annuity(level_kwh * unit_price, rate, lifetime_years)
    return remaining_years * payment
