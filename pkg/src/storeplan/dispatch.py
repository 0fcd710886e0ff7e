"""Proportional multi-unit storage dispatch during grid outages.

Renewable production serves the prioritized critical load first; storage covers
the shortfall and absorbs any surplus. Fixed charge/discharge proportions keep
all units' state of charge moving together, so the whole fleet hits its minimum
(or full) level at one shared cumulative energy figure. Facility classes are
served all-or-nothing per hour in priority order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import (HOURS_PER_YEAR, FacilityClass, HourlySeries)
from .renewables import RenewableParams, solar_power, wind_power

__all__ = ["StorageFleet", "OutageServiceResult", "OutageDispatcher",
           "proportions", "simulate_outage", "lost_load_cost",
           "write_service_log"]


@dataclass
class StorageFleet:
    """Per-unit installed capacity, usable-depth and efficiency, and stored energy."""

    capacity: np.ndarray
    dod: np.ndarray
    efficiency: np.ndarray
    charge: np.ndarray

    def __post_init__(self) -> None:
        self.capacity = np.asarray(self.capacity, dtype=float)
        self.dod = np.asarray(self.dod, dtype=float)
        self.efficiency = np.asarray(self.efficiency, dtype=float)
        self.charge = np.asarray(self.charge, dtype=float)

    @classmethod
    def full(cls, capacity, dod, efficiency) -> "StorageFleet":
        capacity = np.asarray(capacity, dtype=float)
        return cls(capacity=capacity, dod=np.asarray(dod, dtype=float),
                   efficiency=np.asarray(efficiency, dtype=float),
                   charge=capacity.copy())

    @property
    def min_level(self) -> np.ndarray:
        return self.capacity * (1.0 - self.dod)

    def proportions(self) -> tuple[np.ndarray, np.ndarray]:
        return proportions(self)


def proportions(fleet: StorageFleet) -> tuple[np.ndarray, np.ndarray]:
    """Charging and discharging shares per unit; zero-capacity units get 0."""
    usable = fleet.capacity * fleet.dod
    if not np.any(usable > 0):
        raise ValueError("fleet has no capacity to apportion")
    charge_w = usable / fleet.efficiency
    discharge_w = usable * fleet.efficiency
    return charge_w / charge_w.sum(), discharge_w / discharge_w.sum()


@dataclass
class OutageServiceResult:
    """Hour-by-hour service outcome for one outage, facilities in priority order."""

    start_hour: int
    served: np.ndarray      # (hours, facilities) bool
    lost_kwh: np.ndarray    # (hours, facilities) critical energy lost
    final_charge: np.ndarray


class OutageDispatcher:
    """Hourly outage simulation over a fixed microgrid description.

    Precomputes the renewable production year and each facility class's critical
    hourly load so per-outage simulation stays cheap.
    """

    def __init__(self, facilities: tuple[FacilityClass, ...],
                 profiles: dict[str, HourlySeries], irradiance: HourlySeries,
                 wind: HourlySeries, renewables: RenewableParams,
                 growth_rate: float, horizon_hours: int):
        self.facilities = tuple(sorted(facilities, key=lambda f: f.priority_rank))
        self.horizon_hours = horizon_hours
        ren = (solar_power(irradiance.values, renewables)
               + wind_power(wind.values, renewables))
        self._renewable = ren.tolist()
        self._critical = [
            (fac.count * fac.critical_factor * profiles[fac.profile].values).tolist()
            for fac in self.facilities
        ]
        n_years = -(-horizon_hours // HOURS_PER_YEAR)
        self._growth = [(1.0 + growth_rate) ** y for y in range(n_years)]

    def critical_demand(self, t: int) -> list[float]:
        """Critical load per facility class at absolute hour t, priority order."""
        factor = self._growth[t // HOURS_PER_YEAR]
        h = t % HOURS_PER_YEAR
        return [base[h] * factor for base in self._critical]

    def simulate(self, fleet: StorageFleet, start_hour: int,
                 duration_hours: int) -> OutageServiceResult:
        """Serve one outage from the given fleet state; the input fleet is not mutated."""
        if start_hour < 0 or start_hour + duration_hours > self.horizon_hours:
            raise ValueError("outage extends past the simulation horizon")
        n_fac = len(self.facilities)
        served = np.zeros((duration_hours, n_fac), dtype=bool)
        lost = np.zeros((duration_hours, n_fac))

        caps = fleet.capacity.tolist()
        floors = fleet.min_level.tolist()
        charge = fleet.charge.tolist()
        active = [i for i, c in enumerate(caps) if c > 0]
        if active:
            p_c, p_d = proportions(fleet)
            # per-unit constants of the hourly update
            drain = [(p_d[i] / fleet.efficiency[i]) for i in active]
            fill = [(p_c[i] * fleet.efficiency[i]) for i in active]
            headroom = [fleet.efficiency[i] / p_d[i] for i in active]

        renewable = self._renewable
        growth = self._growth
        critical = self._critical
        for step in range(duration_hours):
            t = start_hour + step
            h = t % HOURS_PER_YEAR
            factor = growth[t // HOURS_PER_YEAR]
            ren = renewable[h]

            if active:
                e_max = min((charge[i] - floors[i]) * headroom[k]
                            for k, i in enumerate(active))
            else:
                e_max = 0.0
            budget = ren + e_max

            demand_total = 0.0
            depth = 0
            demands = []
            for g in range(n_fac):
                d = critical[g][h] * factor
                demands.append(d)
                if depth == g and demand_total + d <= budget + 1e-9:
                    demand_total += d
                    depth = g + 1
            for g in range(n_fac):
                if g < depth:
                    served[step, g] = True
                else:
                    lost[step, g] = demands[g]

            if not active:
                continue
            if demand_total >= ren:
                deficit = demand_total - ren
                for k, i in enumerate(active):
                    charge[i] -= drain[k] * deficit
                    if charge[i] < floors[i]:
                        charge[i] = floors[i]
            else:
                surplus = ren - demand_total
                for k, i in enumerate(active):
                    charge[i] += fill[k] * surplus
                    if charge[i] > caps[i]:
                        charge[i] = caps[i]

        return OutageServiceResult(start_hour=start_hour, served=served,
                                   lost_kwh=lost,
                                   final_charge=np.array(charge))


def simulate_outage(fleet: StorageFleet, start_hour: int, duration_hours: int,
                    facilities, profiles, irradiance, wind, renewables,
                    growth_rate: float, horizon_hours: int) -> OutageServiceResult:
    """One-shot convenience wrapper; hot paths should hold an OutageDispatcher."""
    dispatcher = OutageDispatcher(facilities, profiles, irradiance, wind,
                                  renewables, growth_rate, horizon_hours)
    return dispatcher.simulate(fleet, start_hour, duration_hours)


def lost_load_cost(results, facilities) -> float:
    """Total penalty in $ over service results: VOLL-weighted critical energy lost."""
    ordered = sorted(facilities, key=lambda f: f.priority_rank)
    total = 0.0
    for res in results:
        per_facility = res.lost_kwh.sum(axis=0)
        for g, fac in enumerate(ordered):
            total += fac.voll * per_facility[g]
    return total


def write_service_log(results, facilities, path: str | Path) -> None:
    ordered = sorted(facilities, key=lambda f: f.priority_rank)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["outage_id", "hour", "facility", "served", "lost_kwh"])
        for outage_id, res in enumerate(results):
            for step in range(res.served.shape[0]):
                for g, fac in enumerate(ordered):
                    writer.writerow([outage_id, res.start_hour + step, fac.name,
                                     int(res.served[step, g]),
                                     f"{res.lost_kwh[step, g]:.6f}"])
