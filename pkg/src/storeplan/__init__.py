"""Microgrid storage-expansion planning: outage-cost simulation, a random-forest
surrogate of that cost, and tabular Q-learning over a finite-horizon investment MDP."""

__version__ = "0.1.0"
