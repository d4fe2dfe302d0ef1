"""Energy-aware 3D trajectory planning for a rotary-wing UAV in stochastic wind.

The package splits into physics (windfield, propulsion, airlink), generic
optimization machinery (convex), the offline stochastic planner (offline),
the per-slot online adapter (online), and the evaluation harness (bench).
"""

__version__ = "0.1.0"
