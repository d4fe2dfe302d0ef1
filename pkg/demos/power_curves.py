"""Propulsion power of the rotary-wing platform, from hover to fast flight.

Sweeps level-flight speed to show the classic power bowl (induced power
falling, parasitic power rising), then holds the aircraft still and lets
the wind do the flying to show that hover cost depends only on wind
speed, not direction. Writes a power_breakdown CSV next to the printout
so the numbers can be inspected or plotted.
"""
import pathlib

import numpy as np

from windtraj.config import DEFAULTS, scenario_from_config
from windtraj.csvio import write_csv
from windtraj.propulsion import KinState, power, reduce_windless

OUT = pathlib.Path(__file__).parent / "out"


def main():
    aero = scenario_from_config(DEFAULTS).aero
    OUT.mkdir(exist_ok=True)
    still = np.zeros(3)

    print("level flight in calm air")
    print(f"{'v [m/s]':>8} {'blade':>8} {'induced':>9} {'parasite':>9} "
          f"{'total [W]':>10}")
    rows = []
    for v in range(0, 31, 2):
        state = KinState(np.array([float(v), 0.0, 0.0]), still)
        br = power(state, still, aero)
        print(f"{v:8d} {br.p_blade:8.1f} {br.p_induced:9.1f} {br.p_drag:9.1f} "
              f"{br.total:10.1f}")
        rows.append((float(v), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                     br.p_blade, br.p_induced, br.p_climb, br.p_drag, br.total))
        # the closed form for still air must agree to machine precision
        assert abs(reduce_windless(state, aero) - br.total) < 1e-9 * br.total
    write_csv(OUT / "power_vs_speed.csv", "power_breakdown", rows)

    best = min(rows, key=lambda r: r[-1])
    print(f"\nmost economical speed around {best[0]:.0f} m/s "
          f"({best[-1]:.0f} W, hover costs {rows[0][-1]:.0f} W)")

    print("\nhover in wind: the rotor cannot tell directions apart")
    hover = KinState(still, still)
    for w in (0.0, 5.0, 10.0, 15.0, 20.0):
        totals = []
        for az in np.radians((0.0, 90.0, 225.0)):
            wind = w * np.array([np.cos(az), np.sin(az), 0.0])
            totals.append(power(hover, wind, aero).total)
        spread = max(totals) - min(totals)
        print(f"  {w:4.0f} m/s -> {totals[0]:7.1f} W "
              f"(direction spread {spread:.1e} W)")
    print(f"\nwrote {OUT / 'power_vs_speed.csv'}")


if __name__ == "__main__":
    main()
