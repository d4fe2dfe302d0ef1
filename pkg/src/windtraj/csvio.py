"""Versioned CSV emission and ingestion.

Every file starts with a schema comment line, ``# schema: <name> v<version>``,
followed by the column header. Readers check both and report the first
offending column on a mismatch, so downstream consumers (plots, external
tooling) can trust column meanings without guessing.

Formatting is deterministic: floats are written with ``repr`` (shortest
round-trip form), so identical arrays serialize to identical bytes. Cells
for quantities that do not exist on a row (the velocity leaving the final
way-point, for instance) are left empty.

Way-point rows carry the interval quantities of the interval *leaving* the
way-point. User indices are 1-based in files, 0 marking an idle slot; this
matches the ``scenario.g_<k>`` config keys rather than the package's
internal 0-based arrays.
"""
from __future__ import annotations

import numpy as np

from .offline import OfflinePlan, Scenario, Schedule, Trajectory, TraceRow
from .online import FlightLog
from .windfield import WindTrace

SCHEMAS = {
    "offline_plan": (1, ("n", "x", "y", "z", "vx", "vy", "vz",
                         "az_user", "scheduled_k")),
    "convergence": (1, ("outer_iter", "objective", "R_min", "energy")),
    "flight_log": (1, ("n", "x", "y", "z", "vx", "vy", "vz",
                       "wind_vref", "wind_beta", "P_exact", "R_realized",
                       "los_flag", "fallback_flag")),
    "wind_samples": (1, ("scenario", "slot", "v_ref_mps", "beta_deg")),
    "power_states": (1, ("vx", "vy", "vz", "ax", "ay", "az", "wx", "wy")),
    "power_breakdown": (1, ("vx", "vy", "vz", "ax", "ay", "az", "wx", "wy",
                            "P_blade", "P_induced", "P_climb", "P_drag",
                            "P_total")),
    "ee_summary": (1, ("scheme", "sweep_key", "sweep_value", "n_runs",
                       "n_failed", "incomplete",
                       "ee_ratio_mean", "ee_ratio_std",
                       "ee_bpj_mean", "ee_bpj_std",
                       "energy_J_mean", "energy_J_std",
                       "throughput_bits_mean", "throughput_bits_std",
                       "altitude_m_mean", "altitude_m_std",
                       "angdev_deg_mean", "angdev_deg_std",
                       "fallback_total")),
    "compare": (1, ("sweep_key", "sweep_value", "metric", "ranking",
                    "frac_oboa_ge_offline", "frac_offline_ge_windless",
                    "frac_chain")),
    "manifest": (1, ("scheme", "sweep_key", "sweep_value", "rep",
                     "plan_seed", "wind_seed", "city_seed", "status",
                     "flight_log")),
}


class CsvSchemaError(ValueError):
    """A file does not match the schema it was read against."""


def _fmt(cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, (bool, np.bool_)):
        return "1" if cell else "0"
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    if isinstance(cell, (float, np.floating)):
        return repr(float(cell))
    text = str(cell)
    if any(ch in text for ch in ",\n\r"):
        raise ValueError(f"cell {text!r} needs quoting, which this "
                         "format does not support")
    return text


def write_csv(path, schema: str, rows) -> None:
    """Write rows (sequences aligned with the schema's columns)."""
    version, columns = SCHEMAS[schema]
    lines = [f"# schema: {schema} v{version}", ",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"{schema}: row of {len(row)} cells, "
                             f"expected {len(columns)}")
        lines.append(",".join(_fmt(cell) for cell in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path, schema: str, require_tag: bool = True) -> list:
    """Read and validate a file, returning one dict per row (string values).

    With require_tag=False a file may omit the schema comment line; the
    header itself is still validated column by column. That admits
    hand-written inputs while keeping column meanings checked.
    """
    version, columns = SCHEMAS[schema]
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvSchemaError(f"{path}: empty file")
    if lines[0].startswith("#"):
        tag = f"# schema: {schema} v{version}"
        if lines[0].strip() != tag:
            raise CsvSchemaError(f"{path}: expected {tag!r}, "
                                 f"found {lines[0].strip()!r}")
        lines = lines[1:]
    elif require_tag:
        raise CsvSchemaError(f"{path}: missing schema comment line")
    if not lines:
        raise CsvSchemaError(f"{path}: missing header")
    header = tuple(h.strip() for h in lines[0].split(","))
    for i, name in enumerate(columns):
        if i >= len(header) or header[i] != name:
            found = header[i] if i < len(header) else "<missing>"
            raise CsvSchemaError(f"{path}: column {i} is {found!r}, "
                                 f"schema {schema} expects {name!r}")
    if len(header) > len(columns):
        raise CsvSchemaError(f"{path}: unexpected extra column "
                             f"{header[len(columns)]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(columns):
            raise CsvSchemaError(f"{path}:{lineno}: {len(cells)} cells, "
                                 f"expected {len(columns)}")
        rows.append(dict(zip(columns, (c.strip() for c in cells))))
    return rows


def column(rows: list, name: str) -> np.ndarray:
    """Extract one column as floats; empty cells become NaN."""
    return np.array([float(r[name]) if r[name] != "" else np.nan
                     for r in rows])


# -------------------------------------------------------------- plan files

def write_offline_plan(path, plan: OfflinePlan) -> None:
    q = plan.trajectory.positions
    v = plan.trajectory.velocities()
    weights = plan.schedule.weights
    rows = []
    for n in range(q.shape[0]):
        vel = tuple(v[n]) if n < v.shape[0] else (None, None, None)
        col = weights[:, n]
        k = int(np.argmax(col)) + 1 if col.max() > 0.0 else 0
        weight = float(col.max()) if k else 0.0
        rows.append((n, q[n, 0], q[n, 1], q[n, 2], *vel, weight, k))
    write_csv(path, "offline_plan", rows)


def read_offline_plan(path, scenario: Scenario) -> OfflinePlan:
    """Rebuild a plan from its file.

    Positions are authoritative (velocities are re-derived as their finite
    differences). The convergence trace is not stored in this file, so the
    returned plan carries an empty trace and NaN quality figures; flying and
    re-evaluating a stored plan does not need them.
    """
    rows = read_csv(path, "offline_plan")
    if len(rows) != scenario.n_pos:
        raise CsvSchemaError(f"{path}: {len(rows)} way-points, scenario "
                             f"expects {scenario.n_pos}")
    q = np.array([[float(r["x"]), float(r["y"]), float(r["z"])]
                  for r in rows])
    weights = np.zeros((scenario.n_users, scenario.n_pos))
    for n, r in enumerate(rows):
        k = int(r["scheduled_k"])
        if k < 0 or k > scenario.n_users:
            raise CsvSchemaError(f"{path}: scheduled_k {k} outside "
                                 f"1..{scenario.n_users}")
        if k:
            weights[k - 1, n] = float(r["az_user"])
    traj = Trajectory(q, scenario.slot_dt)
    schedule = Schedule(weights)
    return OfflinePlan(trajectory=traj, schedule=schedule,
                       r_min=float("nan"), objective=float("nan"),
                       trace=(), wind_trace=None)


def write_convergence(path, trace) -> None:
    write_csv(path, "convergence",
              [(row.outer_iter, row.objective, row.r_min, row.energy)
               for row in trace])


def read_convergence(path) -> tuple:
    return tuple(TraceRow(int(r["outer_iter"]), float(r["objective"]),
                          float(r["R_min"]), float(r["energy"]))
                 for r in read_csv(path, "convergence"))


# ------------------------------------------------------------ flight files

def write_flight_log(path, log: FlightLog) -> None:
    n_pos = log.positions.shape[0]
    rows = []
    for n in range(n_pos):
        if n < n_pos - 1:
            iv = (log.velocities[n, 0], log.velocities[n, 1],
                  log.velocities[n, 2], float(log.wind_vref[n]),
                  float(log.wind_beta[n]), float(log.power[n]))
            fb = bool(log.fallback[n])
        else:
            iv = (None,) * 6
            fb = None
        k = int(log.scheduled[n])
        rows.append((n, log.positions[n, 0], log.positions[n, 1],
                     log.positions[n, 2], *iv,
                     float(log.rate[n]) if k >= 0 else 0.0,
                     bool(log.los[n]), fb))
    write_csv(path, "flight_log", rows)


def write_wind_samples(path, trace: WindTrace) -> None:
    rows = []
    for row in range(trace.n_scenarios):
        for slot in range(trace.n_slots):
            s = trace.sample(row, slot)
            rows.append((row, slot, s.v_ref, s.beta))
    write_csv(path, "wind_samples", rows)


# ------------------------------------------------------------- power files

def read_power_states(path) -> np.ndarray:
    """(n, 8) array of vx,vy,vz,ax,ay,az,wx,wy rows; tag optional."""
    rows = read_csv(path, "power_states", require_tag=False)
    names = SCHEMAS["power_states"][1]
    return np.array([[float(r[c]) for c in names] for r in rows])


def write_power_breakdown(path, states: np.ndarray,
                          breakdown: np.ndarray) -> None:
    """States (n, 8) alongside their (n, 5) power components."""
    rows = [tuple(states[i]) + tuple(breakdown[i])
            for i in range(states.shape[0])]
    write_csv(path, "power_breakdown", rows)
