"""``zeno`` command-line front end.

Usage::

    zeno <mode> [--config FILE] [--set key=value ...] [--out PATH]

Each run writes a CSV (header row, 12 significant digits, LF endings) and a
JSON summary next to it (same stem, ``.json``). The summary embeds the fully
resolved configuration, so ``zeno <mode> --config summary.json`` reproduces
the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, model
from .entanglement import concurrence, entanglement_entropy, zeno_entanglement_profile
from .montecarlo import McConfig, resolve_workers, run_ensemble
from .scenarios import SWEEP_COLUMNS, kwiat_ifm, sweep_delta_t
from .zeno import (
    NonConvergenceError,
    asymptotic_limit,
    asymptotic_survival,
    conditional_trajectory,
    discrepancy_table,
    entangled_basis_form,
    fixed_point_check,
    photon_atom_evolution,
    spectral_report,
    zeno_convergence_study,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2

MODES = ("conditional", "montecarlo", "zeno-limit", "spectrum", "sweep", "kwiat-ifm")
NAMED_STATES = ("00", "01", "10", "11", "psi+", "psi-")
DEFAULT_N_STEPS = {"conditional": 2000, "montecarlo": 500, "kwiat-ifm": 100}

CSV_SCHEMAS = {
    "conditional": ("step", "time", "survival_probability", "step_survival",
                    "fidelity_psi_plus", "concurrence", "entropy"),
    "montecarlo": ("step", "first_click_count", "mc_survival_fraction", "deterministic_survival"),
    "zeno-limit": ("t", "concurrence", "entropy", "pop_00", "pop_psi_minus"),
    "spectrum": ("quantity", "value"),
    "sweep": SWEEP_COLUMNS,
    "kwiat-ifm": ("step", "time", "p_no_click_present", "p_left_absent"),
}


class ConfigError(ValueError):
    pass


@dataclass
class Scenario:
    mode: str
    name: str = "default"
    delta_t: float = 0.7
    n_steps: int = 0          # 0 -> mode default
    total_time: float = 5 * math.pi
    initial_state: str = "00"
    seed: int = 20240611
    n_trajectories: int = 100000
    output_path: str = ""     # "" -> zeno_<mode>.csv
    tolerance: float = 1e-10
    max_doublings: int = 60
    t_max: float = math.pi
    grid_step: float = 1e-4
    n_values: str = "100,1000,10000,100000"
    sweep_lo: float = 0.05
    sweep_hi: float = 3.1
    sweep_points: int = 100

    def resolved(self) -> "Scenario":
        s = Scenario(**asdict(self))
        if s.n_steps == 0:
            s.n_steps = DEFAULT_N_STEPS.get(s.mode, 0)
        if not s.output_path:
            s.output_path = f"zeno_{s.mode}.csv"
        return s

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
        return cls(**data)


_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}


def _coerce(key: str, raw: str, origin: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"{origin}: unknown key {key!r} (known: {', '.join(sorted(_FIELD_TYPES))})")
    kind = _FIELD_TYPES[key]
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw, 0)
        return raw
    except ValueError:
        raise ConfigError(f"{origin}: cannot parse {key}={raw!r} as {kind}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        out[key] = _coerce(key, value, f"{source}:{lineno}")
    return out


def load_config_file(path: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if isinstance(data, dict) and "config" in data:
            data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: JSON config must be an object")
        return data
    return parse_config_text(text, path)


def parse_state(text: str) -> np.ndarray:
    text = text.strip()
    if text in ("psi+", "psi-"):
        return model.bell_state(+1 if text == "psi+" else -1)
    if text in model.BASIS_LABELS:
        return model.basis_state(text)
    parts = text.replace(",", " ").split()
    if len(parts) != 8:
        raise ConfigError(
            f"initial_state {text!r}: expected one of {NAMED_STATES} or 8 reals (re, im pairs)"
        )
    try:
        vals = [float(x) for x in parts]
    except ValueError:
        raise ConfigError(f"initial_state {text!r}: non-numeric entry") from None
    v = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ConfigError(f"initial_state {text!r}: zero or non-finite vector")
    return v / nrm


def validate(s: Scenario) -> None:
    if s.mode not in MODES:
        raise ConfigError(f"mode {s.mode!r} is not one of {MODES}")
    if not (math.isfinite(s.delta_t) and s.delta_t > 0):
        raise ConfigError("delta_t must be > 0")
    if s.mode in ("montecarlo", "kwiat-ifm") and s.n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if s.n_steps < 0:
        raise ConfigError("n_steps must be >= 0")
    if s.mode == "montecarlo" and s.n_trajectories < 1:
        raise ConfigError("n_trajectories must be >= 1")
    if s.n_trajectories < 0:
        raise ConfigError("n_trajectories must be >= 0")
    if s.total_time <= 0 or s.t_max <= 0 or s.grid_step <= 0 or s.tolerance <= 0:
        raise ConfigError("total_time, t_max, grid_step and tolerance must be > 0")
    if s.mode == "sweep" and not (0 < s.sweep_lo < s.sweep_hi < math.pi and s.sweep_points >= 2):
        raise ConfigError("sweep needs 0 < sweep_lo < sweep_hi < π and sweep_points >= 2")
    parse_state(s.initial_state)
    _n_values(s)


def _n_values(s: Scenario) -> list[int]:
    try:
        ns = [int(x) for x in s.n_values.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"n_values {s.n_values!r}: expected comma-separated integers") from None
    if not ns or any(n <= 0 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("n_values must be positive and strictly ascending")
    return ns


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{x:.12g}"
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_clean(obj):
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else x
    return obj


def _fidelity_plus(psi) -> float:
    if psi is None:
        return float("nan")
    return float(abs(np.vdot(model.bell_state(+1), psi)) ** 2)


# --------------------------------------------------------------------------
# Modes. Each returns (csv_header, csv_rows, summary_dict).
# --------------------------------------------------------------------------

def _run_conditional(s: Scenario):
    ev = photon_atom_evolution(s.delta_t)
    psi0 = parse_state(s.initial_state)
    traj = conditional_trajectory(ev, psi0, s.n_steps)
    rows = []
    for r in traj:
        psi = r.conditional_state
        rows.append((
            r.step_index, r.time, r.survival_probability, r.step_survival, _fidelity_plus(psi),
            concurrence(psi) if psi is not None else float("nan"),
            entanglement_entropy(psi) if psi is not None else float("nan"),
        ))
    final = traj.final
    summary = {
        "status": traj.status,
        "final_survival_probability": final.survival_probability,
        "predicted_p_inf": asymptotic_survival(psi0),
        "limit_state_fidelity_psi_plus": _fidelity_plus(final.conditional_state),
    }
    return CSV_SCHEMAS["conditional"], rows, summary


def _run_montecarlo(s: Scenario):
    psi0 = parse_state(s.initial_state)
    cfg = McConfig(seed=s.seed, n_trajectories=s.n_trajectories, n_steps=s.n_steps,
                   delta_t=s.delta_t, initial_state=psi0)
    res = run_ensemble(cfg)
    det = conditional_trajectory(cfg.evolution(), psi0, s.n_steps).survival_probabilities()
    alive = s.n_trajectories - np.cumsum(res.click_step_histogram)
    rows = []
    for k in range(s.n_steps + 1):
        p_det = float(det[k]) if k < len(det) else 0.0
        rows.append((k, int(res.click_step_histogram[k]), alive[k] / s.n_trajectories, p_det))
    summary = {
        "no_click_fraction": res.no_click_fraction,
        "standard_error": res.standard_error,
        "deterministic_survival": res.expected_probability,
        "z_score": res.z_score,
        "within_4_sigma": abs(res.no_click_fraction - res.expected_probability) <= 4 * res.standard_error,
        "n_survivors": res.n_survivors,
        "mean_survivor_fidelity_psi_plus": res.mean_survivor_fidelity,
        "predicted_p_inf": asymptotic_survival(psi0),
    }
    return CSV_SCHEMAS["montecarlo"], rows, summary


def _run_zeno_limit(s: Scenario):
    n_points = int(math.floor(s.t_max / s.grid_step + 1e-9)) + 1
    grid = np.arange(n_points) * s.grid_step
    psi0 = parse_state(s.initial_state)
    prof = zeno_entanglement_profile(grid, psi0)
    minus = model.bell_state(-1)
    pop00 = np.abs(prof.states[:, 0]) ** 2
    popm = np.abs(prof.states @ minus.conj()) ** 2
    rows = list(zip(prof.times, prof.concurrence, prof.entropy, pop00, popm))

    m = model.build_model()
    study = zeno_convergence_study(m.hamiltonian, m.survival_projector, s.total_time, _n_values(s), psi0)
    limit_rows = [d for d in discrepancy_table() if d.kind == "limit_unitary"]
    summary = {
        "argmax_time": prof.argmax_time,
        "expected_argmax_time": model.ROUND_TRIP_T / math.sqrt(2.0),
        "max_concurrence": prof.max_concurrence,
        "convergence_study": {
            "total_time": study.total_time,
            "rows": [{"n": n, "deviation": d} for n, d in study.rows()],
            "monotone": study.monotone,
            "decay_order": study.decay_order,
        },
        "limit_unitary_discrepancies": len(limit_rows),
    }
    return CSV_SCHEMAS["zeno-limit"], rows, summary


def _run_spectrum(s: Scenario):
    ev = photon_atom_evolution(s.delta_t)
    model.check_admissible(s.delta_t)
    rep = spectral_report(ev)
    lim = asymptotic_limit(ev, s.tolerance, s.max_doublings)
    fixed = fixed_point_check(ev)
    form = entangled_basis_form(ev)
    psi0 = parse_state(s.initial_state)
    v = lim.matrix @ (ev.survival_projector @ psi0)
    quantities = [
        ("delta_t", rep.delta_t), ("tau", rep.tau), ("sin_phi", rep.sin_phi),
        ("cos_phi", rep.cos_phi), ("delta", rep.delta),
        ("A_00", rep.A[0, 0].real), ("A_01", rep.A[0, 1].real),
        ("A_10", rep.A[1, 0].real), ("A_11", rep.A[1, 1].real),
        ("b1", rep.b1), ("b2", rep.b2), ("norm_B", rep.norm_B),
        ("det_B", rep.det_B), ("predicted_det", rep.predicted_det),
        ("trace_B", rep.trace_B), ("predicted_trace", rep.predicted_trace),
    ]
    for j in range(4):
        for k in range(4):
            quantities.append((f"W_entangled_{j}{k}", form[j, k].real))
    quantities += [
        ("limit_doublings", lim.doublings),
        ("limit_fidelity_psi_plus",
         float(np.vdot(model.bell_state(+1), lim.matrix @ model.bell_state(+1)).real)),
        ("fixed_space_dim", len(fixed)),
        ("p_inf", float(np.vdot(v, v).real)),
    ]
    summary = {
        "spectral_identities": rep.checks(),
        "spectral_identities_pass": rep.ok,
        "limit_doublings": lim.doublings,
        "limit_fidelity_psi_plus": quantities[-3][1],
        "fixed_space_dim": len(fixed),
        "p_inf": quantities[-1][1],
        "discrepancies": [asdict(d) for d in discrepancy_table(delta_t=s.delta_t)],
    }
    return CSV_SCHEMAS["spectrum"], quantities, summary


def _run_sweep(s: Scenario):
    psi0 = parse_state(s.initial_state)
    rows = sweep_delta_t(s.sweep_lo, s.sweep_hi, s.sweep_points, psi0, s.tolerance)
    ok = [r for r in rows if r["status"] == "ok"]
    summary = {
        "points": len(rows),
        "ok": len(ok),
        "excluded": sum(r["status"] == "excluded" for r in rows),
        "no_convergence": sum(r["status"] == "no-convergence" for r in rows),
        "det_identity_pass": all(abs(r["det_B"] - r["delta4"]) < 1e-11 for r in ok),
        "trace_identity_pass": all(abs(r["trace_B"] - r["predicted_trace"]) < 1e-11 for r in ok),
        "norm_B_below_one": all(r["norm_B"] < 1 for r in ok),
        "predicted_p_inf": asymptotic_survival(psi0),
        "max_abs_p_inf_error": max((abs(r["p_inf"] - asymptotic_survival(psi0)) for r in ok), default=None),
    }
    table = [[r[c] for c in SWEEP_COLUMNS] for r in rows]
    return SWEEP_COLUMNS, table, summary


def _run_kwiat(s: Scenario):
    res = kwiat_ifm(s.n_steps, n_trajectories=s.n_trajectories, seed=s.seed)
    rows = [(k, k * res.delta_t, res.survival_curve[k], res.left_curve_absent[k]) for k in range(s.n_steps + 1)]
    summary = {
        "n": res.n,
        "delta_t": res.delta_t,
        "p_object_present": res.p_object_present,
        "p_object_present_closed_form": res.p_present_closed_form,
        "p_object_absent": res.p_object_absent,
    }
    if res.mc is not None:
        summary["mc_no_click_fraction"] = res.mc.no_click_fraction
        summary["mc_standard_error"] = res.mc.standard_error
        summary["mc_within_4_sigma"] = (
            abs(res.mc.no_click_fraction - res.p_object_present) <= 4 * res.mc.standard_error
        )
    return CSV_SCHEMAS["kwiat-ifm"], rows, summary


RUNNERS = {
    "conditional": _run_conditional,
    "montecarlo": _run_montecarlo,
    "zeno-limit": _run_zeno_limit,
    "spectrum": _run_spectrum,
    "sweep": _run_sweep,
    "kwiat-ifm": _run_kwiat,
}


def run_scenario(s: Scenario) -> dict:
    """Run ``s`` and write its CSV and JSON summary. Returns the summary dict."""
    s = s.resolved()
    validate(s)
    header, rows, headline = RUNNERS[s.mode](s)
    out = Path(s.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))
    summary = {
        "tool": "zeno",
        "version": __version__,
        "mode": s.mode,
        "config": s.to_dict(),
        "csv_path": str(out),
        "csv_columns": list(header),
        "results": headline,
    }
    text = json.dumps(_json_clean(summary), indent=2, allow_nan=False) + "\n"
    out.with_suffix(".json").write_text(text, encoding="utf-8")
    return summary


def build_scenario(mode: str, config_path: str | None, overrides: list[str], out: str | None) -> Scenario:
    values: dict = {}
    if config_path:
        values.update(load_config_file(config_path))
    for i, item in enumerate(overrides or [], start=1):
        if "=" not in item:
            raise ConfigError(f"--set #{i}: expected key=value, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        values[key] = _coerce(key, raw, f"--set #{i}")
    if out:
        values["output_path"] = out
    file_mode = values.pop("mode", mode)
    if file_mode != mode:
        raise ConfigError(f"config mode {file_mode!r} does not match command-line mode {mode!r}")
    return Scenario.from_dict({"mode": mode, **values})


EPILOG = "CSV columns per mode:\n" + "\n".join(
    f"  {m:12s} {', '.join(cols)}" for m, cols in CSV_SCHEMAS.items()
) + (
    "\n\nConfig keys (key=value file or --set): "
    + ", ".join(f.name for f in fields(Scenario) if f.name != "mode")
    + "\ninitial_state: one of 00, 01, 10, 11, psi+, psi- or 8 reals (re im pairs)."
    + "\nExit status: 0 ok, 1 config error or excluded Δt, 2 numerical non-convergence."
    + "\nEnvironment: ZENO_THREADS sets the worker count (results do not depend on it);"
    + " ZENO_DISABLE_NUMBA=1 selects the numpy kernels."
)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zeno",
        description="Measurement-interrupted photon + atom dynamics.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="key=value file, or a JSON summary from a previous run")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="CSV output path (JSON summary goes next to it)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        scenario = build_scenario(args.mode, args.config, args.overrides, args.out)
        summary = run_scenario(scenario)
    except (ConfigError, model.ExcludedIntervalError) as exc:
        print(f"zeno: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"zeno: non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    print(json.dumps(_json_clean(summary["results"]), indent=2))
    print(f"wrote {summary['csv_path']}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
