"""Monte Carlo sweeps over (dimension, eps, copies) for the three estimators.

Seeding: trial ``t`` of grid cell ``c`` draws from
``SeedSequence(base, spawn_key=(1, c, t))``; the test state of a cell comes
from ``SeedSequence(base, spawn_key=(0, dim_index, eps_index))`` so that
every copy count in a sweep sees the same state.  Cells and trials can run
in any order with identical results.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from mictomo.errors import ValidationError
from mictomo.linalg import (
    check_density,
    hermitize,
    hs_norm,
    matrix_from_json,
    maximally_mixed,
    op_norm,
    random_density,
    random_hermitian,
    random_pure,
    trace_norm,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ESTIMATORS = ("pauli", "mub", "k-outcome")
STATE_KINDS = ("maximally-mixed", "pure-random", "hs-random", "hard-instance", "perturbed-mixed", "file")
CSV_COLUMNS = ("trial", "estimator", "N_or_d", "eps", "copies", "trace_error", "hs_error", "success", "seed",
               "wall_ms")


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class StateSpec:
    kind: str
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValidationError(f"unknown state kind {self.kind!r}; choose from {STATE_KINDS}")
        object.__setattr__(self, "params", dict(self.params))


def _spec_dim(spec: StateSpec, dim: int | None) -> int:
    p = spec.params
    if "d" in p:
        d = int(p["d"])
    elif "N" in p:
        d = 2 ** int(p["N"])
    elif dim is not None:
        d = dim
    else:
        raise ValidationError(f"state kind {spec.kind!r} needs a dimension ('d' or 'N')")
    if dim is not None and d != dim:
        raise ValidationError(f"state dimension {d} does not match the estimator dimension {dim}")
    return d


def perturbed_mixed(d: int, rng: np.random.Generator, strength: float = 0.5) -> np.ndarray:
    """``I/d + Delta`` with a random traceless ``Delta`` of operator norm ``strength / d``.

    Every outcome probability of a rank-one measurement lies within
    ``(1 +- strength) / d``.
    """
    if not 0 <= strength < 1:
        raise ValidationError("perturbation strength must lie in [0, 1)")
    h = random_hermitian(d, rng)
    h -= np.trace(h).real / d * np.eye(d)
    return hermitize(maximally_mixed(d) + h * (strength / (d * op_norm(h))))


def state_factory(spec: StateSpec, rng: np.random.Generator, dim: int | None = None,
                  eps: float | None = None) -> np.ndarray:
    """Resolve a :class:`StateSpec` to a validated density matrix.

    ``params['seed']``, when present, replaces ``rng`` so the state is fixed
    independently of the sweep seed.  ``eps`` is the cell's target accuracy,
    used by ``hard-instance`` when ``spec.params`` does not pin its own.
    """
    p = spec.params
    if "seed" in p:
        rng = np.random.default_rng(int(p["seed"]))
    if spec.kind == "file":
        path = Path(p.get("path", ""))
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read state file {path}: {exc}") from exc
        rho = check_density(matrix_from_json(obj), f"state in {path}")
        _spec_dim(StateSpec("file", {"d": rho.shape[0]}), dim)
        return rho
    d = _spec_dim(spec, dim)
    if spec.kind == "maximally-mixed":
        rho = maximally_mixed(d)
    elif spec.kind == "pure-random":
        rho = random_pure(d, rng)
    elif spec.kind == "hs-random":
        rho = random_density(d, rng)
    elif spec.kind == "perturbed-mixed":
        rho = perturbed_mixed(d, rng, float(p.get("strength", 0.5)))
    else:
        from mictomo.hardness import HardnessParams, default_ell, pauli_top_weight_basis, sample_instance

        n = d.bit_length() - 1
        if 2 ** n != d:
            raise ValidationError("hard-instance states need d = 2^N")
        target = p.get("eps", eps)
        if target is None:
            raise ValidationError("hard-instance state needs eps")
        ell = int(p.get("ell", default_ell(n)))
        params = HardnessParams(eps=float(target), c=float(p.get("c", 10 * math.sqrt(2))))
        rho = sample_instance(pauli_top_weight_basis(n, ell), params, rng).state
    rho = check_density(rho)
    rho.setflags(write=False)
    return rho


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    estimator: str
    state: StateSpec
    dims: tuple
    eps: tuple
    trials: int
    seed: int
    copies: tuple | None = None
    output: str | None = None
    delta: float = 0.1
    k: int = 2
    project: bool = False
    timing: bool = False

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValidationError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        for name in ("dims", "eps", "copies"):
            vals = getattr(self, name)
            if vals is None:
                continue
            vals = tuple(vals)
            if not vals or any(v <= 0 for v in vals):
                raise ValidationError(f"sweep values for {name} must be positive and non-empty")
            object.__setattr__(self, name, vals)
        if self.estimator == "k-outcome" and self.copies is None:
            raise ValidationError("the k-outcome estimator needs explicit copy counts")

    def cells(self) -> list[tuple[int, int, int, int | None]]:
        """``(cell, dim_index, eps_index, copies)`` in a fixed order."""
        copies = self.copies if self.copies is not None else (None,)
        grid = itertools.product(range(len(self.dims)), range(len(self.eps)), copies)
        return [(c, i, j, n) for c, (i, j, n) in enumerate(grid)]


def config_from_mapping(obj: Mapping) -> ExperimentConfig:
    """Build a config from a parsed TOML table (or an equivalent flat mapping)."""
    obj = dict(obj)
    sweep = dict(obj.pop("sweep", {}))
    state = dict(obj.pop("state", {"kind": "hs-random"}))
    for key in ("dims", "eps", "copies"):
        if key in obj:
            sweep[key] = obj.pop(key)
    kind = state.pop("kind", "hs-random")
    params = dict(state.pop("params", {}))
    params.update(state)
    missing = [k for k in ("estimator", "seed", "trials") if k not in obj]
    if missing:
        raise ValidationError(f"config is missing {missing}")
    if "dims" not in sweep or "eps" not in sweep:
        raise ValidationError("config sweep needs 'dims' and 'eps'")
    known = {"estimator", "seed", "trials", "output", "delta", "k", "project", "timing"}
    unknown = set(obj) - known
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}")
    copies = sweep.get("copies")
    return ExperimentConfig(
        estimator=str(obj["estimator"]),
        state=StateSpec(kind, params),
        dims=tuple(int(x) for x in _as_list(sweep["dims"])),
        eps=tuple(float(x) for x in _as_list(sweep["eps"])),
        copies=None if copies is None else tuple(int(x) for x in _as_list(copies)),
        trials=int(obj["trials"]),
        seed=int(obj["seed"]),
        output=obj.get("output"),
        delta=float(obj.get("delta", 0.1)),
        k=int(obj.get("k", 2)),
        project=bool(obj.get("project", False)),
        timing=bool(obj.get("timing", False)),
    )


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_config(path) -> dict:
    """Parse a TOML config file into a plain mapping."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc


# --------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    estimator: str
    N_or_d: int
    eps: float
    copies: int
    trace_error: float
    hs_error: float
    success: bool
    seed: int
    wall_ms: float | None = None


@dataclass
class TrialOutcome:
    record: TrialRecord
    estimate: np.ndarray
    state: np.ndarray
    counters: dict


@dataclass
class SweepResult:
    records: list
    summary: list


def state_dimension(estimator: str, n_or_d: int) -> int:
    return 2 ** n_or_d if estimator == "pauli" else n_or_d


def trial_seed(base: int, cell: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base, spawn_key=(1, cell, trial))


def cell_state(config: ExperimentConfig, dim_index: int, eps_index: int) -> np.ndarray:
    ss = np.random.SeedSequence(config.seed, spawn_key=(0, dim_index, eps_index))
    d = state_dimension(config.estimator, config.dims[dim_index])
    return state_factory(config.state, np.random.default_rng(ss), dim=d, eps=config.eps[eps_index])


def estimate_once(estimator: str, rho: np.ndarray, n_or_d: int, eps: float, copies: int | None,
                  rng: np.random.Generator, delta: float = 0.1, k: int = 2,
                  project: bool = False) -> tuple[np.ndarray, int, dict]:
    """Run one estimator on one state; returns ``(estimate, copies_used, counters)``."""
    if estimator == "pauli":
        from mictomo.tomography.pauli_scheme import pauli_copies_needed, pauli_estimate, pauli_tomography_run

        n = n_or_d
        if copies is None:
            _, m = pauli_copies_needed(n, eps, delta)
        else:
            m = copies // 3 ** n
            if m < 1:
                raise ValidationError(f"{copies} copies are fewer than the 3^N = {3 ** n} settings")
        sheet = pauli_tomography_run(rho, n, m, rng)
        return pauli_estimate(sheet, project=project), m * 3 ** n, {"shots_per_setting": m}
    if estimator == "mub":
        from mictomo.tomography.mub import algorithm1_run, k_eq_d_copies_needed

        n = k_eq_d_copies_needed(n_or_d, eps) if copies is None else copies
        res = algorithm1_run(rho, n_or_d, n, rng)
        return res.estimate, n - res.leftover, res.counters()
    if estimator == "k-outcome":
        from mictomo.tomography.simulation import k_outcome_copies_body, k_outcome_run

        if copies is None:
            raise ValidationError("the k-outcome estimator needs an explicit copy count")
        res = k_outcome_run(rho, n_or_d, k, copies, rng)
        counters = res.counters()
        counters["copies_order_body"] = k_outcome_copies_body(n_or_d, 2 ** res.w_bits, eps)
        return res.estimate, copies - res.leftover, counters
    raise ValidationError(f"unknown estimator {estimator!r}")


def run_trial(config: ExperimentConfig, cell: int, dim_index: int, eps_index: int, copies: int | None,
              trial: int, state: np.ndarray | None = None) -> TrialOutcome:
    ss = trial_seed(config.seed, cell, trial)
    seed_word = int(ss.generate_state(1, np.uint64)[0])
    rng = np.random.default_rng(ss)
    if state is None:
        state = cell_state(config, dim_index, eps_index)
    n_or_d, eps = config.dims[dim_index], config.eps[eps_index]
    t0 = time.perf_counter()
    est, used, counters = estimate_once(config.estimator, state, n_or_d, eps, copies, rng,
                                        config.delta, config.k, config.project)
    wall = (time.perf_counter() - t0) * 1e3 if config.timing else None
    terr = trace_norm(est - state)
    rec = TrialRecord(trial, config.estimator, n_or_d, eps, used, terr, hs_norm(est - state),
                      bool(terr <= eps), seed_word, wall)
    return TrialOutcome(rec, est, state, counters)


def summarize(records) -> list[dict]:
    """Per-cell success rate and mean/stderr of both error measures."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.estimator, r.N_or_d, r.eps, r.copies), []).append(r)
    out = []
    for (est, nd, eps, copies), rs in groups.items():
        te = np.array([r.trace_error for r in rs])
        he = np.array([r.hs_error for r in rs])
        succ = np.array([r.success for r in rs], dtype=float)
        out.append({
            "estimator": est,
            "N_or_d": nd,
            "eps": eps,
            "copies": copies,
            "trials": len(rs),
            "successes": int(succ.sum()),
            "success_rate": float(succ.mean()),
            "mean_trace_error": float(te.mean()),
            "stderr_trace_error": _stderr(te),
            "mean_hs_error": float(he.mean()),
            "stderr_hs_error": _stderr(he),
        })
    return out


def _stderr(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def run_sweep(config: ExperimentConfig) -> SweepResult:
    records = []
    states: dict = {}
    for cell, i, j, copies in config.cells():
        key = (i, j)
        if key not in states:
            states[key] = cell_state(config, i, j)
        for t in range(config.trials):
            records.append(run_trial(config, cell, i, j, copies, t, states[key]).record)
    return SweepResult(records, summarize(records))


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def emit_csv(records, path) -> None:
    """Write records with the fixed column order; ``wall_ms`` is blank unless timed."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_csv(records, fh)
    except OSError as exc:
        raise ValidationError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> list[TrialRecord]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TrialRecord(int(r["trial"]), r["estimator"], int(r["N_or_d"]), float(r["eps"]), int(r["copies"]),
                    float(r["trace_error"]), float(r["hs_error"]), r["success"] == "1", int(r["seed"]),
                    float(r["wall_ms"]) if r["wall_ms"] else None)
        for r in rows
    ]


def emit_summary_json(summary, path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(summary, indent=2) + "\n")
    except OSError as exc:
        raise ValidationError(f"cannot write summary to {path}: {exc}") from exc


def emit_plot_data(summary, directory) -> list[Path]:
    """One ``copies  mean_trace_error  stderr`` file per (estimator, N_or_d, eps)."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create plot directory {directory}: {exc}") from exc
    groups: dict = {}
    for row in summary:
        groups.setdefault((row["estimator"], row["N_or_d"], row["eps"]), []).append(row)
    paths = []
    for (est, nd, eps), rows in groups.items():
        rows = sorted(rows, key=lambda r: r["copies"])
        p = directory / f"{est}_{nd}_{eps!r}.dat"
        lines = ["# copies mean_trace_error stderr"]
        lines += [f"{r['copies']} {r['mean_trace_error']!r} {r['stderr_trace_error']!r}" for r in rows]
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    return paths


__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "StateSpec",
    "SweepResult",
    "TrialRecord",
    "config_from_mapping",
    "emit_csv",
    "emit_plot_data",
    "emit_summary_json",
    "estimate_once",
    "load_config",
    "read_csv",
    "run_sweep",
    "run_trial",
    "state_factory",
    "summarize",
    "trial_seed",
]
