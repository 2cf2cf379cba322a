"""Command-line entry point: ``mictomo {mic, lowerbound, hardinstance, tomo, sweep}``.

Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings

import numpy as np

from mictomo.errors import NumericalError, ValidationError
from mictomo.linalg import matrix_to_json

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, default=_plain) + "\n"


# --------------------------------------------------------------------------
# mic


def cmd_mic(args) -> int:
    from mictomo import measurement as ms

    if args.povm is not None:
        povm = ms.load_povm(args.povm)
    elif args.pauli is not None:
        povm = ms.pauli_basis_povm(args.pauli)
    else:
        povm = ms.computational_basis_povm(args.computational)
    report: dict = {"d": povm.dim, "outcomes": povm.num_outcomes}
    if args.report == "trace-norm":
        report["mic_trace_norm"] = ms.mic_trace_norm(povm)
    elif args.report == "spectrum":
        report["spectrum"] = ms.mic_spectrum(povm).tolist()
    else:
        if args.eps is None:
            raise ValidationError("--report bound needs --eps")
        tn = ms.mic_trace_norm(povm)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report.update(ms.plug_play_lower_bound(povm.dim, args.eps, tn).to_dict())
    _emit(_json(report), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# lowerbound


def cmd_lowerbound(args) -> int:
    from mictomo.hardness import pauli_lowerbound_certificate
    from mictomo.measurement import k_outcome_lower_bound

    if args.family == "pauli":
        report = pauli_lowerbound_certificate(args.n_qubits, args.eps)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = k_outcome_lower_bound(args.dim, args.eps, args.k).to_dict()
    _emit(_json(report), args.output)
    return EXIT_OK


def _add_lowerbound(sub) -> None:
    p = sub.add_parser("lowerbound", help="copy-count lower-bound calculators")
    fam = p.add_subparsers(dest="family", required=True)
    pp = fam.add_parser("pauli", help="Pauli-measurement lower-bound certificate")
    pp.add_argument("--n-qubits", type=int, required=True)
    pp.add_argument("--eps", type=float, required=True)
    pp.add_argument("--output")
    pk = fam.add_parser("k-outcome", help="bound for k-outcome measurements")
    pk.add_argument("--dim", type=int, required=True)
    pk.add_argument("--k", type=int, required=True)
    pk.add_argument("--eps", type=float, required=True)
    pk.add_argument("--output")
    p.set_defaults(func=cmd_lowerbound)


# --------------------------------------------------------------------------
# hardinstance


def cmd_hardinstance(args) -> int:
    from mictomo import hardness as hd
    from mictomo.linalg import trace_norm

    n = args.n_qubits
    ell = args.ell if args.ell is not None else hd.default_ell(n)
    basis = hd.pauli_top_weight_basis(n, ell)
    params = hd.HardnessParams(eps=args.eps, c=args.c)
    rng = np.random.default_rng(args.seed)
    if args.action == "kappa":
        kappa = hd.empirical_kappa(basis, args.count, rng, args.quantile)
        _emit(_json({"N": n, "ell": ell, "quantile": args.quantile, "trials": args.count, "kappa": kappa,
                     "c": args.c, "c_lt_10_kappa": hd.constant_tension(args.c, kappa)}), args.output)
        return EXIT_OK
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(args.count):
            inst = hd.sample_instance(basis, params, rng)
            if args.check_validity:
                try:
                    hd.check_instance(inst)
                except ValidationError as exc:
                    raise NumericalError(f"instance {i} failed validity: {exc}") from exc
            dist = trace_norm(inst.state - np.eye(inst.state.shape[0]) / inst.state.shape[0])
            rows.append((i, repr(dist), repr(inst.clamp_factor), int(dist >= args.eps)))
    lines = ["index,trace_distance,clamp_factor,meets_eps"] + [",".join(map(str, r)) for r in rows]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _add_hardinstance(sub) -> None:
    p = sub.add_parser("hardinstance", help="hard-instance sampling and checks")
    p.add_argument("action", choices=("sample", "kappa"))
    p.add_argument("--n-qubits", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--ell", type=int)
    p.add_argument("--c", type=float, default=10 * np.sqrt(2))
    p.add_argument("--quantile", type=float, default=0.999)
    p.add_argument("--check-validity", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_hardinstance)


# --------------------------------------------------------------------------
# tomo


def _state_spec(args):
    from mictomo.harness import StateSpec

    params = dict(_parse_kv(args.state_param or []))
    if args.state_file:
        return StateSpec("file", {"path": args.state_file})
    return StateSpec(args.state_kind, params)


def _parse_kv(items):
    for item in items:
        if "=" not in item:
            raise ValidationError(f"expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            yield key, json.loads(val)
        except json.JSONDecodeError:
            yield key, val


def cmd_tomo(args) -> int:
    from mictomo.harness import ExperimentConfig, run_trial, summarize, write_csv

    scheme = args.scheme
    dim = args.n_qubits if scheme == "pauli" else args.dim
    copies = None if args.copies is None else (args.copies,)
    cfg = ExperimentConfig(
        estimator=scheme, state=_state_spec(args), dims=(dim,), eps=(args.eps,), trials=args.trials or 1,
        seed=args.seed, copies=copies, delta=getattr(args, "delta", 0.1), k=getattr(args, "k", 2),
        project=getattr(args, "project", False),
    )
    cell, i, j, n = cfg.cells()[0]
    if args.trials:
        records = [run_trial(cfg, cell, i, j, n, t).record for t in range(args.trials)]
        buf = io.StringIO()
        write_csv(records, buf)
        _emit(buf.getvalue(), args.output)
        if args.summary:
            _emit(_json(summarize(records)), args.summary)
        return EXIT_OK
    out = run_trial(cfg, cell, i, j, n, 0)
    params = {"scheme": scheme, "N_or_d": dim, "eps": args.eps, "seed": args.seed, "state": cfg.state.kind}
    for key in ("delta", "k", "project"):
        if hasattr(args, key):
            params[key] = getattr(args, key)
    report = {
        "estimate": matrix_to_json(out.estimate),
        "trace_error": out.record.trace_error,
        "hs_error": out.record.hs_error,
        "success": out.record.success,
        "copies_used": out.record.copies,
        "params": params,
        "counters": out.counters,
    }
    _emit(_json(report), args.output)
    return EXIT_OK


def _add_tomo(sub) -> None:
    p = sub.add_parser("tomo", help="run a tomography scheme")
    schemes = p.add_subparsers(dest="scheme", required=True)

    def common(sp, eps_required: bool):
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--eps", type=float, required=eps_required, default=None if eps_required else 0.25)
        sp.add_argument("--copies", type=int)
        sp.add_argument("--trials", type=int, help="emit per-trial CSV rows instead of a JSON report")
        sp.add_argument("--state-kind", default="hs-random")
        sp.add_argument("--state-param", action="append", metavar="KEY=VALUE")
        sp.add_argument("--state-file")
        sp.add_argument("--output")
        sp.add_argument("--summary", help="summary JSON path (with --trials)")

    pp = schemes.add_parser("pauli")
    pp.add_argument("--n-qubits", type=int, required=True)
    pp.add_argument("--delta", type=float, default=0.1)
    pp.add_argument("--project", action="store_true")
    common(pp, True)
    pm = schemes.add_parser("mub")
    pm.add_argument("--dim", type=int, required=True)
    common(pm, False)
    pk = schemes.add_parser("k-outcome")
    pk.add_argument("--dim", type=int, required=True)
    pk.add_argument("--k", type=int, required=True)
    common(pk, False)
    p.set_defaults(func=cmd_tomo)


# --------------------------------------------------------------------------
# sweep


SWEEP_FLAGS = ("estimator", "trials", "seed", "output", "delta", "k", "project", "timing", "dims", "eps", "copies")


def cmd_sweep(args) -> int:
    from mictomo.harness import (
        config_from_mapping,
        emit_csv,
        emit_plot_data,
        emit_summary_json,
        load_config,
        run_sweep,
        write_csv,
    )

    mapping = load_config(args.config) if args.config else {}
    for key in SWEEP_FLAGS:
        val = getattr(args, key)
        if val is not None and val is not False:
            mapping[key] = val
    if args.state_kind or args.state_param:
        state = dict(mapping.get("state", {}))
        if args.state_kind:
            state["kind"] = args.state_kind
        state.update(_parse_kv(args.state_param or []))
        mapping["state"] = state
    if "seed" not in mapping:
        raise ValidationError("sweep needs a seed (--seed or 'seed' in the config)")
    cfg = config_from_mapping(mapping)
    result = run_sweep(cfg)
    if cfg.output:
        emit_csv(result.records, cfg.output)
    else:
        write_csv(result.records, sys.stdout)
    if args.summary:
        emit_summary_json(result.summary, args.summary)
    if args.plot_dir:
        emit_plot_data(result.summary, args.plot_dir)
    return EXIT_OK


def _add_sweep(sub) -> None:
    p = sub.add_parser("sweep", help="Monte Carlo sweep over a parameter grid")
    p.add_argument("--config")
    p.add_argument("--estimator", choices=("pauli", "mub", "k-outcome"))
    p.add_argument("--dims", type=int, nargs="+")
    p.add_argument("--eps", type=float, nargs="+")
    p.add_argument("--copies", type=int, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output")
    p.add_argument("--delta", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--project", action="store_true")
    p.add_argument("--timing", action="store_true")
    p.add_argument("--state-kind")
    p.add_argument("--state-param", action="append", metavar="KEY=VALUE")
    p.add_argument("--summary")
    p.add_argument("--plot-dir")
    p.set_defaults(func=cmd_sweep)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mictomo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mic", help="measurement information channel reports")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--povm", help="POVM JSON file")
    src.add_argument("--pauli", help="Pauli basis setting such as XZY")
    src.add_argument("--computational", type=int, metavar="D", help="computational basis of dimension D")
    p.add_argument("--report", choices=("trace-norm", "spectrum", "bound"), default="trace-norm")
    p.add_argument("--eps", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_mic)

    _add_lowerbound(sub)
    _add_hardinstance(sub)
    _add_tomo(sub)
    _add_sweep(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
