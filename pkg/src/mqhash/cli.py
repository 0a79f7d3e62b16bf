"""Command-line front end: ``mqhash <subcommand> [--key value ...]``.

Every subcommand accepts ``--config FILE`` (a JSON object whose keys are flag
names) and ``--seed``; flags given on the command line override the file, and
the seed defaults to ``$MQHASH_SEED`` or 0.  Outputs start with the resolved
configuration so any artifact can be regenerated from its own header.

Exit codes: 0 success or accept, 1 reject, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .hashcore import HashParams, max_bias, normalize_set, quantum_hash
from .measure import density_fidelity, load_density_matrix, purity_max_eigenvalue
from .optimize import STRATEGIES, SearchConfig, epsilon_biased_bound, optimize_params, tradeoff
from .simulate import LOSS_POLICIES, DetectorModel, estimate_collision_curve, simulate_verification

SEED_ENV = "MQHASH_SEED"
TABLE_ROWS = {2: range(1, 8), 3: range(1, 6), 4: range(1, 5)}
MODEL_FIELDS = ("eta_signal", "eta_idler", "dark_rate_signal", "dark_rate_idler",
                "coincidence_window", "pair_rate", "dead_time_signal", "dead_time_idler",
                "loss_policy", "max_resends")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Shared helpers


def load_params(path: str | Path) -> HashParams:
    """Read params JSON; a document with a ``params`` key (optimize output) also works."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict) and "params" in doc:
        doc = doc["params"]
    if not isinstance(doc, dict):
        raise ValueError("params document must be a JSON object")
    return HashParams.from_dict(doc)


def _search_config(args) -> SearchConfig:
    return SearchConfig(strategy=args.strategy, budget=args.budget, seed=args.seed,
                        symmetry_reduction=not args.no_symmetry_reduction,
                        chains=args.chains, workers=args.workers)


def _model(args) -> DetectorModel:
    overrides = {k: getattr(args, k) for k in MODEL_FIELDS if getattr(args, k) is not None}
    return DetectorModel.ideal(**overrides) if args.ideal else DetectorModel(**overrides)


def _resolved(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func", "config") and k not in MODEL_FIELDS}
    if "ideal" in cfg:
        cfg["model"] = _model(args).to_dict()
    return cfg


def _emit(args, rows: list[dict] | None = None, doc: dict | None = None):
    """Write rows as CSV or a document as JSON, prefixed by the resolved config."""
    cfg = _resolved(args)
    buf = io.StringIO()
    if args.format == "csv" and rows is not None:
        buf.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
        buf.write(f"# seed: {args.seed}\n")
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    else:
        out = {"config": cfg, "seed": args.seed}
        out.update(doc if doc is not None else {"rows": rows})
        buf.write(json.dumps(out, indent=2) + "\n")
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# ---------------------------------------------------------------------------
# Subcommands


def cmd_table(args) -> int:
    config = _search_config(args)
    rows = []
    for d in args.d:
        ms = args.m if args.m else TABLE_ROWS.get(d)
        if ms is None:
            raise UsageError(f"no default m range for d={d}; pass --m")
        for m in ms:
            rows.append({"d": d, "m": m, "column_type": "biased",
                         "value": epsilon_biased_bound(args.q, d, m, config)})
            rep = optimize_params(args.q, d, m, config)
            rows.append({"d": d, "m": m, "column_type": "optimized",
                         "value": rep.worst_case_fidelity})
    _emit(args, rows=rows)
    return 0


def cmd_optimize(args) -> int:
    rep = optimize_params(args.q, args.d, args.m, _search_config(args))
    doc = rep.to_dict()
    # wall time would break bit-identical regeneration
    print(f"wall time {doc.pop('wall_time'):.2f} s", file=sys.stderr)
    _emit(args, doc=doc)
    return 0


def cmd_bias(args) -> int:
    elements = normalize_set(args.set, args.q)
    x_star, value = max_bias(elements, args.q)
    _emit(args, rows=[{"q": args.q, "set": " ".join(map(str, elements)),
                       "x_star": x_star, "max_bias": value}],
          doc={"q": args.q, "set": elements, "x_star": x_star, "max_bias": value})
    return 0


def cmd_hash(args) -> int:
    params = load_params(args.params)
    h = quantum_hash(params, args.x)
    rows = []
    for j, qd in enumerate(h.qudits, start=1):
        for k, (idx, amp) in enumerate(zip(qd.phase_indices, qd.amplitudes)):
            rows.append({"j": j, "k": k, "phase_index": idx, "re": amp.real, "im": amp.imag})
    doc = {"x": args.x, "q": params.q,
           "phase_indices": [list(qd.phase_indices) for qd in h.qudits]}
    _emit(args, rows=rows, doc=doc)
    return 0


def cmd_verify(args) -> int:
    params = load_params(args.params)
    rep = simulate_verification(params, args.x1, args.x2, _model(args), args.shots,
                                seed=args.seed, workers=args.workers)
    row = {"d": params.d, "m": params.m, "x1": args.x1, "x2": args.x2, "shots": rep.shots,
           "accepts": rep.accepts, "losses": rep.losses, "accept_rate": rep.accept_rate,
           "theoretical": rep.theoretical_fidelity, "seed": rep.seed}
    _emit(args, rows=[row], doc={"report": rep.to_dict()})
    return 0 if rep.verdict() else 1


def cmd_tradeoff(args) -> int:
    result = tradeoff(args.q, args.d, args.m_max, collision_limit=args.collision_limit,
                      decoding_limit=args.decoding_limit, config=_search_config(args))
    rows, optimal = [], {}
    for r in result:
        best = max(r.feasible) if r.feasible else None
        optimal[str(r.d)] = best
        for m in range(1, args.m_max + 1):
            rows.append({"d": r.d, "m": m, "decoding": r.decoding[m],
                         "collision": "" if r.collisions[m] is None else r.collisions[m],
                         "feasible": m in r.feasible, "optimal": m == best})
    _emit(args, rows=rows, doc={"optimal_m": optimal, "rows": rows})
    for d, m in optimal.items():
        print(f"d={d}: optimal m={m}", file=sys.stderr)
    return 0


def cmd_simulate_curve(args) -> int:
    fixed = None
    if args.params:
        p = load_params(args.params)
        if (p.q, p.d) != (args.q, args.d):
            raise UsageError("--params does not match --q/--d")
        fixed = {p.m: p}
    ms = args.m if args.m else ([p.m] if fixed else [1, 2, 3])
    rows = estimate_collision_curve(args.q, args.d, ms, _model(args), args.shots,
                                    config=_search_config(args), seed=args.seed, params=fixed)
    out = [{"d": r.d, "m": r.m, "x1": r.x1, "x2": r.x2, "shots": r.shots,
            "accepts": r.accepts, "losses": r.losses, "accept_rate": r.accept_rate,
            "theoretical": r.theoretical, "seed": r.seed} for r in rows]
    _emit(args, rows=out)
    return 0


def cmd_fidelity(args) -> int:
    measured = load_density_matrix(args.measured, trace_tol=args.trace_tol)
    doc = {"purity_max_eigenvalue": purity_max_eigenvalue(measured)}
    if args.target:
        target = load_density_matrix(args.target, trace_tol=args.trace_tol)
        doc["fidelity"] = density_fidelity(target, measured)
    _emit(args, rows=[doc], doc=doc)
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_search(p):
    p.add_argument("--strategy", choices=STRATEGIES, default="random-restart")
    p.add_argument("--budget", type=int, default=None, help="objective evaluations (default: sized per case)")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-symmetry-reduction", action="store_true")


def _add_model(p):
    p.add_argument("--ideal", action="store_true", help="unit efficiency, no dark counts or dead time")
    for name in MODEL_FIELDS:
        flag = "--" + name.replace("_", "-")
        if name == "loss_policy":
            p.add_argument(flag, choices=LOSS_POLICIES, default=None)
        elif name == "max_resends":
            p.add_argument(flag, type=int, default=None)
        else:
            p.add_argument(flag, type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqhash", description="Multiqudit quantum hashing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, fmt="csv", **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", help="JSON file of flag values")
        p.add_argument("--seed", type=int, default=int(os.environ.get(SEED_ENV, 0)))
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.set_defaults(func=func)
        return p

    p = command("table", cmd_table, help="worst-case collision table, both columns")
    p.add_argument("--q", type=int, default=256)
    p.add_argument("--d", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--m", type=int, nargs="+", default=None, help="m values for every d")
    _add_search(p)

    p = command("optimize", cmd_optimize, fmt="json", help="search phase parameters")
    p.add_argument("--q", type=int, default=256)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    _add_search(p)

    p = command("bias", cmd_bias, fmt="json", help="maximum bias of a set")
    p.add_argument("--q", type=int, default=256)
    p.add_argument("--set", type=int, nargs="+", required=True)

    p = command("hash", cmd_hash, fmt="json", help="phase indices of a hash state")
    p.add_argument("--params", required=True)
    p.add_argument("--x", type=int, required=True)

    p = command("verify", cmd_verify, fmt="json", help="simulate verification of hash(x1) against x2")
    p.add_argument("--params", required=True)
    p.add_argument("--x1", type=int, required=True)
    p.add_argument("--x2", type=int, required=True)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    _add_model(p)

    p = command("tradeoff", cmd_tradeoff, help="optimal qudit count per dimension")
    p.add_argument("--q", type=int, default=256)
    p.add_argument("--d", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--m-max", type=int, default=7)
    p.add_argument("--collision-limit", type=float, default=0.25)
    p.add_argument("--decoding-limit", type=float, default=0.15)
    _add_search(p)

    p = command("simulate-curve", cmd_simulate_curve, help="theoretical vs simulated collisions")
    p.add_argument("--q", type=int, default=256)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int, nargs="+", default=None)
    p.add_argument("--params", default=None, help="use these params instead of optimizing")
    p.add_argument("--shots", type=int, default=100_000)
    _add_search(p)
    _add_model(p)

    p = command("fidelity", cmd_fidelity, fmt="json", help="density-matrix fidelity and purity")
    p.add_argument("--measured", required=True)
    p.add_argument("--target", default=None)
    p.add_argument("--trace-tol", type=float, default=1e-6)

    return parser


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse argv with flag values from the optional config file as defaults."""
    path = _config_path(argv)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((t for t in argv if t in subparsers.choices), None)
    if path and command:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        sub = subparsers.choices[command]
        actions = {a.dest: a for a in sub._actions}
        for key, value in data.items():
            dest = key.lstrip("-").replace("-", "_")
            if dest not in actions or dest in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {command}")
            actions[dest].required = False
            sub.set_defaults(**{dest: value})
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(parser, argv)
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
