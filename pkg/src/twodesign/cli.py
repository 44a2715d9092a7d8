"""Command-line interface emitting figure-ready CSV/JSON experiment data.

Every output embeds the fully resolved run configuration and seed, so a
rerun of the same command reproduces the file byte for byte.  Exit codes:
0 success, 2 configuration error, 3 epsilon unreachable, 4 oracle
mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass

from . import analytics, connectivity, engine, kernels, oracle
from .architectures import (ConstructionError, EnsembleSpec, SiteGraph,
                            brickwork_spec, family_spec, graph_spec,
                            matching_spec, singles_spec)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EPS_UNREACHED = 3
EXIT_ORACLE_MISMATCH = 4

ENSEMBLE_KINDS = ("brickwork_obc", "brickwork_pbc", "pcg", "pb", "pbfe",
                  "singles")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    family: str | None
    graph_path: str | None
    n: list[int]
    q: int
    eps: float | None
    steps: list[int] | None
    realizations: int
    seed: int
    threads: int | None
    out: str | None
    fmt: str
    extra: dict

    def as_dict(self) -> dict:
        # out path and thread count are delivery details: dropping them
        # keeps equal experiments byte-identical on disk
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        d["version"] = 1
        return d


def _parse_range(text: str, what: str) -> list[int]:
    """a, a:b, or a:b:step (inclusive ends)."""
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError as exc:
        raise ConfigError(f"bad {what} range {text!r}") from exc
    if len(parts) == 1:
        return parts
    if len(parts) == 2:
        lo, hi = parts
        step = 1
    elif len(parts) == 3:
        lo, hi, step = parts
    else:
        raise ConfigError(f"bad {what} range {text!r}")
    if step < 1 or hi < lo:
        raise ConfigError(f"bad {what} range {text!r}")
    return list(range(lo, hi + 1, step))


def _parse_family(text: str):
    """family name with optional colon parameter: tree:3, random_regular:4."""
    name, _, param = text.partition(":")
    params = {}
    if param:
        if name == "tree":
            params["arity"] = int(param)
        elif name == "random_regular":
            params["degree"] = int(param)
        else:
            raise ConfigError(f"family {name!r} takes no parameter")
    return name, params


def _build_spec(args, n: int) -> EnsembleSpec:
    if args.graph:
        with open(args.graph, "r", encoding="utf-8") as fh:
            g = SiteGraph.from_json(fh.read())
        if g.n != n:
            raise ConfigError(f"graph file has n={g.n}, requested n={n}")
        return graph_spec(g, q=args.q)
    if not args.family:
        raise ConfigError("need --family or --graph")
    name, params = _parse_family(args.family)
    if name == "singles":
        return singles_spec(n, args.q)
    if name in ("brickwork_obc", "brickwork_pbc"):
        return brickwork_spec(n, args.q,
                              "open" if name.endswith("obc") else "periodic")
    if name in ("pcg", "pb", "pbfe"):
        return matching_spec(name, n, args.q)
    if name == "random_regular":
        params["seed"] = args.seed
    return family_spec(name, n, args.q, **params)


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit(config: RunConfig, columns: list[str], rows: list[tuple],
          out: str | None, fmt: str) -> None:
    if fmt == "csv":
        lines = ["# config: " + json.dumps(config.as_dict(), sort_keys=True)]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_format_value(v) for v in row))
        text = "\n".join(lines) + "\n"
    else:
        doc = {"config": config.as_dict(),
               "rows": [dict(zip(columns, row)) for row in rows]}
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _steps_for(args, spec: EnsembleSpec) -> list[int]:
    if args.layers is not None:
        if spec.kind == "graph":
            raise ConfigError("--layers applies to layer-based ensembles; "
                              "use --steps for graphs")
        return _parse_range(args.layers, "layers")
    if args.steps is not None:
        return _parse_range(args.steps, "steps")
    raise ConfigError("need --steps or --layers")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_error_curve(args) -> int:
    n = _parse_range(args.n, "n")
    if len(n) != 1:
        raise ConfigError("error-curve takes a single --n")
    spec = _build_spec(args, n[0])
    steps = _steps_for(args, spec)
    horizon = max(steps)
    floor = (args.eps / 10.0) if args.eps else 0.0
    curve = engine.error_curve(spec, horizon, floor=floor,
                               realizations=args.realizations,
                               master_seed=args.seed)
    cols = ["step", "mult_error", "coll_error", "stat_err", "optimal_a",
            "guaranteed"]
    rows = []
    for s in steps:
        se = float(curve.stat_err[s]) if curve.stat_err is not None else 0.0
        rows.append((s, float(curve.mult_error[s]), float(curve.coll_error[s]),
                     se, engine.mask_label(int(curve.argmax_mask[s]), spec.n),
                     bool(curve.guaranteed[s])))
    _emit(_config_from(args, "error-curve", n), cols, rows, args.out, args.format)
    return EXIT_OK


def cmd_depth(args) -> int:
    if args.eps is None:
        raise ConfigError("depth needs --eps")
    ns = _parse_range(args.n, "n")
    kind = args.kind
    cols = ["n", "epsilon", "kind", "depth", "step_lo", "step_hi",
            "err_lo", "err_hi", "guaranteed_lo", "guaranteed_hi", "optimal_a"]
    rows = []
    for n in ns:
        spec = _build_spec(args, n)
        r = engine.design_depth(spec, args.eps, kind,
                                realizations=args.realizations,
                                master_seed=args.seed)
        rows.append((n, args.eps, kind, r.depth, r.step_lo, r.step_hi,
                     r.err_lo, r.err_hi, r.guaranteed_lo, r.guaranteed_hi,
                     engine.mask_label(r.argmax_lo, n)))
    _emit(_config_from(args, "depth", ns), cols, rows, args.out, args.format)
    return EXIT_OK


def cmd_sweep(args) -> int:
    ns = _parse_range(args.n, "n")
    if len(ns) != 1:
        raise ConfigError("sweep takes a single --n")
    spec = _build_spec(args, ns[0])
    steps = _steps_for(args, spec)
    res = engine.experiment_sweep(spec, steps,
                                  realizations=args.realizations,
                                  master_seed=args.seed)
    cols = ["step", "a", "error", "stat_err", "is_argmax"]
    rows = []
    for si, s in enumerate(res.steps):
        for ci, mask in enumerate(res.masks):
            se = (float(res.stat_err[ci, si])
                  if res.stat_err is not None else 0.0)
            rows.append((int(s), engine.mask_label(int(mask), spec.n),
                         float(res.errors[ci, si]), se,
                         bool(mask == res.argmax_mask[si])))
    _emit(_config_from(args, "sweep", ns), cols, rows, args.out, args.format)
    return EXIT_OK


def cmd_connections(args) -> int:
    ns = _parse_range(args.n, "n")
    if args.steps is None:
        raise ConfigError("connections needs --steps (gate count)")
    gate_counts = _parse_range(args.steps, "steps")
    cols = ["n", "s", "naive_mean", "greedy_mean", "naive_se", "greedy_se"]
    rows = []
    for n in ns:
        spec = _build_spec(args, n)
        for s in gate_counts:
            st = connectivity.mean_connection_count(
                spec, s, args.realizations, args.seed)
            rows.append((n, s, st.naive_mean, st.greedy_mean,
                         st.naive_se, st.greedy_se))
    _emit(_config_from(args, "connections", ns), cols, rows, args.out,
          args.format)
    return EXIT_OK


def cmd_formula(args) -> int:
    ns = _parse_range(args.n, "n")
    if len(ns) != 1:
        raise ConfigError("formula takes a single --n")
    n = ns[0]
    name = args.name
    if name == "alpha":
        value = analytics.brickwork_alpha(n, args.q)
    elif name == "beta":
        value = analytics.brickwork_beta(n, args.q, args.variant)
    elif name == "depth":
        if args.eps is None:
            raise ConfigError("formula depth needs --eps")
        value = analytics.design_depth_formula(n, args.q, args.eps,
                                               args.variant)
    elif name == "gap":
        value = analytics.anticoncentration_gap_asymptote(n, args.q)
    else:
        raise ConfigError(f"unknown formula {name!r}")
    config = _config_from(args, "formula", ns)
    doc = {"config": config.as_dict(), "value": value,
           "inputs": {"n": n, "q": args.q, "eps": args.eps},
           "variant": args.variant, "name": name}
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bounds(args) -> int:
    ns = _parse_range(args.n, "n")
    if len(ns) != 1:
        raise ConfigError("bounds takes a single --n")
    n = ns[0]
    if args.eps is None and args.name != "disconnection-general":
        raise ConfigError("bounds needs --eps")
    if args.name == "dalzell-brickwork":
        value = analytics.dalzell_bounds(n, args.q, args.eps, "brickwork")
    elif args.name == "dalzell-general":
        value = analytics.dalzell_bounds(n, args.q, args.eps, "general")
    elif args.name == "disconnection-bridge":
        value = analytics.disconnection_bounds(n, args.q, args.eps, "bridge")
    elif args.name == "disconnection-general":
        value = analytics.disconnection_bounds(n, args.q, args.eps or 0.0,
                                               "general", p=args.p, m=args.m)
    else:
        raise ConfigError(f"unknown bound {args.name!r}")
    config = _config_from(args, "bounds", ns)
    doc = {"config": config.as_dict(), "value": value, "name": args.name,
           "inputs": {"n": n, "q": args.q, "eps": args.eps, "p": args.p,
                      "m": args.m}}
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    ns = _parse_range(args.n, "n")
    if len(ns) != 1:
        raise ConfigError("oracle-check takes a single --n")
    n = ns[0]
    if n > 3:
        raise ConfigError("oracle-check is capped at n <= 3")
    spec = _build_spec(args, n)
    steps = _steps_for(args, spec)
    tol = args.tol
    rows = []
    ok = True
    sh = oracle.haar_sector_matrix(n, args.q)
    for s in steps:
        m = oracle.dense_spec_moment(spec, s)
        eng = engine.multiplicative_error(spec, s)
        sec = oracle.sector_error(oracle.sector_matrix(m), sh, n, args.q)
        ch = oracle.choi_bisection(m, n, args.q)
        dev = max(abs(eng - sec), abs(eng - ch))
        # relative agreement with an absolute floor at the Choi
        # bisection's resolution (exact zeros land there)
        agree = dev <= tol * max(eng, sec, ch) + 1e-10
        ok = ok and agree
        rows.append((s, eng, ch, sec, dev, agree))
    cols = ["step", "engine", "choi", "sector", "abs_deviation", "agree"]
    _emit(_config_from(args, "oracle-check", ns), cols, rows, args.out,
          args.format)
    return EXIT_OK if ok else EXIT_ORACLE_MISMATCH


def _config_from(args, command: str, ns: list[int]) -> RunConfig:
    extra = {}
    for key in ("kind", "name", "variant", "tol", "p", "m"):
        if hasattr(args, key) and getattr(args, key) is not None:
            extra[key] = getattr(args, key)
    return RunConfig(command, args.family, args.graph, ns, args.q, args.eps,
                     _parse_range(args.steps, "steps") if args.steps else None,
                     args.realizations, args.seed, args.threads, args.out,
                     args.format, extra)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twodesign",
        description="Second-moment convergence of random quantum circuits")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, steps=True):
        p.add_argument("--family", type=str, default=None,
                       help="graph family (linear, circle, complete, star, "
                            "lollipop, bridge, hourglass, tree[:arity], "
                            "random_regular[:degree]) or ensemble kind "
                            "(brickwork_obc, brickwork_pbc, pcg, pb, pbfe, "
                            "singles)")
        p.add_argument("--graph", type=str, default=None,
                       help="path to a graph JSON file {n, edges}")
        p.add_argument("--n", type=str, required=True,
                       help="site count or inclusive range a:b[:step]")
        p.add_argument("--q", type=int, default=2)
        p.add_argument("--eps", type=float, default=None)
        if steps:
            p.add_argument("--steps", type=str, default=None,
                           help="gate-count range a:b[:step] (graphs)")
            p.add_argument("--layers", type=str, default=None,
                           help="layer-count range a:b[:step]")
        p.add_argument("--realizations", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("error-curve", help="error vs step count")
    common(p)
    p.set_defaults(func=cmd_error_curve)

    p = sub.add_parser("depth", help="epsilon-design depth over an n range")
    common(p, steps=False)
    p.add_argument("--steps", type=str, default=None)
    p.add_argument("--layers", type=str, default=None)
    p.add_argument("--kind", choices=("multiplicative", "collisional"),
                   default="multiplicative")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("sweep", help="per-experiment error trajectories")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("connections", help="connected-block statistics")
    common(p)
    p.set_defaults(func=cmd_connections)

    p = sub.add_parser("formula", help="closed-form depth formulas")
    common(p, steps=False)
    p.add_argument("--steps", type=str, default=None)
    p.add_argument("--name", choices=("alpha", "beta", "depth", "gap"),
                   required=True)
    p.add_argument("--variant",
                   choices=("entangled_boundaries", "collision"),
                   default="entangled_boundaries")
    p.set_defaults(func=cmd_formula)

    p = sub.add_parser("bounds", help="lower bounds")
    common(p, steps=False)
    p.add_argument("--steps", type=str, default=None)
    p.add_argument("--name",
                   choices=("dalzell-brickwork", "dalzell-general",
                            "disconnection-bridge", "disconnection-general"),
                   required=True)
    p.add_argument("--p", type=float, default=None,
                   help="disconnection probability (disconnection-general)")
    p.add_argument("--m", type=int, default=None,
                   help="cut size (disconnection-general)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle-check",
                       help="engine vs dense oracles at n <= 3")
    common(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        kernels.set_threads(args.threads)
    try:
        return args.func(args)
    except (ConfigError, ConstructionError, FileNotFoundError,
            analytics.FormulaDomainError, engine.ClassExplosionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except engine.UnreachedEpsilonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EPS_UNREACHED


if __name__ == "__main__":
    sys.exit(main())
