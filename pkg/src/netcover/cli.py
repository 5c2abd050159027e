"""``netcover`` command line: generate, stats, simulate, predict, compare."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import graph as gr
from .harness import (HarnessError, compare_curves, export_csv, read_curve_csv,
                      read_stats_csv, run_experiment)
from .policies import POLICY_NAMES, PolicyError, PolicySpec
from .predictors import MODELS, PredictorError, predict

log = logging.getLogger("netcover")

GENERATORS = ("ring", "star", "path", "complete", "er", "lattice", "powerlaw")


class UsageError(Exception):
    pass


def _dims(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", "x").split("x") if x]


def _bool(text: str) -> bool:
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def parse_generator_spec(spec: str) -> dict[str, str]:
    """``model=ring,n=1000`` -> ``{"model": "ring", "n": "1000"}``."""
    out = {}
    for item in spec.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise UsageError(f"generator spec item {item!r} is not key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    if "model" not in out:
        raise UsageError("generator spec needs model=...")
    return out


def generate(params: dict) -> gr.Graph:
    """Build a graph from generator parameters (strings or typed values)."""
    model = params.get("model")
    seed = params.get("seed")
    seed = int(seed) if seed is not None else None

    def need(key, cast=int):
        if params.get(key) is None:
            raise UsageError(f"model {model} needs {key}")
        return cast(params[key])

    if model == "ring":
        return gr.ring(need("n"))
    if model == "star":
        return gr.star(int(params.get("leaves") or need("n")))
    if model == "path":
        return gr.path(need("n"))
    if model == "complete":
        return gr.complete(need("n"))
    if model == "er":
        g = gr.erdos_renyi(need("n"), need("q", float), seed)
        return gr.largest_component(g) if _bool(params.get("lcc", "false")) else g
    if model == "lattice":
        dims = params.get("dims")
        if dims is None:
            raise UsageError("model lattice needs dims")
        dims = _dims(dims) if isinstance(dims, str) else list(dims)
        periodic = params.get("periodic", True)
        return gr.lattice(dims, periodic=_bool(periodic) if isinstance(periodic, str) else periodic)
    if model == "powerlaw":
        kmax = params.get("kmax")
        return gr.powerlaw_graph(need("n"), need("tau", float), seed,
                                 kmin=int(params.get("kmin") or 1),
                                 kmax=int(kmax) if kmax else None)
    raise UsageError(f"unknown model {model!r}; choose from {', '.join(GENERATORS)}")


def load_graph(source: str, seed: int | None = None) -> gr.Graph:
    """An edge-list path, or a generator spec such as ``model=er,n=100,q=0.1``."""
    if os.path.exists(source):
        return gr.read_edge_list(source)
    if "=" in source:
        params = parse_generator_spec(source)
        if seed is not None:
            params.setdefault("seed", str(seed))
        return generate(params)
    raise UsageError(f"{source}: no such file (and not a generator spec)")


def read_config(path: str) -> dict[str, str]:
    """``key=value`` lines, ``#`` comments; keys are long flag names."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="netcover",
        description="Online myopic network covering: simulate crawling policies "
                    "and evaluate analytical cover-size predictors.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        sp.add_argument("--config", help="file of key=value defaults for these flags")
        if graph:
            sp.add_argument("--graph", help="edge-list file or generator spec "
                                            "(e.g. model=ring,n=1000)")
        sp.add_argument("--seed", type=int, help="random seed")
        sp.add_argument("--out", help="output file (default: stdout)")

    g = sub.add_parser("generate", help="write an edge list from a generator")
    common(g, graph=False)
    g.add_argument("--model", choices=GENERATORS, help="generator name")
    g.add_argument("--n", type=int, help="node count (ring/path/complete/er/powerlaw), "
                                         "leaf count for star")
    g.add_argument("--q", type=float, help="edge probability for er")
    g.add_argument("--tau", type=float, help="power-law exponent")
    g.add_argument("--dims", help="lattice sides, e.g. 100x100 or 22x22x22")
    g.add_argument("--periodic", action=argparse.BooleanOptionalAction, default=None,
                   help="torus lattice (default) or open grid")
    g.add_argument("--graph", help="generator spec instead of the flags above")

    s = sub.add_parser("stats", help="print N, M, <k>, <k^2>, clustering")
    common(s)

    m = sub.add_parser("simulate", help="Monte Carlo runs of a policy, CSV per step")
    common(m)
    m.add_argument("--policy", choices=POLICY_NAMES, help="selection policy")
    m.add_argument("--budget", type=int, help="payments per run")
    m.add_argument("--runs", type=int, default=None, help="number of runs (default 100)")
    m.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: all cores; output independent of this)")

    r = sub.add_parser("predict", help="analytical curve as t,value CSV")
    common(r)
    r.add_argument("--model", choices=MODELS, help="predictor name")
    r.add_argument("--horizon", type=int, help="last t to evaluate")
    r.add_argument("--quantity", choices=("cover", "frontier", "undiscovered_edges"),
                   default=None, help="side curve for si (frontier) or rwnr (edges)")

    c = sub.add_parser("compare", help="empirical stats CSV against a predicted curve")
    common(c)
    c.add_argument("--empirical", help="CSV written by simulate")
    c.add_argument("--predicted", help="CSV written by predict")
    c.add_argument("--n", type=int, help="node count for relative errors "
                                         "(taken from --graph if given)")
    c.add_argument("--t-range", help="inclusive range lo:hi")
    c.add_argument("--quantity", choices=("cover", "frontier"), default=None,
                   help="empirical column to compare (default cover)")
    return p


def _apply_config(args, parser) -> None:
    if not getattr(args, "config", None):
        return
    known = vars(args)
    for key, value in read_config(args.config).items():
        if key not in known:
            raise UsageError(f"{args.config}: unknown key {key!r}")
        if known[key] is None:
            setattr(args, key, value)


def _typed(args, key, cast, default=None):
    value = getattr(args, key, None)
    if value is None:
        return default
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise UsageError(f"--{key.replace('_', '-')}: bad value {value!r}") from None


def _emit(obj, out) -> None:
    export_csv(obj, out if out else sys.stdout)


def _require(args, *keys) -> None:
    missing = [k for k in keys if getattr(args, k, None) in (None, "")]
    if missing:
        raise UsageError("missing " + ", ".join("--" + k.replace("_", "-") for k in missing))


def cmd_generate(args) -> None:
    if args.graph:
        params = parse_generator_spec(args.graph)
    else:
        _require(args, "model")
        params = {k: getattr(args, k) for k in ("model", "n", "q", "tau", "dims", "periodic")}
        params = {k: v for k, v in params.items() if v is not None}
    if args.seed is not None:
        params.setdefault("seed", args.seed)
    text = gr.format_edge_list(generate(params))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_stats(args) -> None:
    _require(args, "graph")
    g = load_graph(args.graph, _typed(args, "seed", int))
    print("\n".join(gr.stats(g).as_lines()))


def cmd_simulate(args) -> None:
    _require(args, "graph", "policy", "budget")
    seed = _typed(args, "seed", int, 0)
    g = load_graph(args.graph, seed)
    budget = _typed(args, "budget", int)
    runs = _typed(args, "runs", int, 100)
    if budget < 1 or runs < 1:
        raise UsageError("--budget and --runs must be >= 1")
    policy = PolicySpec(args.policy, gr.degree_distribution(g) if args.policy == "meed" else None)
    stats = run_experiment(g, policy, budget, runs, seed, _typed(args, "jobs", int))
    _emit(stats, args.out)
    mean, _ = stats.at(budget)
    print(f"{args.policy}: t={budget} mean_cover={mean:.6g} "
          f"std_cover={stats.std_cover[-1]:.6g} runs={runs}",
          file=sys.stdout if args.out else sys.stderr)


def cmd_predict(args) -> None:
    _require(args, "graph", "model", "horizon")
    g = load_graph(args.graph, _typed(args, "seed", int))
    curve = predict(args.model, g, _typed(args, "horizon", int), args.quantity or "cover")
    _emit(curve, args.out)


def cmd_compare(args) -> None:
    _require(args, "empirical", "predicted")
    n = _typed(args, "n", int)
    if args.graph:
        n = load_graph(args.graph, _typed(args, "seed", int)).node_count
    quantity = args.quantity or "cover"
    emp = read_stats_csv(args.empirical, node_count=n)
    pred = read_curve_csv(args.predicted, quantity=quantity, node_count=n)
    t_range = None
    if args.t_range:
        try:
            lo, hi = (int(x) for x in args.t_range.split(":"))
        except ValueError:
            raise UsageError("--t-range must look like lo:hi") from None
        t_range = (lo, hi)
    report = compare_curves(emp, pred, t_range, quantity)
    if args.out:
        export_csv(report, args.out)
    print(report.summary())


COMMANDS = {"generate": cmd_generate, "stats": cmd_stats, "simulate": cmd_simulate,
            "predict": cmd_predict, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config(args, parser)
        COMMANDS[args.command](args)
    except (UsageError, gr.GraphError, PolicyError, PredictorError, HarnessError) as exc:
        print(f"netcover {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
