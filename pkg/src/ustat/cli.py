"""``ustat`` command line front end.

Subcommands: estimate, k3, bound, mom, verify, rate, degeneracy.  A JSON
config (``--config``) supplies defaults for any flag; flags given on the
command line win.  ``--format json`` output embeds the resolved config, so
feeding that output back through ``--config`` reproduces it.
"""
import argparse
from dataclasses import asdict, dataclass, fields
import json
import math
import sys
from typing import Optional

from . import bounds, core, montecarlo, robust
from .errors import InsufficientSampleError, SampleParseError, UStatError
from .kernels import kernel_from_name

SUBCOMMANDS = ("estimate", "k3", "bound", "mom", "verify", "rate", "degeneracy")
BOUND_TYPES = {
    "hoeffding": bounds.HOEFFDING,
    "bernstein": bounds.BERNSTEIN,
    "ag-bounded": bounds.AG_BOUNDED,
    "ag-variance": bounds.AG_VARIANCE,
}
_U64 = 2**64


class UsageError(UStatError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    output_format: str = "text"
    seed: int = 0
    kernel: Optional[str] = None
    input: Optional[str] = None
    type: Optional[str] = None
    n: Optional[int] = None
    m: Optional[int] = None
    delta: Optional[float] = None
    sup_norm: Optional[float] = None
    variance: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    tail_at: Optional[float] = None
    blocks: Optional[int] = None
    dist: Optional[str] = None
    trials: Optional[int] = None
    estimator: Optional[str] = None
    n_grid: Optional[list] = None
    q: Optional[int] = None
    probes: Optional[int] = None
    samples: Optional[int] = None

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def read_sample_csv(path):
    """Single-column, headerless CSV of reals -> :class:`~ustat.core.Sample`."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SampleParseError(f"cannot read {path}: {exc.strerror or exc}") from None
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise InsufficientSampleError(f"{path} contains no observations")
    values = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            raise SampleParseError(f"{path}: line {lineno} is blank")
        try:
            v = float(text)
        except ValueError:
            raise SampleParseError(f"{path}: line {lineno}: cannot parse {text!r} as a real") from None
        if not math.isfinite(v):
            raise SampleParseError(f"{path}: line {lineno}: non-finite value {text!r}")
        values.append(v)
    return core.Sample(values)


def fmt(v):
    return f"{v:.15g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config supplying defaults for any flag")
    common.add_argument("--format", dest="output_format", choices=("text", "csv", "json"))

    parser = _Parser(prog="ustat", description=__doc__.splitlines()[0], parents=[common],
                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common], argument_default=argparse.SUPPRESS)

    p = add("estimate", "exact U-statistic of a CSV sample")
    p.add_argument("--kernel")
    p.add_argument("--input")

    p = add("k3", "third k-statistic of a CSV sample")
    p.add_argument("--input")

    p = add("bound", "evaluate a deviation threshold or tail bound")
    p.add_argument("--type", choices=tuple(BOUND_TYPES))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--sup-norm", type=float)
    p.add_argument("--variance", type=float)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--tail-at", type=float)

    p = add("mom", "median-of-means estimate (kernel 'mean' for the plain mean)")
    p.add_argument("--kernel")
    p.add_argument("--input")
    p.add_argument("--blocks", type=int)
    p.add_argument("--delta", type=float)

    p = add("verify", "empirical tails against Hoeffding/Bernstein bounds")
    p.add_argument("--kernel")
    p.add_argument("--dist")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--estimator", choices=("u_stat", "block_v"))
    p.add_argument("--sup-norm", type=float)
    p.add_argument("--variance", type=float)

    p = add("rate", "median |U_n - m_h| over a grid of n, with log-log slope")
    p.add_argument("--kernel")
    p.add_argument("--dist")
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    p = add("degeneracy", "Monte Carlo check that conditional kernel means are constant")
    p.add_argument("--kernel")
    p.add_argument("--dist")
    p.add_argument("--q", type=int)
    p.add_argument("--probes", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    return parser


_REQUIRED = {
    "estimate": ("kernel", "input"),
    "k3": ("input",),
    "bound": ("type", "n", "m", "delta", "sup_norm"),
    "mom": ("kernel", "input"),
    "verify": ("kernel", "dist", "n", "trials", "delta"),
    "rate": ("kernel", "dist", "n_grid", "trials"),
    "degeneracy": ("kernel", "dist"),
}
_DEFAULTS = {
    "verify": {"output_format": "csv", "estimator": "u_stat"},
    "rate": {"output_format": "csv"},
    "degeneracy": {"q": 1, "probes": 10, "samples": 100_000},
}


def _flag(name):
    return "--" + name.replace("_", "-")


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: {path} is not valid JSON ({exc.msg})") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError("--config: expected a JSON object")
    return data


def parse_args(argv):
    """Parse ``argv`` into a validated :class:`RunConfig`; raises :class:`UsageError`."""
    parser = build_parser()
    if not argv:
        raise UsageError("no subcommand given; choose one of: " + ", ".join(SUBCOMMANDS))
    ns = {k: v for k, v in vars(parser.parse_args(argv)).items() if v is not None}
    merged = {}
    if "config" in ns:
        merged.update(_load_config(ns.pop("config")))
    merged.update(ns)
    sub = merged.get("subcommand")
    if sub is None:
        raise UsageError("no subcommand given; choose one of: " + ", ".join(SUBCOMMANDS))
    if sub not in SUBCOMMANDS:
        raise UsageError(f"unknown subcommand {sub!r}")
    for key, value in _DEFAULTS.get(sub, {}).items():
        merged.setdefault(key, value)
    missing = [_flag(k) for k in _REQUIRED[sub] if merged.get(k) is None]
    if missing:
        raise UsageError(f"{sub}: missing required flag(s): {', '.join(missing)}")
    cfg = RunConfig.from_dict(merged)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.delta is not None and not 0.0 < cfg.delta < 1.0:
        raise UsageError(f"--delta must lie in the open interval (0,1), got {cfg.delta!r}")
    if not 0 <= cfg.seed < _U64:
        raise UsageError(f"--seed must be an unsigned 64-bit integer, got {cfg.seed!r}")
    for name in ("n", "m", "trials", "blocks", "probes", "samples", "q"):
        v = getattr(cfg, name)
        if v is not None and (not isinstance(v, int) or v < 1):
            raise UsageError(f"{_flag(name)} expects a positive integer, got {v!r}")
    if cfg.subcommand == "mom" and (cfg.blocks is None) == (cfg.delta is None):
        raise UsageError("mom: give exactly one of --blocks or --delta")
    if cfg.subcommand == "bound" and cfg.type not in BOUND_TYPES:
        raise UsageError(f"--type must be one of {', '.join(BOUND_TYPES)}, got {cfg.type!r}")
    if cfg.output_format not in ("text", "csv", "json"):
        raise UsageError(f"--format must be text, csv or json, got {cfg.output_format!r}")


def _json(cfg, resolved, result):
    return json.dumps({"config": cfg.to_dict(), "resolved": resolved, "result": result}, sort_keys=True)


def _run_estimate(cfg):
    kernel = kernel_from_name(cfg.kernel)
    s = read_sample_csv(cfg.input)
    value = core.u_statistic(kernel, s)
    if cfg.output_format == "json":
        return _json(cfg, {"n": len(s), "m": kernel.order}, {"estimate": value})
    return fmt(value)


def _run_k3(cfg):
    s = read_sample_csv(cfg.input)
    value = core.k3_statistic(s)
    if cfg.output_format == "json":
        return _json(cfg, {"n": len(s)}, {"k3": value})
    return fmt(value)


def _run_bound(cfg):
    q = bounds.BoundQuery(n=cfg.n, m=cfg.m, delta=cfg.delta, sup_norm=cfg.sup_norm,
                          variance=cfg.variance, c1=cfg.c1, c2=cfg.c2)
    res = bounds.evaluate(BOUND_TYPES[cfg.type], q, cfg.tail_at)
    key, value = ("tail", res.tail_probability) if cfg.tail_at is not None else ("threshold", res.threshold)
    if cfg.output_format == "json":
        return _json(cfg, q.as_dict(), {"kind": res.kind, key: value})
    return f"{key}={fmt(value)}"


def _run_mom(cfg):
    s = read_sample_csv(cfg.input)
    mom = robust.MoMConfig(blocks=cfg.blocks, delta=cfg.delta)
    if cfg.kernel == "mean":
        v = mom.resolve(len(s), 1)
        value = robust.median_of_means(s, v.blocks)
    else:
        kernel = kernel_from_name(cfg.kernel)
        v = mom.resolve(len(s), kernel.order)
        value = robust.mom_u_statistic(kernel, s, v.blocks)
    if cfg.output_format == "json":
        return _json(cfg, {"n": len(s), "blocks": v.blocks, "blocks_clamped": v.clamped}, {"estimate": value})
    return f"estimate={fmt(value)}\nblocks={v.blocks}"


def tail_curve_csv(curve):
    lines = ["t,empirical_tail,hoeffding_tail,bernstein_tail"]
    for t, emp, hoeff, bern in curve.rows():
        lines.append(",".join([fmt(t), fmt(emp), fmt(hoeff), "" if bern is None else fmt(bern)]))
    return "\n".join(lines)


def _run_verify(cfg):
    kernel = kernel_from_name(cfg.kernel)
    dist = montecarlo.parse_distribution(cfg.dist)
    curve = montecarlo.tail_curve(dist, kernel, cfg.n, cfg.trials, cfg.delta, cfg.seed,
                                  estimator_kind=cfg.estimator, sup_norm=cfg.sup_norm,
                                  variance=cfg.variance)
    if cfg.output_format == "json":
        resolved = {"k": curve.k, "m": kernel.order, "seed": cfg.seed, "truth": curve.truth.value,
                    "truth_source": curve.truth.source, "kernel_variance": curve.truth.variance,
                    "hoeffding_threshold": curve.hoeffding_threshold}
        rows = [dict(zip(("t", "empirical_tail", "hoeffding_tail", "bernstein_tail"), r)) for r in curve.rows()]
        return _json(cfg, resolved, {"rows": rows})
    return tail_curve_csv(curve)


def _run_rate(cfg):
    kernel = kernel_from_name(cfg.kernel)
    dist = montecarlo.parse_distribution(cfg.dist)
    res = montecarlo.rate_experiment(dist, kernel, cfg.n_grid, cfg.trials, cfg.seed)
    if cfg.output_format == "json":
        resolved = {"seed": cfg.seed, "truth": res.truth.value, "truth_source": res.truth.source}
        return _json(cfg, resolved, {"points": [{"n": n, "median_abs_dev": d} for n, d in res.points],
                                     "slope": res.slope})
    lines = ["n,median_abs_dev"] + [f"{n},{fmt(d)}" for n, d in res.points]
    lines.append(f"# slope={fmt(res.slope)}")
    return "\n".join(lines)


def _run_degeneracy(cfg):
    kernel = kernel_from_name(cfg.kernel)
    dist = montecarlo.parse_distribution(cfg.dist)
    rep = montecarlo.check_degeneracy(dist, kernel, cfg.q, cfg.probes, cfg.samples, cfg.seed)
    if cfg.output_format == "json":
        return _json(cfg, {"seed": cfg.seed}, asdict(rep))
    return "\n".join([
        f"max_conditional_spread={fmt(rep.max_conditional_spread)}",
        f"pooled_standard_error={fmt(rep.pooled_standard_error)}",
        f"is_constant_within_tol={str(rep.is_constant_within_tol).lower()}",
    ])


_RUNNERS = {
    "estimate": _run_estimate,
    "k3": _run_k3,
    "bound": _run_bound,
    "mom": _run_mom,
    "verify": _run_verify,
    "rate": _run_rate,
    "degeneracy": _run_degeneracy,
}


def run(cfg):
    """Execute a parsed config and return the text to print."""
    return _RUNNERS[cfg.subcommand](cfg)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"ustat: error: {exc}", file=sys.stderr)
        if not argv:
            print(build_parser().format_usage().strip(), file=sys.stderr)
        return 2
    try:
        out = run(cfg)
    except UStatError as exc:
        print(f"ustat: error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
