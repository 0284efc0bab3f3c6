"""Command line front end.

Subcommands:

    eval     evaluate a state on one expression, JSON on stdout
    sweep    evaluate observables across temperatures, CSV on stdout
    verify   run verification suites, JSONL on stdout, summary on stderr
    systems  list the built-in product systems, JSONL on stdout
    parse    echo an expression back in canonical normal form

Everything written to stdout is data (JSON, JSONL or CSV with '.'
decimals); rendering is left to other tools.  Output for a fixed
configuration and seed is byte identical across runs.  Options may come
from --config (a JSON object with the same names, strictly validated);
explicit flags win over config values.

Exit codes: 0 success, 1 a verification check failed, 2 bad usage or
configuration, 3 term budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .coeff import TraceSpec, haar_trace, identity_trace, point_mass_trace
from .dsl import DSLError, format_element, parse_element
from .nt import NTElement, TermBudgetExceeded, set_term_budget
from .product_system import BUILTIN_SYSTEMS, ProductSystem, get_system
from .states import KMSContext, ground_state
from .verify import SUITE_NAMES, run_suites

__all__ = ["main"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

ALLOWED_CONFIG_KEYS = frozenset(
    {
        "system",
        "d",
        "k",
        "corrupt",
        "trace",
        "theta",
        "beta",
        "betas",
        "bound",
        "seed",
        "threads",
        "term_budget",
        "suite",
        "state",
        "expr",
        "observables",
    }
)


class UsageError(Exception):
    pass


# -- option resolution --------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path!r} must hold a JSON object")
    unknown = sorted(set(data) - ALLOWED_CONFIG_KEYS)
    if unknown:
        raise UsageError(
            f"unknown config keys {unknown}; allowed: {sorted(ALLOWED_CONFIG_KEYS)}"
        )
    return data


def _opt(args: argparse.Namespace, config: dict, key: str, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    if key in config:
        return config[key]
    return default


def _make_system(args, config) -> ProductSystem:
    name = _opt(args, config, "system", "affine-toeplitz")
    params = {}
    d = _opt(args, config, "d")
    k = _opt(args, config, "k")
    if name == "lattice-dilation":
        if d is not None:
            params["d"] = int(d)
        if k is not None:
            raise UsageError("k does not apply to lattice-dilation")
    elif name == "cuntz":
        if k is not None:
            params["k"] = int(k)
        if d is not None:
            raise UsageError("d does not apply to cuntz")
    elif d is not None or k is not None:
        raise UsageError(f"system {name!r} takes no parameters")
    try:
        system = get_system(name, **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    corrupt = _opt(args, config, "corrupt")
    if corrupt is not None:
        s, r, pa, pb = _parse_corrupt(corrupt, system)
        system = system.corrupted(s, r, pa, pb)
    return system


def _parse_corrupt(value, system: ProductSystem):
    if isinstance(value, str):
        bits = [b.strip() for b in value.split(",")]
    elif isinstance(value, (list, tuple)):
        bits = list(value)
    else:
        raise UsageError("corrupt must be 's,r,ja,ka,jb,kb'")
    if len(bits) != 6:
        raise UsageError("corrupt needs six integers: s,r,ja,ka,jb,kb")
    try:
        s, r, ja, ka, jb, kb = (int(b) for b in bits)
    except (TypeError, ValueError):
        raise UsageError("corrupt needs six integers: s,r,ja,ka,jb,kb") from None
    try:
        system.semigroup.check_value(s)
        system.semigroup.check_value(r)
    except ValueError as exc:
        raise UsageError(f"corrupt fibers: {exc}") from None
    ns, nr = system.basis_count(s), system.basis_count(r)
    for j, kk in ((ja, ka), (jb, kb)):
        if not (0 <= j < ns and 0 <= kk < nr):
            raise UsageError(
                f"corrupt pair ({j},{kk}) out of range for fibers ({s},{r})"
            )
    if (ja, ka) == (jb, kb):
        raise UsageError("corrupt pairs must differ")
    return s, r, (ja, ka), (jb, kb)


def _parse_theta(theta, dim: int):
    if theta is None:
        return 0.7 if dim == 1 else tuple(0.7 for _ in range(dim))
    if isinstance(theta, str):
        parts = [p.strip() for p in theta.split(",")]
        vals = tuple(float(p) for p in parts)
    elif isinstance(theta, (int, float)):
        vals = (float(theta),)
    else:
        vals = tuple(float(t) for t in theta)
    if len(vals) != dim:
        raise UsageError(f"theta needs {dim} angle(s), got {len(vals)}")
    return vals[0] if dim == 1 else vals


def _make_trace(args, config, system: ProductSystem) -> TraceSpec:
    name = _opt(args, config, "trace")
    theta = _opt(args, config, "theta")
    dim = system.engine.degree_dim
    if dim == 0:
        if name not in (None, "identity"):
            raise UsageError(
                f"trace {name!r} does not apply to a scalar coefficient algebra"
            )
        if theta is not None:
            raise UsageError("theta only applies to point-mass")
        return identity_trace()
    name = name or "haar"
    if name == "haar":
        if theta is not None:
            raise UsageError("theta only applies to point-mass")
        return haar_trace(system.engine)
    if name in ("point-mass", "point_mass"):
        return point_mass_trace(system.engine, _parse_theta(theta, dim))
    raise UsageError(f"unknown trace {name!r}; use haar, point-mass or identity")


def _apply_term_budget(args, config) -> None:
    budget = _opt(args, config, "term_budget")
    if budget is not None:
        budget = int(budget)
        if budget < 1:
            raise UsageError("term_budget must be positive")
        set_term_budget(budget)


def _thread_count(args, config) -> int:
    req = int(_opt(args, config, "threads", 1))
    if req < 1:
        raise UsageError("threads must be >= 1")
    cap = os.environ.get("NTKMS_THREADS")
    if cap is not None:
        try:
            capn = int(cap)
        except ValueError:
            raise UsageError("NTKMS_THREADS must be an integer") from None
        req = min(req, max(1, capn))
    return req


def _parse_expression(expr: str, system: ProductSystem) -> NTElement:
    if expr is None:
        raise UsageError("an expression is required (--expr)")
    return parse_element(expr, system)


# -- formatting ----------------------------------------------------------------


def _g(x: float) -> str:
    return f"{x:.17g}"


def _complex_csv(w: complex) -> str:
    sign = "-" if w.imag < 0 else "+"
    return f"{_g(w.real)}{sign}{_g(abs(w.imag))}i"


# -- subcommands ---------------------------------------------------------------


def _cmd_eval(args, config) -> int:
    system = _make_system(args, config)
    trace = _make_trace(args, config, system)
    y = _parse_expression(_opt(args, config, "expr"), system)
    state = _opt(args, config, "state", "kms")
    if state == "ground":
        sv = ground_state(system, trace, y)
    elif state == "kms":
        beta = float(_opt(args, config, "beta", 3.0))
        bound = int(_opt(args, config, "bound", 1000))
        ctx = KMSContext(system, trace, beta, bound)
        sv = ctx.kms(y)
    else:
        raise UsageError(f"unknown state {state!r}; use kms or ground")
    print(json.dumps(sv.as_dict(), sort_keys=True))
    return EXIT_OK


def _parse_betas(raw) -> list[float]:
    if raw is None:
        raise UsageError("sweep needs --betas")
    if isinstance(raw, str):
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        vals = [float(p) for p in parts]
    elif isinstance(raw, (int, float)):
        vals = [float(raw)]
    else:
        vals = [float(b) for b in raw]
    if not vals:
        raise UsageError("sweep needs at least one beta")
    return vals


def _parse_observables(args, config, system) -> list[tuple[str, NTElement]]:
    raw = getattr(args, "observable", None)
    if not raw:
        cfg = config.get("observables")
        if cfg is None:
            raw = []
        elif isinstance(cfg, dict):
            raw = [f"{name}={expr}" for name, expr in cfg.items()]
        elif isinstance(cfg, list):
            raw = list(cfg)
        else:
            raise UsageError("observables must be a dict or a list of 'name=expr'")
    out: list[tuple[str, NTElement]] = []
    seen = set()
    for item in raw:
        if "=" not in item:
            raise UsageError(f"observable {item!r} must look like name=expr")
        name, expr = item.split("=", 1)
        name = name.strip()
        if not name.isidentifier():
            raise UsageError(f"observable name {name!r} must be an identifier")
        if name in seen:
            raise UsageError(f"duplicate observable name {name!r}")
        seen.add(name)
        out.append((name, _parse_expression(expr.strip(), system)))
    return out


def _cmd_sweep(args, config) -> int:
    system = _make_system(args, config)
    trace = _make_trace(args, config, system)
    betas = _parse_betas(_opt(args, config, "betas"))
    bound = int(_opt(args, config, "bound", 1000))
    observables = _parse_observables(args, config, system)
    header = ["beta", "zeta", "tail"] + [name for name, _ in observables]
    print(",".join(header))
    for beta in betas:
        ctx = KMSContext(system, trace, beta, bound)
        row = [_g(beta), _g(ctx.zeta), _g(float(ctx.zeta_tail))]
        for _, y in observables:
            row.append(_complex_csv(ctx.kms(y).value))
        print(",".join(row))
    return EXIT_OK


def _cmd_verify(args, config) -> int:
    system = _make_system(args, config)
    suites = getattr(args, "suite", None) or config.get("suite") or ["all"]
    if isinstance(suites, str):
        suites = [suites]
    beta = float(_opt(args, config, "beta", 3.0))
    bound = int(_opt(args, config, "bound", 1000))
    seed = int(_opt(args, config, "seed", 7))
    threads = _thread_count(args, config)
    traces = None
    if _opt(args, config, "trace") is not None:
        traces = [_make_trace(args, config, system)]
    try:
        reports = run_suites(
            system, list(suites), beta=beta, bound=bound, seed=seed,
            threads=threads, traces=traces,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for rep in reports:
        print(rep.json_line())
    width = max((len(r.name) for r in reports), default=4)
    failed = 0
    for rep in reports:
        mark = "pass" if rep.passed else "FAIL"
        failed += 0 if rep.passed else 1
        print(f"{rep.name:<{width}}  {mark}  {rep.seconds:8.3f}s", file=sys.stderr)
    print(
        f"{len(reports)} checks on {system.name}: "
        f"{len(reports) - failed} passed, {failed} failed",
        file=sys.stderr,
    )
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _cmd_systems(args, config) -> int:
    for name in BUILTIN_SYSTEMS:
        system = get_system(name)
        payload = {
            "system": name,
            "semigroup": system.semigroup.name,
            "engine": system.engine.tag,
            "critical_beta": system.beta_c,
            "scaling": system.scaling.name,
            "params": system.params,
        }
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_parse(args, config) -> int:
    system = _make_system(args, config)
    y = _parse_expression(_opt(args, config, "expr"), system)
    print(format_element(y))
    return EXIT_OK


# -- argument plumbing -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--system", choices=BUILTIN_SYSTEMS, help="product system")
    common.add_argument("--d", type=int, help="torus rank for lattice-dilation")
    common.add_argument("--k", type=int, help="branching for cuntz")
    common.add_argument(
        "--corrupt",
        metavar="s,r,ja,ka,jb,kb",
        help="swap two multiplication-index values, for negative testing",
    )
    common.add_argument("--trace", help="haar, point-mass or identity")
    common.add_argument("--theta", help="angle(s) for point-mass, comma separated")
    common.add_argument("--term-budget", dest="term_budget", type=int,
                        help="abort symbolic products past this many terms")

    parser = argparse.ArgumentParser(
        prog="ntkms",
        description="states and verification for product-system Toeplitz algebras",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate a state on an expression")
    p.add_argument("--expr", help="expression to evaluate")
    p.add_argument("--state", choices=("kms", "ground"), help="which state (default kms)")
    p.add_argument("--beta", type=float, help="inverse temperature")
    p.add_argument("--bound", type=int, help="series truncation window")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="tabulate observables over betas")
    p.add_argument("--betas", help="comma separated inverse temperatures")
    p.add_argument("--bound", type=int, help="series truncation window")
    p.add_argument(
        "--observable", action="append", metavar="NAME=EXPR",
        help="named expression column (repeatable)",
    )
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument(
        "--suite", action="append", choices=SUITE_NAMES,
        help="suite to run (repeatable, default all)",
    )
    p.add_argument("--beta", type=float, help="inverse temperature for the checks")
    p.add_argument("--bound", type=int, help="series truncation window")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--threads", type=int,
                   help="thread pool size (capped by NTKMS_THREADS)")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("systems", parents=[common], help="list built-in systems")
    p.set_defaults(fn=_cmd_systems)

    p = sub.add_parser("parse", parents=[common], help="print the canonical normal form")
    p.add_argument("--expr", help="expression to parse")
    p.set_defaults(fn=_cmd_parse)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config) if args.config else {}
        _apply_term_budget(args, config)
        return args.fn(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DSLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TermBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
