"""Numerical verification drivers for the state and algebra layers.

Each check returns a CheckReport carrying a pass flag, a metrics dict
and a JSON line for machine consumption.  Checks come in three flavours:

* exact algebraic identities, asserted on normal forms with no
  tolerance (projection covariance, commutation with the coefficient
  corner);
* series identities, compared within the sum of the rigorous tail
  bounds of both sides plus 1e-9 of float slack;
* cross-representation comparisons against the Fock oracle, which is
  plain matrix arithmetic and shares nothing with the symbolic engine.

Random inputs use seeded generators and Gaussian-integer coefficients.
Integer real and imaginary parts keep products exactly representable in
floats, so the exact-equality checks stay exact under sampling.
"""

from __future__ import annotations

import cmath
import json
import math
import time
from dataclasses import dataclass, field
from random import Random
from typing import Callable, Optional

from .coeff import (
    CoefficientElement,
    TraceSpec,
    haar_trace,
    identity_trace,
    point_mass_trace,
)
from .fock import TruncatedFock
from .nt import NTElement, unit_projection
from .product_system import ModuleVector, ProductSystem
from .semigroup import TruncationSet
from .states import (
    KMSContext,
    euler_product,
    euler_truncation_gap,
    ground_state,
    primes_up_to,
    zeta_series,
)

__all__ = [
    "CheckReport",
    "structure_reports",
    "check_projection_covariance",
    "check_corner_center",
    "check_kms_condition",
    "check_core_trace_property",
    "check_ground",
    "check_ground_limit",
    "check_scaling_identity",
    "check_euler",
    "check_inclusion_exclusion",
    "check_reconstruction",
    "check_fock_product",
    "check_fock_state",
    "check_fock_nica",
    "inclusion_exclusion_residual",
    "lambda_weight",
    "reconstruct_trace",
    "ReconstructionResult",
    "reconstruction_monomials",
    "run_suites",
    "SUITE_NAMES",
    "default_traces",
]


@dataclass
class CheckReport:
    """One verification outcome, serialisable as a JSON line."""

    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def json_line(self, include_seconds: bool = False) -> str:
        # timing is excluded by default so repeated runs emit identical bytes
        payload = {
            "check": self.name,
            "passed": self.passed,
            "metrics": self.metrics,
            "detail": self.detail,
        }
        if include_seconds:
            payload["seconds"] = round(self.seconds, 3)
        return json.dumps(payload, sort_keys=True)


def _timed(fn: Callable[[], CheckReport]) -> CheckReport:
    t0 = time.perf_counter()
    rep = fn()
    rep.seconds = time.perf_counter() - t0
    return rep


# -- samplers ---------------------------------------------------------------


def _gauss_int(rng: Random, span: int = 2) -> complex:
    re = rng.randint(-span, span)
    im = rng.randint(-span, span)
    if re == 0 and im == 0:
        re = 1
    return complex(re, im)


def _sample_monomial(rng: Random, engine, max_exp: int = 3) -> tuple:
    if engine.tag == "toeplitz":
        return (rng.randint(0, max_exp), rng.randint(0, max_exp))
    if engine.tag == "laurent":
        return tuple(rng.randint(-max_exp, max_exp) for _ in range(engine.d))
    return ()


def sample_coeff(rng: Random, engine, terms: int = 2, max_exp: int = 3) -> CoefficientElement:
    out = CoefficientElement.zero(engine)
    for _ in range(rng.randint(1, terms)):
        out = out + CoefficientElement.monomial(
            engine, _sample_monomial(rng, engine, max_exp), _gauss_int(rng)
        )
    return out


def sample_vector(rng: Random, system: ProductSystem, fiber: int, spread: int = 2) -> ModuleVector:
    n = system.basis_count(fiber)
    coords = [CoefficientElement.zero(system.engine) for _ in range(n)]
    for j in rng.sample(range(n), min(n, rng.randint(1, spread))):
        coords[j] = sample_coeff(rng, system.engine)
    return ModuleVector(system, fiber, tuple(coords))


def sample_element(
    rng: Random,
    system: ProductSystem,
    fibers: tuple[int, ...],
    terms: int = 2,
    core: bool = False,
) -> NTElement:
    out = NTElement.zero(system)
    for _ in range(rng.randint(1, terms)):
        s = rng.choice(fibers)
        r = s if core else rng.choice(fibers)
        l = rng.randrange(system.basis_count(r))
        xi = sample_vector(rng, system, s)
        out = out + NTElement(system, {(s, r, l): xi})
    return out


def _small_fibers(system: ProductSystem, cap: int = 4, count: int = 4) -> tuple[int, ...]:
    vals = TruncationSet(system.semigroup, cap).values
    return tuple(vals[:count]) if len(vals) >= 2 else vals


# -- structure --------------------------------------------------------------


def structure_reports(system: ProductSystem, bound: Optional[int] = None) -> list[CheckReport]:
    """Wrap the instance validator plus the scaling and window checks."""
    if bound is None:
        bound = 12 if system.semigroup.name == "nat-mult" else 6
    trunc = TruncationSet(system.semigroup, bound)
    out: list[CheckReport] = []

    t0 = time.perf_counter()
    report = system.validate(trunc)
    elapsed = time.perf_counter() - t0
    for c in report.checks:
        out.append(
            CheckReport(
                name=f"structure:{c.name}",
                passed=c.passed,
                metrics={"bound": bound, **({"witness": c.witness} if c.witness else {})},
                detail=c.detail,
                seconds=elapsed / max(1, len(report.checks)),
            )
        )

    def scaling_check() -> CheckReport:
        problems = system.scaling.validate(trunc)
        return CheckReport(
            "structure:scaling-homomorphism",
            not problems,
            {"bound": bound},
            "; ".join(problems),
        )

    def closure_check() -> CheckReport:
        bad = trunc.closure_violations()
        return CheckReport(
            "structure:window-lattice-closed",
            not bad,
            {"bound": bound},
            "; ".join(str(b) for b in bad[:3]),
        )

    def coprime_check() -> CheckReport:
        ok, witness, pairs = system.check_coprime_pairs(trunc)
        return CheckReport(
            "structure:coprime-compatibility",
            ok,
            {"bound": bound, "pairs": pairs, **({"witness": witness} if witness else {})},
        )

    out.append(_timed(scaling_check))
    out.append(_timed(closure_check))
    out.append(_timed(coprime_check))
    return out


def check_projection_covariance(system: ProductSystem, bound: int = 6) -> CheckReport:
    """alpha_s(1) alpha_r(1) = alpha_(lub)(1), exactly on normal forms."""
    if system.semigroup.name == "nat-add":
        bound = min(bound, 4)
    vals = TruncationSet(system.semigroup, bound).values
    sg = system.semigroup
    checked = 0
    for s in vals:
        for r in vals:
            lhs = unit_projection(system, s) * unit_projection(system, r)
            rhs = unit_projection(system, sg.lub(s, r))
            if lhs != rhs:
                return CheckReport(
                    "algebra:projection-covariance",
                    False,
                    {"s": s, "r": r, "bound": bound},
                    "product of range projections missed the join projection",
                )
            checked += 1
    return CheckReport("algebra:projection-covariance", True, {"pairs": checked, "bound": bound})


def check_corner_center(system: ProductSystem, bound: int = 6) -> CheckReport:
    """[i_e(a), alpha_s(1)] = 0 exactly, for generator coefficients a."""
    if system.semigroup.name == "nat-add":
        bound = min(bound, 4)
    vals = TruncationSet(system.semigroup, bound).values
    checked = 0
    for a in system.generator_elements():
        x = NTElement.embed_coeff(system, a)
        for s in vals:
            p = unit_projection(system, s)
            if x * p != p * x:
                return CheckReport(
                    "algebra:corner-commutes-with-projections",
                    False,
                    {"s": s, "a": repr(a), "bound": bound},
                )
            checked += 1
    return CheckReport(
        "algebra:corner-commutes-with-projections", True, {"cases": checked, "bound": bound}
    )


# -- KMS condition -----------------------------------------------------------


def check_kms_condition(
    system: ProductSystem,
    trace: TraceSpec,
    beta: float,
    bound: int = 1000,
    samples: int = 200,
    seed: int = 7,
) -> CheckReport:
    """omega(y1 sigma_(i beta)(y2)) = omega(y2 y1) within summed tails."""
    ctx = KMSContext(system, trace, beta, bound)
    rng = Random(seed)
    fibers = _small_fibers(system)
    worst = 0.0
    worst_tol = 0.0
    for _ in range(samples):
        y1 = sample_element(rng, system, fibers)
        y2 = sample_element(rng, system, fibers)
        lhs = ctx.kms(y1 * y2.dynamics(complex(0.0, beta)))
        rhs = ctx.kms(y2 * y1)
        dev = abs(lhs.value - rhs.value)
        tol = lhs.tail + rhs.tail + 1e-9
        if dev - tol > worst - worst_tol:
            worst, worst_tol = dev, tol
        if dev > tol:
            return CheckReport(
                "state:kms-condition",
                False,
                {"deviation": dev, "tolerance": tol, "beta": beta,
                 "bound": bound, "trace": trace.name},
            )
    return CheckReport(
        "state:kms-condition",
        True,
        {"samples": samples, "worst_deviation": worst, "tolerance_at_worst": worst_tol,
         "beta": beta, "bound": bound, "trace": trace.name},
    )


def check_core_trace_property(
    system: ProductSystem,
    trace: TraceSpec,
    beta: float,
    bound: int = 1000,
    rounds: int = 12,
    seed: int = 11,
) -> CheckReport:
    """omega(uv) = omega(vu) on the core.

    The commutation argument splits on whether the right indices of u
    and v agree on the meet component in each order, so the sampler
    drives all four agreement patterns and a meet-trivial fiber pair.
    """
    ctx = KMSContext(system, trace, beta, bound)
    rng = Random(seed)
    sg = system.semigroup
    vals = TruncationSet(sg, 6 if sg.name == "nat-mult" else 4).values
    pairs = [(s, r) for s in vals for r in vals if s != sg.identity_value and r != sg.identity_value]
    coprime = [(s, r) for (s, r) in pairs if sg.glb(s, r) == sg.identity_value]
    if not coprime:
        return CheckReport("state:core-trace", True, {"skipped": True},
                           "no meet-trivial pairs in the window")

    case_counts = {(False, False): 0, (False, True): 0, (True, False): 0, (True, True): 0}
    worst = 0.0
    target_cases = list(case_counts.keys())
    for i in range(rounds):
        if i == 0:
            s, r = coprime[0]
        else:
            s, r = rng.choice(pairs)
        g = sg.glb(s, r)
        ng = system.basis_count(g)
        ss, rr = sg.quotient(s, g), sg.quotient(r, g)
        want = target_cases[i % 4]

        def build_index(fiber_rest, match_digit, other_digit):
            digit = other_digit if match_digit else rng.randrange(ng)
            if not match_digit and ng > 1 and digit == other_digit:
                digit = (digit + 1) % ng
            rest = rng.randrange(system.basis_count(fiber_rest))
            return digit, rest

        lg = rng.randrange(ng)
        jg = rng.randrange(ng)
        kg, krest = build_index(ss, want[0], lg)
        mg, mrest = build_index(rr, want[1], jg)
        k = system.index_map(g, ss, kg, krest)
        m = system.index_map(g, rr, mg, mrest)
        j = system.index_map(g, ss, jg, rng.randrange(system.basis_count(ss)))
        l = system.index_map(g, rr, lg, rng.randrange(system.basis_count(rr)))

        got_case = (kg == lg if ng > 1 else True, mg == jg if ng > 1 else True)
        case_counts[got_case] += 1

        u = NTElement(system, {(s, s, k): sample_vector(rng, system, s)}) + NTElement(
            system, {(s, s, j): sample_vector(rng, system, s)}
        )
        v = NTElement(system, {(r, r, m): sample_vector(rng, system, r)}) + NTElement(
            system, {(r, r, l): sample_vector(rng, system, r)}
        )
        a = ctx.omega(u * v)
        b = ctx.omega(v * u)
        dev = abs(a.value - b.value)
        tol = a.tail + b.tail + 1e-9
        worst = max(worst, dev)
        if dev > tol:
            return CheckReport(
                "state:core-trace",
                False,
                {"deviation": dev, "tolerance": tol, "s": s, "r": r,
                 "trace": trace.name, "beta": beta},
            )
    metrics = {
        "rounds": rounds,
        "worst_deviation": worst,
        "beta": beta,
        "trace": trace.name,
        "meet_trivial_pairs": len(coprime),
        "cases": {f"{a}/{b}": n for (a, b), n in case_counts.items()},
    }
    return CheckReport("state:core-trace", True, metrics)


# -- ground states ------------------------------------------------------------


def check_ground(
    system: ProductSystem,
    trace: TraceSpec,
    samples: int = 60,
    seed: int = 23,
) -> CheckReport:
    """Ground state laws: unit value 1, positivity, and boundedness of
    z -> state(y sigma_z(y')) on the upper half plane."""
    unit_val = ground_state(system, trace, NTElement.unit(system))
    if unit_val.value != 1.0 or unit_val.tail != 0.0:
        return CheckReport("state:ground", False, {"unit_value": repr(unit_val.value)})

    rng = Random(seed)
    fibers = _small_fibers(system)
    e = system.identity_fiber()
    nonzero = 0
    worst_pos = 0.0
    for i in range(samples):
        y = sample_element(rng, system, fibers)
        pos = ground_state(system, trace, y.adjoint() * y).value
        if abs(pos.imag) > 1e-9 or pos.real < -1e-9:
            return CheckReport(
                "state:ground", False, {"positivity": [pos.real, pos.imag], "sample": i}
            )
        worst_pos = min(worst_pos, pos.real)

        s = rng.choice(fibers)
        r = e if i % 2 == 0 else rng.choice(fibers)
        if i % 2 == 0:
            # aim at the corner on purpose: a bra at fiber s catches the
            # creation leg of y2 and leaves tau(a a*), which a generic
            # product almost never reaches
            a = sample_coeff(rng, system.engine)
            m = rng.randrange(system.basis_count(s))
            coords = list(sample_vector(rng, system, s).coords)
            coords[m] = a.adjoint()
            y2 = NTElement(system, {(s, r, 0): ModuleVector(system, s, tuple(coords))})
            left = NTElement(system, {(e, s, m): ModuleVector(system, e, (a,))})
        else:
            y2 = NTElement(
                system,
                {(s, r, rng.randrange(system.basis_count(r))): sample_vector(rng, system, s)},
            )
            left = y
        base = ground_state(system, trace, left * y2).value
        if abs(base) <= 1e-12:
            continue
        nonzero += 1
        ratio = system.scaling.of(s) / system.scaling.of(r)
        if ratio < 1.0:
            return CheckReport(
                "state:ground",
                False,
                {"sample": i, "s": s, "r": r},
                "nonzero corner value with a contracting monomial",
            )
        z = complex(rng.uniform(-2, 2), rng.uniform(0, 3))
        shifted = ground_state(system, trace, left * y2.dynamics(z)).value
        expect = abs(cmath.exp(1j * z * math.log(ratio))) * abs(base)
        if abs(abs(shifted) - expect) > 1e-9 * max(1.0, abs(base)):
            return CheckReport(
                "state:ground",
                False,
                {"sample": i, "got": abs(shifted), "expected": expect},
                "modulus under the complexified dynamics",
            )
        if abs(shifted) > abs(base) + 1e-9:
            return CheckReport(
                "state:ground",
                False,
                {"sample": i, "shifted": abs(shifted), "base": abs(base)},
                "not bounded on the upper half plane",
            )
    if nonzero < max(3, samples // 10):
        return CheckReport(
            "state:ground", False, {"nonzero_cases": nonzero},
            "sampler produced too few nonzero corner values to be conclusive",
        )
    return CheckReport(
        "state:ground", True,
        {"samples": samples, "nonzero_cases": nonzero, "min_positivity": worst_pos,
         "trace": trace.name},
    )


def _limit_monomials(system: ProductSystem) -> list[NTElement]:
    """Ten fixed core elements mixing the corner and higher fibers."""
    out: list[NTElement] = []
    for a in system.generator_elements()[:2]:
        out.append(NTElement.embed_coeff(system, a))
        out.append(NTElement.embed_coeff(system, a * a.adjoint()))
    vals = [v for v in TruncationSet(system.semigroup, 5).values
            if v != system.semigroup.identity_value]
    for s in vals:
        for j in range(system.basis_count(s)):
            out.append(NTElement(system, {(s, s, j): system.basis_vector(s, j)}))
            if len(out) >= 10:
                return out[:10]
    while len(out) < 10:
        out.append(NTElement.unit(system))
    return out[:10]


def check_ground_limit(
    system: ProductSystem,
    trace: TraceSpec,
    betas: tuple[float, ...] = (5.0, 10.0, 20.0),
    bound: int = 1000,
) -> CheckReport:
    """KMS states approach the ground state as beta grows.

    Requires the final beta to sit within 1e-4 of the ground value on
    ten fixed core elements, with geometric shrinking along the way.
    """
    monomials = _limit_monomials(system)
    diffs = []
    for beta in betas:
        ctx = KMSContext(system, trace, beta, bound)
        step = [abs(ctx.kms(y).value - ground_state(system, trace, y).value) for y in monomials]
        diffs.append(step)
    final = max(diffs[-1])
    if final > 1e-4:
        return CheckReport(
            "state:ground-limit", False,
            {"final_max_diff": final, "betas": list(betas), "trace": trace.name},
        )
    floor = 1e-14
    for i in range(1, len(diffs)):
        for m in range(len(monomials)):
            prev, cur = diffs[i - 1][m], diffs[i][m]
            if prev > floor and cur > 0.5 * prev:
                return CheckReport(
                    "state:ground-limit", False,
                    {"monomial": m, "beta_from": betas[i - 1], "beta_to": betas[i],
                     "prev": prev, "cur": cur, "trace": trace.name},
                    "difference did not shrink geometrically",
                )
    return CheckReport(
        "state:ground-limit", True,
        {"final_max_diff": final, "betas": list(betas), "monomials": len(monomials),
         "trace": trace.name},
    )


def check_scaling_identity(
    system: ProductSystem,
    trace: TraceSpec,
    beta: float,
    bound: int = 1000,
    fiber_cap: int = 6,
) -> CheckReport:
    """omega(i_s(1_j a) i_s(1_l)*) = delta_(jl) N(s)^(-beta) omega(i_e(a)),
    exhaustively over the window, exactly zero off the diagonal."""
    ctx = KMSContext(system, trace, beta, bound)
    sg = system.semigroup
    vals = [v for v in TruncationSet(sg, fiber_cap).values if v != sg.identity_value]
    if sg.name == "nat-add":
        vals = vals[:3]
    worst = 0.0
    cases = 0
    for a in system.generator_elements():
        corner = ctx.omega(NTElement.embed_coeff(system, a).core_expectation())
        for s in vals:
            scale = system.scaling.of(s) ** (-beta)
            for j in range(system.basis_count(s)):
                for l in range(system.basis_count(s)):
                    y = NTElement(system, {(s, s, l): system.basis_vector(s, j, coeff=a)})
                    got = ctx.omega(y)
                    cases += 1
                    if j != l:
                        if got.value != 0.0:
                            return CheckReport(
                                "state:scaling-identity", False,
                                {"s": s, "j": j, "l": l, "value": abs(got.value)},
                                "off-diagonal value must vanish exactly",
                            )
                        continue
                    want = scale * corner.value
                    dev = abs(got.value - want)
                    tol = got.tail + scale * corner.tail + 1e-12
                    worst = max(worst, dev)
                    if dev > tol:
                        return CheckReport(
                            "state:scaling-identity", False,
                            {"s": s, "j": j, "deviation": dev, "tolerance": tol,
                             "trace": trace.name},
                        )
    return CheckReport(
        "state:scaling-identity", True,
        {"cases": cases, "worst_deviation": worst, "beta": beta, "trace": trace.name},
    )


# -- euler product -------------------------------------------------------------


def check_euler(
    system: ProductSystem,
    beta: float = 3.0,
    prime_bound: int = 10**4,
    series_bound: int = 10**6,
) -> CheckReport:
    """Euler form of the normalising series for power-profile systems."""
    kind, d = system.scaling.profile
    if kind != "power" or system.semigroup.name != "nat-mult":
        return CheckReport(
            "state:euler-product", True, {"skipped": True},
            f"not applicable to the {kind} profile",
        )
    exponent = d * (beta - 1.0)
    prod = euler_product(exponent, prime_bound)
    series = zeta_series(system, beta, series_bound)
    gap = abs(prod - series.value.real)
    allowed = euler_truncation_gap(exponent, prime_bound, series_bound)
    return CheckReport(
        "state:euler-product",
        gap <= max(allowed, 1e-3),
        {"gap": gap, "allowed": allowed, "product": prod, "series": series.value.real,
         "beta": beta, "prime_bound": prime_bound, "series_bound": series_bound},
    )


# -- reconstruction -------------------------------------------------------------


def lambda_weight(
    system: ProductSystem, trace: TraceSpec, beta: float, s: int, a: CoefficientElement
) -> complex:
    """N(s)^(-beta) tau(W_s(a)), the fiber weight of a coefficient."""
    return system.scaling.of(s) ** (-beta) * trace.eval(system.fiber_trace(s, a))


def inclusion_exclusion_residual(fprimes: tuple[int, ...], lam: dict[int, complex]) -> complex:
    """The alternating identity over the join closure of the prime set.

    sum over nonempty J of lam[p_J] plus the signed double sum must
    cancel exactly for any weights; a nonzero residual means the closure
    or the divisibility bookkeeping is wrong.
    """
    ps = tuple(sorted(fprimes))
    subsets = []
    for mask in range(1, 1 << len(ps)):
        sub = [p for i, p in enumerate(ps) if mask & (1 << i)]
        prod = math.prod(sub)
        subsets.append((len(sub), prod))
    closure = sorted({prod for _, prod in subsets})
    first = sum(lam[p] for _, p in subsets)
    second = 0.0 + 0.0j
    for size, pj in subsets:
        inner = sum(lam[s] for s in closure if s % pj == 0)
        second += (-1.0) ** size * inner
    return first + second


def check_inclusion_exclusion(
    system: ProductSystem,
    beta: float = 4.0,
    samples: int = 50,
    seed: int = 31,
    tol: float = 1e-9,
) -> CheckReport:
    """Residual of the alternating identity on sampled coefficient data."""
    if system.semigroup.name != "nat-mult" or system.engine.degree_dim == 0:
        return CheckReport(
            "reconstruct:inclusion-exclusion", True, {"skipped": True},
            "needs a graded engine over nat-mult",
        )
    rng = Random(seed)
    worst = 0.0
    sizes = {1: 0, 2: 0, 3: 0}
    for i in range(samples):
        k = 1 + i % 3
        ps = tuple(sorted(rng.sample((2, 3, 5), k)))
        sizes[k] += 1
        d = math.prod(ps) * rng.choice((1, 1, 2))
        if system.engine.tag == "toeplitz":
            extra = rng.randint(0, 2)
            a = CoefficientElement.monomial(system.engine, (d + extra, extra), _gauss_int(rng))
        else:
            gamma = [0] * system.engine.d
            gamma[rng.randrange(system.engine.d)] = d * rng.choice((1, -1))
            a = CoefficientElement.monomial(system.engine, tuple(gamma), _gauss_int(rng))
        trace = rng.choice(
            (haar_trace(system.engine), point_mass_trace(
                system.engine,
                rng.uniform(0, 6) if system.engine.degree_dim == 1
                else tuple(rng.uniform(0, 6) for _ in range(system.engine.d)),
            ))
        )
        needed = set()
        for mask in range(1, 1 << len(ps)):
            needed.add(math.prod(p for n, p in enumerate(ps) if mask & (1 << n)))
        lam = {s: lambda_weight(system, trace, beta, s, a) for s in needed}
        res = abs(inclusion_exclusion_residual(ps, lam))
        worst = max(worst, res)
        if res > tol:
            return CheckReport(
                "reconstruct:inclusion-exclusion", False,
                {"residual": res, "primes": list(ps), "sample": i},
            )
    return CheckReport(
        "reconstruct:inclusion-exclusion", True,
        {"samples": samples, "worst_residual": worst, "sizes": sizes, "beta": beta},
    )


@dataclass
class ReconstructionResult:
    applicable: bool
    value: Optional[complex]
    expected: complex
    error: Optional[float]
    fprimes: tuple[int, ...]
    reason: str = ""


def _monomial_gcd(engine, mon: tuple) -> int:
    deg = engine.degree(mon)
    return math.gcd(*(abs(c) for c in deg)) if deg else 0


def reconstruct_trace(
    system: ProductSystem,
    trace: TraceSpec,
    beta: float,
    bound: int,
    a: CoefficientElement,
) -> ReconstructionResult:
    """Recover tau(a) from the KMS state by prime inclusion-exclusion.

    zeta * sum over J subsets of the degree primes of (-1)^|J| omega(
    i_e(a) alpha_(p_J)(1)) kills every fiber contribution except the
    identity one, leaving tau(a).  Elements with a zero-degree monomial
    other than a unit multiple contribute to every fiber at once, so no
    finite prime set works and the result is marked not applicable.
    """
    expected = trace.eval(a)
    if a.is_unit_multiple():
        weight = a.terms.get(a.engine.unit(), 0.0 + 0.0j)
        return ReconstructionResult(True, weight, expected, abs(weight - expected), ())
    degs = [_monomial_gcd(a.engine, mon) for mon in a.terms]
    if any(g == 0 for g in degs):
        return ReconstructionResult(
            False, None, expected, None, (),
            "zero-degree monomial present: every fiber weight is nonzero",
        )
    fprimes = sorted({p for g in degs for p in _prime_factors(g)})
    ctx = KMSContext(system, trace, beta, bound)
    x = NTElement.embed_coeff(system, a)
    total = 0.0 + 0.0j
    for mask in range(1 << len(fprimes)):
        pj = math.prod(p for i, p in enumerate(fprimes) if mask & (1 << i))
        sign = -1.0 if bin(mask).count("1") % 2 else 1.0
        y = (x * unit_projection(system, pj)).core_expectation()
        total += sign * ctx.omega(y).value
    value = ctx.zeta * total
    return ReconstructionResult(
        True, value, expected, abs(value - expected), tuple(fprimes)
    )


def _prime_factors(n: int) -> tuple[int, ...]:
    out = []
    m = n
    for p in primes_up_to(max(2, int(n**0.5) + 1)) + (n,):
        if p < 2:
            continue
        while m % p == 0:
            out.append(p)
            m //= p
        if m == 1:
            break
    if m > 1:
        out.append(m)
    return tuple(sorted(set(out)))


def reconstruction_monomials(engine, max_diff: int = 12) -> list[CoefficientElement]:
    """The applicable test family: all degree magnitudes 1..max_diff in
    three monomial shapes, plus the unit."""
    out = [CoefficientElement.unit(engine)]
    for d in range(1, max_diff + 1):
        if engine.tag == "toeplitz":
            out.append(CoefficientElement.monomial(engine, (d, 0)))
            out.append(CoefficientElement.monomial(engine, (0, d)))
            out.append(CoefficientElement.monomial(engine, (d + 2, 2)))
        elif engine.tag == "laurent":
            base = [0] * engine.d
            base[0] = d
            out.append(CoefficientElement.monomial(engine, tuple(base)))
            out.append(CoefficientElement.monomial(engine, tuple(-x for x in base)))
        else:
            break
    return out


def check_reconstruction(
    system: ProductSystem,
    trace: TraceSpec,
    beta: float = 4.0,
    bound: int = 10**4,
    max_diff: int = 12,
    tol: float = 1e-2,
) -> CheckReport:
    """Recover tau on the degree-graded monomial family."""
    if system.semigroup.name != "nat-mult" or system.engine.degree_dim == 0:
        return CheckReport(
            "reconstruct:trace-recovery", True, {"skipped": True},
            "needs a graded engine over nat-mult",
        )
    worst = 0.0
    count = 0
    for a in reconstruction_monomials(system.engine, max_diff):
        res = reconstruct_trace(system, trace, beta, bound, a)
        if not res.applicable:
            return CheckReport(
                "reconstruct:trace-recovery", False,
                {"monomial": repr(a)}, f"unexpectedly inapplicable: {res.reason}",
            )
        worst = max(worst, res.error)
        count += 1
        if res.error > tol:
            return CheckReport(
                "reconstruct:trace-recovery", False,
                {"monomial": repr(a), "error": res.error, "tolerance": tol,
                 "trace": trace.name, "beta": beta, "bound": bound},
            )
    return CheckReport(
        "reconstruct:trace-recovery", True,
        {"monomials": count, "worst_error": worst, "trace": trace.name,
         "beta": beta, "bound": bound},
    )


# -- Fock oracle ------------------------------------------------------------------


def _fock_fibers(fock: TruncatedFock) -> tuple[int, ...]:
    """Low fibers worth sampling: small ranks, identity included."""
    e = fock.system.semigroup.identity_value
    small = [v for v in fock.trunc.values if fock.system.basis_count(v) <= 8]
    return tuple(small[:4]) if len(small) > 1 else (e,)


def check_fock_product(
    system: ProductSystem,
    bound: int = 5,
    pairs: int = 100,
    seed: int = 41,
    tol: float = 1e-12,
) -> CheckReport:
    """Compressed products match products of compressions on interior
    columns."""
    if system.engine.tag != "scalar":
        return CheckReport(
            "fock:representation-multiplicative", True, {"skipped": True},
            "oracle applies to scalar engines",
        )
    fock = TruncatedFock(system, bound)
    rng = Random(seed)
    fibers = _fock_fibers(fock)
    worst = 0.0
    used = 0
    for _ in range(pairs):
        x = sample_element(rng, system, fibers)
        y = sample_element(rng, system, fibers)
        defect, cols = fock.product_defect(x, y)
        if cols == 0:
            continue
        used += 1
        worst = max(worst, defect)
        if defect > tol:
            return CheckReport(
                "fock:representation-multiplicative", False,
                {"defect": defect, "tolerance": tol, "columns": cols},
            )
    if used < pairs // 2:
        return CheckReport(
            "fock:representation-multiplicative", False,
            {"informative_pairs": used},
            "too many samples had no interior columns",
        )
    return CheckReport(
        "fock:representation-multiplicative", True,
        {"pairs": used, "worst_defect": worst, "dim": fock.dim, "bound": bound},
    )


def check_fock_state(
    system: ProductSystem,
    beta: float = 3.0,
    bound: int = 5,
    samples: int = 25,
    seed: int = 43,
    tol: float = 1e-12,
) -> CheckReport:
    """The Gibbs diagonal sum over the window equals the series state."""
    if system.engine.tag != "scalar":
        return CheckReport(
            "fock:state-agreement", True, {"skipped": True},
            "oracle applies to scalar engines",
        )
    fock = TruncatedFock(system, bound)
    ctx = KMSContext(system, identity_trace(), beta, bound)
    rng = Random(seed)
    fibers = _fock_fibers(fock)
    worst = 0.0
    for i in range(samples):
        y = sample_element(rng, system, fibers, core=(i % 2 == 0))
        got = fock.state_value(y, beta)
        want = ctx.kms(y).value
        dev = abs(got - want)
        worst = max(worst, dev)
        if dev > tol:
            return CheckReport(
                "fock:state-agreement", False,
                {"deviation": dev, "tolerance": tol, "sample": i, "dim": fock.dim},
            )
    return CheckReport(
        "fock:state-agreement", True,
        {"samples": samples, "worst_deviation": worst, "dim": fock.dim,
         "beta": beta, "bound": bound},
    )


def check_fock_nica(
    system: ProductSystem,
    bound: int = 5,
    samples: int = 20,
    seed: int = 47,
    tol: float = 1e-12,
) -> CheckReport:
    """Rank-one operators compose through the join fiber in the oracle."""
    if system.engine.tag != "scalar":
        return CheckReport(
            "fock:nica-covariance", True, {"skipped": True},
            "oracle applies to scalar engines",
        )
    fock = TruncatedFock(system, bound)
    rng = Random(seed)
    sg = system.semigroup
    fibers = [v for v in fock.trunc.values
              if v != sg.identity_value and system.basis_count(v) <= 8]
    worst = 0.0
    for _ in range(samples):
        s = rng.choice(fibers)
        r = rng.choice(fibers)
        if sg.lub(s, r) not in fock.trunc:
            continue
        defect = fock.nica_defect(
            sample_vector(rng, system, s),
            sample_vector(rng, system, s),
            sample_vector(rng, system, r),
            sample_vector(rng, system, r),
        )
        worst = max(worst, defect)
        if defect > tol:
            return CheckReport(
                "fock:nica-covariance", False,
                {"defect": defect, "tolerance": tol, "s": s, "r": r},
            )
    return CheckReport(
        "fock:nica-covariance", True,
        {"samples": samples, "worst_defect": worst, "dim": fock.dim},
    )


# -- suite assembly -----------------------------------------------------------------


SUITE_NAMES = ("structure", "kms", "trace", "ground", "reconstruct", "euler", "all")


def default_traces(system: ProductSystem) -> list[TraceSpec]:
    if system.engine.degree_dim == 0:
        return [identity_trace()]
    theta = 0.7 if system.engine.degree_dim == 1 else tuple(
        0.7 for _ in range(system.engine.degree_dim)
    )
    return [haar_trace(system.engine), point_mass_trace(system.engine, theta)]


def run_suites(
    system: ProductSystem,
    suites: list[str],
    beta: float = 3.0,
    bound: int = 1000,
    seed: int = 7,
    threads: int = 1,
    traces: Optional[list[TraceSpec]] = None,
) -> list[CheckReport]:
    """Assemble and run the named suites, in a stable order.

    With threads > 1 the checks run on a thread pool but the report
    order stays the submission order.
    """
    wanted = set(suites)
    if "all" in wanted:
        wanted = set(SUITE_NAMES) - {"all"}
    unknown = wanted - set(SUITE_NAMES)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}; known: {SUITE_NAMES}")
    traces = traces if traces is not None else default_traces(system)

    tasks: list[Callable[[], CheckReport]] = []
    if "structure" in wanted:
        tasks.append(lambda: _flat(structure_reports(system)))
        tasks.append(lambda: check_projection_covariance(system))
        tasks.append(lambda: check_corner_center(system))
        if system.engine.tag == "scalar":
            tasks.append(lambda: check_fock_product(system, seed=seed))
            tasks.append(lambda: check_fock_state(system, beta=max(beta, 2.0), seed=seed))
            tasks.append(lambda: check_fock_nica(system, seed=seed))
    if "kms" in wanted:
        for t in traces:
            tasks.append(lambda t=t: check_kms_condition(system, t, beta, bound, seed=seed))
            tasks.append(lambda t=t: check_scaling_identity(system, t, beta, bound))
    if "trace" in wanted:
        for t in traces:
            tasks.append(lambda t=t: check_core_trace_property(system, t, beta, bound, seed=seed))
    if "ground" in wanted:
        for t in traces:
            tasks.append(lambda t=t: check_ground(system, t, seed=seed))
            tasks.append(lambda t=t: check_ground_limit(system, t, bound=bound))
    if "reconstruct" in wanted:
        tasks.append(lambda: check_inclusion_exclusion(system, beta=max(beta, 4.0), seed=seed))
        for t in traces:
            tasks.append(
                lambda t=t: check_reconstruction(system, t, beta=max(beta, 4.0),
                                                 bound=max(bound, 100))
            )
    if "euler" in wanted:
        tasks.append(lambda: check_euler(system, beta=max(beta, 3.0)))

    if threads <= 1:
        results = [_timed_flat(fn) for fn in tasks]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_timed_flat, fn) for fn in tasks]
            results = [f.result() for f in futures]
    out: list[CheckReport] = []
    for item in results:
        if isinstance(item, list):
            out.extend(item)
        else:
            out.append(item)
    return out


def _flat(reports: list[CheckReport]) -> list[CheckReport]:
    return reports


def _timed_flat(fn):
    t0 = time.perf_counter()
    item = fn()
    elapsed = time.perf_counter() - t0
    if isinstance(item, list):
        return item
    if item.seconds == 0.0:
        item.seconds = elapsed
    return item
