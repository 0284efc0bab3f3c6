import math
from random import Random

import numpy as np
import pytest

from ntkms.coeff import CoefficientElement, haar_trace, identity_trace, point_mass_trace
from ntkms.nt import NTElement, unit_projection
from ntkms.product_system import AffineToeplitzSystem, CuntzSystem, TorusDilationSystem
from ntkms.states import (
    KMSContext,
    euler_product,
    euler_truncation_gap,
    ground_state,
    primes_up_to,
    zeta_series,
)
from ntkms.verify import sample_element

AFFINE = AffineToeplitzSystem()
TORUS = TorusDilationSystem(1)
TORUS2 = TorusDilationSystem(2)
CUNTZ = CuntzSystem(2)


def context(system, beta=3.0, bound=200):
    if system.engine.degree_dim == 0:
        trace = identity_trace()
    else:
        trace = haar_trace(system.engine)
    return KMSContext(system, trace, beta, bound)


# -- the normalising series ------------------------------------------------------


def test_zeta_sandwiched_by_integral_test():
    """The affine series at beta is sum s^(1-beta); at beta = 3 the limit
    is pi^2/6, and the window sum must sit inside the integral sandwich."""
    B = 100000
    sv = zeta_series(AFFINE, 3.0, B)
    limit = math.pi**2 / 6.0
    assert limit - 1.0 / B <= sv.value.real <= limit - 1.0 / (B + 1)
    assert sv.tail <= 1.1 / B


def test_zeta_geometric_closed_form():
    sv = zeta_series(CUNTZ, 3.0, 1000)
    # sum over n of 2^n * 8^(-n) = 4/3 once the window swallows the tail
    assert abs(sv.value.real - 4.0 / 3.0) < 1e-15
    assert sv.tail < 1e-300


def test_zeta_tail_is_honest():
    for system, beta in ((AFFINE, 3.0), (TORUS2, 2.5), (CUNTZ, 2.0)):
        small = zeta_series(system, beta, 50)
        big = zeta_series(system, beta, 5000)
        assert abs(big.value - small.value) <= small.tail
        assert big.tail < small.tail


def test_zeta_rejects_subcritical_beta():
    with pytest.raises(ValueError):
        zeta_series(AFFINE, 2.0, 100)
    with pytest.raises(ValueError):
        KMSContext(AFFINE, haar_trace(AFFINE.engine), 1.5, 100)


def test_context_rejects_mismatched_trace():
    with pytest.raises(ValueError):
        KMSContext(AFFINE, identity_trace(), 3.0, 100)
    with pytest.raises(ValueError):
        KMSContext(TORUS2, haar_trace(TORUS.engine), 3.0, 100)


def test_frozen_tail_values():
    ctx = context(AFFINE, beta=3.0, bound=1000)
    assert abs(float(ctx.zeta_tail) - 1e-3) < 1e-18
    ctx4 = context(AFFINE, beta=4.0, bound=100)
    assert abs(float(ctx4.zeta_tail) - 5e-5) < 1e-18


# -- partial sums Z_r ------------------------------------------------------------


def brute_z(ctx, r):
    sg = ctx.system.semigroup
    total = 0.0
    for s in ctx.trunc.values:
        if sg.leq(r, s):
            q = sg.quotient(s, r)
            total += ctx.system.scaling.of(s) ** (-ctx.beta) * ctx.system.weight(q)
    return total


@pytest.mark.parametrize("system", [AFFINE, TORUS2, CUNTZ], ids=lambda s: s.name)
def test_z_value_matches_direct_sum(system):
    ctx = context(system, beta=3.0, bound=60)
    fibers = (1, 2, 3, 5) if system.semigroup.is_multiplicative else (0, 1, 2, 5)
    for r in fibers:
        assert abs(ctx.z_value(r) - brute_z(ctx, r)) < 1e-12


def test_z_value_at_identity_is_zeta_bitwise():
    ctx = context(AFFINE)
    assert ctx.z_value(1) == ctx.zeta


# -- the state itself --------------------------------------------------------------


@pytest.mark.parametrize("system", [AFFINE, TORUS, TORUS2, CUNTZ], ids=lambda s: s.name)
def test_state_of_unit_is_exactly_one(system):
    for beta in (2.5, 3.0, 6.0):
        ctx = context(system, beta=beta, bound=150)
        sv = ctx.kms(NTElement.unit(system))
        assert sv.value == complex(1.0)


def test_projection_value_is_scaling_power():
    for system in (AFFINE, TORUS2):
        for r in (2, 3, 5):
            for beta in (3.0, 4.0):
                ctx = context(system, beta=beta, bound=2000)
                sv = ctx.kms(unit_projection(system, r))
                want = system.scaling.of(r) ** (-beta) * system.weight(r)
                assert abs(sv.value - want) <= sv.tail
                assert sv.tail < 1e-2


def test_matrix_unit_orthogonality_is_exact():
    ctx = context(AFFINE, beta=3.0, bound=100)
    p01 = NTElement.from_monomial(
        AFFINE, 2, AFFINE.basis_vector(2, 0), 2, AFFINE.basis_vector(2, 1)
    )
    sv = ctx.kms(p01)
    assert sv.value == 0j and sv.tail == 0.0


def test_omega_rejects_offcore_elements():
    ctx = context(AFFINE)
    y = NTElement.embed(AFFINE, 2, AFFINE.basis_vector(2, 0))
    with pytest.raises(ValueError):
        ctx.omega(y)
    # kms() routes through the expectation instead
    assert ctx.kms(y).value == 0j


# -- fast path against the literal evaluator ----------------------------------------


@pytest.mark.parametrize(
    "system,bound",
    [(AFFINE, 30), (TORUS, 30), (TORUS2, 12), (CUNTZ, 8)],
    ids=lambda v: getattr(v, "name", v),
)
def test_omega_matches_literal_evaluator(system, bound):
    rng = Random(71)
    if system.semigroup.is_multiplicative:
        fibers = (1, 2, 3)
    else:
        fibers = (0, 1, 2)
    traces = (
        [identity_trace()]
        if system.engine.degree_dim == 0
        else [haar_trace(system.engine),
              point_mass_trace(system.engine,
                               0.7 if system.engine.degree_dim == 1
                               else tuple(0.4 * (c + 1) for c in range(system.engine.degree_dim)))]
    )
    for trace in traces:
        ctx = KMSContext(system, trace, 3.0, bound)
        for _ in range(4):
            y = sample_element(rng, system, fibers, terms=2, core=True)
            fast = ctx.omega(y)
            slow = ctx.omega_literal(y)
            assert abs(fast.value - slow.value) < 1e-9 * max(1.0, y.one_norm())
            assert fast.tail == slow.tail


def test_kms_condition_spot_samples():
    """omega(y1 sigma_(i beta)(y2)) = omega(y2 y1) inside summed tails."""
    rng = Random(73)
    beta = 3.0
    ctx = KMSContext(AFFINE, haar_trace(AFFINE.engine), beta, 400)
    for _ in range(3):
        y1 = sample_element(rng, AFFINE, (1, 2, 3), terms=2)
        y2 = sample_element(rng, AFFINE, (1, 2, 3), terms=2)
        lhs = ctx.kms(y1 * y2.dynamics(1j * beta))
        rhs = ctx.kms(y2 * y1)
        assert abs(lhs.value - rhs.value) <= lhs.tail + rhs.tail + 1e-9


def test_scaling_identity_spot():
    """omega(i_s(1_j . a) i_s(1_j)*) = N(s)^(-beta) omega(i_e(a))."""
    eng = AFFINE.engine
    a = CoefficientElement.monomial(eng, (1, 1), 2.0) + CoefficientElement.unit(eng, 0.5)
    ctx = context(AFFINE, beta=3.0, bound=500)
    corner = ctx.omega(NTElement.embed_coeff(AFFINE, a))
    for s in (2, 3):
        for j in range(s):
            xi = AFFINE.left_act(s, a, AFFINE.basis_vector(s, j))
            y = NTElement.from_monomial(AFFINE, s, xi, s, AFFINE.basis_vector(s, j))
            got = ctx.omega(y)
            want = ctx.weight_pow(s) * corner.value
            assert abs(got.value - want) <= got.tail + ctx.weight_pow(s) * corner.tail


# -- ground state -------------------------------------------------------------------


def test_ground_state_reads_the_corner():
    tr = haar_trace(AFFINE.engine)
    a = CoefficientElement.monomial(AFFINE.engine, (2, 2), 3.0) + CoefficientElement.unit(
        AFFINE.engine, 1.0
    )
    sv = ground_state(AFFINE, tr, NTElement.embed_coeff(AFFINE, a))
    assert sv.value == 4.0 + 0j and sv.tail == 0.0 and sv.truncation == 0
    off = NTElement.from_monomial(
        AFFINE, 2, AFFINE.basis_vector(2, 0), 2, AFFINE.basis_vector(2, 0)
    )
    assert ground_state(AFFINE, tr, off).value == 0j


def test_ground_state_positive_on_squares():
    rng = Random(77)
    tr = haar_trace(AFFINE.engine)
    for _ in range(6):
        y = sample_element(rng, AFFINE, (1, 2, 3), terms=2)
        sv = ground_state(AFFINE, tr, (y.adjoint() * y).core_expectation())
        assert sv.value.real >= -1e-12
        assert abs(sv.value.imag) < 1e-12


def test_ground_state_is_kms_limit():
    tr = haar_trace(AFFINE.engine)
    a = CoefficientElement.monomial(AFFINE.engine, (1, 1), 1.0)
    y = NTElement.embed_coeff(AFFINE, a) + unit_projection(AFFINE, 2)
    want = ground_state(AFFINE, tr, y).value
    prev = None
    for beta in (5.0, 10.0, 20.0):
        got = KMSContext(AFFINE, tr, beta, 500).kms(y).value
        diff = abs(got - want)
        if prev is not None:
            assert diff <= 0.5 * prev + 1e-14
        prev = diff
    assert prev <= 1e-4


# -- euler product -------------------------------------------------------------------


def test_primes_sieve():
    assert primes_up_to(30) == (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)
    assert primes_up_to(1) == ()


def test_euler_product_approaches_zeta_two():
    limit = math.pi**2 / 6.0
    prev = None
    for P in (10, 100, 1000):
        got = euler_product(2.0, P)
        err = abs(got - limit)
        if prev is not None:
            assert err < prev
        prev = err
        assert got < limit  # finite products underestimate
    gap = euler_truncation_gap(2.0, 1000, 10**6)
    partial = float(np.sum(np.arange(1, 10**6 + 1, dtype=float) ** -2.0))
    assert abs(euler_product(2.0, 1000) - partial) <= gap


def test_euler_product_needs_convergence():
    with pytest.raises(ValueError):
        euler_product(1.0, 100)


# -- serialisation ---------------------------------------------------------------------


def test_state_value_dict_shape():
    ctx = context(AFFINE)
    sv = ctx.kms(unit_projection(AFFINE, 2))
    d = sv.as_dict()
    assert set(d) == {"value", "tail", "truncation"}
    assert d["truncation"] == 200
    assert isinstance(d["value"], list) and len(d["value"]) == 2
    assert complex(sv) == sv.value
