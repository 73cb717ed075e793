import random

from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpc, mpf
import pytest

from qdisk import (
    AdditionInstance,
    DiskIndex,
    DomainError,
    EvaluationContext,
    KrawtchoukParams,
    ProductInstance,
    QJacobiParams,
    affine_q_krawtchouk_orthonormal,
    addition_lhs,
    addition_residual,
    addition_rhs,
    coefficient_c,
    connection_coefficients,
    connection_residual,
    generating_function_residual,
    little_q_jacobi,
    little_qjacobi_product_residual,
    product_residual,
    q_pochhammer,
    r_function,
    two_variable_P,
    wall_addition_residual,
)
from qdisk.identities import (
    addition_rhs_split_lm,
    corrupted_cees,
    product_summand,
    two_variable_gram,
    two_variable_norm_h,
)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


def test_coefficient_trivial(ctx):
    with ctx.workdps():
        for (l, m) in [(0, 0), (2, 1), (4, 4)]:
            assert abs(coefficient_c("1.3", l, m, 0, 0, ctx.q) - 1) < ctx.identity_tolerance


def test_coefficient_vanishes_at_small_nu(ctx):
    # with both r > 0 and s > 0 the coefficient collapses (linearly) as
    # nu -> 0; with r = 0 or s = 0 it stays bounded away from zero
    with ctx.workdps():
        for (l, m, r, s) in [(3, 3, 1, 1), (2, 2, 2, 1), (2, 2, 1, 2)]:
            c8 = coefficient_c(mpf("1e-8"), l, m, r, s, ctx.q)
            assert abs(c8) < mpf("1e-6")
            c4 = coefficient_c(mpf("1e-4"), l, m, r, s, ctx.q)
            assert abs(c8 / c4 - mpf("1e-4")) < mpf("1e-7")
        for (r, s) in [(1, 0), (0, 2)]:
            c = coefficient_c(mpf("1e-8"), 3, 3, r, s, ctx.q)
            assert abs(c) > mpf("1e-3")


def _c_factorwise(nu, l, m, r, s, q, ctx):
    # independent re-derivation of the coefficient, factor by factor
    def norm(nu_, l_, m_):
        return (
            q ** (m_ * (nu_ + 1))
            * (1 - q ** (nu_ + 1))
            / (1 - q ** (nu_ + l_ + m_ + 1))
            * q_pochhammer(q, q, l_, ctx)
            * q_pochhammer(q, q, m_, ctx)
            / q_pochhammer(q ** (nu_ + 1), q, l_, ctx)
            / q_pochhammer(q ** (nu_ + 1), q, m_, ctx)
        )

    lead = (1 - q ** (nu + r + s + 1)) / (1 - q ** (nu + 1))
    return lead * norm(nu, l, m) / norm(nu + r + s, l - r, m - s) / norm(nu - 1, r, s)


def test_coefficient_factorwise_oracle():
    ctx = EvaluationContext("0.25")
    with ctx.workdps():
        got = coefficient_c(1, 1, 1, 1, 1, ctx.q)
        want = _c_factorwise(mpf(1), 1, 1, 1, 1, ctx.q, ctx)
        assert abs(got - want) < ctx.identity_tolerance
        # a few more index patterns
        for (nu, l, m, r, s) in [("0.5", 3, 2, 2, 1), ("2.5", 4, 1, 0, 1), ("1", 2, 2, 2, 2)]:
            got = coefficient_c(nu, l, m, r, s, ctx.q)
            want = _c_factorwise(mpf(nu), l, m, r, s, ctx.q, ctx)
            assert abs(got - want) < ctx.identity_tolerance * max(1, abs(want))


def test_coefficient_index_bounds(ctx):
    with pytest.raises(DomainError):
        coefficient_c("1", 2, 2, 3, 0, ctx.q)


# ---------------------------------------------------------------------------
# addition formula
# ---------------------------------------------------------------------------


def test_addition_lhs_collapses_at_l_equals_m_zero(ctx):
    inst = AdditionInstance("1", 0, 0, "0.8", 1, 4, "3")
    with ctx.workdps():
        lhs = addition_lhs(inst, ctx)
        want = affine_q_krawtchouk_orthonormal(
            KrawtchoukParams("0.8", 4, 1), mpf(3) * ctx.q**-4, ctx
        )
        assert abs(lhs - want) < ctx.identity_tolerance
        rhs = addition_rhs(inst, ctx)
        assert abs(rhs - want) < ctx.identity_tolerance


def test_addition_reference_instance(ctx):
    rep = addition_residual(AdditionInstance("1", 2, 1, "0.8", 1, 4, "3"), ctx)
    assert rep.passed


def test_addition_hypothesis_violation_rejected():
    with pytest.raises(DomainError):
        AdditionInstance("1", 3, 0, "0.8", 4, 5, "3")


def test_addition_complex_x(ctx):
    rep = addition_residual(AdditionInstance("1", 2, 1, "0.8", 1, 4, mpc(1, 2)), ctx)
    assert rep.passed
    assert rep.instance["branch"] == "principal-fused"


def test_addition_relaxed_mode(ctx):
    # z + l > N is allowed when x sits on the grid q^j, j = 0..N
    with ctx.workdps():
        for j in range(6):
            inst = AdditionInstance("1.5", 2, 2, "0.9", 4, 5, ctx.q**j, relaxed=True)
            assert addition_residual(inst, ctx).passed
    with pytest.raises(DomainError):
        inst = AdditionInstance("1.5", 2, 2, "0.9", 4, 5, "0.3", relaxed=True)
        addition_residual(inst, ctx)


@settings(max_examples=15, deadline=None)
@given(
    q=st.sampled_from(["0.3", "0.5", "0.7", "0.9"]),
    nu=st.sampled_from(["0.5", "1", "2.5"]),
    l=st.integers(min_value=0, max_value=4),
    m=st.integers(min_value=0, max_value=4),
    z=st.integers(min_value=0, max_value=3),
    pad=st.integers(min_value=0, max_value=2),
    tnum=st.integers(min_value=1, max_value=9),
    xsel=st.sampled_from(["-2", "0.5", "1", "4", "1+2j"]),
)
def test_addition_property(q, nu, l, m, z, pad, tnum, xsel):
    ctx = EvaluationContext(q)
    with ctx.workdps():
        N = z + l + pad
        t = mpf(tnum) / 10 / ctx.q  # spans (0, q^-1)
        x = mpc(1, 2) if xsel == "1+2j" else mpf(xsel)
        rep = addition_residual(AdditionInstance(nu, l, m, t, z, N, x), ctx)
        assert rep.passed, rep.instance


def test_addition_x_polynomiality(ctx):
    # both sides are degree z + l polynomials in x: divided differences of
    # higher order vanish
    with ctx.workdps():
        inst_of = lambda x: AdditionInstance("1", 2, 1, "0.8", 1, 5, x)
        pts = [mpf(1) + mpf(j) / 3 for j in range(7)]  # N + 2 = 7 points
        vals = [addition_lhs(inst_of(x), ctx) for x in pts]
        scale = max(abs(v) for v in vals)
        # divided-difference table
        dd = list(vals)
        order = 0
        for order in range(1, len(pts)):
            dd = [
                (dd[i + 1] - dd[i]) / (pts[i + order] - pts[i])
                for i in range(len(dd) - 1)
            ]
            if order > 3:  # z + l = 3
                for v in dd:
                    assert abs(v) < ctx.identity_tolerance * max(1, scale)


def test_addition_lm_split(ctx):
    # the two-double-sum rearrangement at l = m equals both sides
    with ctx.workdps():
        nu, l, t, z, N, x = mpf("1.5"), 2, mpf("0.7"), 2, 5, mpf("1.7")
        split = addition_rhs_split_lm(nu, l, t, z, N, x, ctx)
        lhs = little_q_jacobi(QJacobiParams(ctx.q**nu, 1, l), x, ctx) * \
            affine_q_krawtchouk_orthonormal(KrawtchoukParams(t, N, z), x * ctx.q**-N, ctx)
        rhs = addition_rhs(AdditionInstance(nu, l, l, t, z, N, x), ctx)
        assert abs(split - lhs) < ctx.identity_tolerance * max(1, abs(lhs))
        assert abs(split - rhs) < ctx.identity_tolerance * max(1, abs(rhs))


def test_addition_mutation_control(ctx):
    # perturbing the coefficient exponent by one unit must break the identity
    inst = AdditionInstance("1", 2, 1, "0.8", 1, 4, "3")
    with corrupted_cees():
        rep = addition_residual(inst, ctx)
    assert not rep.passed
    assert addition_residual(inst, ctx).passed


# ---------------------------------------------------------------------------
# Wall degeneration
# ---------------------------------------------------------------------------


def test_wall_addition_trivial(ctx):
    rep = wall_addition_residual("1", 0, 0, "0.5", 2, "0.3", ctx)
    assert rep.passed and rep.abs_residual == 0


def test_wall_addition_reference(ctx):
    rep = wall_addition_residual("1", 1, 1, "0.5", 2, "0.3", ctx)
    assert rep.passed


def test_wall_addition_branches(ctx):
    for (l, m) in [(2, 0), (0, 2), (2, 1), (1, 2)]:
        rep = wall_addition_residual("1.5", l, m, "0.5", 1, "0.4", ctx)
        assert rep.passed, (l, m)


def test_wall_addition_finite_N_consistency(ctx):
    # the finite-N identity approaches the degenerate one at rate O(B^N)
    # in the evaluation base B; run in base q^2 so the bound reads q^(2N)
    with ctx.workdps():
        q = ctx.q
        bctx = EvaluationContext(q * q, ctx.precision_digits)
        nu, l, m, t, z, x = "1", 1, 1, mpf("0.5"), 2, mpf("0.3")
        rep = wall_addition_residual(nu, l, m, t, z, x, bctx)
        assert rep.passed
        devs = []
        with bctx.workdps():
            for N in (10, 20, 30):
                lhs_N = addition_lhs(AdditionInstance(nu, l, m, t, z, N, x), bctx)
                devs.append(abs(lhs_N - rep.lhs))
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] < 10 * q ** (2 * 30)


# ---------------------------------------------------------------------------
# product formula
# ---------------------------------------------------------------------------


def test_product_dual_orthogonality_collapse(ctx):
    inst = ProductInstance("1", 0, 0, "0.8", 1)
    rep = product_residual(inst, ctx)
    assert rep.passed
    with ctx.workdps():
        assert abs(rep.rhs - 1) < 10 * mpf(str(inst.tail_tolerance))


def test_product_reference_instance(ctx):
    rep = product_residual(ProductInstance("1", 1, 0, "0.8", 1), ctx)
    assert rep.passed
    with ctx.workdps():
        want = r_function(DiskIndex("1", 1, 0), ctx.q, ctx) * r_function(
            DiskIndex("1", 1, 0), mpf("0.8") * ctx.q, ctx
        )
        assert abs(rep.lhs - want) < ctx.identity_tolerance


def test_product_both_orders(ctx7):
    for (l, m) in [(2, 1), (1, 2), (3, 0), (0, 3)]:
        rep = product_residual(ProductInstance("1.5", l, m, "0.9", 3), ctx7)
        assert rep.passed, (l, m)
        assert rep.instance["outer_stop"] > 0


def test_product_degenerate_when_z_below_m_minus_l(ctx):
    # for z < m - l both sides vanish identically
    rep = product_residual(ProductInstance("1", 0, 3, "0.8", 1), ctx)
    assert rep.passed and rep.lhs == 0 and rep.rhs == 0


def test_product_index_shift_symmetry(ctx):
    # summand_{l,m}(x + l - m, z + m - l, N + l - m) = summand_{m,l}(x, z, N)
    with ctx.workdps():
        nu, t = "1.5", "0.9"
        for (l, m, x, z, N) in [(2, 1, 3, 2, 6), (3, 1, 4, 2, 7)]:
            a = product_summand(nu, l, m, t, z + m - l, N + l - m, x + l - m, ctx)
            b = product_summand(nu, m, l, t, z, N, x, ctx)
            assert abs(a - b) < ctx.identity_tolerance * max(1, abs(a))


def test_little_qjacobi_product(ctx):
    rep = little_qjacobi_product_residual("1", 0, "0.6", 1, ctx)
    assert rep.passed
    rep = little_qjacobi_product_residual("1", 2, "0.6", 1, ctx)
    assert rep.passed
    # same formula through the general evaluator
    rep2 = product_residual(ProductInstance("1", 2, 2, "0.6", 1), ctx)
    with ctx.workdps():
        assert abs(rep.rhs - rep2.rhs) < ctx.identity_tolerance * max(1, abs(rep.rhs))


# ---------------------------------------------------------------------------
# two-variable orthogonal functions
# ---------------------------------------------------------------------------


def test_two_variable_trivials(ctx):
    with ctx.workdps():
        got = two_variable_P(0, 0, "1", mpf("0.7"), 5, 2, "0.5", ctx)
        want = affine_q_krawtchouk_orthonormal(
            KrawtchoukParams("0.5", 5, 2), mpf("0.7") * ctx.q**-5, ctx
        )
        assert abs(got - want) < ctx.identity_tolerance
        # a + s - r < 0 gives 0 by the zero-extension convention
        assert two_variable_P(3, 0, "1", mpf("0.7"), 5, 2, "0.5", ctx) == 0


def test_two_variable_gram(ctx):
    pairs = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (2, 2)]
    gram = two_variable_gram(pairs, "1", 2, "0.5", ctx, tail="1e-45")
    with ctx.workdps():
        for i, (r, s) in enumerate(pairs):
            for j in range(len(pairs)):
                want = two_variable_norm_h(r, s, "1", ctx) if i == j else mp.zero
                assert abs(gram[(i, j)] - want) < mpf("1e-40")


# ---------------------------------------------------------------------------
# connection formula and generating function
# ---------------------------------------------------------------------------


def test_connection_a_zero_is_identity(ctx):
    coeffs = connection_coefficients(2, 0, "0.4", 5, ctx.q, ctx)
    with ctx.workdps():
        assert abs(coeffs[0] - 1) < ctx.identity_tolerance
        for c in coeffs[1:]:
            assert abs(c) < ctx.identity_tolerance


def test_connection_reconstruction(ctx):
    assert connection_residual(2, 1, "0.4", 5, "2.5", ctx).passed


def test_connection_negative_a(ctx):
    # roles swapped: the N on the left is the smaller one
    assert connection_residual(2, -1, "0.4", 5, "2.5", ctx).passed
    assert connection_residual(3, -2, "0.4", 6, mpc(1, 1), ctx).passed


def test_connection_polynomial_certification(ctx):
    # exact for all complex x: degree + 1 distinct samples
    with ctx.workdps():
        for j in range(4):
            assert connection_residual(3, 2, "0.4", 6, mpf(j) / 2 + mpf("0.1"), ctx).passed


def test_connection_index_bounds(ctx):
    with pytest.raises(DomainError):
        connection_coefficients(5, 2, "0.4", 6, ctx.q, ctx)


def test_generating_function(ctx):
    rep = generating_function_residual(1, "0.4", 3, ctx.q, ["0.2"], ctx)
    assert rep.passed
    # z = 0 gives 1 on both sides
    rep0 = generating_function_residual(2, "0.4", 5, ctx.q, [0], ctx)
    assert rep0.passed and abs(rep0.lhs - 1) == 0
    # polynomial identity of degree <= N: N + 1 distinct samples
    with ctx.workdps():
        samples = [mpf(j) / 2 - 1 for j in range(6)]
        rep = generating_function_residual(3, "0.7", 5, ctx.q, samples, ctx)
        assert rep.passed
