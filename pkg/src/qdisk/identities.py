"""Scalar identity evaluators: the commuting addition formula, the product
formula, two-variable orthogonality, connection formula and generating
function, each reported as a :class:`ResidualReport`.

Identity conventions (all in the evaluation base q of the context):

    LHS(addition) = (-1)^{l-m} [ (tq)^{m-l} (x q^{m-l+1};q)_{l-m}
                    / (q^{N+m-l+1};q)_{l-m} ]^{1/2}
                    r^{(nu)}_{l,m}(x q^{m-l}; q) Khat_z(x q^{-N}; t, N+m-l; q)

    RHS(addition) = sum_{r<=l} sum_{s<=m} c^{(nu)}_{l,m;r,s}(q) (-1)^{r-s}
                    q^{(r-s)/2} t^{(r+s)/2} q^{z(r+s)}
                    r^{(nu+r+s)}_{l-r,m-s}(q^z;q) r^{(nu+r+s)}_{l-r,m-s}(t q^z;q)
                    r^{(nu-1)}_{r,s}(q^{N+m-l-z};q)
                    Khat_{z+l-m+s-r}(x q^{-N}; t, N; q)

The LHS square root is evaluated in fused form: the x-dependent radicand
factors of the prefactor cancel against the r-function radicand exactly, so
what is computed is the polynomial continuation, valid for every complex x.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

from mpmath import mp, mpc, mpf, sqrt

from .qcore import (
    DomainError,
    EvaluationContext,
    PhiSeriesSpec,
    TruncationError,
    phi_series,
    qpoch,
    to_real,
    to_scalar,
)
from .qpolys import (
    khat_raw,
    khat_xpoch_coefficients,
    kplain_raw,
    plqj_coefficients,
    plqj_raw,
    r_raw,
    wall_raw,
)

PRODUCT_OUTER_LIMIT = 10_000


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------


@dataclass
class ResidualReport:
    """Left/right values of one identity instance and their residuals."""

    lhs: object
    rhs: object
    abs_residual: mpf
    rel_residual: mpf
    passed: bool
    instance: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def make_report(lhs, rhs, tolerance, instance: dict) -> ResidualReport:
    """Build a report; rel residual is abs / max(|lhs|, |rhs|, 1)."""
    absr = abs(lhs - rhs)
    relr = absr / max(abs(lhs), abs(rhs), mp.one)
    return ResidualReport(lhs, rhs, absr, relr, bool(relr < tolerance), dict(instance))


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdditionInstance:
    """One evaluation point of the addition formula.

    Default mode enforces z + l <= N (the theorem hypothesis); in relaxed
    mode that constraint is dropped but x must equal q^j for some j in 0..N.
    """

    nu: object
    l: int
    m: int
    t: object
    z: int
    N: int
    x: object
    relaxed: bool = False

    def __post_init__(self):
        for name in ("l", "m", "z", "N"):
            v = int(getattr(self, name))
            if v < 0:
                raise DomainError(f"{name} must be a nonnegative integer")
            object.__setattr__(self, name, v)
        if not self.relaxed and self.z + self.l > self.N:
            raise DomainError(
                f"z + l <= N violated (z={self.z}, l={self.l}, N={self.N}); "
                "use relaxed mode with x on the q-grid"
            )

    def check(self, ctx: EvaluationContext):
        nu = to_real(self.nu)
        if not nu > 0:
            raise DomainError(f"addition formula needs nu > 0, got {nu}")
        t = to_real(self.t)
        if not (0 < t < 1 / ctx.q):
            raise DomainError(f"t must lie in (0, 1/q), got {t}")
        if self.relaxed:
            x = to_scalar(self.x)
            j = _grid_index(x, ctx.q, self.N)
            if j is None:
                raise DomainError(
                    "relaxed mode requires x = q^j with 0 <= j <= N"
                )

    def echo(self) -> dict:
        return {
            "nu": str(self.nu), "l": self.l, "m": self.m, "t": str(self.t),
            "z": self.z, "N": self.N, "x": str(self.x), "relaxed": self.relaxed,
        }


@dataclass(frozen=True)
class ProductInstance:
    """One evaluation point of the product formula."""

    nu: object
    l: int
    m: int
    t: object
    z: int
    tail_tolerance: object = "1e-40"

    def __post_init__(self):
        for name in ("l", "m", "z"):
            v = int(getattr(self, name))
            if v < 0:
                raise DomainError(f"{name} must be a nonnegative integer")
            object.__setattr__(self, name, v)

    def check(self, ctx: EvaluationContext):
        nu = to_real(self.nu)
        if not nu > 0:
            raise DomainError(f"product formula needs nu > 0, got {nu}")
        t = to_real(self.t)
        if not (0 < t < 1 / ctx.q):
            raise DomainError(f"t must lie in (0, 1/q), got {t}")

    def echo(self) -> dict:
        return {
            "nu": str(self.nu), "l": self.l, "m": self.m, "t": str(self.t),
            "z": self.z, "tail_tolerance": str(self.tail_tolerance),
        }


def _grid_index(x, q, N: int):
    """j with x = q^j for 0 <= j <= N, or None."""
    if isinstance(x, mpc):
        if x.imag != 0:
            return None
        x = x.real
    qj = mp.one
    tol = mpf(10) ** (5 - mp.dps)
    for j in range(N + 1):
        if abs(x - qj) <= tol * qj:
            return j
        qj *= q
    return None


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

# Test hook: shifts the nu + r + s + 1 exponent in the coefficient formula.
_CEES_EXPONENT_SHIFT = 0


@contextlib.contextmanager
def corrupted_cees(shift: int = 1):
    """Deliberately perturb the addition coefficients (mutation control)."""
    global _CEES_EXPONENT_SHIFT
    _CEES_EXPONENT_SHIFT = shift
    try:
        yield
    finally:
        _CEES_EXPONENT_SHIFT = 0


def _c_norm(nu, l: int, m: int, q):
    """Normalization constant c^{(nu)}_{l,m}(q)."""
    a = q ** (nu + 1)
    return (
        q ** (m * (nu + 1))
        * (1 - a)
        / (1 - q ** (nu + l + m + 1))
        * qpoch(q, q, l)
        * qpoch(q, q, m)
        / (qpoch(a, q, l) * qpoch(a, q, m))
    )


def coefficient_c(nu, l: int, m: int, r: int, s: int, q) -> mpf:
    """Addition-formula coefficient c^{(nu)}_{l,m;r,s}(q)."""
    if r > l or s > m or r < 0 or s < 0:
        raise DomainError(f"need 0 <= r <= l and 0 <= s <= m, got r={r}, s={s}")
    nu = to_real(nu)
    q = to_real(q)
    lead = (1 - q ** (nu + r + s + 1 + _CEES_EXPONENT_SHIFT)) / (1 - q ** (nu + 1))
    return (
        lead
        * _c_norm(nu, l, m, q)
        / (_c_norm(nu + r + s, l - r, m - s, q) * _c_norm(nu - 1, r, s, q))
    )


# ---------------------------------------------------------------------------
# addition formula
# ---------------------------------------------------------------------------


def _addition_lhs_raw(nu, l, m, t, z, N, x, q):
    d = l - m
    if d >= 0:
        pref = (-1) ** d * (t * q) ** (mpf(-d) / 2) / sqrt(qpoch(q ** (N - d + 1), q, d))
        poly = qpoch(x * q ** (1 - d), q, d) * plqj_raw(m, x * q ** (-d), q**nu, q**d, q)
    else:
        pref = (-1) ** d * (t * q) ** (mpf(-d) / 2) * sqrt(qpoch(q ** (N + 1), q, -d))
        poly = plqj_raw(l, x, q**nu, q ** (-d), q)
    return pref * poly * khat_raw(z, x * q ** (-N), t, N - d, q)


def addition_lhs(inst: AdditionInstance, ctx: EvaluationContext):
    """Left member of the addition formula at one instance."""
    with ctx.workdps():
        inst.check(ctx)
        return _addition_lhs_raw(
            to_real(inst.nu), inst.l, inst.m, to_real(inst.t),
            inst.z, inst.N, to_scalar(inst.x), ctx.q,
        )


def _addition_rhs_raw(nu, l, m, t, z, N, x, q):
    total = mp.zero
    a_base = q**nu
    xq = x * q ** (-N)
    for r in range(l + 1):
        for s in range(m + 1):
            kk = khat_raw(z + l - m + s - r, xq, t, N, q)
            if kk == 0:
                continue
            r1 = r_raw(l - r, m - s, q**z, q, a_base * q ** (r + s))
            if r1 == 0:
                continue
            r2 = r_raw(l - r, m - s, t * q**z, q, a_base * q ** (r + s))
            r3 = r_raw(r, s, q ** (N + m - l - z), q, a_base / q)
            total += (
                coefficient_c(nu, l, m, r, s, q)
                * (-1) ** (r - s)
                * q ** (mpf(r - s) / 2)
                * t ** (mpf(r + s) / 2)
                * q ** (z * (r + s))
                * r1 * r2 * r3 * kk
            )
    return total


def addition_rhs(inst: AdditionInstance, ctx: EvaluationContext):
    """Right member (the (l+1)(m+1)-term double sum) at one instance."""
    with ctx.workdps():
        inst.check(ctx)
        return _addition_rhs_raw(
            to_real(inst.nu), inst.l, inst.m, to_real(inst.t),
            inst.z, inst.N, to_scalar(inst.x), ctx.q,
        )


def addition_residual(inst: AdditionInstance, ctx: EvaluationContext) -> ResidualReport:
    """Residual report for one addition-formula instance."""
    with ctx.workdps():
        inst.check(ctx)
        nu = to_real(inst.nu)
        t = to_real(inst.t)
        x = to_scalar(inst.x)
        lhs = _addition_lhs_raw(nu, inst.l, inst.m, t, inst.z, inst.N, x, ctx.q)
        rhs = _addition_rhs_raw(nu, inst.l, inst.m, t, inst.z, inst.N, x, ctx.q)
        echo = inst.echo()
        echo["branch"] = "principal-fused"
        return make_report(lhs, rhs, ctx.identity_tolerance, echo)


def addition_rhs_split_lm(nu, l: int, t, z: int, N: int, x, ctx: EvaluationContext):
    """The l = m right side rearranged into the two r >= s double sums."""
    with ctx.workdps():
        nu = to_real(nu)
        t = to_real(t)
        x = to_scalar(x)
        q = ctx.q
        total = mp.zero
        for r in range(l + 1):
            for s in range(r + 1):
                c = coefficient_c(nu, l, l, r, s, q)
                base = (-1) ** (r - s) * q ** (mpf(r - s) / 2) * t ** (mpf(r + s) / 2) * q ** (z * (r + s))
                ars = q ** (nu + r + s)
                b = q ** (r - s)
                if r != s:
                    rad = (
                        qpoch(q ** (z - r + s + 1), q, r - s)
                        * qpoch(t * q ** (z - r + s + 1), q, r - s)
                        * qpoch(q ** (N - z + 1), q, r - s)
                    )
                    # (q^z, t q^z; q^-1)_{r-s} rewritten in ascending base
                    total += (
                        c * base * sqrt(rad)
                        * plqj_raw(l - r, q ** (z + s - r), ars, b, q)
                        * plqj_raw(l - r, t * q ** (z + s - r), ars, b, q)
                        * plqj_raw(s, q ** (N - z), q ** (nu - 1), b, q)
                        * khat_raw(z + s - r, x * q ** (-N), t, N, q)
                    )
                rad2 = (
                    qpoch(q ** (z + 1), q, r - s)
                    * qpoch(t * q ** (z + 1), q, r - s)
                    * qpoch(q ** (N - z - r + s + 1), q, r - s)
                )
                total += (
                    c * base * q ** (r * r - s * s) * sqrt(rad2)
                    * plqj_raw(l - r, q**z, ars, b, q)
                    * plqj_raw(l - r, t * q**z, ars, b, q)
                    * plqj_raw(s, q ** (N - z + s - r), q ** (nu - 1), b, q)
                    * khat_raw(z + r - s, x * q ** (-N), t, N, q)
                )
        return total


# ---------------------------------------------------------------------------
# Wall degeneration of the addition formula
# ---------------------------------------------------------------------------


def wall_addition_residual(nu, l: int, m: int, t, z: int, x, ctx: EvaluationContext) -> ResidualReport:
    """Residual of the N -> infinity addition formula with Wall polynomials."""
    with ctx.workdps():
        nu = to_real(nu)
        t = to_real(t)
        x = to_scalar(x)
        q = ctx.q
        if not nu > 0:
            raise DomainError("nu must be positive")
        if not (0 < t * q < 1):
            raise DomainError("Wall degeneration needs 0 < t q < 1")
        d = l - m
        # fused form, as in the finite-N left side
        if d >= 0:
            pref = (-1) ** d * (t * q) ** (mpf(-d) / 2)
            poly = qpoch(x * q ** (1 - d), q, d) * plqj_raw(m, x * q ** (-d), q**nu, q**d, q)
        else:
            pref = (-1) ** d * (t * q) ** (mpf(-d) / 2)
            poly = plqj_raw(l, x, q**nu, q ** (-d), q)
        lhs = pref * poly * wall_raw(z, x * q ** (-d), t, q)

        rhs = mp.zero
        a_base = q**nu
        for r in range(l + 1):
            for s in range(m + 1):
                idx = z + l - m + s - r
                if idx < 0:
                    continue
                r1 = r_raw(l - r, m - s, q**z, q, a_base * q ** (r + s))
                if r1 == 0:
                    continue
                r2 = r_raw(l - r, m - s, t * q**z, q, a_base * q ** (r + s))
                rhs += (
                    coefficient_c(nu, l, m, r, s, q)
                    * (-1) ** (r - s)
                    * q ** (mpf(r - s) / 2)
                    * t ** (mpf(r + s) / 2)
                    * q ** (z * (r + s))
                    * r1 * r2 * wall_raw(idx, x, t, q)
                )
        echo = {"nu": str(nu), "l": l, "m": m, "t": str(t), "z": z, "x": str(x)}
        return make_report(lhs, rhs, ctx.identity_tolerance, echo)


# ---------------------------------------------------------------------------
# product formula
# ---------------------------------------------------------------------------


def product_summand(nu, l: int, m: int, t, z: int, N: int, x: int, ctx: EvaluationContext):
    """One (N, x) term of the product-formula double sum (before the
    (1 - q^nu) front factor), exposed for the index-shift symmetry check."""
    with ctx.workdps():
        nu = to_real(nu)
        t = to_real(t)
        q = ctx.q
        d = l - m
        if x < max(0, d) or x > N:
            return mp.zero
        w = (
            qpoch(q ** (x + 1), q, N - x)
            * qpoch(t * q, q, N - x)
            / qpoch(q, q, N - x)
            * (t * q) ** x
        )
        if d >= 0:
            pref = (-1) ** d * (t * q) ** (mpf(-d) / 2) / sqrt(qpoch(q ** (N - d + 1), q, d))
            rpoly = qpoch(q ** (x - d + 1), q, d) * plqj_raw(m, q ** (x - d), q**nu, q**d, q)
        else:
            pref = (-1) ** d * (t * q) ** (mpf(-d) / 2) * sqrt(qpoch(q ** (N + 1), q, -d))
            rpoly = plqj_raw(l, q**x, q**nu, q ** (-d), q)
        return (
            pref * rpoly * w * q ** (nu * (N - z - d))
            * khat_raw(z, q ** (x - N), t, N - d, q)
            * khat_raw(z + d, q ** (x - N), t, N, q)
        )


def _product_rhs_raw(nu, l, m, t, z, q, tail_tol):
    """Truncated double sum; returns (value, outer_stop_index)."""
    d = l - m
    n_start = z + d
    if n_start < 0:
        # Khat index z + l - m is negative throughout: the sum vanishes.
        return mp.zero, 0
    x0 = max(0, d)
    a_nu = q**nu
    qnu_step = q**nu
    tq = t * q

    # x-independent pieces of the summand prefactor
    if d >= 0:
        s_fixed = (-1) ** d * tq ** (mpf(-d) / 2)
        p_coeffs = plqj_coefficients(m, a_nu, q**d, q)
    else:
        s_fixed = (-1) ** d * tq ** (mpf(-d) / 2)
        p_coeffs = plqj_coefficients(l, a_nu, q ** (-d), q)

    total = mp.zero
    consec = 0
    N = n_start
    # seed: weight at x0 for N = n_start, and running q^{nu (N - n_start)}
    w_seed = (
        qpoch(q ** (x0 + 1), q, N - x0)
        * qpoch(tq, q, N - x0)
        / qpoch(q, q, N - x0)
        * tq**x0
    )
    nu_weight = mp.one
    while N <= n_start + PRODUCT_OUTER_LIMIT:
        if d >= 0:
            s_pref = s_fixed / sqrt(qpoch(q ** (N - d + 1), q, d))
        else:
            s_pref = s_fixed * sqrt(qpoch(q ** (N + 1), q, -d))
        k1 = khat_xpoch_coefficients(z, t, N - d, q) if 0 <= z <= N - d else None
        k2 = khat_xpoch_coefficients(z + d, t, N, q) if 0 <= z + d <= N else None
        block = mp.zero
        if k1 is not None and k2 is not None:
            kmax = max(len(k1), len(k2))
            X = q ** (x0 - N)
            w = w_seed
            # argument of the little q-Jacobi factor: q^{x-d} for l >= m
            # (fused radicand), plain q^x for l < m
            xs = q ** (x0 - d) if d >= 0 else q**x0
            for x in range(x0, N + 1):
                # shared argument Pochhammers (X; q)_k
                B = [mp.one]
                f = mp.one
                Xq = X
                for _ in range(kmax - 1):
                    f *= 1 - Xq
                    Xq *= q
                    B.append(f)
                kh1 = mp.zero
                for ck, bk in zip(k1, B):
                    kh1 += ck * bk
                kh2 = mp.zero
                for ck, bk in zip(k2, B):
                    kh2 += ck * bk
                # polynomial factor and, for l >= m, its fused radicand
                pval = mp.zero
                pw = mp.one
                for ck in p_coeffs:
                    pval += ck * pw
                    pw *= xs
                if d > 0:
                    rad = mp.one
                    g = xs * q
                    for _ in range(d):
                        rad *= 1 - g
                        g *= q
                    pval *= rad
                block += s_pref * pval * w * kh1 * kh2
                # advance x -> x + 1
                if x < N:
                    w *= tq * (1 - q ** (N - x)) / ((1 - q ** (x + 1)) * (1 - t * q ** (N - x)))
                X *= q
                xs *= q
        weighted = block * nu_weight
        total += weighted
        if abs(weighted) <= tail_tol * max(abs(total), mpf(10) ** (-mp.dps)):
            consec += 1
            if consec >= 3:
                return total, N
        else:
            consec = 0
        # advance N -> N + 1
        w_seed *= (1 - q ** (N + 1)) * (1 - tq * q ** (N - x0)) / (1 - q ** (N + 1 - x0))
        nu_weight *= qnu_step
        N += 1
    raise TruncationError(
        f"product outer sum failed its stop rule within {PRODUCT_OUTER_LIMIT} terms"
    )


def product_rhs(inst: ProductInstance, ctx: EvaluationContext):
    """Truncated product-formula right side (times 1 - q^nu)."""
    value, _ = product_rhs_with_stop(inst, ctx)
    return value


def product_rhs_with_stop(inst: ProductInstance, ctx: EvaluationContext):
    """Product right side together with the outer truncation index."""
    with ctx.workdps():
        inst.check(ctx)
        value, stop = _product_rhs_raw(
            to_real(inst.nu), inst.l, inst.m, to_real(inst.t), inst.z,
            ctx.q, to_real(inst.tail_tolerance),
        )
        return (1 - ctx.q ** to_real(inst.nu)) * value, stop


def product_residual(inst: ProductInstance, ctx: EvaluationContext) -> ResidualReport:
    """Residual of r_{l,m}(q^z) r_{l,m}(t q^z) against the double sum."""
    with ctx.workdps():
        inst.check(ctx)
        nu = to_real(inst.nu)
        t = to_real(inst.t)
        q = ctx.q
        a = q**nu
        r1 = r_raw(inst.l, inst.m, q**inst.z, q, a)
        # the t q^z factor can only hit a negative radicand when r1 vanishes
        lhs = r1 * r_raw(inst.l, inst.m, t * q**inst.z, q, a) if r1 != 0 else mp.zero
        rhs, stop = product_rhs_with_stop(inst, ctx)
        echo = inst.echo()
        echo["outer_stop"] = stop
        return make_report(lhs, rhs, 100 * to_real(inst.tail_tolerance), echo)


def little_qjacobi_product_residual(nu, l: int, t, z: int, ctx: EvaluationContext) -> ResidualReport:
    """The l = m specialization: squared-Krawtchouk product formula for
    p_l(.; q^nu, 1; q)."""
    inst = ProductInstance(nu, l, l, t, z)
    with ctx.workdps():
        inst.check(ctx)
        q = ctx.q
        nu_r = to_real(nu)
        t_r = to_real(t)
        lhs = plqj_raw(l, q**z, q**nu_r, mp.one, q) * plqj_raw(
            l, t_r * q**z, q**nu_r, mp.one, q
        )
        rhs, stop = product_rhs_with_stop(inst, ctx)
        echo = inst.echo()
        echo["outer_stop"] = stop
        echo["form"] = "little-q-jacobi"
        return make_report(lhs, rhs, 100 * to_real(inst.tail_tolerance), echo)


# ---------------------------------------------------------------------------
# two-variable orthogonal functions (product-formula machinery)
# ---------------------------------------------------------------------------


def two_variable_P(r: int, s: int, nu, x, N: int, a: int, t, ctx: EvaluationContext):
    """P^{(nu)}_{r,s}(x, N; a, t; q) = r_{r,s}(q^{N-a}) Khat_{a+s-r}(x q^{-N})."""
    if not (0 <= a <= N):
        raise DomainError(f"need 0 <= a <= N, got a={a}, N={N}")
    with ctx.workdps():
        nu = to_real(nu)
        t = to_real(t)
        q = ctx.q
        rv = r_raw(r, s, q ** (N - a), q, q**nu)
        return rv * khat_raw(a + s - r, to_scalar(x) * q ** (-N), t, N, q)


def two_variable_norm_h(r: int, s: int, nu, ctx: EvaluationContext):
    """Diagonal Gram value h_{rs} of the two-variable orthogonality."""
    with ctx.workdps():
        nu = to_real(nu)
        q = ctx.q
        a = q ** (nu + 1)
        return (
            qpoch(q, q, r) * qpoch(q, q, s) / (qpoch(a, q, r) * qpoch(a, q, s))
            * q ** ((nu + 1) * s) / (1 - q ** (nu + r + s + 1))
        )


def two_variable_gram(pairs, nu, a: int, t, ctx: EvaluationContext, tail="1e-45"):
    """Gram matrix of the P_{r,s} family over the weighted (x, N) grid.

    Returns a dict mapping (i, j) into the summed inner products, truncating
    the outer N-sum when a full block drops below ``tail``.
    """
    with ctx.workdps():
        nu = to_real(nu)
        t = to_real(t)
        tail = to_real(tail)
        q = ctx.q
        tq = t * q
        gram = {(i, j): mp.zero for i in range(len(pairs)) for j in range(len(pairs))}
        N = a
        consec = 0
        while True:
            rvals = [r_raw(r, s, q ** (N - a), q, q**nu) for (r, s) in pairs]
            kcoeffs = [
                khat_xpoch_coefficients(a + s - r, t, N, q)
                if 0 <= a + s - r <= N
                else None
                for (r, s) in pairs
            ]
            scale = q ** ((nu + 1) * (N - a))
            block_max = mp.zero
            vals = [mp.zero] * len(pairs)
            block = {key: mp.zero for key in gram}
            X = q ** (-N)
            w = qpoch(tq, q, N)  # weight at x = 0
            kmax = max((len(c) for c in kcoeffs if c is not None), default=1)
            for x in range(N + 1):
                B = [mp.one]
                f = mp.one
                Xq = X
                for _ in range(kmax - 1):
                    f *= 1 - Xq
                    Xq *= q
                    B.append(f)
                for i in range(len(pairs)):
                    if kcoeffs[i] is None:
                        vals[i] = mp.zero
                        continue
                    kh = mp.zero
                    for ck, bk in zip(kcoeffs[i], B):
                        kh += ck * bk
                    vals[i] = rvals[i] * kh
                for i in range(len(pairs)):
                    if vals[i] == 0:
                        continue
                    for j in range(i, len(pairs)):
                        block[(i, j)] += vals[i] * vals[j] * w
                if x < N:
                    w *= tq * (1 - q ** (N - x)) / ((1 - q ** (x + 1)) * (1 - t * q ** (N - x)))
                X *= q
            for key, v in block.items():
                contrib = v * scale
                gram[key] += contrib
                block_max = max(block_max, abs(contrib))
            if block_max <= tail:
                consec += 1
                if consec >= 3:
                    break
            else:
                consec = 0
            N += 1
        for i in range(len(pairs)):
            for j in range(i):
                gram[(i, j)] = gram[(j, i)]
        return gram


# ---------------------------------------------------------------------------
# connection formula and generating function
# ---------------------------------------------------------------------------


def connection_coefficients(l: int, a: int, t, N: int, q, ctx: EvaluationContext):
    """Coefficients expressing K_l(x; t, N; q) over K_{l-k}(x; t, N-a; q).

    The plain connection coefficients do not involve t; the argument is kept
    so the signature matches the orthonormal variant.
    """
    if a > N or l < 0 or l > min(N, N - a):
        raise DomainError(f"need a <= N and 0 <= l <= min(N, N-a); got l={l}, a={a}, N={N}")
    with ctx.workdps():
        q = to_real(q)
        out = []
        for k in range(l + 1):
            # (q^l; q^-1)_k = (q^{l-k+1}; q)_k
            coeff = (
                qpoch(q ** (l - k + 1), q, k) / qpoch(q, q, k)
                * q ** ((-N + a) * k)
                * qpoch(q ** (-a), q, k) / qpoch(q ** (-N), q, l)
                * qpoch(q ** (-N + a), q, l - k)
            )
            out.append(coeff)
        return out


def orthonormal_connection_coefficients(l: int, a: int, t, N: int, q, ctx: EvaluationContext):
    """Coefficients expressing Khat_l(x; t, N; q) over Khat_{l-k}(x; t, N-a; q),
    for a >= 0."""
    if a < 0:
        raise DomainError("orthonormal connection variant requires a >= 0")
    plain = connection_coefficients(l, a, t, N, q, ctx)
    with ctx.workdps():
        q = to_real(q)
        t = to_real(t)
        out = []
        for k in range(l + 1):
            rad = (
                qpoch(q ** (N - l + 1), q, l) * qpoch(t * q, q, l) * qpoch(q, q, l - k)
                / (qpoch(q, q, l) * qpoch(q ** (N - a - l + k + 1), q, l - k) * qpoch(t * q, q, l - k))
            )
            out.append(plain[k] * (-1) ** k * (t * q) ** (mpf(-k) / 2) * sqrt(rad))
        return out


def connection_residual(l: int, a: int, t, N: int, x, ctx: EvaluationContext) -> ResidualReport:
    """Reconstruction residual of the connection formula at one x."""
    with ctx.workdps():
        q = ctx.q
        t = to_real(t)
        x = to_scalar(x)
        lhs = kplain_raw(l, x, t, N, q)
        coeffs = connection_coefficients(l, a, t, N, q, ctx)
        rhs = mp.zero
        for k, c in enumerate(coeffs):
            if 0 <= l - k <= N - a:
                rhs += c * kplain_raw(l - k, x, t, N - a, q)
        echo = {"l": l, "a": a, "t": str(t), "N": N, "x": str(x)}
        return make_report(lhs, rhs, ctx.identity_tolerance, echo)


def generating_function_residual(x: int, t, N: int, q, z_samples, ctx: EvaluationContext) -> ResidualReport:
    """Max residual over z samples of the affine q-Krawtchouk generating
    function (degree-N polynomial identity in z)."""
    if not (0 <= x <= N):
        raise DomainError(f"need 0 <= x <= N, got x={x}, N={N}")
    with ctx.workdps():
        q = to_real(q)
        t = to_real(t)
        worst = None
        for z in z_samples:
            z = to_scalar(z)
            lhs = qpoch(z * q ** (-N), q, N - x) * phi_series(
                PhiSeriesSpec((q ** (-x),), (t * q,), t * q * z, q, term_cap=x)
            )
            rhs = mp.zero
            zl = mp.one
            for l in range(N + 1):
                rhs += qpoch(q ** (-N), q, l) / qpoch(q, q, l) * kplain_raw(
                    l, q ** (-x), t, N, q
                ) * zl
                zl *= z
            rep = make_report(lhs, rhs, ctx.identity_tolerance,
                              {"x": x, "t": str(t), "N": N, "z": str(z)})
            if worst is None or rep.rel_residual > worst.rel_residual:
                worst = rep
        return worst
