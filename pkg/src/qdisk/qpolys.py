"""Concrete polynomial families: little q-Jacobi, affine q-Krawtchouk (plain
and orthonormal), Wall, Al-Salam--Carlitz, the square-root-weighted r
functions, classical Jacobi, and classical disk polynomials.

Definitions used throughout (base q in (0,1)):

    p_l(x; a, b; q)      = 2phi1(q^-l, a b q^{l+1}; a q; q, q x)
    K_l(x; t, N; q)      = 3phi2(q^-l, x, 0; t q, q^-N; q, q),  0 <= l <= N
    Khat_l(x; t, N; q)   = (-1)^l (tq)^{-l/2}
                           [ (q^N;q^-1)_l (tq;q)_l / (q;q)_l ]^{1/2} K_l(x;t,N;q)
    w_l(x; t; q)         = (-1)^l (tq)^{-l/2} [ (tq;q)_l/(q;q)_l ]^{1/2}
                           2phi1(q^-l, 0; tq; q, qx)
    r^{(nu)}_{l,m}(x; q) = (xq;q)_{l-m}^{1/2} p_m(x; q^nu, q^{l-m}; q)   (l >= m)
                         = (x;q^-1)_{m-l}^{1/2} p_l(x q^{l-m}; q^nu, q^{m-l}; q)
                                                                          (l <= m)

Internal ``*_raw`` helpers assume mpf/mpc inputs at ambient mpmath precision
and perform no domain checks; the public operations validate and manage
precision through an :class:`~qdisk.qcore.EvaluationContext`.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpc, mpf, sqrt

from .qcore import (
    DomainError,
    EvaluationContext,
    PoleError,
    qpoch,
    to_real,
    to_scalar,
)


@dataclass(frozen=True)
class QJacobiParams:
    """Little q-Jacobi parameters (a, b) and degree l."""

    a: object
    b: object
    l: int

    def __post_init__(self):
        if int(self.l) < 0:
            raise DomainError("degree l must be a nonnegative integer")
        object.__setattr__(self, "l", int(self.l))


@dataclass(frozen=True)
class KrawtchoukParams:
    """Affine q-Krawtchouk parameters t, N and degree l.

    l may lie outside [0, N]; the plain evaluator rejects that, the
    orthonormal one maps it to 0 by convention.
    """

    t: object
    N: int
    l: int

    def __post_init__(self):
        if int(self.N) < 0:
            raise DomainError("N must be a nonnegative integer")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "l", int(self.l))


@dataclass(frozen=True)
class DiskIndex:
    """Disk-polynomial index (nu, l, m) with nu > -1 and l, m >= 0."""

    nu: object
    l: int
    m: int

    def __post_init__(self):
        if int(self.l) < 0 or int(self.m) < 0:
            raise DomainError("l and m must be nonnegative integers")
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "m", int(self.m))

    def require_nu(self, bound: float):
        if not to_real(self.nu) > bound:
            raise DomainError(f"nu must exceed {bound}, got {self.nu}")


# ---------------------------------------------------------------------------
# raw evaluators (ambient precision, no validation)
# ---------------------------------------------------------------------------


def _guard():
    return mpf(10) ** (1 - mp.dps) * 10


def plqj_raw(l: int, x, a, b, q):
    """Little q-Jacobi p_l(x; a, b; q) by the terminating 2phi1 term ratio."""
    guard = _guard()
    total = mp.one
    term = mp.one
    qml = q ** (-l)
    abq = a * b * q ** (l + 1)
    qk = mp.one
    for k in range(l):
        den = 1 - a * q * qk
        if abs(den) <= guard:
            raise PoleError(f"little q-Jacobi pole: a q^{k + 1} = 1")
        term *= (1 - qml * qk) * (1 - abq * qk) * (q * x)
        term /= den * (1 - q * qk)
        qk *= q
        total += term
    return total


def plqj_coefficients(l: int, a, b, q):
    """Coefficients c_k with p_l(x; a, b; q) = sum_k c_k x^k."""
    guard = _guard()
    coeffs = [mp.one]
    term = mp.one
    qml = q ** (-l)
    abq = a * b * q ** (l + 1)
    qk = mp.one
    for k in range(l):
        den = 1 - a * q * qk
        if abs(den) <= guard:
            raise PoleError(f"little q-Jacobi pole: a q^{k + 1} = 1")
        term *= (1 - qml * qk) * (1 - abq * qk) * q
        term /= den * (1 - q * qk)
        qk *= q
        coeffs.append(term)
    return coeffs


def kplain_raw(l: int, x, t, N: int, q):
    """Plain affine q-Krawtchouk 3phi2 sum, 0 <= l <= N assumed."""
    total = mp.one
    term = mp.one
    qml = q ** (-l)
    qmn = q ** (-N)
    qk = mp.one
    for k in range(l):
        term *= (1 - qml * qk) * (1 - x * qk) * q
        term /= (1 - t * q * qk) * (1 - qmn * qk) * (1 - q * qk)
        qk *= q
        total += term
    return total


def khat_prefactor(l: int, t, N: int, q):
    """Orthonormalizing prefactor of Khat_l(.; t, N; q)."""
    # (q^N; q^-1)_l = (q^{N-l+1}; q)_l
    rad = qpoch(q ** (N - l + 1), q, l) * qpoch(t * q, q, l) / qpoch(q, q, l)
    return (-1) ** l * (t * q) ** (mpf(-l) / 2) * sqrt(rad)


def khat_raw(l: int, x, t, N: int, q):
    """Orthonormal affine q-Krawtchouk, zero outside 0 <= l <= N."""
    if l < 0 or l > N:
        return mp.zero
    return khat_prefactor(l, t, N, q) * kplain_raw(l, x, t, N, q)


def khat_xpoch_coefficients(l: int, t, N: int, q):
    """Coefficients d_k with Khat_l(X; t, N; q) = sum_k d_k (X; q)_k.

    Lets callers evaluating Khat at many arguments share the (X; q)_k
    partial products.
    """
    pref = khat_prefactor(l, t, N, q)
    out = [pref]
    term = pref
    qml = q ** (-l)
    qmn = q ** (-N)
    qk = mp.one
    for k in range(l):
        term *= (1 - qml * qk) * q
        term /= (1 - t * q * qk) * (1 - qmn * qk) * (1 - q * qk)
        qk *= q
        out.append(term)
    return out


def krawtchouk_recurrence_ab(l: int, t, N: int, q):
    """Three-term coefficients (a_l, b_l) of the orthonormal recurrence

    (1 - q^-x) Khat_l = a_l Khat_{l+1} + b_l Khat_l + a_{l-1} Khat_{l-1}.
    """
    a_l = -(q ** (l - N)) * sqrt(
        t * q * (1 - t * q ** (l + 1)) * (1 - q ** (l + 1)) * (1 - q ** (N - l))
    )
    b_l = (1 - q ** (l - N)) * (1 - t * q ** (l + 1)) - t * q ** (l - N) * (
        1 - q**l
    )
    return a_l, b_l


def wall_raw(l: int, x, t, q):
    """Orthonormal Wall polynomial w_l(x; t; q)."""
    pref = (-1) ** l * (t * q) ** (mpf(-l) / 2) * sqrt(
        qpoch(t * q, q, l) / qpoch(q, q, l)
    )
    return pref * plqj_raw(l, x, t, mp.zero, q)


def r_raw(l: int, m: int, x, q, a):
    """r^{(nu)}_{l,m}(x; q) with a = q^nu precomputed.

    A vanishing radicand factor gives an exact 0; a negative real radicand
    raises DomainError; complex radicands take the principal root.
    """
    guard = _guard()
    d = l - m
    if d >= 0:
        rad = mp.one
        xq = x * q
        for j in range(d):
            f = 1 - xq
            if abs(f) <= guard * max(mp.one, abs(xq)):
                return mp.zero
            rad *= f
            xq *= q
        poly = plqj_raw(m, x, a, q**d, q)
    else:
        rad = mp.one
        xq = x
        for j in range(-d):
            f = 1 - xq
            if abs(f) <= guard * max(mp.one, abs(xq)):
                return mp.zero
            rad *= f
            xq /= q
        poly = plqj_raw(l, x * q**d, a, q ** (-d), q)
    if isinstance(rad, mpf) and rad < 0:
        raise DomainError(
            f"negative radicand {rad} in r function at l={l}, m={m}, x={x}"
        )
    return sqrt(rad) * poly


def jacobi_normalized_raw(k: int, alpha, beta, x):
    """P_k^{(alpha,beta)}(x) / P_k^{(alpha,beta)}(1) by three-term recurrence."""
    if k == 0:
        return mp.one * x**0
    prev = mp.one
    cur = (alpha + beta + 2) * x / 2 + (alpha - beta) / 2
    for n in range(2, k + 1):
        c1 = 2 * n * (n + alpha + beta) * (2 * n + alpha + beta - 2)
        c2 = (2 * n + alpha + beta - 1) * (
            (2 * n + alpha + beta) * (2 * n + alpha + beta - 2) * x
            + alpha * alpha
            - beta * beta
        )
        c3 = 2 * (n + alpha - 1) * (n + beta - 1) * (2 * n + alpha + beta)
        cur, prev = (c2 * cur - c3 * prev) / c1, cur
    at_one = mp.one
    for i in range(1, k + 1):
        at_one *= (alpha + i) / i
    return cur / at_one


def disk_pair_raw(l: int, m: int, nu, z, w):
    """Disk polynomial with independent conjugate slot: the polynomial in
    (z, w) that gives R^{(nu)}_{l,m}(z) at w = conj(z)."""
    arg = 2 * z * w - 1
    if l >= m:
        return z ** (l - m) * jacobi_normalized_raw(m, nu, mpf(l - m), arg)
    return w ** (m - l) * jacobi_normalized_raw(l, nu, mpf(m - l), arg)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def little_q_jacobi(params: QJacobiParams, x, ctx: EvaluationContext):
    """p_l(x; a, b; q): degree-l polynomial in x with p_l(0) = 1."""
    with ctx.workdps():
        return plqj_raw(
            params.l, to_scalar(x), to_real(params.a), to_real(params.b), ctx.q
        )


def affine_q_krawtchouk(params: KrawtchoukParams, x, ctx: EvaluationContext):
    """K_l(x; t, N; q); defined only for 0 <= l <= N."""
    if params.l < 0 or params.l > params.N:
        raise DomainError(
            f"plain affine q-Krawtchouk needs 0 <= l <= N, got l={params.l}, "
            f"N={params.N}"
        )
    with ctx.workdps():
        return kplain_raw(params.l, to_scalar(x), to_real(params.t), params.N, ctx.q)


def affine_q_krawtchouk_orthonormal(
    params: KrawtchoukParams, x, ctx: EvaluationContext
):
    """Khat_l(x; t, N; q), equal to 0 when l < 0 or l > N.

    Requires 0 < t q < 1 so the orthonormalizing radicand is positive.
    """
    with ctx.workdps():
        t = to_real(params.t)
        if not (0 < t * ctx.q < 1):
            raise DomainError(f"orthonormal variant needs 0 < t q < 1, got t={t}")
        return khat_raw(params.l, to_scalar(x), t, params.N, ctx.q)


def wall(l: int, x, t, ctx: EvaluationContext):
    """Orthonormal Wall polynomial w_l(x; t; q) (b = 0 little q-Jacobi)."""
    if l < 0:
        raise DomainError("degree l must be nonnegative")
    with ctx.workdps():
        t = to_real(t)
        if not (0 < t * ctx.q < 1):
            raise DomainError(f"Wall polynomials need 0 < t q < 1, got t={t}")
        return wall_raw(int(l), to_scalar(x), t, ctx.q)


def al_salam_carlitz_V(n: int, l: int, t, ctx: EvaluationContext):
    """V_n^{(t)}(q^-l; q) through its 2phi0 representation.

    Defined so that w_l(q^n; t; q) = (-t)^{-n} q^{n(n-1)/2} t^{l/2} q^{l^2/2}
    (tq, q; q)_l^{-1/2} V_n^{(t)}(q^-l; q).
    """
    if n < 0 or l < 0:
        raise DomainError("n and l must be nonnegative")
    with ctx.workdps():
        t = to_real(t)
        q = ctx.q
        if not (0 < t * q < 1):
            raise DomainError(f"need 0 < t q < 1, got t={t}")
        # 2phi0(q^-l, q^-n; -; q, q^n / t) with GR factor exponent 1+0-2 = -1
        total = mp.one
        term = mp.one
        qml = q ** (-l)
        qmn = q ** (-n)
        z = q**n / t
        qk = mp.one
        for k in range(min(n, l)):
            term *= (1 - qml * qk) * (1 - qmn * qk) * z / (1 - q * qk)
            term /= -qk
            qk *= q
            total += term
        return (-t) ** n * q ** (-mpf(n) * (n - 1) / 2) * total


def r_function(idx: DiskIndex, x, ctx: EvaluationContext):
    """r^{(nu)}_{l,m}(x; q), the phase-stripped q-disk function.

    Satisfies r^{(nu)}_{l,m}(x q^{m-l}; q) = r^{(nu)}_{m,l}(x; q) and reduces
    to p_l(x; q^nu, 1; q) at l = m.
    """
    with ctx.workdps():
        nu = to_real(idx.nu)
        if not nu > -1:
            raise DomainError(f"nu must exceed -1, got {nu}")
        return r_raw(idx.l, idx.m, to_scalar(x), ctx.q, ctx.q**nu)


def jacobi_normalized(k: int, alpha, beta, x, ctx: EvaluationContext | None = None):
    """Jacobi polynomial normalized to value 1 at x = 1."""
    if k < 0:
        raise DomainError("degree must be nonnegative")
    dps = ctx.precision_digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        alpha = to_real(alpha)
        beta = to_real(beta)
        if not (alpha > -1 and beta > -1):
            raise DomainError("Jacobi parameters must exceed -1")
        return jacobi_normalized_raw(int(k), alpha, beta, to_scalar(x))


def disk_polynomial(idx: DiskIndex, z, ctx: EvaluationContext | None = None):
    """Classical disk polynomial R^{(nu)}_{l,m}(z), normalized to 1 at z = 1."""
    dps = ctx.precision_digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        nu = to_real(idx.nu)
        if not nu > -1:
            raise DomainError(f"nu must exceed -1, got {nu}")
        z = to_scalar(z)
        w = z.conjugate() if isinstance(z, mpc) else z
        val = disk_pair_raw(idx.l, idx.m, nu, z, w)
        if isinstance(val, mpc) and val.imag == 0:
            return val.real
        return val


def disk_polynomial_pair(idx: DiskIndex, z, w, ctx: EvaluationContext | None = None):
    """Two-slot disk polynomial: the unique polynomial in (z, w) restricting
    to R^{(nu)}_{l,m} on w = conj(z).  Used by the q -> 1 limit studies where
    the conjugate slot is continued independently."""
    dps = ctx.precision_digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        nu = to_real(idx.nu)
        if not nu > -1:
            raise DomainError(f"nu must exceed -1, got {nu}")
        return disk_pair_raw(idx.l, idx.m, nu, to_scalar(z), to_scalar(w))
