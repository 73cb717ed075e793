"""Arbitrary-precision scalar substrate: evaluation contexts, q-Pochhammer
symbols, and terminating basic hypergeometric series.

All arithmetic runs on mpmath mpf/mpc numbers at the precision carried by an
:class:`EvaluationContext`.  Every function here is pure and deterministic:
identical inputs at identical precision give bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpc, mpf

DEFAULT_PRECISION_DIGITS = 60
DEFAULT_IDENTITY_TOLERANCE = "1e-40"

# Hard cap on termination-index detection; every series in scope terminates
# far below this.
_TERMINATION_SEARCH_LIMIT = 100_000


class QDiskError(Exception):
    """Base class for all qdisk errors."""


class DomainError(QDiskError):
    """A parameter lies outside the domain an operation is defined on."""


class PoleError(QDiskError):
    """A Pochhammer factor or series denominator vanished."""


class NonTerminatingError(QDiskError):
    """A basic hypergeometric series has no terminating numerator parameter."""


class TruncationError(QDiskError):
    """An infinite sum failed to meet its stop rule within the term budget."""


class GuardBandError(QDiskError):
    """A truncated-operator check was asked for on too small a cutoff."""


class BranchError(QDiskError):
    """A branch-sensitive map was evaluated on its cut."""


def to_real(x) -> mpf:
    """Convert ``x`` to an mpf at the current working precision.

    Floats go through ``repr`` so that e.g. 0.3 means the decimal 0.3 at full
    precision rather than the binary double.
    """
    if isinstance(x, mpf):
        return x
    if isinstance(x, float):
        return mpf(repr(x))
    if isinstance(x, (int, str)):
        return mpf(x)
    if isinstance(x, mpc):
        if x.imag == 0:
            return x.real
        raise DomainError(f"expected a real value, got {x}")
    raise DomainError(f"cannot interpret {x!r} as a real number")


def to_scalar(x):
    """Convert ``x`` to mpf or mpc at the current working precision."""
    if isinstance(x, (mpf, mpc)):
        return x
    if isinstance(x, complex):
        return mpc(to_real(x.real), to_real(x.imag))
    return to_real(x)


@dataclass(frozen=True)
class EvaluationContext:
    """Deformation parameter q together with the working-precision policy.

    ``q`` must lie strictly in (0, 1).  ``identity_tolerance`` is the maximum
    accepted relative residual when certifying an identity; it must be
    representable at the chosen precision.
    """

    q: mpf
    precision_digits: int = DEFAULT_PRECISION_DIGITS
    identity_tolerance: mpf = None

    def __post_init__(self):
        digits = int(self.precision_digits)
        if digits < 30:
            raise DomainError(f"precision_digits must be >= 30, got {digits}")
        object.__setattr__(self, "precision_digits", digits)
        with mp.workdps(digits):
            q = to_real(self.q)
            tol = self.identity_tolerance
            tol = mpf(DEFAULT_IDENTITY_TOLERANCE) if tol is None else to_real(tol)
        if not (0 < q < 1):
            raise DomainError(f"q must lie strictly in (0, 1), got {q}")
        if not tol > 0:
            raise DomainError("identity_tolerance must be positive")
        if tol < mpf(10) ** (-digits):
            raise DomainError(
                f"identity_tolerance {tol} is below rounding level at "
                f"{digits} digits"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "identity_tolerance", tol)

    def workdps(self):
        """Context manager setting mpmath working precision to this context."""
        return mp.workdps(self.precision_digits)

    def with_precision(self, digits: int) -> "EvaluationContext":
        return EvaluationContext(self.q, digits, self.identity_tolerance)

    @property
    def pole_guard(self) -> mpf:
        """Threshold under which a Pochhammer factor counts as a pole."""
        return mpf(10) ** (1 - self.precision_digits) * 10


def _pole_guard() -> mpf:
    # 10 ulps at the ambient precision
    return mpf(10) ** (1 - mp.dps) * 10


def qpoch(a, q, n: int):
    """(a; q)_n at ambient precision, integer n, negative n by reciprocity.

    No domain checks; internal fast path.  Raises PoleError when a negative-n
    evaluation hits a vanishing factor.
    """
    if n >= 0:
        r = mp.one
        qj = mp.one
        for _ in range(n):
            r *= 1 - a * qj
            qj *= q
        return r
    guard = _pole_guard()
    r = mp.one
    qj = q**n
    for _ in range(-n):
        f = 1 - a * qj
        if abs(f) <= guard:
            raise PoleError(f"(a;q)_n pole: factor 1 - {a}*q^j vanished")
        r *= f
        qj *= q
    return 1 / r


def qpoch_desc(a, q, n: int):
    """Descending product (a; q^-1)_n = prod_{j<n} (1 - a q^-j), n >= 0."""
    r = mp.one
    qj = mp.one
    for _ in range(n):
        r *= 1 - a * qj
        qj /= q
    return r


def qpoch_inf(a, q):
    """(a; q)_infinity by direct product until the tail is below rounding."""
    cutoff = mpf(10) ** (-(mp.dps + 5)) * (1 - q)
    r = mp.one
    aqj = a
    while abs(aqj) > cutoff:
        r *= 1 - aqj
        aqj *= q
    return r


def q_pochhammer(a, q, n: int, ctx: EvaluationContext | None = None):
    """q-shifted factorial (a; q)_n for integer n.

    For n >= 0 this is prod_{j=0}^{n-1} (1 - a q^j); for n < 0 the reciprocity
    convention 1 / (a q^n; q)_{-n} applies, and a vanishing factor there is a
    PoleError.  (a; q)_0 = 1 exactly.
    """
    dps = ctx.precision_digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        q = to_real(q)
        if not (0 < q < 1):
            raise DomainError(f"q must lie in (0, 1), got {q}")
        return qpoch(to_scalar(a), q, int(n))


def q_pochhammer_infinite(a, q, ctx: EvaluationContext | None = None):
    """(a; q)_infinity at working precision."""
    dps = ctx.precision_digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        q = to_real(q)
        if not (0 < q < 1):
            raise DomainError(f"q must lie in (0, 1), got {q}")
        return qpoch_inf(to_scalar(a), q)


@dataclass(frozen=True)
class PhiSeriesSpec:
    """A basic hypergeometric series r phi s in Gasper-Rahman normalization.

    The series must terminate: either some numerator parameter equals q^-n
    for a nonnegative integer n, or ``term_cap`` is given explicitly.
    """

    numerator_parameters: tuple
    denominator_parameters: tuple
    argument: object
    base: object
    term_cap: int | None = None


def _detect_termination(numer, q) -> int | None:
    """Smallest n with some numerator parameter equal to q^-n, else None."""
    guard = _pole_guard()
    best = None
    for a in numer:
        if isinstance(a, mpc) and a.imag != 0:
            continue
        av = a.real if isinstance(a, mpc) else a
        if av < 1 - guard:
            # |a| < 1 can never be q^-n
            if abs(av - 1) > guard:
                continue
        aqn = av
        for n in range(_TERMINATION_SEARCH_LIMIT):
            if abs(aqn - 1) <= guard * max(mp.one, abs(aqn)):
                best = n if best is None else min(best, n)
                break
            aqn *= q
            if abs(aqn) < guard:
                break
    return best


def phi_series(spec: PhiSeriesSpec, ctx: EvaluationContext | None = None):
    """Evaluate a terminating r phi s series.

    Sums sum_k [prod (numer; q)_k / prod (denom; q)_k] *
    ((-1)^k q^(k(k-1)/2))^(1+s-r) * z^k / (q; q)_k up to the termination
    index, following the Gasper-Rahman convention for the extra factor.
    """
    dps = ctx.precision_digits if ctx is not None else mp.dps
    with mp.workdps(dps):
        q = to_real(spec.base)
        if not (0 < q < 1):
            raise DomainError(f"series base must lie in (0, 1), got {q}")
        numer = tuple(to_scalar(a) for a in spec.numerator_parameters)
        denom = tuple(to_scalar(b) for b in spec.denominator_parameters)
        z = to_scalar(spec.argument)

        cap = spec.term_cap
        if cap is None:
            if z == 0:
                cap = 0
            else:
                cap = _detect_termination(numer, q)
            if cap is None:
                raise NonTerminatingError(
                    "no numerator parameter of the form q^-n and no term cap"
                )
        cap = int(cap)

        extra = 1 + len(denom) - len(numer)
        guard = _pole_guard()
        total = mp.one
        term = mp.one
        qk = mp.one  # q^k
        for k in range(cap):
            for a in numer:
                term *= 1 - a * qk
            for b in denom:
                f = 1 - b * qk
                if abs(f) <= guard:
                    raise PoleError(
                        f"denominator parameter {b} hit a pole at term {k + 1}"
                    )
                term /= f
            term *= z / (1 - q * qk)
            if extra:
                term *= (-qk) ** extra
            qk *= q
            if term == 0:
                break
            total += term
        return total
