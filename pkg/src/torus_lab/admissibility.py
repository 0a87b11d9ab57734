"""Exponent algebra for space-time estimates.

Exponents are stored exactly whenever possible: integers, fractions and
rational strings such as ``"8/3"`` become :class:`fractions.Fraction`, the
infinite exponent is the symbol :data:`INF` (``math.inf``) whose reciprocal is
the exact zero, and plain floats are kept as floats and compared with an
absolute tolerance of ``1e-9``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral
from typing import Union

import numpy as np

from .errors import ParameterDomainError

__all__ = [
    "INF",
    "FLOAT_TOL",
    "AdmissibleTriple",
    "parse_exponent",
    "reciprocal",
    "conjugate_exponent",
    "classify_triple",
    "strichartz_endpoint_q",
    "sharp_orthonormal_q",
    "nonlinear_triple",
    "region_tag",
]

INF = math.inf
FLOAT_TOL = 1e-9

Exponent = Union[Fraction, float]
_INF_NAMES = {"inf", "+inf", "infinity", "∞", "oo"}


def parse_exponent(x) -> Exponent:
    """Normalize an exponent to a :class:`Fraction`, a float, or :data:`INF`."""
    if isinstance(x, bool):
        raise ParameterDomainError(f"not an exponent: {x!r}")
    if isinstance(x, str):
        s = x.strip().lower()
        if s in _INF_NAMES:
            return INF
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterDomainError(f"not an exponent: {x!r}") from exc
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Integral):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            raise ParameterDomainError("exponent is NaN")
        return INF if math.isinf(x) and x > 0 else x
    raise ParameterDomainError(f"not an exponent: {x!r}")


def _is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


def reciprocal(x) -> Exponent:
    """``1/x`` with ``1/INF = Fraction(0)``; exact for fractions."""
    x = parse_exponent(x)
    if _is_inf(x):
        return Fraction(0)
    if x == 0:
        raise ParameterDomainError("zero exponent has no reciprocal")
    return 1 / x


def conjugate_exponent(x) -> Exponent:
    """Hölder conjugate ``x' = x / (x - 1)``, with ``1' = INF`` and ``INF' = 1``."""
    x = parse_exponent(x)
    if _is_inf(x):
        return Fraction(1)
    if x == 1:
        return INF
    return x / (x - 1)


def _from_reciprocal(v) -> Exponent:
    if v == 0:
        return INF
    return 1 / v


def as_float(x) -> float:
    """Float value of a parsed exponent (``INF`` maps to ``math.inf``)."""
    x = parse_exponent(x)
    return INF if _is_inf(x) else float(x)


class _Cmp:
    """Three-way comparisons, exact for fractions and tolerant for floats."""

    def __init__(self, exact: bool):
        self.exact = exact

    def sign(self, v) -> int:
        if self.exact:
            return (v > 0) - (v < 0)
        v = float(v)
        if abs(v) <= FLOAT_TOL:
            return 0
        return 1 if v > 0 else -1

    def eq(self, a, b):
        return self.sign(a - b) == 0

    def ge(self, a, b):
        return self.sign(a - b) >= 0

    def gt(self, a, b):
        return self.sign(a - b) > 0


@dataclass(frozen=True)
class AdmissibleTriple:
    """An exponent triple ``(q, r, r_tilde)`` with derived quantities and flags.

    Attributes
    ----------
    q, r, r_tilde : Fraction, float or INF
        Time exponent, outer (x) and inner (y) space exponents.
    d, k : int
        Dimension and split index.
    gamma : Fraction, float or INF
        Harmonic interpolation ``1/gamma = (1/r)(1-k/d) + (1/r_tilde)(k/d)``.
    alpha_prime : Fraction, float or INF
        ``2 gamma / (gamma + 1)``, the Schatten exponent for orthonormal data.
    beta : Fraction or float
        ``(d-k)(1/2 - 1/r) + k(1/2 - 1/r_tilde)``.
    exact : bool
        True when all comparisons were done in rational arithmetic.
    satisfies_strichartz : bool
        ``2 <= r_tilde <= r < INF``, ``q > 2`` and ``2/q >= beta``.
    satisfies_sharp : bool
        ``1/q + ((d-k)/r + k/r_tilde)/2 = d/2``, equivalently ``2/q + d/gamma = d``.
    in_A : bool
        ``2 < q <= INF``, ``2 <= r_tilde <= r < INF`` and ``2/q = beta``.
    gamma_subcritical : bool
        ``gamma < (d+1)/(d-1)`` (always true in dimension one for finite gamma).
    region : str or None
        Diagonal region tag when ``r == r_tilde`` (see :func:`region_tag`).
    valid : bool
        False when some exponent is below 1; every flag is then False.
    """

    q: Exponent
    r: Exponent
    r_tilde: Exponent
    d: int
    k: int
    gamma: Exponent
    alpha_prime: Exponent
    beta: Exponent
    exact: bool
    satisfies_strichartz: bool
    satisfies_sharp: bool
    in_A: bool
    gamma_subcritical: bool
    region: str | None
    valid: bool = True

    @property
    def inv_q(self):
        return reciprocal(self.q)

    @property
    def inv_r(self):
        return reciprocal(self.r)

    @property
    def inv_r_tilde(self):
        return reciprocal(self.r_tilde)

    @property
    def alpha(self) -> Exponent:
        """Dual Schatten exponent ``2 gamma'``."""
        return 2 * conjugate_exponent(self.gamma)

    def floats(self) -> tuple:
        """``(q, r, r_tilde)`` as floats."""
        return as_float(self.q), as_float(self.r), as_float(self.r_tilde)

    def label(self) -> str:
        return "(" + ", ".join(_fmt(v) for v in (self.q, self.r, self.r_tilde)) + ")"


def _fmt(v) -> str:
    if _is_inf(v):
        return "inf"
    return str(v)


def region_tag(inv_r, inv_q, d: int, exact: bool = True) -> str:
    """Classify a diagonal point ``(1/r, 1/q)`` of the square ``[0, 1/2]^2``.

    Tags are ``"outside"``, ``"excluded"`` (the top edge from
    ``((d-2)/(2d), 1/2)`` to ``(1/2, 1/2)``), ``"energy-corner"`` (``(1/2, 0)``),
    ``"sharp-line"`` (``2/q + d/r = d/2``), ``"theorem"`` (``2/q + d/r > d/2``)
    and ``"dinh"`` (``2/q + d/r < d/2``).
    """
    c = _Cmp(exact)
    half = Fraction(1, 2) if exact else 0.5
    if c.sign(inv_r) < 0 or c.gt(inv_r, half) or c.sign(inv_q) < 0 or c.gt(inv_q, half):
        return "outside"
    b_corner = Fraction(d - 2, 2 * d) if exact else (d - 2) / (2 * d)
    if c.eq(inv_q, half) and c.ge(inv_r, b_corner):
        return "excluded"
    if c.eq(inv_r, half) and c.sign(inv_q) == 0:
        return "energy-corner"
    s = c.sign(2 * inv_q + d * inv_r - (Fraction(d, 2) if exact else d / 2))
    return {0: "sharp-line", 1: "theorem", -1: "dinh"}[s]


def classify_triple(q, r, r_tilde, d: int, k: int) -> AdmissibleTriple:
    """Classify ``(q, r, r_tilde)`` for the split ``(d - k, k)``.

    Never raises for out-of-range numeric exponents; those simply yield a
    triple whose flags are all False.
    """
    if isinstance(d, bool) or isinstance(k, bool) or int(d) != d or int(k) != k:
        raise ParameterDomainError("d and k must be integers")
    d, k = int(d), int(k)
    if d < 1 or not 1 <= k <= d:
        raise ParameterDomainError(f"invalid split d={d}, k={k}")
    q, r, rt = (parse_exponent(v) for v in (q, r, r_tilde))
    exact = not any(isinstance(v, float) and not _is_inf(v) for v in (q, r, rt))
    c = _Cmp(exact)
    one = Fraction(1) if exact else 1.0

    def fin(v):
        return v if exact or _is_inf(v) else float(v)

    valid = all(_is_inf(v) or c.ge(v, one) for v in (q, r, rt))
    if not valid:
        nan = float("nan")
        return AdmissibleTriple(q, r, rt, d, k, nan, nan, nan, exact,
                                False, False, False, False, "outside", False)

    iq, ir, irt = (fin(reciprocal(v)) for v in (q, r, rt))
    frac = (lambda a, b: Fraction(a, b)) if exact else (lambda a, b: a / b)
    half = frac(1, 2)
    inv_gamma = ir * (1 - frac(k, d)) + irt * frac(k, d)
    gamma = _from_reciprocal(inv_gamma) if exact else (INF if inv_gamma == 0 else 1.0 / inv_gamma)
    alpha_prime = 2 if _is_inf(gamma) else 2 * gamma / (gamma + 1)
    if exact and not _is_inf(gamma):
        alpha_prime = Fraction(alpha_prime)
    beta = (d - k) * (half - ir) + k * (half - irt)

    space_ok = c.ge(irt, ir) and c.gt(ir, 0 * ir) and c.ge(half, irt)
    q_ok = c.gt(half, iq)
    satisfies_strichartz = bool(space_ok and q_ok and c.ge(2 * iq, beta))
    sharp = c.eq(iq + ((d - k) * ir + k * irt) / 2, frac(d, 2))
    in_A = bool(space_ok and q_ok and c.eq(2 * iq, beta))
    if d == 1:
        gamma_sub = not _is_inf(gamma)
    else:
        gamma_sub = (not _is_inf(gamma)) and c.gt(frac(d + 1, d - 1), gamma)
    region = region_tag(ir, iq, d, exact) if c.eq(r, rt) or (_is_inf(r) and _is_inf(rt)) else None
    return AdmissibleTriple(q, r, rt, d, k, gamma, alpha_prime, beta, exact,
                            satisfies_strichartz, bool(sharp), in_A, bool(gamma_sub), region)


def strichartz_endpoint_q(r, r_tilde, d: int, k: int) -> Exponent:
    """Smallest admissible time exponent for ``(r, r_tilde)``: ``q = 2 / beta``."""
    t = classify_triple(INF, r, r_tilde, d, k)
    if t.beta == 0:
        return INF
    if t.beta < 0:
        raise ParameterDomainError("space exponents below 2 have no time endpoint")
    return 2 / t.beta


def sharp_orthonormal_q(r, r_tilde, d: int, k: int) -> Exponent:
    """Time exponent solving ``2/q + d/gamma = d``."""
    t = classify_triple(INF, r, r_tilde, d, k)
    inv_q = Fraction(d, 2) - (d - k) * reciprocal(t.r) / 2 - k * reciprocal(t.r_tilde) / 2 \
        if t.exact else d / 2 - (d - k) * float(reciprocal(t.r)) / 2 - k * float(reciprocal(t.r_tilde)) / 2
    if inv_q <= 0:
        raise ParameterDomainError("no finite sharp time exponent for these space exponents")
    return 1 / inv_q


def nonlinear_triple(d: int, p, s=Fraction(1, 2), eps0=None, k: int = 2) -> AdmissibleTriple:
    """Triple used as the contraction metric for the power nonlinearity.

    With ``1/r = 1/(p+1)``, ``1/r_tilde = 1/2 - eps0/(p+1)`` and
    ``1/q = (d-2)/4 - (d-2)/(2(p+1)) + eps0/(p+1)``, where ``eps0`` defaults to
    the midpoint of ``((1-s)(p-1)/2, min((d-2)/4 (1 + 4/(d-2) - p), (p-1)/2))``.
    Requires ``d >= 3``.
    """
    if d < 3:
        raise ParameterDomainError("this construction needs d >= 3")
    p = parse_exponent(p)
    s = parse_exponent(s)
    if _is_inf(p) or _is_inf(s) or not p > 1:
        raise ParameterDomainError("need a finite p > 1")
    lo = (1 - s) * (p - 1) / 2
    hi = min(Fraction(d - 2, 4) * (1 + Fraction(4, d - 2) - p), (p - 1) / 2)
    if eps0 is None:
        if not lo < hi:
            raise ParameterDomainError(f"empty range for eps0: ({lo}, {hi}); increase s or lower p")
        eps0 = (lo + hi) / 2
    else:
        eps0 = parse_exponent(eps0)
        if not lo < eps0 < hi:
            raise ParameterDomainError(f"eps0={eps0} outside ({lo}, {hi})")
    ir = 1 / (p + 1)
    irt = Fraction(1, 2) - eps0 / (p + 1)
    iq = Fraction(d - 2, 4) - Fraction(d - 2, 2) / (p + 1) + eps0 / (p + 1)
    return classify_triple(_from_reciprocal(iq), _from_reciprocal(ir), _from_reciprocal(irt), d, k)
