"""Exact scheme-dimension and degrees-of-freedom calculus.

All quantities are computed with big-integer / rational arithmetic so that
results are reproducible bit-for-bit at any scale.  The single deliberate
exception is the continuous optimum of the round count, which is irrational
and is returned as a high-precision float (>= 50 decimal digits).

Square-root comparisons (the 0.5*(sqrt(K) - c) lower bounds) are decided by
sign analysis and integer squaring, never by floating-point square roots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

__all__ = [
    "SecrecyModel",
    "SchemeParams",
    "SdofValue",
    "SqrtBound",
    "OptimalRounds",
    "derive_params",
    "sdof_formula",
    "sdof_value",
    "optimal_rounds",
    "sdof_lower_bound",
    "baseline_dof_no_secrecy",
    "min_feasible_n",
    "asymptotic_per_user_dof",
    "admissible_rounds",
    "profile_increasing_at",
]

ROOT_DPS = 60  # decimal digits carried by the continuous round optimum


class SecrecyModel(enum.Enum):
    """Which confidentiality requirement the scheme dimensions satisfy."""

    IC_CM = "ic-cm"        # messages secret from unintended receivers
    IC_EE = "ic-ee"        # messages secret from an external eavesdropper
    IC_CM_EE = "ic-cm-ee"  # both constraints jointly

    @property
    def bound_offset(self) -> int:
        """c in the 0.5*(sqrt(K) - c)^+ lower bound."""
        return 3 if self is SecrecyModel.IC_EE else 6

    @classmethod
    def parse(cls, text: str) -> "SecrecyModel":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown secrecy model {text!r}") from None


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class SchemeParams:
    """Exact dimensions of one two-phase transmission block.

    T1 may be zero or negative; that flags an infeasible payload at this
    alignment order n, not an error (the structural scheme still runs with
    an all-noise payload).
    """

    K: int
    R: int
    n: int
    N: int
    T: int
    T1: int
    T2: int
    block_length: int
    model: SecrecyModel

    @property
    def phase2_extension(self) -> int:
        """(n+1)^N, the per-transmitter phase-2 slot count."""
        return (self.n + 1) ** self.N

    @property
    def w_width(self) -> int:
        """n^N, the post-processing dimension per round."""
        return self.n**self.N

    @property
    def feasible(self) -> bool:
        return self.T1 >= 1

    @property
    def signal_count(self) -> int:
        """Number of message-bearing mixing columns: max(T1, 0)."""
        return max(self.T1, 0)

    @property
    def noise_count(self) -> int:
        """Number of noise-facing mixing columns: T - max(T1, 0)."""
        return self.T - self.signal_count


def derive_params(K: int, R: int, n: int, model: SecrecyModel) -> SchemeParams:
    """Exact scheme dimensions for K users, R rounds, alignment order n.

    The artificial-noise budget T2 is the ceiling that saturates the
    adversary's equation count: with an external eavesdropper the K
    transmitters jointly cover R*T + K*(n+1)^N equations, otherwise the
    K-1 unintended transmitters cover R*T + (K-1)*(n+1)^N.
    """
    if K < 2:
        raise ValueError("need at least two users (K >= 2)")
    if R < 1 or n < 1:
        raise ValueError("round count R and alignment order n must be >= 1")
    model = SecrecyModel(model)
    N = R * K * (K - 1)
    ext = (n + 1) ** N
    T = R * n**N + ext
    if model is SecrecyModel.IC_EE:
        T2 = _ceil_div(R * T + K * ext, K)
    else:
        T2 = _ceil_div(R * T + (K - 1) * ext, K - 1)
    T1 = T - T2
    block = R * T + K * ext
    return SchemeParams(K=K, R=R, n=n, N=N, T=T, T1=T1, T2=T2,
                        block_length=block, model=model)


def sdof_formula(K: int, R: int, model: SecrecyModel) -> Fraction:
    """Achievable sum secure degrees of freedom, exact rational.

    Negative values are returned as-is (not clamped) so optimization code
    can see the shape of the profile.
    """
    if K < 2 or R < 1:
        raise ValueError("need K >= 2 and R >= 1")
    model = SecrecyModel(model)
    if model is SecrecyModel.IC_EE:
        return Fraction(R * (K - R - 1), R * (R + 1) + K)
    return Fraction(K * R * (K - R - 2), (K - 1) * (R * (R + 1) + K))


def asymptotic_per_user_dof(K: int, R: int, model: SecrecyModel) -> Fraction:
    """Per-user limit of rate over log(P); K times this is the sum SDoF."""
    return sdof_formula(K, R, model) / K


def admissible_rounds(K: int, model: SecrecyModel) -> range:
    """Integer R kept in play by the calculus: 1..K-3 (confidential-message
    models) or 1..K-2 (eavesdropper only), never empty."""
    model = SecrecyModel(model)
    hi = K - 2 if model is SecrecyModel.IC_EE else K - 3
    return range(1, max(hi, 1) + 1)


class SqrtBound:
    """The scaling lower bound 0.5*(sqrt(K) - c)^+, held exactly.

    The reported value clamps at zero.  Order comparisons against rationals
    are made against the unclamped expression 0.5*(sqrt(K) - c) by sign
    analysis and squaring, which agrees with the clamped value whenever the
    compared rational is positive.
    """

    __slots__ = ("K", "c")

    def __init__(self, K: int, c: int):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = K
        self.c = c

    def less_than(self, q: Fraction) -> bool:
        """Exact test of 0.5*(sqrt(K) - c) < q."""
        x = 2 * Fraction(q) + self.c  # compare sqrt(K) < x
        if x <= 0:
            return False
        return self.K * x.denominator**2 < x.numerator**2

    def exact_value(self) -> Fraction | None:
        """Exact clamped value when K is a perfect square, else None."""
        s = math.isqrt(self.K)
        if s * s != self.K:
            return None
        return Fraction(max(s - self.c, 0), 2)

    def __float__(self) -> float:
        return max((math.sqrt(self.K) - self.c) / 2.0, 0.0)

    def __repr__(self) -> str:
        return f"SqrtBound(0.5*(sqrt({self.K})-{self.c})^+)"

    def __eq__(self, other) -> bool:
        if isinstance(other, SqrtBound):
            return (self.K, self.c) == (other.K, other.c)
        exact = self.exact_value()
        return exact is not None and exact == other

    def __hash__(self):
        return hash((self.K, self.c))


def sdof_lower_bound(K: int, model: SecrecyModel) -> SqrtBound:
    """0.5*(sqrt(K) - c)^+ with c = 6 (IC-CM, IC-CM-EE) or c = 3 (IC-EE)."""
    return SqrtBound(K, SecrecyModel(model).bound_offset)


@dataclass(frozen=True)
class SdofValue:
    """An SDoF sample point with its scaling bound and feasibility flag.

    feasible is None when no alignment order n was queried (asymptotic
    statement); otherwise it is T1 >= 1 at that n.
    """

    value: Fraction
    lower_bound: SqrtBound
    feasible: bool | None


def sdof_value(K: int, R: int, model: SecrecyModel,
               n: int | None = None) -> SdofValue:
    model = SecrecyModel(model)
    feasible = None
    if n is not None:
        feasible = derive_params(K, R, n, model).feasible
    return SdofValue(value=sdof_formula(K, R, model),
                     lower_bound=sdof_lower_bound(K, model),
                     feasible=feasible)


def _cm_root_radicand(K: int) -> int:
    # positive root of R^2 (K-1) + 2 K R - K (K-2) = 0 is
    # (sqrt(D) - K) / (K - 1) with D = K^2 + K (K-1)(K-2) = K (K^2 - 2K + 2)
    return K * (K * K - 2 * K + 2)


def _floor_cm_root(K: int) -> int:
    """floor((sqrt(D) - K) / (K-1)) with exact integer arithmetic."""
    D = _cm_root_radicand(K)
    m = (math.isqrt(D) - K) // (K - 1)
    while ((m + 1) * (K - 1) + K) ** 2 <= D:
        m += 1
    while m >= 0 and (m * (K - 1) + K) ** 2 > D:
        m -= 1
    return m


@dataclass(frozen=True)
class OptimalRounds:
    """Round-count optima: continuous stationary point, its floor as the
    closed form states it (clamped to >= 1), and the exhaustive integer
    argmax of the exact profile."""

    continuous: mpmath.mpf
    paper: int
    discrete: int
    clamped: bool


def optimal_rounds(K: int, model: SecrecyModel) -> OptimalRounds:
    model = SecrecyModel(model)
    if model is SecrecyModel.IC_EE:
        if K < 2:
            raise ValueError("IC-EE round optimum needs K >= 2")
        with mpmath.workdps(ROOT_DPS):
            cont = mpmath.sqrt(K) - 1
        floor_val = math.isqrt(K) - 1
    else:
        if K < 4:
            raise ValueError("confidential-message round optimum needs K >= 4")
        with mpmath.workdps(ROOT_DPS):
            cont = (mpmath.sqrt(_cm_root_radicand(K)) - K) / (K - 1)
        floor_val = _floor_cm_root(K)

    clamped = floor_val < 1
    paper = max(floor_val, 1)

    best_r, best_v = None, None
    for R in admissible_rounds(K, model):
        v = sdof_formula(K, R, model)
        if best_v is None or v > best_v:
            best_r, best_v = R, v
    return OptimalRounds(continuous=cont, paper=paper, discrete=best_r,
                         clamped=clamped)


def profile_increasing_at(K: int, R: int, model: SecrecyModel) -> bool:
    """Exact test of whether integer R sits strictly below the continuous
    optimum (where the SDoF profile is strictly increasing)."""
    model = SecrecyModel(model)
    if model is SecrecyModel.IC_EE:
        return (R + 1) ** 2 < K  # R < sqrt(K) - 1
    return R * R * (K - 1) + 2 * K * R - K * (K - 2) < 0


def baseline_dof_no_secrecy(K: int) -> Fraction:
    """Achievable sum DoF of the secrecy-free retrospective scheme:
    K / (floor(sqrt(K)) - 1 + K / floor(sqrt(K)))."""
    s = math.isqrt(K)
    if s <= 1:
        raise ValueError("baseline needs floor(sqrt(K)) >= 2, i.e. K >= 4")
    return Fraction(K, 1) / (s - 1 + Fraction(K, s))


def min_feasible_n(K: int, R: int, model: SecrecyModel,
                   n_max: int) -> int | None:
    """Smallest alignment order n <= n_max with a positive payload (T1 >= 1).

    Scans upward exactly, so the answer does not rely on feasibility being
    monotone in n.  Returns None when no n in range is feasible.
    """
    for n in range(1, n_max + 1):
        if derive_params(K, R, n, model).T1 >= 1:
            return n
    return None
