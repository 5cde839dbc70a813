"""Stacked observation matrices, rank identities, and secrecy rates.

An observer's full-block observation is y = A V q + noise, where A stacks
the R phase-1 rounds (C block, diagonal channel blocks side by side) over
the K TDMA retransmission slots (D block, block-diagonal of the phase-2
diagonal times X), V is the block-diagonal of the mixing matrices and q
concatenates every transmitter's symbols and noises.

Two rate evaluations are provided:

* achievable_rate -- the scheme's closed-form lower bound: the desired
  term counts all T equation dimensions at the weakest retained signal
  eigenvalue and charges the full T2 noise budget at the strongest leaked
  eigenvalue, minus the adversary's log-ratio term.  Its slope against
  log2(P) is (T - T2)/block_length once the adversary ranks cancel, which
  is the quantity the asymptotic analysis tracks.
* mutual_information_rate -- the plain difference of log-det entropies;
  its slope reproduces the rank differences of the four stacked matrices.

The rank-preservation property (multiplying by an independent random
matrix keeps the rank, almost surely) has its own Monte-Carlo oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentBasis, evaluate_x
from .channel import ChannelBlock, check_element_cap, _stream, complex_gaussian
from .linalgx import (RankPolicy, RankReport, rank_report,
                      rank_report_from_gram)
from .params import SchemeParams, SecrecyModel
from .scheme import MixingMatrices

__all__ = [
    "EAVESDROPPER",
    "StackedMatrices",
    "RankIdentityCheck",
    "RankIdentityReport",
    "SecrecyReport",
    "logdet_entropy",
    "build_stacks",
    "verify_rank_identities",
    "stack_rank_reports",
    "noise_budget_holds",
    "rank_product_oracle",
    "achievable_rate",
    "mutual_information_rate",
    "sdof_slope",
    "secrecy_report",
    "rate_spectra",
    "adversaries_for",
]

EAVESDROPPER = "eve"


def logdet_entropy(a: np.ndarray, power: float, sigma2: float,
                   policy: RankPolicy | None = None) -> float:
    """Differential entropy (nats) of A x + n for white Gaussian x and n.

    Equals M log(pi e) + sum_i log(lambda_i P + sigma^2) over the
    eigenvalues of A A^H above the numerical-rank threshold.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    m = a.shape[0]
    rep = rank_report(a, policy or RankPolicy(), method="svd")
    lam = rep.spectrum[: rep.rank] ** 2
    return m * math.log(math.pi * math.e) + float(
        np.sum(np.log(lam * power + sigma2)))


def _phase1_row_block(coeffs: np.ndarray) -> np.ndarray:
    """One phase-1 round as a T x KT array of side-by-side diagonals."""
    K, T = coeffs.shape
    out = np.zeros((T, K * T), dtype=np.complex128)
    for j in range(K):
        out[np.arange(T), j * T + np.arange(T)] = coeffs[j]
    return out


@dataclass(frozen=True)
class StackedMatrices:
    """Observation stack of one observer plus the mixed variants used by
    the rank identities.

    a          block_length x KT observation map (C block over D block).
    av         a times the block-diagonal mixing matrix V.
    av_cond    a times V with the intended transmitter's message-facing
               columns removed (what conditioning on that message leaves);
               identical object to av when the payload is all-noise.
    f, f_noise the intended receiver's own stack times its mixing matrix,
               and the noise-facing column restriction of the same.

    Parts not requested at build time are None.
    """

    params: SchemeParams
    observer: int | str
    intended: int
    a: np.ndarray | None
    av: np.ndarray | None
    av_cond: np.ndarray | None
    f: np.ndarray | None
    f_noise: np.ndarray | None

    @property
    def c_block(self) -> np.ndarray:
        return self.a[: self.params.R * self.params.T]

    @property
    def d_block(self) -> np.ndarray:
        return self.a[self.params.R * self.params.T:]


def _observer_coeffs(block: ChannelBlock, observer: int | str):
    if observer == EAVESDROPPER:
        return block.eve_phase1, block.eve_phase2
    k = int(observer)
    return block.phase1[:, k - 1], block.phase2[k - 1]


def _apply_block_diag(a: np.ndarray, mix: MixingMatrices,
                      drop_signal_of: int | None = None) -> np.ndarray:
    """a @ blkdiag(V_1..V_K), optionally dropping one transmitter's
    message-facing columns from its block."""
    p = mix.params
    T = p.T
    cols = []
    for j in range(1, p.K + 1):
        vj = mix.mixing(j)
        if drop_signal_of == j:
            vj = vj[:, p.signal_count:]
        cols.append(a[:, (j - 1) * T: j * T] @ vj)
    return np.concatenate(cols, axis=1)


def build_stacks(block: ChannelBlock, basis: AlignmentBasis,
                 mix: MixingMatrices, observer: int | str,
                 intended: int = 1,
                 parts: tuple[str, ...] = ("a", "f"),
                 x_mat: np.ndarray | None = None,
                 element_cap: int | None = None) -> StackedMatrices:
    """Assemble an observer's stacked matrices.

    observer is a receiver index (1-based) or EAVESDROPPER.  parts selects
    which groups to materialize: "a" for the observation map and its mixed
    variants, "f" for the intended receiver's own stack.
    """
    p = block.params
    K, R, T = p.K, p.R, p.T
    ext = p.phase2_extension

    a = av = av_cond = f = f_noise = None
    if x_mat is None:
        x_mat = evaluate_x(basis, block)

    if "a" in parts:
        check_element_cap("observation stack (block_length*K*T)",
                          p.block_length * K * T, element_cap)
        phase1, phase2 = _observer_coeffs(block, observer)
        a = np.zeros((p.block_length, K * T), dtype=np.complex128)
        for r in range(R):
            a[r * T:(r + 1) * T] = _phase1_row_block(phase1[r])
        d0 = R * T
        for j in range(K):
            rows = slice(d0 + j * ext, d0 + (j + 1) * ext)
            a[rows, j * T:(j + 1) * T] = phase2[j][:, None] * x_mat
        av = _apply_block_diag(a, mix)
        if p.signal_count == 0:
            av_cond = av  # conditioning on the message removes nothing
        else:
            av_cond = _apply_block_diag(a, mix, drop_signal_of=intended)

    if "f" in parts:
        own = np.zeros((R * T + ext, T), dtype=np.complex128)
        for r in range(1, R + 1):
            rows = np.arange((r - 1) * T, r * T)
            own[rows, np.arange(T)] = block.phase1_diag(r, intended, intended)
        own[R * T:] = block.phase2_diag(intended, intended)[:, None] * x_mat
        f = own @ mix.mixing(intended)
        f_noise = f if p.signal_count == 0 else own @ mix.noise_columns(intended)

    return StackedMatrices(params=p, observer=observer, intended=intended,
                           a=a, av=av, av_cond=av_cond, f=f, f_noise=f_noise)


@dataclass(frozen=True)
class RankIdentityCheck:
    name: str
    expected: int
    report: RankReport

    @property
    def ok(self) -> bool:
        return self.report.rank == self.expected

    @property
    def margin(self) -> float:
        return self.report.margin


@dataclass(frozen=True)
class RankIdentityReport:
    checks: tuple[RankIdentityCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def min_margin(self) -> float:
        return min(c.margin for c in self.checks)

    def by_name(self, name: str) -> RankIdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def noise_budget_holds(params: SchemeParams) -> bool:
    """The exact integer inequality the noise budget T2 was chosen for."""
    ext = params.phase2_extension
    lhs_cm = params.R * params.T + (params.K - 1) * ext
    lhs_ee = params.R * params.T + params.K * ext
    if params.model is SecrecyModel.IC_EE:
        return lhs_ee <= params.K * params.T2
    if params.model is SecrecyModel.IC_CM:
        return lhs_cm <= (params.K - 1) * params.T2
    return (lhs_cm <= (params.K - 1) * params.T2
            and lhs_ee <= params.K * params.T2)


def _herk_lower(a: np.ndarray) -> np.ndarray:
    """Lower triangle of A^H A (column Gram)."""
    from scipy.linalg import blas as _blas

    return _blas.zherk(1.0, np.asfortranarray(a), trans=2, lower=1)


def _c_matrix(block: ChannelBlock, observer: int | str) -> np.ndarray:
    p = block.params
    phase1, _ = _observer_coeffs(block, observer)
    c = np.zeros((p.R * p.T, p.K * p.T), dtype=np.complex128)
    for r in range(p.R):
        c[r * p.T:(r + 1) * p.T] = _phase1_row_block(phase1[r])
    return c


def structured_gram_reports(block: ChannelBlock, basis: AlignmentBasis,
                            mix: MixingMatrices, observer: int | str,
                            intended: int = 1,
                            policy: RankPolicy | None = None,
                            x_mat: np.ndarray | None = None
                            ) -> dict[str, RankReport]:
    """Rank reports of A, A V, A V_cond and C without materializing the
    full stacks: the Gram matrices are assembled from the C block plus the
    block-diagonal retransmission blocks, which cuts the flop count by the
    tall/wide ratio of the stack."""
    policy = policy or RankPolicy()
    p = block.params
    K, T = p.K, p.T
    if p.block_length < K * T:
        raise ValueError("structured Gram path expects a tall stack")
    if x_mat is None:
        x_mat = evaluate_x(basis, block)
    _, phase2 = _observer_coeffs(block, observer)

    c = _c_matrix(block, observer)
    d_blocks = [phase2[j][:, None] * x_mat for j in range(K)]

    def assemble(c_part: np.ndarray, d_parts: list[np.ndarray],
                 widths: list[int]) -> np.ndarray:
        g = _herk_lower(c_part)
        lo = 0
        for width, d_part in zip(widths, d_parts):
            sl = slice(lo, lo + width)
            g[sl, sl] += _herk_lower(d_part)
            lo += width
        return g

    shape_a = (p.block_length, K * T)
    g_a = assemble(c, d_blocks, [T] * K)
    reports = {"a": rank_report_from_gram(g_a, shape_a, policy)}

    def mixed_parts(drop_signal_of: int | None):
        c_cols, d_cols, widths = [], [], []
        for j in range(1, K + 1):
            vj = mix.mixing(j)
            if drop_signal_of == j:
                vj = vj[:, p.signal_count:]
            c_cols.append(c[:, (j - 1) * T: j * T] @ vj)
            d_cols.append(d_blocks[j - 1] @ vj)
            widths.append(vj.shape[1])
        return np.concatenate(c_cols, axis=1), d_cols, widths

    cv, dv, widths = mixed_parts(None)
    g_av = assemble(cv, dv, widths)
    reports["av"] = rank_report_from_gram(g_av, shape_a, policy)
    if p.signal_count == 0:
        reports["av_cond"] = reports["av"]
    else:
        cvc, dvc, wc = mixed_parts(intended)
        shape_c = (p.block_length, sum(wc))
        reports["av_cond"] = rank_report_from_gram(
            assemble(cvc, dvc, wc), shape_c, policy)
    reports["c"] = rank_report(c, policy, "auto")
    return reports


def stack_rank_reports(stacks: StackedMatrices,
                       policy: RankPolicy | None = None,
                       method: str = "auto") -> dict[str, RankReport]:
    """Rank reports of the five stacked matrices, sharing work between
    aliased parts (noise restriction equal to the full stack, conditioned
    mix equal to the full mix)."""
    policy = policy or RankPolicy()
    reports: dict[str, RankReport] = {}
    if stacks.a is not None:
        reports["a"] = rank_report(stacks.a, policy, method)
        reports["av"] = rank_report(stacks.av, policy, method)
        reports["av_cond"] = (reports["av"] if stacks.av_cond is stacks.av
                              else rank_report(stacks.av_cond, policy, method))
        reports["c"] = rank_report(stacks.c_block, policy, method)
    if stacks.f is not None:
        reports["f"] = rank_report(stacks.f, policy, method)
        reports["f_noise"] = (reports["f"] if stacks.f_noise is stacks.f
                              else rank_report(stacks.f_noise, policy, method))
    return reports


def _identity_checks(params: SchemeParams,
                     reports: dict[str, RankReport]) -> RankIdentityReport:
    p = params
    checks = []
    if "f" in reports:
        rows = p.R * p.T + p.phase2_extension
        checks.append(RankIdentityCheck("rank(F)=T", p.T, reports["f"]))
        checks.append(RankIdentityCheck(
            "rank(F_noise)=min(rows,noise_count)",
            min(rows, p.noise_count), reports["f_noise"]))
    if "a" in reports:
        checks.append(RankIdentityCheck(
            "rank(A V)=rank(A)", reports["a"].rank, reports["av"]))
        checks.append(RankIdentityCheck(
            "rank(A V_cond)=rank(A)", reports["a"].rank, reports["av_cond"]))
        checks.append(RankIdentityCheck(
            "rank(C)=R*T", p.R * p.T, reports["c"]))
        checks.append(RankIdentityCheck(
            "rank(A)=min(block,KT)",
            min(p.block_length, p.K * p.T), reports["a"]))
    return RankIdentityReport(checks=tuple(checks))


def verify_rank_identities(stacks: StackedMatrices,
                           policy: RankPolicy | None = None,
                           method: str = "auto") -> RankIdentityReport:
    """Numerical ranks of the stacked matrices against exact expectations.

    Expected values account for the column counts actually present: the
    noise-facing restriction has min(T, T2) columns (all of them when
    T1 <= 0), so its rank is min(rows, noise_count) -- which equals the
    noise budget T2 exactly when the parameter point is feasible.
    """
    return _identity_checks(stacks.params,
                            stack_rank_reports(stacks, policy, method))


def rank_product_oracle(M: int, N: int, r: int, trials: int, seed: int = 0,
                        policy: RankPolicy | None = None) -> float:
    """Monte-Carlo check that right-multiplying an M x N rank-r matrix by
    an independent N x M continuous random matrix preserves the rank.

    Per trial, A is a product of M x r and r x N Gaussians (rank r almost
    surely) and B is an independent N x M Gaussian; the trial passes iff
    the numerical rank of A B equals r.  Returns the passing fraction.
    """
    if not (0 <= r <= M <= N):
        raise ValueError("need r <= M <= N")
    policy = policy or RankPolicy()
    passed = 0
    for t in range(trials):
        gen = _stream(seed, f"rank-product:{M}:{N}:{r}:{t}")
        if r > 0:
            a = (complex_gaussian(gen, (M, r))
                 @ complex_gaussian(gen, (r, N)))
        else:
            a = np.zeros((M, N), dtype=np.complex128)
        b = complex_gaussian(gen, (N, M))
        if rank_report(a @ b, policy, method="svd").rank == r:
            passed += 1
    return passed / trials if trials else 1.0


@dataclass(frozen=True)
class SpectrumSummary:
    """What the rate bound needs from one stacked matrix."""

    rank: int
    lam_max: float
    lam_min_retained: float

    @staticmethod
    def from_report(rep: RankReport) -> "SpectrumSummary":
        return SpectrumSummary(rank=rep.rank, lam_max=rep.smax**2,
                               lam_min_retained=rep.smin_retained**2)


@dataclass(frozen=True)
class RateSpectra:
    """Extremal eigenvalues feeding the closed-form rate bound."""

    own: SpectrumSummary          # F: the receiver's full stack
    own_noise: SpectrumSummary    # F restricted to noise-facing columns
    adversaries: tuple[SpectrumSummary, ...]        # A V per adversary
    adversaries_cond: tuple[SpectrumSummary, ...]   # A V_cond per adversary


def rate_spectra(receiver_reports: dict[str, RankReport],
                 adversary_reports: list[dict[str, RankReport]]) -> RateSpectra:
    return RateSpectra(
        own=SpectrumSummary.from_report(receiver_reports["f"]),
        own_noise=SpectrumSummary.from_report(receiver_reports["f_noise"]),
        adversaries=tuple(SpectrumSummary.from_report(r["av"])
                          for r in adversary_reports),
        adversaries_cond=tuple(SpectrumSummary.from_report(r["av_cond"])
                               for r in adversary_reports),
    )


def achievable_rate(spectra: RateSpectra, params: SchemeParams,
                    power: float, sigma2: float = 1.0) -> float:
    """Closed-form secure-rate lower bound in bits per channel use.

    Desired term: T equations at the weakest retained eigenvalue of the
    receiver's stack, charged the full T2 noise budget at the strongest
    leaked eigenvalue.  Adversary term: the observation rank times the
    log-ratio of its strongest unconditioned to weakest conditioned
    retained eigenvalue, maximized over adversaries.  May be negative at
    small alignment order.
    """
    if power <= 0:
        raise ValueError("power must be positive")
    p = params
    term_a = (p.T * math.log2(spectra.own.lam_min_retained * power + sigma2)
              - p.T2 * math.log2(
                  spectra.own_noise.lam_max * power + sigma2))
    term_b = 0.0
    for full, cond in zip(spectra.adversaries, spectra.adversaries_cond):
        tb = full.rank * (
            math.log2(full.lam_max * power + sigma2)
            - math.log2(cond.lam_min_retained * power + sigma2))
        term_b = max(term_b, tb)
    return (term_a - term_b) / p.block_length


def mutual_information_rate(receiver_stacks: StackedMatrices,
                            adversary_stacks: list[StackedMatrices],
                            power: float, sigma2: float = 1.0,
                            policy: RankPolicy | None = None) -> float:
    """Rate as a difference of log-det entropies, bits per channel use.

    Its slope against log2(P) equals
    [rank(F) - rank(F_noise) - (rank(A V) - rank(A V_cond))]/block_length.
    """
    policy = policy or RankPolicy()
    p = receiver_stacks.params

    def mi(full: np.ndarray, cond: np.ndarray) -> float:
        return (logdet_entropy(full, power, sigma2, policy)
                - logdet_entropy(cond, power, sigma2, policy))

    term_a = mi(receiver_stacks.f, receiver_stacks.f_noise)
    term_b = max(mi(st.av, st.av_cond) for st in adversary_stacks)
    return (term_a - term_b) / (p.block_length * math.log(2))


def sdof_slope(rate_lo: float, rate_hi: float,
               power_lo: float, power_hi: float) -> float:
    """Two-point slope of rate against log2 of the transmit power."""
    if not power_hi > power_lo > 0:
        raise ValueError("need power_hi > power_lo > 0")
    return (rate_hi - rate_lo) / (math.log2(power_hi) - math.log2(power_lo))


def adversaries_for(model: SecrecyModel, K: int, intended: int):
    """Observer list of the strongest adversary set for a model."""
    receivers = [j for j in range(1, K + 1) if j != intended]
    if model is SecrecyModel.IC_CM:
        return receivers
    if model is SecrecyModel.IC_EE:
        return [EAVESDROPPER]
    return receivers + [EAVESDROPPER]


@dataclass(frozen=True)
class SecrecyReport:
    """Ranks, rates, and the measured SDoF slope for one configuration."""

    params: SchemeParams
    intended: int
    ranks: RankIdentityReport
    powers: tuple[float, ...]
    rates: tuple[float, ...]
    mi_rates: tuple[float, ...]
    slope: float | None
    mi_slope: float | None
    precision: float

    def to_jsonable(self) -> dict:
        p = self.params
        return {
            "schema": "secrecy-report/1",
            "K": p.K, "R": p.R, "n": p.n, "model": p.model.value,
            "T": str(p.T), "T1": str(p.T1), "T2": str(p.T2),
            "block_length": str(p.block_length),
            "intended": self.intended,
            "rank_checks": [
                {"name": c.name, "expected": c.expected,
                 "rank": c.report.rank, "margin": c.margin,
                 "method": c.report.method}
                for c in self.ranks.checks
            ],
            "powers": list(self.powers),
            "rates_bits_per_slot": list(self.rates),
            "mi_rates_bits_per_slot": list(self.mi_rates),
            "slope": self.slope,
            "mi_slope": self.mi_slope,
            "precision": self.precision,
        }


def secrecy_report(block: ChannelBlock, basis: AlignmentBasis,
                   mix: MixingMatrices, intended: int = 1,
                   powers: tuple[float, ...] = (1e8, 1e12),
                   sigma2: float = 1.0,
                   policy: RankPolicy | None = None,
                   method: str = "auto",
                   with_mi_rates: bool | None = None,
                   element_cap: int | None = None) -> SecrecyReport:
    """Full secrecy analysis of one block for its parameter point.

    Entropy-difference rates are skipped by default above a size cutoff
    (they need complete spectra of the adversary stacks); pass
    with_mi_rates=True to force them.
    """
    policy = policy or RankPolicy()
    p = block.params
    if with_mi_rates is None:
        with_mi_rates = p.block_length * p.K * p.T <= 2_000_000
    x_mat = evaluate_x(basis, block, element_cap=element_cap)
    receiver = build_stacks(block, basis, mix, observer=intended,
                            intended=intended, parts=("f",), x_mat=x_mat,
                            element_cap=element_cap)
    receiver_reports = stack_rank_reports(receiver, policy, method)
    observers = adversaries_for(p.model, p.K, intended)
    if with_mi_rates:
        adversaries = [
            build_stacks(block, basis, mix, observer=obs, intended=intended,
                         parts=("a",), x_mat=x_mat, element_cap=element_cap)
            for obs in observers
        ]
        adversary_reports = [stack_rank_reports(st, policy, method)
                             for st in adversaries]
    else:
        adversary_reports = [
            structured_gram_reports(block, basis, mix, obs, intended,
                                    policy, x_mat)
            for obs in observers
        ]
    # identities are verified on the first adversary stack; adversaries are
    # exchangeable by construction
    ranks = _identity_checks(p, receiver_reports | adversary_reports[0])

    spectra = rate_spectra(receiver_reports, adversary_reports)
    rates = tuple(achievable_rate(spectra, p, pw, sigma2) for pw in powers)
    if with_mi_rates:
        mi_rates = tuple(
            mutual_information_rate(receiver, adversaries, pw, sigma2,
                                    policy)
            for pw in powers)
    else:
        mi_rates = ()

    slope = mi_slope = None
    if len(powers) >= 2:
        slope = sdof_slope(rates[0], rates[-1], powers[0], powers[-1])
        if mi_rates:
            mi_slope = sdof_slope(mi_rates[0], mi_rates[-1],
                                  powers[0], powers[-1])
    return SecrecyReport(params=p, intended=intended, ranks=ranks,
                         powers=tuple(powers), rates=rates,
                         mi_rates=mi_rates, slope=slope, mi_slope=mi_slope,
                         precision=policy.precision)
