"""Two-phase transmission: mixing, interference creation, retransmission,
cancellation and decoding.

Phase 1 sends, for R rounds, the same mixed vector x_j = V_j [s_j; u_j]
from each transmitter.  Phase 2 retransmits the aggregated interference
X x_k in per-transmitter TDMA slots; the retransmission uses only phase-1
channel knowledge, which the delayed-CSIT audit checks by redrawing the
phase-2 coefficients.

When the parameter point is infeasible (T1 <= 0) all mixing columns face
artificial noise and the structural pipeline runs unchanged with an
all-noise payload.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentBasis, evaluate_w, evaluate_x, selection_map
from .channel import ChannelBlock, _stream, complex_gaussian
from .linalgx import RankPolicy, RankReport, rank_report
from .params import SchemeParams

__all__ = [
    "MixingMatrices",
    "Payload",
    "TransmissionRecord",
    "DecodabilityCertificate",
    "SingularSystemError",
    "draw_mixing",
    "draw_payload",
    "run_phase1",
    "run_phase2",
    "run_block",
    "cancel_and_decode",
    "bk_matrix",
    "certify_bk_full_rank",
    "BkCertification",
]


@dataclass(frozen=True)
class MixingMatrices:
    """Per-transmitter T x T Gaussian mixing matrices, known to all
    terminals.  The first max(T1, 0) columns face information symbols, the
    rest face artificial noise."""

    params: SchemeParams
    seed: int
    v: np.ndarray  # (K, T, T)

    def mixing(self, j: int) -> np.ndarray:
        return self.v[j - 1]

    def signal_columns(self, j: int) -> np.ndarray:
        return self.v[j - 1][:, : self.params.signal_count]

    def noise_columns(self, j: int) -> np.ndarray:
        return self.v[j - 1][:, self.params.signal_count:]


def draw_mixing(params: SchemeParams, seed: int) -> MixingMatrices:
    K, T = params.K, params.T
    v = np.empty((K, T, T), dtype=np.complex128)
    for j in range(1, K + 1):
        v[j - 1] = complex_gaussian(_stream(seed, f"mix:{j}"), (T, T))
    return MixingMatrices(params=params, seed=seed, v=v)


@dataclass(frozen=True)
class Payload:
    """Information symbols and artificial noises, unit variance scaled by
    sqrt(P) (noises carry average power P, like the information symbols)."""

    s: np.ndarray  # (K, signal_count)
    u: np.ndarray  # (K, noise_count)

    def stacked(self, j: int) -> np.ndarray:
        return np.concatenate([self.s[j - 1], self.u[j - 1]])


def draw_payload(params: SchemeParams, seed: int, power: float = 1.0) -> Payload:
    K = params.K
    scale = np.sqrt(power)
    s = np.empty((K, params.signal_count), dtype=np.complex128)
    u = np.empty((K, params.noise_count), dtype=np.complex128)
    for j in range(1, K + 1):
        s[j - 1] = scale * complex_gaussian(
            _stream(seed, f"payload:s:{j}"), params.signal_count)
        u[j - 1] = scale * complex_gaussian(
            _stream(seed, f"payload:u:{j}"), params.noise_count)
    return Payload(s=s, u=u)


def zero_payload(params: SchemeParams) -> Payload:
    return Payload(s=np.zeros((params.K, params.signal_count), complex),
                   u=np.zeros((params.K, params.noise_count), complex))


def _standard_phase2_builder(basis: AlignmentBasis):
    def build(block: ChannelBlock, x: np.ndarray) -> np.ndarray:
        x_mat = evaluate_x(basis, block)  # phase-1 coefficients only
        return np.stack([x_mat @ x[k] for k in range(block.params.K)])

    return build


@dataclass
class Phase1Record:
    """Partial record after the R mixing-and-transmission rounds."""

    params: SchemeParams
    mix: MixingMatrices
    payload: Payload
    noiseless: bool
    noise_seed: int
    x: np.ndarray        # (K, T)
    y: np.ndarray        # (R, K, T)
    y_tilde: np.ndarray  # (R, K, n^N)


@dataclass
class TransmissionRecord:
    """Completed two-phase record: phase-1 fields plus retransmissions."""

    params: SchemeParams
    mix: MixingMatrices
    payload: Payload
    noiseless: bool
    noise_seed: int
    x: np.ndarray          # (K, T)
    y: np.ndarray          # (R, K, T)
    y_tilde: np.ndarray    # (R, K, n^N)
    z: np.ndarray          # (K, (n+1)^N) phase-2 transmit
    y2: np.ndarray         # (K, K, (n+1)^N) receiver k, slot of transmitter j
    phase2_builder: object

    def slot_count(self) -> int:
        R, T = self.params.R, self.params.T
        return R * T + self.params.K * self.params.phase2_extension


def run_phase1(block: ChannelBlock, mix: MixingMatrices, payload: Payload,
               basis: AlignmentBasis, noiseless: bool = True,
               noise_seed: int = 0) -> Phase1Record:
    """Mix payloads, transmit over R rounds, post-process with W^H."""
    p = block.params
    K, R, T = p.K, p.R, p.T
    x = np.stack([mix.mixing(j) @ payload.stacked(j) for j in range(1, K + 1)])
    y = np.zeros((R, K, T), dtype=np.complex128)
    for r in range(1, R + 1):
        for k in range(1, K + 1):
            acc = np.zeros(T, dtype=np.complex128)
            for j in range(1, K + 1):
                acc += block.phase1_diag(r, k, j) * x[j - 1]
            if not noiseless:
                acc += np.sqrt(block.noise_var) * complex_gaussian(
                    _stream(noise_seed, f"noise:p1:{r}:{k}"), T)
            y[r - 1, k - 1] = acc
    w = evaluate_w(basis, block)
    y_tilde = np.einsum("tp,rkt->rkp", np.conj(w), y)
    return Phase1Record(params=p, mix=mix, payload=payload,
                        noiseless=noiseless, noise_seed=noise_seed,
                        x=x, y=y, y_tilde=y_tilde)


def run_phase2(record: Phase1Record, block: ChannelBlock,
               basis: AlignmentBasis) -> TransmissionRecord:
    """Retransmit X x_k per transmitter; record per-receiver observations."""
    p = block.params
    K = p.K
    builder = _standard_phase2_builder(basis)
    z = builder(block, record.x)
    ext = p.phase2_extension
    y2 = np.zeros((K, K, ext), dtype=np.complex128)
    for k in range(1, K + 1):
        for j in range(1, K + 1):
            obs = block.phase2_diag(k, j) * z[j - 1]
            if not record.noiseless:
                obs = obs + np.sqrt(block.noise_var) * complex_gaussian(
                    _stream(record.noise_seed, f"noise:p2:{k}:{j}"), ext)
            y2[k - 1, j - 1] = obs
    return TransmissionRecord(params=p, mix=record.mix, payload=record.payload,
                       noiseless=record.noiseless,
                       noise_seed=record.noise_seed, x=record.x, y=record.y,
                       y_tilde=record.y_tilde, z=z, y2=y2,
                       phase2_builder=builder)


def run_block(block: ChannelBlock, mix: MixingMatrices, payload: Payload,
              basis: AlignmentBasis, noiseless: bool = True,
              noise_seed: int = 0) -> TransmissionRecord:
    return run_phase2(
        run_phase1(block, mix, payload, basis, noiseless, noise_seed),
        block, basis)


@dataclass(frozen=True)
class DecodabilityCertificate:
    """Per-receiver rank evidence for the stacked decoding system."""

    bk_reports: tuple[RankReport, ...]
    bkv_reports: tuple[RankReport, ...]
    residuals: tuple[float, ...]

    @property
    def passed(self) -> bool:
        T = self.bk_reports[0].shape[1]
        return all(r.rank == T for r in self.bk_reports)

    @property
    def conditions(self) -> tuple[float, ...]:
        return tuple(r.cond for r in self.bk_reports)


class SingularSystemError(RuntimeError):
    def __init__(self, receiver: int, rank: int, needed: int):
        super().__init__(
            f"receiver {receiver}: stacked system rank {rank} < {needed}")
        self.receiver = receiver


def bk_matrix(block: ChannelBlock, basis: AlignmentBasis, k: int,
              w: np.ndarray | None = None,
              x: np.ndarray | None = None) -> np.ndarray:
    """Receiver k's T x T stacked equation matrix [X; W^H H_kk^1; ...]."""
    if w is None:
        w = evaluate_w(basis, block)
    if x is None:
        x = evaluate_x(basis, block)
    wh = w.conj().T
    rows = [x]
    for r in range(1, block.params.R + 1):
        rows.append(wh * block.phase1_diag(r, k, k)[None, :])
    return np.vstack(rows)


def cancel_and_decode(record: TransmissionRecord, block: ChannelBlock,
                      basis: AlignmentBasis,
                      policy: RankPolicy | None = None
                      ) -> tuple[Payload, DecodabilityCertificate]:
    """Remove cross interference, stack the desired equations, solve.

    Each receiver k recovers X x_j for every j from its phase-2 slot by
    inverting the diagonal phase-2 channel, subtracts the selected rows
    from its post-processed phase-1 signal, then solves the square system
    (B_k V_k) [s_k; u_k] = rhs.  Noiseless mode uses an exact solve; noisy
    mode solves the same stacked system in the least-squares sense.
    """
    p = block.params
    policy = policy or RankPolicy()
    K, R, T = p.K, p.R, p.T
    w = evaluate_w(basis, block)
    x_mat = evaluate_x(basis, block)
    maps = {link: selection_map(basis, link) for link in basis.links}

    s_hat = np.zeros_like(record.payload.s)
    u_hat = np.zeros_like(record.payload.u)
    bk_reports, bkv_reports, residuals = [], [], []
    for k in range(1, K + 1):
        recovered = {j: record.y2[k - 1, j - 1] / block.phase2_diag(k, j)
                     for j in range(1, K + 1)}
        pieces = [recovered[k]]
        for r in range(1, R + 1):
            cleaned = record.y_tilde[r - 1, k - 1].copy()
            for j in range(1, K + 1):
                if j != k:
                    cleaned -= recovered[j][maps[(r, k, j)]]
            pieces.append(cleaned)
        rhs = np.concatenate(pieces)

        bk = bk_matrix(block, basis, k, w=w, x=x_mat)
        system = bk @ record.mix.mixing(k)
        bk_reports.append(rank_report(bk, policy))
        bkv_rep = rank_report(system, policy)
        bkv_reports.append(bkv_rep)
        if bkv_rep.rank < T:
            raise SingularSystemError(k, bkv_rep.rank, T)
        if record.noiseless:
            sol = np.linalg.solve(system, rhs)
        else:
            sol, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        resid = np.linalg.norm(system @ sol - rhs)
        scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
        residuals.append(float(resid / scale))
        s_hat[k - 1] = sol[: p.signal_count]
        u_hat[k - 1] = sol[p.signal_count:]

    cert = DecodabilityCertificate(bk_reports=tuple(bk_reports),
                                   bkv_reports=tuple(bkv_reports),
                                   residuals=tuple(residuals))
    return Payload(s=s_hat, u=u_hat), cert


@dataclass(frozen=True)
class BkCertification:
    """Monte-Carlo full-rank statistics for the stacked equation matrices."""

    trials: int
    full_rank_fraction: float
    min_singular_values: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return self.full_rank_fraction == 1.0


def certify_bk_full_rank(params: SchemeParams, basis: AlignmentBasis,
                         trials: int, base_seed: int = 0,
                         policy: RankPolicy | None = None,
                         element_cap: int | None = None) -> BkCertification:
    from .channel import generate_block

    policy = policy or RankPolicy()
    ok = 0
    smins: list[float] = []
    for t in range(trials):
        block = generate_block(params, base_seed + t,
                               element_cap=element_cap)
        w = evaluate_w(basis, block)
        x_mat = evaluate_x(basis, block)
        all_full = True
        for k in range(1, params.K + 1):
            rep = rank_report(bk_matrix(block, basis, k, w=w, x=x_mat),
                              policy)
            smins.append(rep.smin_retained if rep.rank else 0.0)
            if rep.rank != params.T:
                all_full = False
        ok += all_full
    frac = ok / trials if trials else 1.0
    return BkCertification(trials=trials, full_rank_fraction=frac,
                           min_singular_values=tuple(smins))
