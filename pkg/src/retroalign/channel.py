"""Seeded channel realizations for one transmission block.

Every coefficient stream is drawn from its own counter-based Philox
generator keyed by (seed, phase, round, receiver, transmitter), so any
stream can be regenerated in isolation -- the delayed-CSIT audit relies on
redrawing the phase-2 coefficients without touching phase 1.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .params import SchemeParams, SecrecyModel, derive_params

__all__ = [
    "ChannelBlock",
    "CsitLedger",
    "MemoryCapError",
    "default_element_cap",
    "generate_block",
    "with_fresh_phase2",
    "audit_delayed_csit",
    "dump_block",
    "load_block",
]

ELEMENT_CAP_ENV = "RETROALIGN_ELEMENT_CAP"
DEFAULT_ELEMENT_CAP = 2**26  # complex scalars per block


def default_element_cap() -> int:
    return int(os.environ.get(ELEMENT_CAP_ENV, DEFAULT_ELEMENT_CAP))


class MemoryCapError(MemoryError):
    """A requested allocation exceeds the configured element cap."""

    def __init__(self, what: str, required: int, cap: int):
        super().__init__(
            f"{what} needs {required} complex scalars, exceeding the "
            f"element cap of {cap}; raise the cap explicitly to proceed")
        self.what = what
        self.required = required
        self.cap = cap


def check_element_cap(what: str, required: int, cap: int | None = None) -> None:
    cap = default_element_cap() if cap is None else cap
    if required > cap:
        raise MemoryCapError(what, required, cap)


def _stream(seed: int, tag: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype="<u8")
    return np.random.Generator(np.random.Philox(key=key))


def complex_gaussian(gen: np.random.Generator, size) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian draws.

    Exact zeros are redrawn; downstream processing divides by phase-2
    coefficients and the model assumes |h| > 0 almost surely.
    """
    out = (gen.standard_normal(size) + 1j * gen.standard_normal(size))
    out /= np.sqrt(2.0)
    flat = out.reshape(-1)
    for _ in range(64):
        zero = flat == 0
        if not zero.any():
            break
        k = int(zero.sum())
        flat[zero] = (gen.standard_normal(k) + 1j * gen.standard_normal(k)) / np.sqrt(2.0)
    return out


@dataclass(frozen=True)
class CsitLedger:
    """Which channel coefficients each transmitter may consult per phase.

    Phase-1 transmit symbols are formed with no CSI at all; phase-2 symbols
    may use every phase-1 coefficient (learned one slot late) and nothing
    from phase 2.
    """

    phase1_visible: tuple[str, ...] = ()
    phase2_visible: tuple[str, ...] = ()

    @staticmethod
    def for_params(params: SchemeParams) -> "CsitLedger":
        p1 = tuple(
            f"p1:{r}:{k}:{j}"
            for r in range(1, params.R + 1)
            for k in range(1, params.K + 1)
            for j in range(1, params.K + 1)
        )
        return CsitLedger(phase1_visible=(), phase2_visible=p1)

    def consistent(self) -> bool:
        if self.phase1_visible:
            return False
        return all(t.startswith("p1:") for t in self.phase2_visible)


@dataclass(frozen=True)
class ChannelBlock:
    """All channel coefficients and metadata for one block.

    phase1[r, k, j, t]    round-(r+1) coefficient from transmitter j+1 to
                          receiver k+1 at extension slot t (diagonal entry).
    phase2[k, j, t]       phase-2 diagonal from transmitter j+1 to
                          receiver k+1.
    eve_phase1[r, j, t]   phase-1 eavesdropper coefficients.
    eve_phase2[j, t]      phase-2 eavesdropper diagonals.
    """

    params: SchemeParams
    seed: int
    power: float
    noise_var: float
    phase1: np.ndarray
    phase2: np.ndarray
    eve_phase1: np.ndarray
    eve_phase2: np.ndarray
    csit: CsitLedger = field(compare=False)

    def phase1_diag(self, r: int, k: int, j: int) -> np.ndarray:
        """Length-T diagonal for round r (1-based), receiver k, transmitter j."""
        return self.phase1[r - 1, k - 1, j - 1]

    def phase2_diag(self, k: int, j: int) -> np.ndarray:
        return self.phase2[k - 1, j - 1]


def _block_element_counts(params: SchemeParams) -> dict[str, int]:
    K, R, T = params.K, params.R, params.T
    ext = params.phase2_extension
    return {
        "phase-1 coefficients per receiver (K*T*R)": K * T * R,
        "phase-2 coefficients per receiver (K*(n+1)^N)": K * ext,
        "total block storage": R * K * K * T + K * K * ext + R * K * T + K * ext,
    }


def generate_block(params: SchemeParams, seed: int, power: float = 1.0,
                   noise_var: float = 1.0,
                   element_cap: int | None = None) -> ChannelBlock:
    """Deterministic channel realization for (params, seed).

    Raises MemoryCapError before allocating anything when the block would
    exceed the element cap.
    """
    if power <= 0:
        raise ValueError("power must be positive")
    for what, count in _block_element_counts(params).items():
        check_element_cap(what, count, element_cap)

    K, R, T = params.K, params.R, params.T
    ext = params.phase2_extension
    phase1 = np.empty((R, K, K, T), dtype=np.complex128)
    phase2 = np.empty((K, K, ext), dtype=np.complex128)
    eve1 = np.empty((R, K, T), dtype=np.complex128)
    eve2 = np.empty((K, ext), dtype=np.complex128)
    for r in range(1, R + 1):
        for k in range(1, K + 1):
            for j in range(1, K + 1):
                phase1[r - 1, k - 1, j - 1] = complex_gaussian(
                    _stream(seed, f"p1:{r}:{k}:{j}"), T)
    for k in range(1, K + 1):
        for j in range(1, K + 1):
            phase2[k - 1, j - 1] = complex_gaussian(
                _stream(seed, f"p2:{k}:{j}"), ext)
    for r in range(1, R + 1):
        for j in range(1, K + 1):
            eve1[r - 1, j - 1] = complex_gaussian(
                _stream(seed, f"evp1:{r}:{j}"), T)
    for j in range(1, K + 1):
        eve2[j - 1] = complex_gaussian(_stream(seed, f"evp2:{j}"), ext)

    return ChannelBlock(params=params, seed=seed, power=float(power),
                        noise_var=float(noise_var), phase1=phase1,
                        phase2=phase2, eve_phase1=eve1, eve_phase2=eve2,
                        csit=CsitLedger.for_params(params))


def with_fresh_phase2(block: ChannelBlock, salt: int = 1) -> ChannelBlock:
    """Copy of the block with all phase-2 coefficients redrawn.

    Phase-1 arrays are shared.  Used by the delayed-CSIT audit: anything a
    transmitter legitimately computed must be unchanged on this block.
    """
    params = block.params
    K, ext = params.K, params.phase2_extension
    phase2 = np.empty_like(block.phase2)
    eve2 = np.empty_like(block.eve_phase2)
    for k in range(1, K + 1):
        for j in range(1, K + 1):
            phase2[k - 1, j - 1] = complex_gaussian(
                _stream(block.seed, f"p2~{salt}:{k}:{j}"), ext)
    for j in range(1, K + 1):
        eve2[j - 1] = complex_gaussian(
            _stream(block.seed, f"evp2~{salt}:{j}"), ext)
    return ChannelBlock(params=params, seed=block.seed, power=block.power,
                        noise_var=block.noise_var, phase1=block.phase1,
                        phase2=phase2, eve_phase1=block.eve_phase1,
                        eve_phase2=eve2, csit=block.csit)


def audit_delayed_csit(record, block: ChannelBlock) -> bool:
    """True iff the record's phase-2 transmit signals are reproduced exactly
    after every phase-2 coefficient is replaced by a fresh draw.

    A transmit construction that sneaks in phase-2 CSI changes under the
    redraw and fails; the honest construction is a pure function of phase-1
    coefficients and the transmitter's own symbols.
    """
    fresh = with_fresh_phase2(block)
    rebuilt = record.phase2_builder(fresh, record.x)
    return all(np.array_equal(rebuilt[k], record.z[k])
               for k in range(block.params.K))


_MAGIC = b"RIAB"
_VERSION = 1


def dump_block(block: ChannelBlock, path) -> None:
    """Binary dump, fixed little-endian layout.

    Header: magic, version(u32), K, R, n (u64 each), model code (u8),
    seed (u64), power (f64), noise_var (f64).  Then complex128 arrays in
    order: phase1 [r, k, j] lexicographic, phase2 [k, j], eve_phase1 [r, j],
    eve_phase2 [j]; each array is its natural C-order little-endian bytes.
    """
    p = block.params
    model_code = {"ic-cm": 0, "ic-ee": 1, "ic-cm-ee": 2}[p.model.value]
    header = _MAGIC + struct.pack(
        "<IQQQBQdd", _VERSION, p.K, p.R, p.n, model_code,
        block.seed & 0xFFFFFFFFFFFFFFFF, block.power, block.noise_var)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (block.phase1, block.phase2, block.eve_phase1,
                    block.eve_phase2):
            fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def load_block(path) -> ChannelBlock:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a channel-block dump")
        version, K, R, n, model_code, seed, power, noise_var = struct.unpack(
            "<IQQQBQdd", fh.read(struct.calcsize("<IQQQBQdd")))
        if version != _VERSION:
            raise ValueError(f"unsupported dump version {version}")
        model = {0: SecrecyModel.IC_CM, 1: SecrecyModel.IC_EE,
                 2: SecrecyModel.IC_CM_EE}[model_code]
        params = derive_params(int(K), int(R), int(n), model)
        T, ext = params.T, params.phase2_extension

        def read(shape):
            count = int(np.prod(shape))
            raw = fh.read(16 * count)
            return np.frombuffer(raw, dtype="<c16").reshape(shape).astype(
                np.complex128)

        phase1 = read((params.R, params.K, params.K, T))
        phase2 = read((params.K, params.K, ext))
        eve1 = read((params.R, params.K, T))
        eve2 = read((params.K, ext))
    return ChannelBlock(params=params, seed=int(seed), power=power,
                        noise_var=noise_var, phase1=phase1, phase2=phase2,
                        eve_phase1=eve1, eve_phase2=eve2,
                        csit=CsitLedger.for_params(params))
