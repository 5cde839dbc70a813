"""Alignment-matrix construction from exponent multi-indices.

The cross-link set S enumerates the triples (round, receiver, transmitter)
with receiver != transmitter, sorted lexicographically; that order is THE
canonical coordinate order for every exponent vector, selection map and
file dump produced here.

Conventions: columns of W are monomials in the conjugated phase-1
coefficients; rows of X are the matching monomials in the plain
coefficients.  With that pairing, row p of W^H H_kj^r literally equals the
row of X selected by incrementing exponent vector p at coordinate
(r, k, j), which is what verify_alignment checks numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelBlock, check_element_cap

__all__ = [
    "cross_links",
    "AlignmentBasis",
    "build_basis",
    "basis_for",
    "evaluate_w",
    "evaluate_x",
    "selection_map",
    "verify_alignment",
    "AlignmentReport",
]


def cross_links(K: int, R: int) -> list[tuple[int, int, int]]:
    """Ordered cross-link triples (r, m, i), m != i, lexicographic.

    Size is R*K*(K-1); the diagonal pairs (r, k, k) are excluded.
    """
    return [(r, m, i)
            for r in range(1, R + 1)
            for m in range(1, K + 1)
            for i in range(1, K + 1)
            if m != i]


def _enumerate_exponents(radix: int, width: int) -> np.ndarray:
    """All vectors in {0..radix-1}^width as rows, lexicographic order."""
    count = radix**width
    out = np.empty((count, width), dtype=np.int64)
    positions = np.arange(count, dtype=np.int64)
    for c in range(width):
        out[:, width - 1 - c] = (positions // radix**c) % radix
    return out


@dataclass(frozen=True)
class AlignmentBasis:
    """Exponent enumerations behind W (coordinates 0..n-1) and X (0..n).

    Lexicographic order makes the X position of an exponent vector its
    base-(n+1) value, so lookups are pure arithmetic.
    """

    n: int
    links: tuple[tuple[int, int, int], ...]
    w_exponents: np.ndarray
    x_exponents: np.ndarray

    @property
    def N(self) -> int:
        return len(self.links)

    @property
    def w_size(self) -> int:
        return self.w_exponents.shape[0]

    @property
    def x_size(self) -> int:
        return self.x_exponents.shape[0]

    def lookup(self, exponents: np.ndarray) -> np.ndarray:
        """X row position(s) of exponent vector(s): base-(n+1) encoding."""
        e = np.asarray(exponents, dtype=np.int64)
        if np.any(e < 0) or np.any(e > self.n):
            raise ValueError("exponent outside 0..n")
        weights = (self.n + 1) ** np.arange(self.N - 1, -1, -1, dtype=np.int64)
        return e @ weights

    def link_index(self, link: tuple[int, int, int]) -> int:
        try:
            return self.links.index(tuple(link))
        except ValueError:
            raise ValueError(f"{link} is not a cross link") from None


def build_basis(n: int, links: list[tuple[int, int, int]],
                element_cap: int | None = None) -> AlignmentBasis:
    N = len(links)
    check_element_cap("alignment exponent enumeration ((n+1)^N)",
                      (n + 1) ** N, element_cap)
    return AlignmentBasis(
        n=n,
        links=tuple(links),
        w_exponents=_enumerate_exponents(n, N),
        x_exponents=_enumerate_exponents(n + 1, N),
    )


def basis_for(params, element_cap: int | None = None) -> AlignmentBasis:
    return build_basis(params.n, cross_links(params.K, params.R), element_cap)


def _link_coefficients(basis: AlignmentBasis, block: ChannelBlock) -> np.ndarray:
    """(N, T) array of phase-1 coefficients in cross-link order."""
    rows = [block.phase1_diag(r, m, i) for (r, m, i) in basis.links]
    return np.stack(rows, axis=0)


def _monomial_matrix(exponents: np.ndarray, coeffs: np.ndarray,
                     max_exp: int, chunk_rows: int = 4096) -> np.ndarray:
    """rows x T matrix with entry (q, t) = prod_c coeffs[c, t]^exponents[q, c]."""
    count, N = exponents.shape
    T = coeffs.shape[1]
    # power tables: (N, max_exp+1, T)
    tables = coeffs[:, None, :] ** np.arange(max_exp + 1)[None, :, None]
    out = np.empty((count, T), dtype=np.complex128)
    for lo in range(0, count, chunk_rows):
        hi = min(lo + chunk_rows, count)
        acc = np.ones((hi - lo, T), dtype=np.complex128)
        for c in range(N):
            acc *= tables[c, exponents[lo:hi, c], :]
        out[lo:hi] = acc
    return out


def evaluate_w(basis: AlignmentBasis, block: ChannelBlock,
               element_cap: int | None = None) -> np.ndarray:
    """Post-processing matrix W, shape T x n^N, monomials in conj(h)."""
    T = block.params.T
    check_element_cap("W evaluation (T*n^N)", T * basis.w_size, element_cap)
    coeffs = np.conj(_link_coefficients(basis, block))
    return _monomial_matrix(basis.w_exponents, coeffs,
                            max(basis.n - 1, 0)).T.copy()


def evaluate_x(basis: AlignmentBasis, block: ChannelBlock,
               element_cap: int | None = None) -> np.ndarray:
    """Interference-span matrix X, shape (n+1)^N x T, monomials in h."""
    T = block.params.T
    check_element_cap("X evaluation ((n+1)^N*T)", T * basis.x_size,
                      element_cap)
    coeffs = _link_coefficients(basis, block)
    return _monomial_matrix(basis.x_exponents, coeffs, basis.n)


def selection_map(basis: AlignmentBasis,
                  link: tuple[int, int, int]) -> np.ndarray:
    """Row-index array realizing the selection/permutation of one link.

    Entry p is the X row holding exponent vector p of W incremented at the
    link's coordinate; injective because the increment is (exponents are
    below n in W, at most n in X).
    """
    c = basis.link_index(link)
    bumped = basis.w_exponents.copy()
    bumped[:, c] += 1
    return basis.lookup(bumped)


@dataclass(frozen=True)
class AlignmentReport:
    """Per-link worst relative row mismatch of W^H H against selected X rows."""

    mismatch: dict[tuple[int, int, int], float]
    tolerance: float

    @property
    def max_mismatch(self) -> float:
        return max(self.mismatch.values())

    @property
    def passed(self) -> bool:
        return self.max_mismatch <= self.tolerance


def _relative_row_mismatch(lhs: np.ndarray, rhs: np.ndarray) -> float:
    diff = np.abs(lhs - rhs).max(axis=1)
    scale = np.maximum(np.abs(lhs).max(axis=1), np.abs(rhs).max(axis=1))
    scale = np.where(scale == 0.0, 1.0, scale)
    return float((diff / scale).max())


def verify_alignment(block: ChannelBlock, basis: AlignmentBasis,
                     tolerance: float = 1e-9,
                     w: np.ndarray | None = None,
                     x: np.ndarray | None = None) -> AlignmentReport:
    """Check W^H H_kj^r row-containment in X for every cross link.

    Mismatches are reported, not raised; the worst relative row deviation
    per link goes into the report.
    """
    if w is None:
        w = evaluate_w(basis, block)
    if x is None:
        x = evaluate_x(basis, block)
    wh = w.conj().T  # (n^N, T)
    mismatch = {}
    for link in basis.links:
        r, k, j = link
        lhs = wh * block.phase1_diag(r, k, j)[None, :]
        rhs = x[selection_map(basis, link)]
        mismatch[link] = _relative_row_mismatch(lhs, rhs)
    return AlignmentReport(mismatch=mismatch, tolerance=tolerance)
