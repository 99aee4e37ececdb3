"""Fourier pairs, mutual unbiasedness and Hadamard-matrix equivalence.

Labels ``a = 1..N`` enter the Fourier phase ``exp(2πi ab/N)`` one-based, so the
internal index ``i`` stands for label ``i + 1`` (label ``N`` acts as ``0 mod N``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .measurement import BasisPair, JointPovm, ProjectiveBasis
from .operators import MAX_DIM, MIN_DIM, OperatorError

HADAMARD_TOL = 1e-9
EQUIVALENCE_TOL = 1e-8
MAX_SEARCH_DIM = 6


def fourier_matrix(n: int) -> np.ndarray:
    """``exp(2πi ab/N)`` for one-based labels ``a, b``."""
    labels = np.arange(1, n + 1)
    return np.exp(2j * np.pi * np.outer(labels, labels) / n)


def fourier_basis(n: int) -> ProjectiveBasis:
    """Barred basis with ``<a|b̄> = exp(2πi ab/N)/sqrt(N)`` relative to the computational basis."""
    if not MIN_DIM <= n <= MAX_DIM:
        raise ValueError(f"dimension {n} outside [{MIN_DIM}, {MAX_DIM}]")
    # vectors[b] has components <a|b̄>, i.e. column b of the Fourier matrix
    return ProjectiveBasis(fourier_matrix(n).T / math.sqrt(n))


def fourier_pair(n: int) -> BasisPair:
    return BasisPair(ProjectiveBasis.computational(n), fourier_basis(n))


def negate_label(i: int, n: int) -> int:
    """Internal index of the label ``-(i+1) mod N``."""
    return (-(i + 1)) % n - 1 if (-(i + 1)) % n else n - 1


def is_mub(pair: BasisPair, tol: float = 1e-9) -> bool:
    n = pair.dim
    return bool(np.all(np.abs(np.abs(pair.overlaps()) ** 2 - 1.0 / n) <= tol))


def hadamard_of(pair: BasisPair) -> np.ndarray:
    """``H_ab = sqrt(N) <a|b̄>``; a complex Hadamard matrix when the pair is unbiased."""
    return math.sqrt(pair.dim) * pair.overlaps()


def check_hadamard(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    if np.max(np.abs(np.abs(h) - 1.0)) > HADAMARD_TOL:
        raise OperatorError("Hadamard candidate has entries of non-unit modulus")
    if np.max(np.abs(h @ h.conj().T - n * np.eye(n))) > HADAMARD_TOL:
        raise OperatorError("Hadamard candidate rows are not orthogonal")
    return h


def dephase(h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalize first row and column to ones.

    Returns ``(d_row, d_col, h')`` with ``h' = diag(d_row) h diag(d_col)``. Works
    on stacks ``(..., N, N)``.
    """
    d_col = 1.0 / h[..., 0, :]
    scaled = h * d_col[..., None, :]
    d_row = 1.0 / scaled[..., :, 0]
    return d_row, d_col, scaled * d_row[..., :, None]


@dataclass(frozen=True)
class FourierEquivalence:
    """``diag(d1) T1 H T2 diag(d2)`` equals the Fourier matrix.

    ``perm1``/``perm2`` are 0-based: ``(T1 H T2)[a, b] = H[perm1[a], perm2[b]]``.
    """

    d1: np.ndarray
    d2: np.ndarray
    perm1: tuple[int, ...]
    perm2: tuple[int, ...]

    def apply(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=complex)
        return self.d1[:, None] * h[np.ix_(self.perm1, self.perm2)] * self.d2[None, :]

    def to_json(self) -> dict:
        return {
            "D1_phases": np.angle(self.d1).tolist(),
            "D2_phases": np.angle(self.d2).tolist(),
            "T1": [p + 1 for p in self.perm1],
            "T2": [p + 1 for p in self.perm2],
        }

    @classmethod
    def identity(cls, n: int) -> "FourierEquivalence":
        return cls(np.ones(n, dtype=complex), np.ones(n, dtype=complex), tuple(range(n)), tuple(range(n)))


def fourier_equivalence(h, tol: float = EQUIVALENCE_TOL) -> FourierEquivalence | None:
    """Exhaustively search row/column permutations bringing ``h`` to Fourier form.

    For each permutation pair the candidate is dephased and compared entrywise
    with the dephased Fourier matrix; dephased forms agree exactly when the
    matrices are related by diagonal unitaries. The first match in
    lexicographic ``(perm1, perm2)`` order is returned, ``None`` if none exists.
    """
    h = check_hadamard(h)
    n = h.shape[0]
    if n > MAX_SEARCH_DIM:
        raise ValueError(f"exhaustive search limited to N <= {MAX_SEARCH_DIM}")
    f = fourier_matrix(n)
    rf, cf, f_deph = dephase(f)
    col_perms = np.array(list(permutations(range(n))))
    for p1 in permutations(range(n)):
        rows = h[list(p1)]
        stack = rows[:, col_perms].transpose(1, 0, 2)
        rd, cd, deph = dephase(stack)
        err = np.max(np.abs(deph - f_deph), axis=(1, 2))
        hits = np.flatnonzero(err <= tol)
        if hits.size:
            k = int(hits[0])
            # diag(rd) X diag(cd) = diag(rf) F diag(cf)  =>  F = diag(rd/rf) X diag(cd/cf)
            return FourierEquivalence(rd[k] / rf, cd[k] / cf, tuple(p1), tuple(int(x) for x in col_perms[k]))
    return None


def check_equivalence(h, eq: FourierEquivalence, tol: float = EQUIVALENCE_TOL) -> bool:
    return bool(np.max(np.abs(eq.apply(h) - fourier_matrix(len(eq.d1)))) <= tol)


def hadamard_family_4(a: float) -> np.ndarray:
    """One-parameter family of 4x4 complex Hadamard matrices.

    ``a = 0`` is (permutation-equivalent to) the Fourier matrix; other points in
    ``(0, π)`` are not.
    """
    e = np.exp(1j * a)
    return np.array([
        [1, 1, 1, 1],
        [1, 1j * e, -1, -1j * e],
        [1, -1, 1, -1],
        [1, -1j * e, -1, 1j * e],
    ], dtype=complex)


def scramble(h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random row/column permutations and phases applied to ``h``."""
    n = h.shape[0]
    out = h[np.ix_(rng.permutation(n), rng.permutation(n))]
    return np.exp(2j * np.pi * rng.random(n))[:, None] * out * np.exp(2j * np.pi * rng.random(n))[None, :]


def pair_from_hadamard(h: np.ndarray) -> BasisPair:
    """Computational basis and the barred basis with ``<a|b̄> = H_ab / sqrt(N)``."""
    h = check_hadamard(h)
    n = h.shape[0]
    return BasisPair(ProjectiveBasis.computational(n), ProjectiveBasis(h.T / math.sqrt(n)))


def _fourier_frame(pair: BasisPair, eq: FourierEquivalence) -> tuple[np.ndarray, np.ndarray]:
    """Rephased, relabeled vectors ``u'_a, w'_b`` with ``<u'_a|w'_b> = F_ab / sqrt(N)``."""
    u = np.conj(eq.d1)[:, None] * pair.unbarred.vectors[list(eq.perm1)]
    w = eq.d2[:, None] * pair.barred.vectors[list(eq.perm2)]
    return u, w


def swap_construct(povm: JointPovm, pair: BasisPair, equivalence: FourierEquivalence | None = None) -> JointPovm:
    """Build a POVM whose two errors are those of ``povm`` exchanged.

    With ``U|a> = |ā>`` for a Fourier pair, ``F'_ab = U^† F_{-b,a} U``. Pairs that
    are only equivalent to a Fourier pair go through ``equivalence``: the basis
    vectors are rephased and relabeled into Fourier form, the construction is
    applied with labels in that frame and the outcomes are mapped back.
    """
    n = pair.dim
    if povm.dim != n:
        raise OperatorError("POVM and pair dimensions differ")
    if equivalence is None:
        if not np.allclose(hadamard_of(pair), fourier_matrix(n), atol=EQUIVALENCE_TOL):
            raise OperatorError("pair is not a Fourier pair and no equivalence was supplied")
        equivalence = FourierEquivalence.identity(n)
    elif not check_equivalence(hadamard_of(pair), equivalence):
        raise OperatorError("supplied equivalence does not map the pair to Fourier form")
    u, w = _fourier_frame(pair, equivalence)
    unitary = w.T @ u.conj()  # sum_a |w'_a><u'_a|
    p1, p2 = list(equivalence.perm1), list(equivalence.perm2)
    neg = [negate_label(i, n) for i in range(n)]
    # POVM in frame labels: G_ab = F_{p1[a], p2[b]}
    g = povm.elements[np.ix_(p1, p2)]
    # G'_ab = U^† G_{-b, a} U
    g_new = np.swapaxes(g[neg], 0, 1)
    g_new = unitary.conj().T @ g_new @ unitary
    out = np.empty_like(g_new)
    out[np.ix_(p1, p2)] = g_new
    return JointPovm(out)


def fourier_shift_unitary(n: int) -> np.ndarray:
    """``U`` with ``U|a> = |ā>`` for the computational/Fourier pair."""
    return fourier_basis(n).vectors.T
