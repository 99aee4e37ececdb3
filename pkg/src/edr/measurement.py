"""Projective bases, joint POVMs and the symmetry operations acting on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (
    PSD_TOL,
    OperatorError,
    as_density,
    as_matrix,
    eigenvalues,
    hermiticity_defect,
    operator_norm,
    projector,
)

BASIS_TOL = 1e-10
COMPLETENESS_TOL = 1e-9
UNITARY_TOL = 1e-10
NEGATIVE_PROB_TOL = 1e-12


class PovmError(ValueError):
    """A candidate POVM violates positivity or completeness."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProjectiveBasis:
    """Orthonormal basis; ``vectors[a]`` is the ``a``-th basis vector."""

    vectors: np.ndarray

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1]:
            raise OperatorError(f"basis must be N vectors of length N, got {vecs.shape}")
        as_matrix(vecs)
        gram = vecs.conj() @ vecs.T
        defect = float(np.max(np.abs(gram - np.eye(len(vecs)))))
        if defect > BASIS_TOL:
            raise OperatorError(f"basis vectors are not orthonormal (defect {defect:.3g})")
        object.__setattr__(self, "vectors", _frozen(vecs))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def projectors(self) -> np.ndarray:
        """Array of shape ``(N, N, N)`` holding ``|a><a|``."""
        v = self.vectors
        return np.einsum("ai,aj->aij", v, v.conj())

    @classmethod
    def computational(cls, n: int) -> "ProjectiveBasis":
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def from_columns(cls, unitary) -> "ProjectiveBasis":
        return cls(np.asarray(unitary, dtype=complex).T)

    def permuted(self, perm: Sequence[int]) -> "ProjectiveBasis":
        return ProjectiveBasis(self.vectors[list(perm)])


@dataclass(frozen=True)
class BasisPair:
    unbarred: ProjectiveBasis
    barred: ProjectiveBasis

    def __post_init__(self):
        if self.unbarred.dim != self.barred.dim:
            raise OperatorError("bases in a pair must share their dimension")

    @property
    def dim(self) -> int:
        return self.unbarred.dim

    def overlaps(self) -> np.ndarray:
        """Matrix of inner products ``<a|b̄>``."""
        return self.unbarred.vectors.conj() @ self.barred.vectors.T


@dataclass(frozen=True)
class Violation:
    kind: str  # "hermiticity" | "positivity" | "completeness" | "shape"
    index: tuple[int, int] | None
    deficit: float
    message: str


def povm_violations(elements, tol: float = PSD_TOL) -> list[Violation]:
    """All positivity, hermiticity and completeness failures of a candidate grid.

    Indices in the messages are 1-based, matching the serialized format.
    """
    f = np.asarray(elements, dtype=complex)
    if f.ndim != 4 or f.shape[0] != f.shape[1] or f.shape[2] != f.shape[3]:
        return [Violation("shape", None, float("nan"), f"expected an N x N grid of matrices, got shape {f.shape}")]
    if f.shape[0] != f.shape[2]:
        return [Violation("shape", None, float("nan"),
                          f"grid has {f.shape[0]}x{f.shape[0]} outcomes for dimension {f.shape[2]}")]
    out = []
    n = f.shape[0]
    for a in range(n):
        for b in range(n):
            el = f[a, b]
            herm = hermiticity_defect(el)
            if herm > tol:
                out.append(Violation("hermiticity", (a + 1, b + 1), herm,
                                     f"F{a + 1}{b + 1} is not Hermitian (defect {herm:.3g})"))
                continue
            lam = float(eigenvalues(0.5 * (el + el.conj().T))[0])
            if lam < -tol:
                out.append(Violation("positivity", (a + 1, b + 1), -lam,
                                     f"F{a + 1}{b + 1} min eigenvalue {lam:.6g}"))
    total = f.sum(axis=(0, 1))
    total = 0.5 * (total + total.conj().T)
    gap = operator_norm(total - np.eye(n))
    if gap > max(tol, COMPLETENESS_TOL):
        out.append(Violation("completeness", None, gap, f"elements sum to identity only within {gap:.6g}"))
    return out


@dataclass(frozen=True)
class JointPovm:
    """``elements[a, b]`` is the effect for first output ``a`` and second output ``b``."""

    elements: np.ndarray

    def __post_init__(self):
        bad = povm_violations(self.elements)
        if bad:
            raise PovmError(bad)
        f = np.asarray(self.elements, dtype=complex)
        f = 0.5 * (f + np.conj(np.swapaxes(f, -1, -2)))
        object.__setattr__(self, "elements", _frozen(f))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True)
class MarginalPovm:
    elements: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.elements, dtype=complex)
        if m.ndim != 3 or m.shape[0] != m.shape[1] or m.shape[1] != m.shape[2]:
            raise OperatorError(f"marginal must have shape (N, N, N), got {m.shape}")
        for a, el in enumerate(m):
            if hermiticity_defect(el) > PSD_TOL or eigenvalues(0.5 * (el + el.conj().T))[0] < -PSD_TOL:
                raise OperatorError(f"marginal element {a + 1} is not positive semidefinite")
        gap = operator_norm(m.sum(axis=0) - np.eye(m.shape[0]))
        if gap > COMPLETENESS_TOL:
            raise OperatorError(f"marginal is incomplete (defect {gap:.3g})")
        object.__setattr__(self, "elements", _frozen(m))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]


def validate_joint_povm(elements, tol: float = PSD_TOL) -> JointPovm:
    """Build a :class:`JointPovm`, raising :class:`PovmError` with every violation found."""
    bad = povm_violations(elements, tol)
    if bad:
        raise PovmError(bad)
    return JointPovm(elements)


def marginals(povm: JointPovm) -> tuple[MarginalPovm, MarginalPovm]:
    """First-output marginal ``M_a = sum_b F_ab`` and second ``M̄_b = sum_a F_ab``."""
    f = povm.elements
    return MarginalPovm(f.sum(axis=1)), MarginalPovm(f.sum(axis=0))


def mix(f1: JointPovm, f2: JointPovm, alpha: float) -> JointPovm:
    """Convex combination ``alpha * f1 + (1 - alpha) * f2``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"mixing weight {alpha} outside [0, 1]")
    if f1.dim != f2.dim:
        raise OperatorError("cannot mix POVMs of different dimension")
    if alpha == 1.0:
        return f1
    if alpha == 0.0:
        return f2
    return JointPovm(alpha * f1.elements + (1.0 - alpha) * f2.elements)


@dataclass(frozen=True)
class Symmetry:
    """A unitary ``U`` or, with ``antiunitary=True``, the antiunitary ``U K``.

    ``K`` is entrywise complex conjugation in the computational basis.
    """

    matrix: np.ndarray
    antiunitary: bool = False

    def __post_init__(self):
        u = as_matrix(self.matrix)
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(len(u)))))
        if defect > UNITARY_TOL:
            raise OperatorError(f"symmetry matrix is not unitary (defect {defect:.3g})")
        object.__setattr__(self, "matrix", _frozen(u))

    @classmethod
    def conjugation(cls, n: int) -> "Symmetry":
        return cls(np.eye(n), antiunitary=True)

    def pull_back(self, x: np.ndarray) -> np.ndarray:
        """``S^† X S`` for operators (or stacks of operators) ``x``."""
        u = self.matrix
        y = u.conj().T @ x @ u
        return y.conj() if self.antiunitary else y

    def push_forward(self, x: np.ndarray) -> np.ndarray:
        """``S X S^†``; inverse of :meth:`pull_back`."""
        u = self.matrix
        y = x.conj() if self.antiunitary else x
        return u @ y @ u.conj().T


def conjugate(
    povm: JointPovm,
    symmetry: Symmetry | np.ndarray,
    row_perm: Sequence[int] | None = None,
    col_perm: Sequence[int] | None = None,
    transpose: bool = False,
) -> JointPovm:
    """Transform a joint POVM by a symmetry plus outcome relabeling.

    ``F'_{ab} = S^† G_{ab} S`` with ``G_{ab} = F_{row_perm[a], col_perm[b]}``.
    With ``transpose=True`` the two outputs also trade places, ``G_{ab}`` being
    replaced by ``G_{ba}``; this is the relabeling that exchanges the roles of the
    two observables.
    """
    if not isinstance(symmetry, Symmetry):
        symmetry = Symmetry(symmetry)
    n = povm.dim
    rows = np.arange(n) if row_perm is None else np.asarray(row_perm)
    cols = np.arange(n) if col_perm is None else np.asarray(col_perm)
    for p in (rows, cols):
        if sorted(p.tolist()) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {p.tolist()}")
    g = povm.elements[rows][:, cols]
    if transpose:
        g = np.swapaxes(g, 0, 1)
    return JointPovm(symmetry.pull_back(g))


def probability_table(povm: JointPovm, rho) -> np.ndarray:
    """Outcome distribution ``P(a, b) = tr(F_ab rho)``."""
    rho = as_density(rho)
    if rho.shape[0] != povm.dim:
        raise OperatorError("state and POVM dimensions differ")
    table = np.einsum("abij,ji->ab", povm.elements, rho).real
    if table.min() < -NEGATIVE_PROB_TOL:
        raise OperatorError(f"negative probability {table.min():.3g}")
    return np.clip(table, 0.0, None)


def pure_basis_state(basis: ProjectiveBasis, a: int) -> np.ndarray:
    return projector(basis.vectors[a])
