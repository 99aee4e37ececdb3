"""Tight error trade-offs for a pair of qubit bases.

Every qubit basis pair is unitarily equivalent (after a possible relabeling) to
the canonical pair whose first projectors have Bloch vectors
``(±sin θ, 0, cos θ)`` with ``0 <= θ <= π/4``. In that frame the symmetry group
generated by ``σ_z``, ``σ_y`` and complex conjugation reduces the optimization
to a single error value per metric, and both optima are known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .measurement import BasisPair, JointPovm, ProjectiveBasis, Symmetry, conjugate
from .metrics import Metric
from .operators import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, OperatorError, random_unitary

THETA_MAX = math.pi / 4
CANONICAL_TOL = 1e-9

P_PLUS = 0.5 * (PAULI_I + PAULI_Z)
P_MINUS = 0.5 * (PAULI_I - PAULI_Z)

_SWAP = (1, 0)
_ID = (0, 1)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    # tolerate angles typed as truncated decimals
    if not -CANONICAL_TOL <= theta <= THETA_MAX + CANONICAL_TOL:
        raise ValueError(f"theta={theta} outside the canonical range [0, pi/4]")
    return min(max(theta, 0.0), THETA_MAX)


def bloch_vector(state) -> np.ndarray:
    v = np.asarray(state, dtype=complex)
    rho = np.outer(v, v.conj()) if v.ndim == 1 else v
    return np.array([np.trace(rho @ s).real for s in (PAULI_X, PAULI_Y, PAULI_Z)])


def canonical_pair(theta: float) -> BasisPair:
    """The reference pair ``P_1 = (1 + cos θ σ_z + sin θ σ_x)/2``, ``P̄_1`` mirrored in x."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    unbarred = ProjectiveBasis(np.array([[c, s], [-s, c]]))
    barred = ProjectiveBasis(np.array([[c, -s], [s, c]]))
    return BasisPair(unbarred, barred)


def pair_at_overlap(overlap_sq: float, rng: np.random.Generator | None = None) -> BasisPair:
    """A qubit pair with ``|<1|1̄>|^2 = overlap_sq``, optionally randomly rotated."""
    half = 0.5 * math.acos(min(max(2 * overlap_sq - 1, -1.0), 1.0))
    pair = canonical_pair(half)
    if rng is None:
        return pair
    u = random_unitary(2, rng)
    return BasisPair(ProjectiveBasis(pair.unbarred.vectors @ u.T), ProjectiveBasis(pair.barred.vectors @ u.T))


def _frame_unitary(ex: np.ndarray, ey: np.ndarray, ez: np.ndarray) -> np.ndarray:
    """Unitary ``V`` with ``V σ_k V^† = σ·e_k`` for a right-handed frame."""
    sx = ex[0] * PAULI_X + ex[1] * PAULI_Y + ex[2] * PAULI_Z
    sz = ez[0] * PAULI_X + ez[1] * PAULI_Y + ez[2] * PAULI_Z
    vals, vecs = np.linalg.eigh(sz)
    up = vecs[:, 1]
    down = sx @ up
    return np.column_stack([up, down])


@dataclass(frozen=True)
class QubitCanonicalForm:
    """``theta`` plus the frame change into the canonical pair.

    ``to_canonical`` is the unitary ``W`` with ``W P_{relabel[0][a]} W^† = P^can_a``
    and likewise for the barred basis with ``relabel[1]``.
    """

    theta: float
    to_canonical: np.ndarray
    relabel: tuple[tuple[int, int], tuple[int, int]]

    def pair(self) -> BasisPair:
        return canonical_pair(self.theta)

    def povm_to_canonical(self, povm: JointPovm) -> JointPovm:
        rows, cols = self.relabel
        return conjugate(povm, Symmetry(self.to_canonical.conj().T), rows, cols)

    def povm_from_canonical(self, povm: JointPovm) -> JointPovm:
        rows, cols = self.relabel
        # relabel entries are involutions, so the inverse permutation is itself
        return conjugate(povm, Symmetry(self.to_canonical), rows, cols)


def canonicalize(pair: BasisPair) -> QubitCanonicalForm:
    """Find θ and the frame/relabeling taking ``pair`` to :func:`canonical_pair`."""
    if pair.dim != 2:
        raise OperatorError("canonical form exists only for qubit pairs")
    u, w = pair.unbarred.vectors, pair.barred.vectors
    for rows, cols in ((_ID, _ID), (_ID, _SWAP), (_SWAP, _ID), (_SWAP, _SWAP)):
        n, m = bloch_vector(u[rows[0]]), bloch_vector(w[cols[0]])
        two_theta = math.acos(min(max(float(n @ m), -1.0), 1.0))
        if two_theta <= math.pi / 2 + 1e-12:
            break
    theta = min(two_theta / 2, THETA_MAX)
    ez = (n + m) / np.linalg.norm(n + m)
    diff = n - m
    if np.linalg.norm(diff) > 1e-12:
        ex = diff / np.linalg.norm(diff)
    else:
        trial = np.array([1.0, 0.0, 0.0]) if abs(ez[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        ex = trial - (trial @ ez) * ez
        ex /= np.linalg.norm(ex)
    ey = np.cross(ez, ex)
    v = _frame_unitary(ex, ey, ez)
    return QubitCanonicalForm(theta, v.conj().T, (rows, cols))


def is_canonical(pair: BasisPair, tol: float = CANONICAL_TOL) -> bool:
    if pair.dim != 2:
        return False
    p1 = pair.unbarred.projectors[0]
    q1 = pair.barred.projectors[0]
    n, m = bloch_vector(p1), bloch_vector(q1)
    if abs(n[1]) > tol or abs(m[1]) > tol:
        return False
    ref = canonical_pair(canonicalize(pair).theta)
    return bool(
        np.allclose(pair.unbarred.projectors, ref.unbarred.projectors, atol=tol)
        and np.allclose(pair.barred.projectors, ref.barred.projectors, atol=tol)
    )


def _swap_outputs(f: np.ndarray) -> np.ndarray:
    return PAULI_Z @ np.swapaxes(f, 0, 1) @ PAULI_Z


def _flip_labels(f: np.ndarray) -> np.ndarray:
    return PAULI_Y @ f[::-1, ::-1] @ PAULI_Y


def _reflect_xz(f: np.ndarray) -> np.ndarray:
    return f.conj()


def symmetry_orbit(povm: JointPovm) -> list[JointPovm]:
    """The eight images of a canonical-frame POVM under the qubit symmetry group."""
    out = []
    for z, y, c in product((False, True), repeat=3):
        f = np.array(povm.elements)
        if z:
            f = _swap_outputs(f)
        if y:
            f = _flip_labels(f)
        if c:
            f = _reflect_xz(f)
        out.append(f)
    return [JointPovm(f) for f in out]


def symmetrize(povm: JointPovm, pair: BasisPair | None = None) -> JointPovm:
    """Group-average a POVM given in the canonical frame.

    The result commutes with all three symmetries: it is invariant under
    ``σ_z``-conjugation with the outputs exchanged, under ``σ_y``-conjugation
    with both labels flipped, and it has no ``σ_y`` components. Averaging is
    convex, so neither metric's total error can increase.
    """
    if povm.dim != 2:
        raise OperatorError("symmetrization is defined for qubit POVMs")
    if pair is not None and not is_canonical(pair):
        raise OperatorError("pair is not in canonical form; canonicalize first")
    f = sum(g.elements for g in symmetry_orbit(povm)) / 8.0
    return JointPovm(f)


def symmetrize_in_frame(povm: JointPovm, form: QubitCanonicalForm) -> JointPovm:
    """Symmetrize a POVM given in the original frame of a canonicalized pair."""
    return form.povm_from_canonical(symmetrize(form.povm_to_canonical(povm)))


def optimal_variation_povm(theta: float) -> JointPovm:
    theta = _check_theta(theta)
    c, s = math.cos(theta), math.sin(theta)
    diag = 0.5 * (1 + c - s)
    off = 0.25 * (1 - c + s)
    f = np.empty((2, 2, 2, 2), dtype=complex)
    f[0, 0] = diag * P_PLUS
    f[0, 1] = off * (PAULI_I + PAULI_X)
    f[1, 0] = off * (PAULI_I - PAULI_X)
    f[1, 1] = diag * P_MINUS
    return JointPovm(f)


def optimal_calibration_povm(theta: float) -> JointPovm:
    """Projective measurement along the canonical z-axis."""
    _check_theta(theta)
    f = np.zeros((2, 2, 2, 2), dtype=complex)
    f[0, 0] = P_PLUS
    f[1, 1] = P_MINUS
    return JointPovm(f)


def optimal_povm(theta: float, metric: Metric | str) -> JointPovm:
    if Metric(metric) is Metric.CALIBRATION:
        return optimal_calibration_povm(theta)
    return optimal_variation_povm(theta)


def variation_bound(theta: float) -> float:
    theta = _check_theta(theta)
    return max(math.sin(math.pi / 4 + theta) - math.sqrt(2) / 2, 0.0)


def calibration_bound(theta: float) -> float:
    theta = _check_theta(theta)
    return 2 * math.sin(theta / 2) ** 2


def bound(theta: float, metric: Metric | str) -> float:
    if Metric(metric) is Metric.CALIBRATION:
        return calibration_bound(theta)
    return variation_bound(theta)
