"""Quantum instruments in Kraus form and the joint POVMs they induce.

Measuring with an instrument and then measuring the barred basis defines a
joint POVM, so every bound on joint measurements is also a bound on measurement
error plus disturbance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measurement import BasisPair, JointPovm, MarginalPovm, ProjectiveBasis
from .metrics import ErrorReport, Metric, marginal_errors
from .operators import OperatorError, as_density, operator_norm

KRAUS_TOL = 1e-9
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class Instrument:
    """``families[a]`` is the stack of Kraus operators ``V_ak`` for outcome ``a``."""

    families: tuple[np.ndarray, ...]

    def __post_init__(self):
        fams = tuple(np.asarray(f, dtype=complex) for f in self.families)
        if not fams:
            raise OperatorError("instrument needs at least one outcome")
        fams = tuple(f[None] if f.ndim == 2 else f for f in fams)
        n = fams[0].shape[-1]
        for a, f in enumerate(fams):
            if f.ndim != 3 or f.shape[1:] != (n, n) or len(f) == 0:
                raise OperatorError(f"outcome {a + 1}: expected a stack of {n}x{n} Kraus operators")
        total = sum(np.einsum("kji,kjl->il", f.conj(), f) for f in fams)
        gap = operator_norm(total - np.eye(n))
        if gap > KRAUS_TOL:
            raise OperatorError(f"Kraus operators are not trace preserving (defect {gap:.3g})")
        for f in fams:
            f.setflags(write=False)
        object.__setattr__(self, "families", fams)

    @property
    def dim(self) -> int:
        return self.families[0].shape[-1]

    @property
    def outcomes(self) -> int:
        return len(self.families)

    def operation(self, a: int, rho: np.ndarray) -> np.ndarray:
        """Unnormalized ``E_a(rho) = sum_k V_ak rho V_ak^†``."""
        v = self.families[a]
        return np.einsum("kij,jl,kml->im", v, rho, v.conj())

    def effects(self) -> np.ndarray:
        """``M_a = sum_k V_ak^† V_ak``."""
        return np.stack([np.einsum("kji,kjl->il", f.conj(), f) for f in self.families])

    def then(self, correction: Sequence[Sequence[np.ndarray]]) -> "Instrument":
        """Follow each outcome ``a`` by the channel with Kraus operators ``correction[a]``.

        A single family applies the same channel after every outcome.
        """
        if len(correction) == 1:
            correction = list(correction) * self.outcomes
        if len(correction) != self.outcomes:
            raise ValueError("need one correction channel per outcome")
        fams = []
        for v, c in zip(self.families, correction):
            c = np.asarray(c, dtype=complex)
            fams.append(np.einsum("jab,kbc->jkac", c, v).reshape(-1, self.dim, self.dim))
        return Instrument(tuple(fams))


def apply(instr: Instrument, a: int, rho) -> tuple[float, np.ndarray | None]:
    """Probability of outcome ``a`` (0-based) and the normalized post-measurement state."""
    rho = as_density(rho)
    out = instr.operation(a, rho)
    prob = float(np.trace(out).real)
    if prob <= PROB_FLOOR:
        return max(prob, 0.0), None
    post = out / prob
    return prob, 0.5 * (post + post.conj().T)


def induced_joint_povm(instr: Instrument, barred: ProjectiveBasis) -> JointPovm:
    """``F_ab = sum_k V_ak^† |b̄><b̄| V_ak``: instrument outcome, then a barred measurement."""
    if instr.dim != barred.dim:
        raise OperatorError("instrument and basis dimensions differ")
    if instr.outcomes != instr.dim:
        raise OperatorError("joint POVM needs exactly N instrument outcomes")
    proj = barred.projectors
    f = np.stack([np.einsum("kji,bjl,klm->bim", v.conj(), proj, v) for v in instr.families])
    return JointPovm(f)


def error_disturbance(instr: Instrument, pair: BasisPair, metric: Metric | str) -> ErrorReport:
    """Measurement error ``ε`` of the instrument and disturbance ``η̄`` of the barred basis.

    ``epsilon_bar`` of the returned report holds the disturbance.
    """
    m = MarginalPovm(instr.effects())
    m_bar = MarginalPovm(induced_joint_povm(instr, pair.barred).elements.sum(axis=0))
    return marginal_errors(m, m_bar, pair, metric)


def projective_instrument(basis: ProjectiveBasis) -> Instrument:
    """Lüders instrument ``V_a = |a><a|``."""
    return Instrument(tuple(p[None] for p in basis.projectors))


def measure_and_prepare(measured: ProjectiveBasis, prepared: ProjectiveBasis) -> Instrument:
    """Measure ``measured``; on outcome ``a`` prepare ``prepared[a]``: ``V_a = |p_a><m_a|``."""
    return Instrument(tuple(
        np.outer(prepared.vectors[a], measured.vectors[a].conj())[None] for a in range(measured.dim)
    ))


def random_instrument(n: int, rng: np.random.Generator, max_kraus: int = 3,
                      outcomes: int | None = None) -> Instrument:
    """Kraus families cut from the blocks of a Haar-random isometry.

    Each outcome gets between 1 and ``max_kraus`` Kraus operators; stacking all
    of them gives an isometry ``C^n -> C^(n K)``, which is exactly the
    completeness condition.
    """
    outcomes = n if outcomes is None else outcomes
    counts = rng.integers(1, max_kraus + 1, size=outcomes)
    total = int(counts.sum())
    z = rng.normal(size=(n * total, n)) + 1j * rng.normal(size=(n * total, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    blocks = q.reshape(total, n, n)
    fams, start = [], 0
    for c in counts:
        fams.append(blocks[start:start + c])
        start += c
    return Instrument(tuple(fams))


def random_channel(n: int, rng: np.random.Generator, kraus: int = 2) -> list[np.ndarray]:
    return list(random_instrument(n, rng, max_kraus=kraus, outcomes=1).families[0])
