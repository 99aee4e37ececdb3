"""Calibration and variation errors of approximate measurements."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .measurement import BasisPair, JointPovm, MarginalPovm, ProjectiveBasis, marginals
from .operators import PSD_TOL, OperatorError

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-12
TIE_TOL = 1e-12
PROB_FLOOR = 1e-12
SUBSET_CHUNK = 4096


class Metric(str, Enum):
    CALIBRATION = "calibration"
    VARIATION = "variation"


@dataclass(frozen=True)
class ErrorReport:
    metric: Metric
    epsilon: float
    epsilon_bar: float
    witness: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.epsilon + self.epsilon_bar

    def to_json(self) -> dict:
        return {
            "metric": self.metric.value,
            "epsilon": self.epsilon,
            "epsilon_bar": self.epsilon_bar,
            "witness": self.witness,
        }


def _elements(m) -> np.ndarray:
    return m.elements if isinstance(m, MarginalPovm) else np.asarray(m, dtype=complex)


def _clamp(x: float) -> float:
    if x < -CLAMP_TOL:
        raise OperatorError(f"error value {x:.3g} is negative beyond rounding")
    return float(min(max(x, 0.0), 1.0))


def calibration_terms(m, basis: ProjectiveBasis) -> np.ndarray:
    """``1 - <a|M_a|a>`` for every outcome ``a``."""
    el = _elements(m)
    if el.shape[0] != basis.dim:
        raise OperatorError("marginal and basis dimensions differ")
    v = basis.vectors
    diag = np.einsum("ai,aij,aj->a", v.conj(), el, v).real
    return 1.0 - diag


def calibration_error(m, basis: ProjectiveBasis) -> tuple[float, int]:
    """Worst-case probability of a wrong outcome on eigenstates of ``basis``.

    Returns the value and the (0-based) outcome attaining it; ties go to the
    smallest outcome.
    """
    terms = calibration_terms(m, basis)
    a = int(np.argmax(terms))
    return _clamp(float(terms[a])), a


def subset_masks(n: int) -> np.ndarray:
    """Membership table of shape ``(2**n, n)``; row ``k`` is the subset with bitmask ``k``."""
    k = np.arange(2**n)[:, None]
    return ((k >> np.arange(n)) & 1).astype(float)


def subset_norms(m, basis: ProjectiveBasis) -> np.ndarray:
    """``||M(X) - P(X)||`` for every subset ``X``, indexed by bitmask."""
    el = _elements(m)
    n = basis.dim
    if el.shape[0] != n:
        raise OperatorError("marginal and basis dimensions differ")
    diff = el - basis.projectors
    masks = subset_masks(n)
    out = np.empty(len(masks))
    for start in range(0, len(masks), SUBSET_CHUNK):
        block = np.einsum("kx,xij->kij", masks[start:start + SUBSET_CHUNK], diff)
        lam = np.linalg.eigvalsh(block)
        out[start:start + SUBSET_CHUNK] = np.maximum(np.abs(lam[:, 0]), np.abs(lam[:, -1]))
    return out


def mask_to_subset(mask: int, n: int) -> list[int]:
    return [a for a in range(n) if mask >> a & 1]


def subset_norm(m, basis: ProjectiveBasis, subset: Iterable[int]) -> float:
    el = _elements(m)
    idx = list(subset)
    d = (el[idx] - basis.projectors[idx]).sum(axis=0)
    lam = np.linalg.eigvalsh(d) if idx else np.zeros(1)
    return float(max(abs(lam[0]), abs(lam[-1])))


def variation_error(m, basis: ProjectiveBasis) -> tuple[float, list[int]]:
    """Largest total-variation distance between the two outcome distributions.

    Computed as ``max_X ||M(X) - P(X)||`` over all ``2**N`` outcome subsets. The
    witness is the subset (0-based outcomes) with the smallest bitmask among
    those within ``TIE_TOL`` of the maximum, and the value reported is the norm at
    that witness so that re-evaluation reproduces it exactly.
    """
    norms = subset_norms(m, basis)
    best = norms.max()
    mask = int(np.flatnonzero(norms >= best - TIE_TOL)[0])
    subset = mask_to_subset(mask, basis.dim)
    return _clamp(subset_norm(m, basis, subset)), subset


def variation_error_state_lower_bound(m, basis: ProjectiveBasis, states: Sequence) -> float:
    """Max over the given states of the total variation distance of outcome statistics."""
    el = _elements(m)
    proj = basis.projectors
    best = 0.0
    for rho in states:
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        p_m = np.einsum("aij,ji->a", el, rho).real
        p_p = np.einsum("aij,ji->a", proj, rho).real
        best = max(best, 0.5 * float(np.abs(p_m - p_p).sum()))
    return best


def marginal_error(m, basis: ProjectiveBasis, metric: Metric | str) -> tuple[float, object]:
    metric = Metric(metric)
    if metric is Metric.CALIBRATION:
        return calibration_error(m, basis)
    return variation_error(m, basis)


def _witness_json(metric: Metric, w) -> object:
    if metric is Metric.CALIBRATION:
        return {"outcome": int(w) + 1}
    return {"subset": [a + 1 for a in w]}


def marginal_errors(m: MarginalPovm, m_bar: MarginalPovm, pair: BasisPair, metric: Metric | str) -> ErrorReport:
    metric = Metric(metric)
    eps, w = marginal_error(m, pair.unbarred, metric)
    eps_bar, w_bar = marginal_error(m_bar, pair.barred, metric)
    return ErrorReport(metric, eps, eps_bar,
                       {"first": _witness_json(metric, w), "second": _witness_json(metric, w_bar)})


def joint_errors(povm: JointPovm, pair: BasisPair, metric: Metric | str) -> ErrorReport:
    """Errors of both marginals of ``povm`` against the pair of target bases."""
    if povm.dim != pair.dim:
        raise OperatorError("POVM and basis pair dimensions differ")
    m, m_bar = marginals(povm)
    return marginal_errors(m, m_bar, pair, metric)


def total_error(povm: JointPovm, pair: BasisPair, metric: Metric | str) -> float:
    return joint_errors(povm, pair, metric).total


def reevaluate_witness(report: ErrorReport, povm: JointPovm, pair: BasisPair) -> tuple[float, float]:
    """Recompute both errors from the witnesses stored in ``report``."""
    m, m_bar = marginals(povm)
    vals = []
    for key, mm, basis in (("first", m, pair.unbarred), ("second", m_bar, pair.barred)):
        w = report.witness[key]
        if report.metric is Metric.CALIBRATION:
            vals.append(_clamp(float(calibration_terms(mm, basis)[w["outcome"] - 1])))
        else:
            vals.append(_clamp(subset_norm(mm, basis, [a - 1 for a in w["subset"]])))
    return vals[0], vals[1]


@dataclass(frozen=True)
class Observable:
    """Non-degenerate observable ``sum_a lambda_a |a><a|``."""

    basis: ProjectiveBasis
    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        lam = tuple(float(x) for x in self.eigenvalues)
        if len(lam) != self.basis.dim:
            raise ValueError("need one eigenvalue per basis vector")
        if len(set(lam)) != len(lam):
            raise ValueError("observable must be non-degenerate")
        object.__setattr__(self, "eigenvalues", lam)

    def matrix(self) -> np.ndarray:
        return np.einsum("a,aij->ij", np.asarray(self.eigenvalues), self.basis.projectors)


@dataclass(frozen=True)
class HofmannRecord:
    outcome: int
    epsilon: float
    epsilon_bar: float
    lhs: float
    rhs: float
    satisfied: bool


def _spread(obs: np.ndarray, rho: np.ndarray) -> float:
    mean = np.trace(obs @ rho).real
    second = np.trace(obs @ obs @ rho).real
    return float(np.sqrt(max(second - mean**2, 0.0)))


def hofmann_check(effects: Sequence, a: Observable, a_bar: Observable, tol: float = 1e-10) -> list[HofmannRecord]:
    """Check ``eps_m * eps_bar_m >= |<[A, Ā]>|/2`` in each retrodictive state.

    ``effects`` is any POVM (arbitrary number of outcomes). Outcomes whose effect
    has trace at most ``PROB_FLOOR`` are skipped with a log notice.
    """
    f = np.asarray(effects, dtype=complex)
    n = a.basis.dim
    if f.ndim != 3 or f.shape[1:] != (n, n):
        raise OperatorError(f"expected a stack of {n}x{n} effects, got shape {f.shape}")
    gap = np.max(np.abs(f.sum(axis=0) - np.eye(n)))
    if gap > 1e-9:
        raise OperatorError(f"effects do not sum to identity (defect {gap:.3g})")
    for k, el in enumerate(f):
        if np.linalg.eigvalsh(0.5 * (el + el.conj().T))[0] < -PSD_TOL:
            raise OperatorError(f"effect {k + 1} is not positive semidefinite")
    am, bm = a.matrix(), a_bar.matrix()
    comm = am @ bm - bm @ am
    records = []
    for k, el in enumerate(f):
        tr = np.trace(el).real
        if tr <= PROB_FLOOR:
            log.info("skipping outcome %d: effect has trace %.3g", k + 1, tr)
            continue
        rho = el / tr
        e, e_bar = _spread(am, rho), _spread(bm, rho)
        rhs = 0.5 * abs(np.trace(comm @ rho))
        lhs = e * e_bar
        records.append(HofmannRecord(k, e, e_bar, lhs, float(rhs), bool(lhs >= rhs - tol)))
    return records
