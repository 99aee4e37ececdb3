"""Lower bounds on the calibration-error sum for arbitrary basis pairs.

Positivity of the joint POVM bounds the off-diagonal element
``|<1|M̄_1|2>|`` from above by the first error and from below by the basis
overlaps minus terms controlled by the second error. Requiring the two to be
compatible for every choice of basis vectors gives the feasibility function
:func:`i_function`; any achievable error pair satisfies all such constraints,
so the smallest ``ε + ε̄`` over the feasible region is a valid lower bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .measurement import BasisPair
from .mub import is_mub

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 2000
DEFAULT_REFINEMENTS = 40
SUBDIVISIONS = 64


class Variant(str, Enum):
    GENERIC = "generic"
    MUB_IMPROVED = "mub_improved"


def psd_offdiag_bound(k11: float, k22: float) -> float:
    """Bound on ``|<1|K|2>|`` for ``K >= 0`` with ``<1|K|1> <= k11`` and ``<2|K|2> <= k22``."""
    if k11 < 0 or k22 < 0:
        raise ValueError("diagonal bounds must be nonnegative")
    return math.sqrt(k11 * k22)


def offdiag_upper_bound(epsilon: float, n: int) -> float:
    """Upper bound ``2 sqrt(ε) + (N-2) ε`` on ``|<1|M̄_1|2>|`` given calibration error ``ε``."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon={epsilon} outside [0, 1]")
    if n < 2:
        raise ValueError("dimension must be at least 2")
    return 2 * math.sqrt(epsilon) + (n - 2) * epsilon


def improved_mub_d_coefficient(n: int) -> float:
    return (n - 1) * (n - 2) / n


def i_function(epsilon, epsilon_prime, t, t_prime, n: int, d_coefficient=None):
    """Feasibility function; an achievable error pair needs a nonnegative value.

    ``t`` and ``t_prime`` are overlap moduli in ``[0, 1]``. ``d_coefficient``
    replaces the generic ``sqrt((N-1)(N-2)) t̃ t̃'`` estimate of the cross term
    (pass :func:`improved_mub_d_coefficient` for unbiased bases). Broadcasts
    over numpy arrays.
    """
    eps = np.asarray(epsilon, dtype=float)
    epsp = np.asarray(epsilon_prime, dtype=float)
    t = np.asarray(t, dtype=float)
    tp = np.asarray(t_prime, dtype=float)
    if np.any(eps < 0) or np.any(epsp < 0):
        raise ValueError("errors must be nonnegative")
    if np.any((t < 0) | (t > 1 + 1e-12)) or np.any((tp < 0) | (tp > 1 + 1e-12)):
        raise ValueError("overlaps must lie in [0, 1]")
    if n < 2:
        raise ValueError("dimension must be at least 2")
    tt = np.sqrt(np.clip(1 - t**2, 0, None))
    ttp = np.sqrt(np.clip(1 - tp**2, 0, None))
    d = math.sqrt((n - 1) * (n - 2)) * tt * ttp if d_coefficient is None else d_coefficient
    value = (
        (n - 2) * eps
        + 2 * np.sqrt(eps)
        + (t * tp + tt * ttp + d) * epsp
        + math.sqrt(n - 1) * (t * tt + tp * ttp) * np.sqrt(epsp)
        - t * tp
    )
    return value if value.ndim else float(value)


def overlap_table(pair: BasisPair) -> np.ndarray:
    """``table[a, b] = |<ā|b>|``."""
    return np.abs(pair.overlaps()).T


def _pair_conditions(table: np.ndarray) -> np.ndarray:
    """Distinct ``(t, t')`` pairs ``(table[a, b], table[a, c])`` over all ``a`` and ``b != c``."""
    n = table.shape[0]
    rows = []
    for a in range(n):
        for b in range(n):
            for c in range(b + 1, n):
                x, y = sorted((table[a, b], table[a, c]))
                rows.append((x, y))
    return np.unique(np.round(np.array(rows), 14), axis=0)


@dataclass(frozen=True)
class FeasibleRegion:
    """The intersection of the two constraint families for a basis pair."""

    n: int
    first: np.ndarray  # (t, t') pairs constraining I(ε, ε̄; t, t')
    second: np.ndarray  # (t, t') pairs constraining I(ε̄, ε; t, t')
    d_coefficient: float | None
    variant: Variant

    @classmethod
    def from_pair(cls, pair: BasisPair, variant: Variant | str = Variant.GENERIC) -> "FeasibleRegion":
        variant = Variant(variant)
        d = None
        if variant is Variant.MUB_IMPROVED:
            if is_mub(pair):
                d = improved_mub_d_coefficient(pair.dim)
            else:
                log.warning("pair is not mutually unbiased; using the generic cross-term estimate")
                variant = Variant.GENERIC
        table = overlap_table(pair)
        return cls(pair.dim, _pair_conditions(table), _pair_conditions(table.T), d, variant)

    def slack(self, epsilon, epsilon_bar):
        """Minimum constraint value; the point is feasible iff it is ``>= 0``."""
        eps = np.asarray(epsilon, dtype=float)[..., None]
        bar = np.asarray(epsilon_bar, dtype=float)[..., None]
        first = i_function(eps, bar, self.first[:, 0], self.first[:, 1], self.n, self.d_coefficient)
        second = i_function(bar, eps, self.second[:, 0], self.second[:, 1], self.n, self.d_coefficient)
        return np.minimum(np.min(first, axis=-1), np.min(second, axis=-1))

    def contains(self, epsilon, epsilon_bar) -> bool:
        return bool(self.slack(epsilon, epsilon_bar) >= 0)


def in_feasible_region(epsilon: float, epsilon_bar: float, pair: BasisPair,
                       variant: Variant | str = Variant.GENERIC) -> bool:
    return FeasibleRegion.from_pair(pair, variant).contains(epsilon, epsilon_bar)


def _lowest_feasible_bar(region: FeasibleRegion, eps: np.ndarray, refinements: int):
    """Bisection bracket ``[lo, hi]`` for the smallest feasible ``ε̄`` at each ``ε``.

    Feasibility is monotone in ``ε̄`` since every error term of the constraint
    function has a nonnegative coefficient. ``lo`` is infeasible (or 0) and
    ``hi`` feasible; columns infeasible even at ``ε̄ = 1`` get ``inf``.
    """
    lo = np.zeros_like(eps)
    hi = np.ones_like(eps)
    at_zero = region.slack(eps, lo) >= 0
    at_one = region.slack(eps, hi) >= 0
    for _ in range(refinements):
        mid = 0.5 * (lo + hi)
        ok = region.slack(eps, mid) >= 0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    lo = np.where(at_zero, 0.0, lo)
    hi = np.where(at_zero, 0.0, hi)
    lo = np.where(at_one, lo, np.inf)
    hi = np.where(at_one, hi, np.inf)
    return lo, hi


@dataclass(frozen=True)
class InfimumScan:
    certificate: float  # never above the true infimum
    estimate: float  # attained by a grid point of the region; never below it
    argmin: tuple[float, float]
    resolution: int


def scan_infimum(pair: BasisPair, variant: Variant | str = Variant.GENERIC,
                 resolution: int = DEFAULT_RESOLUTION, refinements: int = DEFAULT_REFINEMENTS,
                 symmetric: bool = False) -> InfimumScan:
    """Bracket ``inf{ε + ε̄ : (ε, ε̄) feasible}`` over ``[0, 1]^2``.

    The ``ε`` axis is gridded at ``1/resolution`` and the lowest feasible ``ε̄``
    is found per column by bisection. Because that frontier is nonincreasing,
    on each cell ``[ε_i, ε_{i+1}]`` the sum is at least
    ``ε_i + frontier(ε_{i+1})``, which yields the certificate.

    With ``symmetric=True`` the search is restricted to the diagonal
    ``ε = ε̄``; this is only a bound when errors can be exchanged (Fourier pairs).
    """
    region = FeasibleRegion.from_pair(pair, variant)
    if symmetric:
        lo, hi = 0.0, 1.0
        if region.contains(0.0, 0.0):
            return InfimumScan(0.0, 0.0, (0.0, 0.0), resolution)
        for _ in range(refinements + 20):
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if region.contains(mid, mid) else (mid, hi)
        return InfimumScan(2 * lo, 2 * hi, (hi, hi), resolution)
    eps = np.linspace(0.0, 1.0, resolution + 1)
    lo, hi = _lowest_feasible_bar(region, eps, refinements)
    sums = eps + hi
    k = int(np.argmin(sums))
    estimate, argmin = float(sums[k]), (float(eps[k]), float(hi[k]))
    cell_cert = eps[:-1] + lo[1:]
    # only cells whose bound undercuts the estimate can hold the infimum; subdivide them
    open_cells = np.flatnonzero(cell_cert < estimate)
    certificate = float(cell_cert.min())
    if open_cells.size:
        sub = np.linspace(0.0, 1.0, SUBDIVISIONS + 1)
        pts = (eps[open_cells, None] + sub[None, :] / resolution).ravel()
        s_lo, s_hi = _lowest_feasible_bar(region, pts, refinements)
        s_lo = s_lo.reshape(open_cells.size, -1)
        s_hi = s_hi.reshape(open_cells.size, -1)
        pts = pts.reshape(open_cells.size, -1)
        closed = np.delete(cell_cert, open_cells)
        certificate = float(min(closed.min(initial=np.inf), np.min(pts[:, :-1] + s_lo[:, 1:])))
        j = np.unravel_index(np.argmin(pts + s_hi), pts.shape)
        if pts[j] + s_hi[j] < estimate:
            estimate, argmin = float(pts[j] + s_hi[j]), (float(pts[j]), float(s_hi[j]))
    return InfimumScan(max(certificate, 0.0), estimate, argmin, resolution)


def infimum_bound(pair: BasisPair, variant: Variant | str = Variant.GENERIC,
                  resolution: int = DEFAULT_RESOLUTION, refinements: int = DEFAULT_REFINEMENTS) -> float:
    """Certified lower bound on ``d_c(M, P) + d_c(M̄, P̄)`` for every joint POVM."""
    return scan_infimum(pair, variant, resolution, refinements).certificate


MUB_CLOSED_FORMS = {
    3: 2 * ((4 * math.sqrt(2) - 5) / 7) ** 2,
    5: 2 * ((4 * math.sqrt(7) - 9) / 31) ** 2,
}


@dataclass(frozen=True)
class MubBound:
    n: int
    closed_form: float
    numeric_root: float


def symmetric_i(epsilon, n: int) -> float:
    """Constraint function on the diagonal ``ε = ε̄`` for an unbiased pair."""
    t = 1 / math.sqrt(n)
    return i_function(epsilon, epsilon, t, t, n, improved_mub_d_coefficient(n))


def mub_bound(n: int, tol: float = 1e-12) -> MubBound:
    """Closed form and the bisection root of the diagonal constraint.

    The two differ by a few percent: substituting unbiased overlaps into the
    constraint gives an ``ε`` coefficient larger by ``1/N`` than the one behind
    the closed forms. Both are reported unchanged.
    """
    if n not in MUB_CLOSED_FORMS:
        raise ValueError(f"closed form available only for N in {sorted(MUB_CLOSED_FORMS)}")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if symmetric_i(mid, n) >= 0:
            hi = mid
        else:
            lo = mid
    return MubBound(n, MUB_CLOSED_FORMS[n], 2 * 0.5 * (lo + hi))
