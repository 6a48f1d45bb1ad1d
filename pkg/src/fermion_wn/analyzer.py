"""Implementability criteria as partial sums over a ladder of mode cutoffs.

Each criterion is a weighted squared Hilbert-Schmidt norm of the block
``C = P+ pi(X) P- Gamma`` on the positive modes,

    sum_n lambda_n^(2w) sum_i lambda_i^(2w) |C[i, n]|^2,

with ``w = -p`` for the generalized-functional criterion, ``w = +p`` for the
test-functional criterion and ``w = 0`` for the Hilbert-Schmidt criterion.
A finite ladder cannot prove a series diverges, so every report exposes the
raw partial sums next to its heuristic verdict.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .oneparticle import GaugeFunction, OneParticleModel, Scenario, build_model, gauge_block

CRITERIA = ("hilbert_schmidt", "gen_functional", "test_functional")
DEFAULT_P_GRID = (0.25, 0.5, 0.75, 1.0, 2.0)
DEFAULT_LADDERS = {1: (64, 128, 256, 512, 1024), 3: (4, 6, 8, 12, 16)}
DEFAULT_REL_TOL = 1e-4
#: fitted exponents above this count as growth (log-divergence sits at 0)
DIVERGENCE_EXPONENT = -0.1
#: row sublattices of the 3-torus on which the divergence concentrates
SUBLATTICES = {
    "iota_fixed_line": lambda k: (k[:, 0] == 0) & (k[:, 2] == 0),
    "iota_antifixed_plane": lambda k: k[:, 1] == 0,
}


@dataclass(frozen=True)
class CriterionSpec:
    """One criterion at one exponent.

    Parameters
    ----------
    kind : str
        ``hilbert_schmidt``, ``gen_functional`` or ``test_functional``.
    p : float
        Sobolev-type exponent; forced to 0 for ``hilbert_schmidt``.
    """

    kind: str
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in CRITERIA:
            raise ValueError(f"unknown criterion {self.kind!r}; expected one of {CRITERIA}")
        if self.kind == "hilbert_schmidt":
            object.__setattr__(self, "p", 0.0)
        elif not self.p > 0:
            raise ValueError(f"{self.kind} needs p > 0")

    @property
    def weight_power(self) -> float:
        """Power ``2w`` applied to each eigenvalue."""
        if self.kind == "gen_functional":
            return -2.0 * self.p
        return 2.0 * self.p


@dataclass(frozen=True)
class ConvergenceReport:
    """Partial sums on a ladder together with a heuristic verdict."""

    partial_sums: dict
    growth_exponent: float
    verdict: str
    rel_tol: float
    relative_increments: tuple = ()

    def to_dict(self) -> dict:
        exponent = self.growth_exponent
        return {
            "partial_sums": {str(k): v for k, v in self.partial_sums.items()},
            "relative_increments": list(self.relative_increments),
            "growth_exponent": None if not math.isfinite(exponent) else exponent,
            "verdict": self.verdict,
            "rel_tol": self.rel_tol,
        }


# ---------------------------------------------------------------------------
# Partial sums
# ---------------------------------------------------------------------------


def _weighted_sums(model: OneParticleModel, gauge: GaugeFunction, powers: Iterable[float],
                   row_masks: Mapping[str, np.ndarray] | None = None) -> tuple[dict, dict]:
    """All requested weighted sums from a single block assembly."""
    block = gauge_block(model, gauge, "plus_minus_gamma").tocoo()
    rows, cols = block.row, block.col
    mag = np.abs(block.data) ** 2
    lam = model.eigenvalues
    out = {}
    for power in powers:
        w = lam ** power
        out[power] = float(np.sum(w[rows] * w[cols] * mag))
    restricted = {}
    for name, mask in (row_masks or {}).items():
        restricted[name] = float(np.sum(mag[mask[rows]]))
    return out, restricted


def criterion_partial_sum(model: OneParticleModel, gauge: GaugeFunction, p: float, signed: bool) -> float:
    """Weighted Hilbert-Schmidt sum of ``P+ pi(X) P- Gamma`` at one cutoff.

    Parameters
    ----------
    model : OneParticleModel
        Model truncated at the cutoff of interest.
    gauge : GaugeFunction
    p : float
        Exponent; ``p = 0`` gives the plain Hilbert-Schmidt norm squared.
    signed : bool
        ``True`` uses weights ``lambda^(-2p)`` (generalized functionals),
        ``False`` uses ``lambda^(+2p)`` (test functions).

    Returns
    -------
    float
    """
    power = -2.0 * p if signed else 2.0 * p
    sums, _ = _weighted_sums(model, gauge, [power])
    return sums[power]


def frobenius_squared(model: OneParticleModel, gauge: GaugeFunction) -> float:
    """Squared Frobenius norm of the dense block (independent route for ``p = 0``)."""
    dense = gauge_block(model, gauge, "plus_minus_gamma").toarray()
    return float(np.linalg.norm(dense, "fro") ** 2)


def sublattice_partial_sum(model: OneParticleModel, gauge: GaugeFunction, sublattice: str) -> float:
    """Hilbert-Schmidt sum restricted to rows whose momentum lies on a sublattice."""
    if model.torus_dim != 3:
        raise ValueError("sublattice sums are defined on the 3-torus")
    mask = SUBLATTICES[sublattice](model.momenta)
    _, restricted = _weighted_sums(model, gauge, [], {sublattice: mask})
    return restricted[sublattice]


# ---------------------------------------------------------------------------
# Closed form on the massive circle
# ---------------------------------------------------------------------------


def massive1d_gap(alpha, gamma, mass):
    """``sqrt(E(a) E(g - a)) - a (a - g) - m^2`` with ``E(k) = k^2 + m^2``."""
    alpha, gamma = np.asarray(alpha, float), np.asarray(gamma, float)
    ea, eb = alpha ** 2 + mass ** 2, (gamma - alpha) ** 2 + mass ** 2
    return np.sqrt(ea * eb) - alpha * (alpha - gamma) - mass ** 2


def massive1d_n_alpha(alpha, gamma, mass):
    """Rationalizing factor with ``gap = m^2 g^2 / (a^2 N)`` for ``a != 0``."""
    alpha, gamma = np.asarray(alpha, float), np.asarray(gamma, float)
    r, q = mass / alpha, gamma / alpha
    return np.sqrt((1 + r ** 2) * ((1 - q) ** 2 + r ** 2)) + (1 - q) + r ** 2


def closed_form_sum_massive1d(gauge: GaugeFunction, mass: float, p: float, cutoff: int,
                              prefactor: float = 1.0, exact_range: bool = False) -> float:
    """Rearranged double sum for the massive circle.

    ``prefactor * sum_g |phi_hat(g)|^2 sum_a E(a)^p E(g-a)^p gap / sqrt(E E)``
    over ``|a| <= cutoff``.  Summing the two internal labels of the squared
    matrix elements gives ``prefactor = 1``.  With ``exact_range`` the
    partner momentum ``g - a`` is also kept inside the cutoff, which
    reproduces the truncated matrix sum exactly.  ``p`` is the power of
    ``E`` (pass ``-p`` for generalized-functional weights).

    Examples
    --------
    >>> closed_form_sum_massive1d(GaugeFunction.zero(1), 2.0, 0.0, 8)
    0.0
    """
    if gauge.torus_dim != 1:
        raise ValueError("closed form applies to the circle")
    if mass <= 0:
        raise ValueError("closed form applies to the massive case")
    alpha = np.arange(-cutoff, cutoff + 1, dtype=float)
    total = 0.0
    for gamma in gauge.support:
        g = float(gamma[0])
        keep = np.abs(g - alpha) <= cutoff if exact_range else np.ones_like(alpha, bool)
        a = alpha[keep]
        ea, eb = a ** 2 + mass ** 2, (g - a) ** 2 + mass ** 2
        terms = (ea * eb) ** p * massive1d_gap(a, g, mass) / np.sqrt(ea * eb)
        total += abs(gauge.coefficient(gamma)) ** 2 * float(terms.sum())
    return prefactor * total


# ---------------------------------------------------------------------------
# Massless circle bound
# ---------------------------------------------------------------------------


def massless1d_hs_bound(gauge: GaugeFunction, cutoff: int, constant: float = 0.25) -> float:
    """``2 |phi_hat(0)|^2 + constant * (sum_{1<=g<=cutoff} g^-3) * ||phi''||^2``.

    ``||phi''||^2`` uses the normalized measure.  For real ``phi`` the
    squared Hilbert-Schmidt norm is ``2|phi_hat(0)|^2 + 4 sum_{g>=1} g
    |phi_hat(g)|^2``, which this expression dominates once ``constant >= 2``.
    """
    zeta = sum(g ** -3.0 for g in range(1, cutoff + 1))
    return 2 * abs(gauge.coefficient((0,))) ** 2 + constant * zeta * gauge.second_derivative_l2_squared()


# ---------------------------------------------------------------------------
# Diagnosis
# ---------------------------------------------------------------------------


def growth_exponent(cutoffs: Sequence[float], sums: Sequence[float]) -> float:
    """Least-squares slope of ``log(increment / log ratio)`` against ``log cutoff``.

    The increment density of ``C cutoff^k`` has slope ``k`` and that of
    ``C log cutoff`` has slope 0.  Returns ``-inf`` when fewer than two
    increments are positive.
    """
    lam = np.asarray(cutoffs, float)
    s = np.asarray(sums, float)
    inc = np.diff(s)
    dens = inc / np.log(lam[1:] / lam[:-1])
    ok = dens > 0
    if ok.sum() < 2:
        return float("-inf")
    x, y = np.log(lam[1:][ok]), np.log(dens[ok])
    return float(np.polyfit(x, y, 1)[0])


def diagnose(partial_sums: Mapping[float, float] | Sequence[tuple], rel_tol: float = DEFAULT_REL_TOL) -> ConvergenceReport:
    """Classify a ladder of partial sums.

    Parameters
    ----------
    partial_sums : mapping or sequence of (cutoff, sum)
        At least four points with increasing cutoffs.
    rel_tol : float
        Relative-increment threshold.

    Returns
    -------
    ConvergenceReport
        ``convergent`` when the last two relative increments are below
        ``rel_tol`` and not increasing; ``divergent`` when the growth
        exponent exceeds -0.1 and the last relative increment is at least
        ``rel_tol``; otherwise ``inconclusive``.

    Raises
    ------
    ValueError
        Fewer than four points, unsorted cutoffs or decreasing sums.

    Examples
    --------
    >>> diagnose({1: 1.0, 2: 1.5, 4: 1.75, 8: 1.875}, rel_tol=0.2).verdict
    'convergent'
    """
    items = list(partial_sums.items()) if isinstance(partial_sums, Mapping) else list(partial_sums)
    if len(items) < 4:
        raise ValueError("diagnosis needs at least four ladder points")
    cutoffs = np.array([float(k) for k, _ in items])
    sums = np.array([float(v) for _, v in items])
    if np.any(np.diff(cutoffs) <= 0):
        raise ValueError("ladder cutoffs must be strictly increasing")
    slack = 1e-12 * np.maximum(np.abs(sums[1:]), 1.0)
    if np.any(np.diff(sums) < -slack):
        raise ValueError("partial sums decrease along the ladder; summands must be non-negative")
    inc = np.maximum(np.diff(sums), 0.0)
    rel = np.divide(inc, sums[1:], out=np.zeros_like(inc), where=sums[1:] > 0)
    exponent = growth_exponent(cutoffs, sums)
    if rel[-1] < rel_tol and rel[-2] < rel_tol and rel[-1] <= rel[-2]:
        verdict = "convergent"
    elif exponent > DIVERGENCE_EXPONENT and rel[-1] >= rel_tol:
        verdict = "divergent"
    else:
        verdict = "inconclusive"
    return ConvergenceReport(
        partial_sums={k: float(v) for (k, _), v in zip(items, sums)},
        growth_exponent=exponent,
        verdict=verdict,
        rel_tol=rel_tol,
        relative_increments=tuple(float(r) for r in rel),
    )


# ---------------------------------------------------------------------------
# Eigenvalue nuclearity
# ---------------------------------------------------------------------------


def delta_squared(scenario: Scenario, nuclearity_exponent: float, ladder: Sequence[int],
                  rel_tol: float = DEFAULT_REL_TOL) -> ConvergenceReport:
    """Partial sums of ``sum_j lambda_j^(-2 a)`` over the positive modes."""
    if not nuclearity_exponent > 0:
        raise ValueError("nuclearity exponent must be positive")
    sums = {}
    for cutoff in ladder:
        lam = build_model(scenario.with_cutoff(cutoff)).eigenvalues
        sums[cutoff] = float(np.sum(lam ** (-2.0 * nuclearity_exponent)))
    return diagnose(sums, rel_tol)


def smallest_convergent_exponent(scenario: Scenario, exponents: Sequence[float], ladder: Sequence[int],
                                 rel_tol: float = DEFAULT_REL_TOL) -> float | None:
    """Smallest grid exponent whose eigenvalue sum is diagnosed convergent."""
    for a in sorted(exponents):
        if delta_squared(scenario, a, ladder, rel_tol).verdict == "convergent":
            return a
    return None


# ---------------------------------------------------------------------------
# Scenario report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioReport:
    """Convergence reports for every criterion on one scenario."""

    scenario: Scenario
    ladder: tuple
    p_grid: tuple
    rel_tol: float
    hilbert_schmidt: ConvergenceReport
    gen_functional: dict
    test_functional: dict
    sublattices: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        """Tri-state implementability verdicts: True, False or None (undetermined)."""

        def of(report):
            return {"convergent": True, "divergent": False}.get(report.verdict)

        gen = [of(r) for r in self.gen_functional.values()]
        test = [of(r) for r in self.test_functional.values()]
        some = True if any(v is True for v in gen) else (False if all(v is False for v in gen) else None)
        every = False if any(v is False for v in test) else (True if all(v is True for v in test) else None)
        return {
            "implementable_as_Gamma_to_dual": of(self.hilbert_schmidt),
            "as_test_to_dual": some,
            "as_test_to_test": every,
        }

    def criterion_reports(self):
        """Yield ``(criterion, p, report)``; the p-free criterion is listed once per grid p."""
        for p in self.p_grid:
            yield "hilbert_schmidt", p, self.hilbert_schmidt
        for p in self.p_grid:
            yield "gen_functional", p, self.gen_functional[p]
        for p in self.p_grid:
            yield "test_functional", p, self.test_functional[p]

    def csv_rows(self) -> list[tuple]:
        """Rows ``(criterion, p, cutoff, partial_sum)``."""
        rows = []
        for name, p, report in self.criterion_reports():
            for cutoff, value in report.partial_sums.items():
                rows.append((name, p, cutoff, value))
        return rows

    def to_dict(self) -> dict:
        sc = self.scenario
        return {
            "scenario": {"torus_dim": sc.torus_dim, "mass": sc.mass, "shift_c": sc.shift_c},
            "ladder": list(self.ladder),
            "p_grid": list(self.p_grid),
            "p_grid_note": "functional criteria are evaluated only at the listed p",
            "rel_tol": self.rel_tol,
            "verdicts": self.verdicts,
            "hilbert_schmidt": self.hilbert_schmidt.to_dict(),
            "gen_functional": {str(p): r.to_dict() for p, r in self.gen_functional.items()},
            "test_functional": {str(p): r.to_dict() for p, r in self.test_functional.items()},
            "sublattices": {k: r.to_dict() for k, r in self.sublattices.items()},
        }


def _ladder_point(args) -> tuple[dict, dict]:
    scenario, gauge, cutoff, powers = args
    model = build_model(scenario.with_cutoff(cutoff))
    masks = {}
    if scenario.torus_dim == 3:
        masks = {name: rule(model.momenta) for name, rule in SUBLATTICES.items()}
    return _weighted_sums(model, gauge, powers, masks)


def scenario_report(scenario: Scenario, gauge: GaugeFunction, p_grid: Sequence[float] = DEFAULT_P_GRID,
                    ladder: Sequence[int] | None = None, rel_tol: float = DEFAULT_REL_TOL,
                    workers: int = 1) -> ScenarioReport:
    """Evaluate every criterion over a ladder of cutoffs.

    Parameters
    ----------
    scenario : Scenario
        Its own ``mode_cutoff`` is ignored; the ladder sets the cutoffs.
    gauge : GaugeFunction
    p_grid : sequence of float
        Positive exponents for the two functional criteria.
    ladder : sequence of int, optional
        Defaults to the torus-dimension ladder in ``DEFAULT_LADDERS``.
    rel_tol : float
    workers : int
        Processes used across ladder points; 1 runs inline.
    """
    p_grid = tuple(float(p) for p in p_grid)
    if any(not p > 0 for p in p_grid):
        raise ValueError("p grid entries must be positive")
    ladder = tuple(ladder if ladder is not None else DEFAULT_LADDERS[scenario.torus_dim])
    powers = [0.0] + [-2 * p for p in p_grid] + [2 * p for p in p_grid]
    jobs = [(scenario, gauge, cutoff, powers) for cutoff in ladder]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ladder_point, jobs))
    else:
        results = [_ladder_point(job) for job in jobs]

    def series(power):
        return {cutoff: res[0][power] for cutoff, res in zip(ladder, results)}

    subl = {}
    if scenario.torus_dim == 3:
        for name in SUBLATTICES:
            subl[name] = diagnose({cutoff: res[1][name] for cutoff, res in zip(ladder, results)}, rel_tol)
    return ScenarioReport(
        scenario=scenario,
        ladder=ladder,
        p_grid=p_grid,
        rel_tol=rel_tol,
        hilbert_schmidt=diagnose(series(0.0), rel_tol),
        gen_functional={p: diagnose(series(-2 * p), rel_tol) for p in p_grid},
        test_functional={p: diagnose(series(2 * p), rel_tol) for p in p_grid},
        sublattices=subl,
    )
