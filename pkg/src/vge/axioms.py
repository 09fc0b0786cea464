"""Canonical axiom-test ensembles and the gated-behavior verification suite.

Each case transforms a base 3-member, 3-class ensemble and checks how the
gated uncertainty decomposition and the margin score respond:

* A2 - vertex ensemble vs identical uniform members,
* A3 - mean-preserving spread,
* A4 - center shift (toward the barycenter) with spread preserved,
* A5 - location shift (toward a vertex) with spread preserved.

Member vectors are solved to match target moments exactly: per-class mean
and Bessel-corrected std. A0 (non-negativity) and A1 (identical members
give zero epistemic uncertainty) are asserted across every case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import ensemble_moments
from .errors import InfeasibleConstruction
from .gate import GateParams
from .uncertainty import decompose, vgmu as vgmu_score
from .vgn import vgn_forward

AXIOM_NAMES = ("A2", "A3", "A4", "A5")
K_GRID = (None, 1.0, 2.0)  # None = gating disabled
K_LABELS = ("disabled", "1", "2")

_MEAN_BASE = np.array([0.70, 0.20, 0.10])
_STD_SPREAD = np.array([0.17, 0.10, 0.10])  # A3's widened ensemble
_STD_BASE = np.array([0.10, 0.05, 0.05])  # base spread for A4/A5
_MEAN_CENTER = np.array([0.40, 0.35, 0.25])
_MEAN_VERTEX = np.array([0.90, 0.05, 0.05])

# Expected magnitudes for the canonical ensembles (normalized entropies).
EXPECTED = {
    ("A3", "Q", "eu"): (0.070, 0.055, 0.045),  # per k grid entry
    ("A3", "P", "vgmu"): 0.300,
    ("A3", "Q", "vgmu"): 0.412,
    ("A4", "P", "tu"): 0.730,
    ("A4", "Q", "tu"): 0.984,
    ("A4", "P", "au"): 0.714,
    ("A4", "Q", "au"): 0.971,
    ("A5", "P", "vgmu"): 0.325,
    ("A5", "Q", "vgmu"): 0.103,
}


@dataclass(frozen=True)
class AxiomCase:
    """One axiom scenario: a base ensemble P and its transform Q."""

    name: str
    p_members: np.ndarray  # (3, 3)
    q_members: np.ndarray  # (3, 3)
    p_target: tuple[np.ndarray, np.ndarray]  # (mean, std)
    q_target: tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class AxiomRow:
    """Suite output for one (case, ensemble, k) combination."""

    case: str
    ensemble: str  # "P" or "Q"
    k_label: str
    tu: float
    au: float
    eu: float
    vgmu: float


@dataclass(frozen=True)
class AxiomSuiteResult:
    rows: list[AxiomRow]
    trend_failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.trend_failures

    def row(self, case: str, ensemble: str, k_label: str) -> AxiomRow:
        for r in self.rows:
            if (r.case, r.ensemble, r.k_label) == (case, ensemble, k_label):
                return r
        raise KeyError((case, ensemble, k_label))


def solve_members(mean, std, grid: int = 3600) -> np.ndarray:
    """Three simplex members with exact per-class mean and Bessel std.

    Deviations from the mean live in the 2-d zero-sum member space; the
    per-class coefficient vectors must have lengths sqrt(2)*std and sum to
    zero, i.e. close a triangle. A shared rotation is the one remaining
    degree of freedom; the scan picks the most interior feasible solution.
    """
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if mean.shape != (3,) or std.shape != (3,):
        raise InfeasibleConstruction("solver handles M=3 members over C=3 classes")
    if abs(mean.sum() - 1.0) > 1e-9 or np.any(mean < 0) or np.any(std < 0):
        raise InfeasibleConstruction("targets must be a simplex mean and non-negative stds")
    if np.all(std == 0):
        return np.tile(mean, (3, 1))
    r = np.sqrt(2.0) * std
    if np.any(r == 0):
        raise InfeasibleConstruction("mixed zero/non-zero stds do not close a triangle")
    cphi = (r[2] ** 2 - r[0] ** 2 - r[1] ** 2) / (2.0 * r[0] * r[1])
    if abs(cphi) > 1.0 + 1e-9:
        raise InfeasibleConstruction(
            f"std targets {std} violate the triangle condition (cos angle {cphi:.4f})"
        )
    cphi = float(np.clip(cphi, -1.0, 1.0))
    sphi = np.sqrt(1.0 - cphi**2)
    w = np.array([[r[0], 0.0], [r[1] * cphi, r[1] * sphi]])
    w = np.vstack([w, -w.sum(axis=0)])  # (class, 2) coefficient vectors
    u = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    v = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)
    best_lo, best = -np.inf, None
    for theta in np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False):
        ct, st = np.cos(theta), np.sin(theta)
        alpha = w[:, 0] * ct - w[:, 1] * st
        beta = w[:, 0] * st + w[:, 1] * ct
        members = mean + np.outer(u, alpha) + np.outer(v, beta)
        lo = members.min()
        if lo > best_lo:
            best_lo, best = lo, members
    if best_lo < -1e-12:
        raise InfeasibleConstruction(
            f"no rotation keeps members non-negative (best min entry {best_lo:.3e})"
        )
    return np.clip(best, 0.0, None)


def build_axiom_case(name: str) -> AxiomCase:
    """Construct the base and transformed ensembles for one axiom."""
    if name == "A2":
        p = np.eye(3)
        q = np.full((3, 3), 1.0 / 3.0)
        return AxiomCase(
            name,
            p,
            q,
            (np.full(3, 1.0 / 3.0), np.full(3, np.sqrt(1.0 / 3.0))),
            (np.full(3, 1.0 / 3.0), np.zeros(3)),
        )
    if name == "A3":
        return AxiomCase(
            name,
            np.tile(_MEAN_BASE, (3, 1)),
            solve_members(_MEAN_BASE, _STD_SPREAD),
            (_MEAN_BASE, np.zeros(3)),
            (_MEAN_BASE, _STD_SPREAD),
        )
    if name == "A4":
        return AxiomCase(
            name,
            solve_members(_MEAN_BASE, _STD_BASE),
            solve_members(_MEAN_CENTER, _STD_BASE),
            (_MEAN_BASE, _STD_BASE),
            (_MEAN_CENTER, _STD_BASE),
        )
    if name == "A5":
        return AxiomCase(
            name,
            solve_members(_MEAN_BASE, _STD_BASE),
            solve_members(_MEAN_VERTEX, _STD_BASE),
            (_MEAN_BASE, _STD_BASE),
            (_MEAN_VERTEX, _STD_BASE),
        )
    raise ValueError(f"unknown axiom case {name!r}; expected one of {AXIOM_NAMES}")


def gated_members(members: np.ndarray, k: float | None) -> np.ndarray:
    """Apply the variance gate at a fixed k; k=None means gating disabled."""
    if k is None:
        return members
    params = GateParams.from_k(k, members.shape[1])
    return vgn_forward(members[None, :, :], params).gated[0]


def _evaluate(case: AxiomCase) -> list[AxiomRow]:
    rows = []
    for tag, members in (("P", case.p_members), ("Q", case.q_members)):
        score = float(vgmu_score(ensemble_moments(members[None, :, :]))[0])
        for k, label in zip(K_GRID, K_LABELS):
            tu, au, eu = decompose(gated_members(members, k), normalize=True)
            rows.append(AxiomRow(case.name, tag, label, tu, au, eu, score))
    return rows


def run_axiom_suite() -> AxiomSuiteResult:
    """Evaluate every case on the k grid and check the trend assertions."""
    rows: list[AxiomRow] = []
    for name in AXIOM_NAMES:
        rows.extend(_evaluate(build_axiom_case(name)))
    result = AxiomSuiteResult(rows=rows, trend_failures=[])
    failures = check_trends(result)
    return AxiomSuiteResult(rows=rows, trend_failures=failures)


def check_trends(result: AxiomSuiteResult) -> list[str]:
    """Exact trend assertions; magnitudes are checked by the test suite."""
    failures = []

    def fail(msg: str) -> None:
        failures.append(msg)

    # A0: non-negativity everywhere (epistemic part up to float noise)
    for r in result.rows:
        if r.tu < 0 or r.au < 0 or r.eu < -1e-9:
            fail(f"A0: negative uncertainty in {r}")

    # A1: identical-member ensembles keep zero epistemic uncertainty at all k
    for case, tag in (("A2", "Q"), ("A3", "P")):
        for label in K_LABELS:
            r = result.row(case, tag, label)
            if abs(r.eu) > 1e-12:
                fail(f"A1: {case}.{tag} at k={label} has eu={r.eu:.3e}")

    # A2: vertex ensemble keeps maximal eu; uniform ensemble keeps tu=au=1;
    # both invariant across the k grid
    for label in K_LABELS:
        r = result.row("A2", "P", label)
        if abs(r.eu - 1.0) > 1e-9:
            fail(f"A2: vertex ensemble eu={r.eu:.6f} at k={label}")
        rq = result.row("A2", "Q", label)
        if abs(rq.tu - 1.0) > 1e-9 or abs(rq.au - 1.0) > 1e-9:
            fail(f"A2: uniform ensemble tu/au drifted at k={label}")

    # A3: gating attenuates the epistemic signal monotonically
    eus = [result.row("A3", "Q", label).eu for label in K_LABELS]
    if not (eus[0] > eus[1] > eus[2]):
        fail(f"A3: eu not strictly decreasing over k grid: {eus}")
    if not (
        result.row("A3", "Q", "disabled").vgmu > result.row("A3", "P", "disabled").vgmu
    ):
        fail("A3: spread did not increase the margin uncertainty")

    # A4: center shift moves tu/au up while eu stays put
    p4, q4 = result.row("A4", "P", "disabled"), result.row("A4", "Q", "disabled")
    if not (q4.tu > p4.tu and q4.au > p4.au):
        fail("A4: center shift did not increase tu and au")
    if abs(p4.eu - q4.eu) > 0.01:
        fail(f"A4: |delta eu| = {abs(p4.eu - q4.eu):.4f} exceeds 0.01")

    # A5: the epistemic gap shrinks monotonically as gating strengthens
    gaps = [
        abs(result.row("A5", "P", label).eu - result.row("A5", "Q", label).eu)
        for label in K_LABELS
    ]
    if not (gaps[0] > gaps[1] > gaps[2]):
        fail(f"A5: epistemic gap not strictly decreasing over k grid: {gaps}")
    return failures
