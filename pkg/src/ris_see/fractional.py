"""Generic ratio maximization: Dinkelbach loop over a projected-gradient
concave maximizer.

Everything here works on flat real vectors. Complex decision variables are
handled by the callers as stacked (Re, Im) pairs with gradients assembled
from the conjugate (Wirtinger) derivative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Backtracking line-search constants.
ARMIJO_C1 = 1e-4
SHRINK = 0.5
MAX_BACKTRACKS = 60


class DomainKind(enum.Enum):
    REAL_BOX = "real_box"
    COMPLEX_QUADRATIC = "complex_quadratic"


@dataclass(frozen=True)
class FeasibleSet:
    """Projection oracle plus a constraint-violation measure.

    ``project`` maps any point to a feasible one (Euclidean projection for
    the simple sets used here); ``residual`` returns a nonnegative scalar
    that is zero (to tolerance) exactly on the feasible set.
    """

    project: Callable[[np.ndarray], np.ndarray]
    residual: Callable[[np.ndarray], float]


@dataclass(frozen=True)
class FractionalProblem:
    """Ratio of a concave numerator over a positive convex denominator.

    Both callables map a point to a (value, gradient) pair.
    """

    numerator: Callable[[np.ndarray], tuple]
    denominator: Callable[[np.ndarray], tuple]
    feasible_set: FeasibleSet
    dimension: int
    domain_kind: DomainKind = DomainKind.REAL_BOX


@dataclass
class SolverReport:
    iterations: int = 0
    lambda_trace: list = field(default_factory=list)
    final_kkt_residual: float = np.inf
    converged: bool = False


@dataclass
class ScaTrace:
    """Outer-loop record shared by the sequential optimizers."""

    objective_values: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    rejected_step: bool = False


def concave_subproblem_solve(objective: Callable[[np.ndarray], tuple],
                             feasible_set: FeasibleSet,
                             start: np.ndarray,
                             tol: float = 1e-6,
                             max_iter: int = 500) -> np.ndarray:
    """Spectral projected gradient ascent with an Armijo safeguard.

    Barzilai-Borwein steps give the right scale on badly conditioned
    problems; each trial step is backtracked until the sufficient-increase
    condition holds, so the objective is nondecreasing by construction.
    Terminates when the stationarity measure
    ``||x - project(x + s grad)|| / s`` at the accepted step s falls below
    ``tol``, when the iterate stops moving, on a failed line search, or
    after ``max_iter`` iterations.
    """
    x = feasible_set.project(np.asarray(start, dtype=float).copy())
    f, g = objective(x)
    step = 1.0
    x_old = g_old = None
    for _ in range(max_iter):
        if x_old is not None:
            dx = x - x_old
            dg = g - g_old
            curv = -float(dx @ dg)          # >= 0 for concave objectives
            if curv > 0:
                step = float(dx @ dx) / curv
            else:
                step *= 4.0
        step = min(max(step, 1e-30), 1e30)
        t = step
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            y = feasible_set.project(x + t * g)
            dy = y - x
            fy, gy = objective(y)
            if fy >= f + ARMIJO_C1 * float(g @ dy) and fy >= f:
                accepted = True
                break
            t *= SHRINK
        if not accepted:
            break
        moved = float(np.linalg.norm(dy))
        x_old, g_old = x, g
        x, f, g = y, fy, gy
        if moved / t <= tol or moved <= 1e-14 * (1.0 + float(np.linalg.norm(x))):
            break
    return x


def dinkelbach_maximize(problem: FractionalProblem,
                        start: np.ndarray,
                        tol: float = 1e-7,
                        max_iter: int = 100,
                        inner_tol: float = 1e-6,
                        inner_max_iter: int = 500,
                        parametric_solver: Callable | None = None):
    """Maximize numerator/denominator by the Dinkelbach parametric loop.

    Each iteration maximizes N(x) - lambda D(x) from the previous iterate
    and updates lambda to the new ratio, which makes the lambda sequence
    nondecreasing. Stops when |N - lambda D| / D <= tol.

    The parametric maximization runs through the generic projected-gradient
    solver unless ``parametric_solver(lam, x) -> x`` is supplied by a
    caller that can exploit problem structure.
    """
    x = np.asarray(start, dtype=float).copy()
    fs = problem.feasible_set
    if fs.residual(x) > 1e-9 * (1.0 + float(np.linalg.norm(x))):
        raise ValueError("dinkelbach_maximize requires a feasible start")
    n, _ = problem.numerator(x)
    d, _ = problem.denominator(x)
    if d <= 0:
        raise ValueError("denominator must be positive on the feasible set")
    lam = n / d
    report = SolverReport(lambda_trace=[lam])
    for it in range(1, max_iter + 1):
        if parametric_solver is not None:
            x = parametric_solver(lam, x)
        else:
            def parametric(z, _lam=lam):
                nv, ng = problem.numerator(z)
                dv, dg = problem.denominator(z)
                return nv - _lam * dv, ng - _lam * dg

            # the stationarity measure carries gradient units, so scale the
            # inner tolerance by the gradient magnitude at the warm start
            _, g0 = parametric(x)
            x = concave_subproblem_solve(
                parametric, fs, x,
                tol=inner_tol * (1.0 + float(np.linalg.norm(g0))),
                max_iter=inner_max_iter)
        n, _ = problem.numerator(x)
        d, _ = problem.denominator(x)
        resid = abs(n - lam * d) / d
        lam = n / d
        report.lambda_trace.append(lam)
        report.iterations = it
        report.final_kkt_residual = resid
        if resid <= tol:
            report.converged = True
            break
    return x, report


def box_feasible_set(lower: np.ndarray, upper: np.ndarray) -> FeasibleSet:
    """Componentwise clipping onto [lower, upper]."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def project(x):
        return np.clip(x, lower, upper)

    def residual(x):
        return float(np.maximum(np.maximum(lower - x, x - upper), 0.0).max(initial=0.0))

    return FeasibleSet(project=project, residual=residual)


def ball_halfspace_set(radius2: float, normal: np.ndarray | None = None,
                       offset: float = 0.0) -> FeasibleSet:
    """Intersection of {||x||^2 <= radius2} and optionally {normal.x >= offset}.

    The Euclidean projection has a closed form: project onto the halfspace
    (done if inside the ball), else onto the ball (done if inside the
    halfspace), else onto the circle where both boundaries meet. The
    intersection must be nonempty, i.e. the hyperplane's closest point to
    the origin must lie in the ball.
    """
    if radius2 <= 0:
        raise ValueError("radius2 must be positive")
    r = float(np.sqrt(radius2))
    nvec = None if normal is None else np.asarray(normal, dtype=float)
    nn = None if nvec is None else float(nvec @ nvec)

    def project(x):
        y = np.asarray(x, dtype=float)
        if nvec is not None:
            gap = offset - float(nvec @ y)
            if gap > 0:
                y = y + nvec * (gap / nn)
        norm = float(np.linalg.norm(y))
        if norm <= r:
            return y.copy() if y is x else y
        y = y * (r / norm)
        if nvec is None or float(nvec @ y) >= offset:
            return y
        # both boundaries active: project onto the hyperplane, then onto
        # the sphere's circle inside it
        x0 = np.asarray(x, dtype=float)
        y_h = x0 + nvec * ((offset - float(nvec @ x0)) / nn)
        center = nvec * (offset / nn)
        rho2 = radius2 - float(center @ center)
        rho = np.sqrt(max(rho2, 0.0))
        d = y_h - center
        dn = float(np.linalg.norm(d))
        if dn == 0.0:
            return center
        return center + d * (rho / dn)

    def residual(x):
        y = np.asarray(x, dtype=float)
        res = max(float(np.linalg.norm(y) ** 2) - radius2, 0.0) / radius2
        if nvec is not None:
            scale = abs(offset) + 1.0
            res = max(res, max(offset - float(nvec @ y), 0.0) / scale)
        return res

    return FeasibleSet(project=project, residual=residual)


def project_feasible_gamma(gamma: np.ndarray, R: np.ndarray,
                           lower: float, upper: float) -> np.ndarray:
    """Radially rescale gamma so that lower <= gamma^H R gamma <= upper.

    The direction of gamma is preserved; a zero gamma with a positive
    lower bound is replaced by the dominant eigenvector of R scaled onto
    the lower boundary.
    """
    if not 0 < lower <= upper:
        raise ValueError("bounds must satisfy 0 < lower <= upper")
    gamma = np.asarray(gamma, dtype=complex).reshape(-1)
    R = np.asarray(R)
    q = float(np.real(gamma.conj() @ R @ gamma))
    if q <= 0:
        w, V = np.linalg.eigh(R)
        v = V[:, -1]
        if w[-1] <= 0:
            raise ValueError("R must be positive definite to repair a zero gamma")
        return v * np.sqrt(lower / w[-1])
    if q < lower:
        return gamma * np.sqrt(lower / q)
    if q > upper:
        return gamma * np.sqrt(upper / q)
    return gamma
