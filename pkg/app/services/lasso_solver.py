"""
Pathwise coordinate descent for the weighted-L1 least-squares problem

    min_theta  n^-1 ||Y_dd - W_dd theta||^2 + lam * sum_j h_j |theta_j|

on demeaned data, with the intercept recovered afterwards as
alpha = mean(Y) - mean(W)' theta.
"""

import logging

import numba
import numpy as np

from app.config.settings import SolverSettings
from app.models.lasso import LassoFit, Penalty
from app.services.numerics import NumericsError, cholesky_solve, column_stats

logger = logging.getLogger(__name__)

# above this many columns the active-set Gram block is formed on demand
GRAM_CACHE_MAX_COLUMNS = 2000
# coefficients one active-set step may drop before handing back to the sweeps
MAX_SUPPORT_DROPS = 32


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(|z| - gamma, 0)"""
    if gamma < 0:
        raise LassoSolverError(f"Threshold must be >= 0, got {gamma}")
    return float(np.sign(z) * max(abs(z) - gamma, 0.0))


def demean(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Subtract column means.

    Args:
        M: vector or matrix with at least one row

    Returns:
        Tuple of (demeaned copy, column means)
    """
    M = np.asarray(M, dtype=float)
    if M.shape[0] < 1:
        raise LassoSolverError("demean needs at least one row")
    means = M.mean(axis=0)
    return M - means, means


@numba.njit(cache=True, nogil=True)
def _cd_sweep(X, r, theta, col_sq_n, thresh, idx):
    # one cyclic pass over idx; r is the running residual and is updated in place
    n = X.shape[0]
    max_change = 0.0
    for jj in range(idx.shape[0]):
        j = idx[jj]
        old = theta[j]
        dot = 0.0
        for i in range(n):
            dot += X[i, j] * r[i]
        z = dot / n + col_sq_n[j] * old
        if z > thresh[j]:
            new = (z - thresh[j]) / col_sq_n[j]
        elif z < -thresh[j]:
            new = (z + thresh[j]) / col_sq_n[j]
        else:
            new = 0.0
        if new != old:
            delta = new - old
            for i in range(n):
                r[i] -= delta * X[i, j]
            theta[j] = new
            change = abs(delta) * np.sqrt(col_sq_n[j])
            if change > max_change:
                max_change = change
    return max_change


class _DemeanedProblem:
    """Demeaned data plus the per-column quantities every sweep needs."""

    def __init__(self, Y: np.ndarray, W: np.ndarray, pinned: np.ndarray | None = None):
        Y = np.asarray(Y, dtype=float)
        W = np.asarray(W, dtype=float)
        if Y.ndim != 1 or W.ndim != 2:
            raise LassoSolverError(f"Expected vector Y and matrix W, got {Y.shape} and {W.shape}")
        if W.shape[0] != Y.shape[0]:
            raise LassoSolverError(f"W has {W.shape[0]} rows but Y has length {Y.shape[0]}")
        if Y.shape[0] < 2:
            raise LassoSolverError("At least two observations are required")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(W))):
            raise LassoSolverError("Y and W must be finite")

        self.n, self.p = W.shape
        self.y_mean = float(Y.mean())
        self.y = Y - self.y_mean
        means, _, degenerate = column_stats(W)
        self.w_mean = means
        self.w = np.asfortranarray(W - means)
        self.col_sq_n = np.einsum("ij,ij->j", self.w, self.w) / self.n
        self.pinned = np.zeros(self.p, dtype=bool)
        if pinned is not None:
            self.pinned = np.asarray(pinned, dtype=bool)
            if self.pinned.shape != (self.p,):
                raise LassoSolverError(f"pinned mask must have length {self.p}")
        self.degenerate = degenerate
        self.excluded = degenerate | self.pinned
        self.free_idx = np.flatnonzero(~self.excluded).astype(np.int64)
        self.wy_n = self.w.T @ self.y / self.n
        self._gram: np.ndarray | None = None

    def gram_block(self, idx: np.ndarray) -> np.ndarray:
        """W_dd[:, idx]' W_dd[:, idx] / n"""
        if self.p <= GRAM_CACHE_MAX_COLUMNS:
            if self._gram is None:
                self._gram = self.w.T @ self.w / self.n
            return self._gram[np.ix_(idx, idx)]
        block = self.w[:, idx]
        return block.T @ block / self.n

    def gradient(self, r: np.ndarray) -> np.ndarray:
        """(2/n) W_dd' r"""
        return 2.0 / self.n * (self.w.T @ r)

    def residual(self, theta: np.ndarray) -> np.ndarray:
        return self.y - self.w @ theta

    def objective(self, theta: np.ndarray, r: np.ndarray, lam: float, weights: np.ndarray) -> float:
        return float(r @ r / self.n + lam * np.sum(weights * np.abs(theta)))

    def lambda_max(self, weights: np.ndarray) -> float:
        if self.free_idx.size == 0:
            return 0.0
        g = np.abs(self.gradient(self.y))[self.free_idx]
        return float(np.max(g / weights[self.free_idx]))


def _kkt_gap(grad: np.ndarray, theta: np.ndarray, lam: float, weights: np.ndarray) -> np.ndarray:
    bound = lam * weights
    return np.where(
        theta == 0.0,
        np.maximum(np.abs(grad) - bound, 0.0),
        np.abs(grad - bound * np.sign(theta)),
    )


class LassoSolver:
    """
    Cyclic coordinate-descent solver with warm starts and exact active-set
    steps.

    Each outer iteration is one full sweep over all free columns followed by
    a KKT check on a freshly computed residual. While the check fails the
    solver minimizes the objective over the current signed support in closed
    form, stepping back to the first sign change when the unconstrained
    minimizer leaves the orthant. Coordinate sweeps over the nonzero
    coefficients are the fallback when that step cannot be taken.
    """

    def __init__(
        self,
        tol: float = 1e-7,
        max_sweeps: int = 10_000,
        check_objective: bool = False,
    ):
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.check_objective = check_objective

    @classmethod
    def from_settings(cls, settings: SolverSettings) -> "LassoSolver":
        return cls(
            tol=settings.tol,
            max_sweeps=settings.max_sweeps,
            check_objective=settings.check_objective,
        )

    def fit(
        self,
        Y: np.ndarray,
        W: np.ndarray,
        penalty: Penalty,
        tol: float | None = None,
        max_sweeps: int | None = None,
        warm_start: np.ndarray | None = None,
        pinned: np.ndarray | None = None,
        strict: bool = False,
    ) -> LassoFit:
        """
        Minimize the demeaned weighted-L1 objective.

        Args:
            Y: response of length n >= 2
            W: n x p regressor matrix
            penalty: lambda and positive weights of length p
            tol: KKT tolerance (defaults to the solver's)
            max_sweeps: sweep cap (defaults to the solver's)
            warm_start: initial coefficients of length p
            pinned: boolean mask of columns held at 0 regardless of lambda
            strict: raise MaxSweepsExceeded instead of returning an
                unconverged fit

        Returns:
            LassoFit at the final iterate

        Raises:
            DegenerateColumn: if lambda = 0 and a column has zero variance
            MaxSweepsExceeded: if strict and the sweep cap is hit
        """
        problem = _DemeanedProblem(Y, W, pinned)
        return self._solve(
            problem,
            penalty,
            tol=self.tol if tol is None else tol,
            max_sweeps=self.max_sweeps if max_sweeps is None else max_sweeps,
            warm_start=warm_start,
            strict=strict,
        )

    def _solve(
        self,
        problem: _DemeanedProblem,
        penalty: Penalty,
        tol: float,
        max_sweeps: int,
        warm_start: np.ndarray | None = None,
        strict: bool = False,
    ) -> LassoFit:
        lam = penalty.lam
        weights = penalty.weights
        if weights.shape[0] != problem.p:
            raise LassoSolverError(
                f"Penalty has {weights.shape[0]} weights but W has {problem.p} columns"
            )
        free_degenerate = problem.degenerate & ~problem.pinned
        if lam == 0.0 and np.any(free_degenerate):
            cols = np.flatnonzero(free_degenerate).tolist()
            raise DegenerateColumn(f"Zero-variance column(s) {cols} with lambda = 0")

        theta = np.zeros(problem.p)
        if warm_start is not None:
            theta = np.array(warm_start, dtype=float)
            if theta.shape != (problem.p,):
                raise LassoSolverError(f"warm_start must have length {problem.p}")
            theta[problem.excluded] = 0.0

        if lam > 0.0 and lam >= problem.lambda_max(weights):
            theta = np.zeros(problem.p)
            return self._finish(problem, penalty, theta, sweeps=0, converged=True)

        thresh = lam * weights / 2.0
        all_idx = problem.free_idx
        r = problem.residual(theta)
        previous = problem.objective(theta, r, lam, weights) if self.check_objective else None
        sweeps = 0
        converged = False

        while sweeps < max_sweeps:
            _cd_sweep(problem.w, r, theta, problem.col_sq_n, thresh, all_idx)
            sweeps += 1
            previous = self._assert_descent(problem, theta, r, lam, weights, previous)

            r = problem.residual(theta)
            gap = float(np.max(_kkt_gap(problem.gradient(r), theta, lam, weights)[all_idx], initial=0.0))
            logger.debug(f"sweep {sweeps}: lam={lam:.4e} kkt={gap:.3e} active={np.count_nonzero(theta)}")
            if gap <= tol:
                converged = True
                break
            if sweeps >= max_sweeps:
                break

            reached, moved = self._active_set_step(problem, theta, lam, weights)
            r = problem.residual(theta)
            previous = self._assert_descent(problem, theta, r, lam, weights, previous)
            if reached:
                gap = float(np.max(_kkt_gap(problem.gradient(r), theta, lam, weights)[all_idx], initial=0.0))
                logger.debug(f"active-set step: lam={lam:.4e} kkt={gap:.3e} active={np.count_nonzero(theta)}")
                if gap <= tol:
                    converged = True
                    break
            if moved:
                continue

            active = np.flatnonzero(theta).astype(np.int64)
            while active.size and sweeps < max_sweeps:
                _cd_sweep(problem.w, r, theta, problem.col_sq_n, thresh, active)
                sweeps += 1
                previous = self._assert_descent(problem, theta, r, lam, weights, previous)
                grad = 2.0 / problem.n * (problem.w[:, active].T @ r)
                if np.max(_kkt_gap(grad, theta[active], lam, weights[active])) <= tol:
                    break

        if not converged:
            logger.warning(f"Coordinate descent hit {max_sweeps} sweeps at lam={lam:.4e}")
        fit = self._finish(problem, penalty, theta, sweeps=sweeps, converged=converged)
        if not converged and strict:
            raise MaxSweepsExceeded(fit)
        return fit

    @staticmethod
    def _active_set_step(
        problem: _DemeanedProblem,
        theta: np.ndarray,
        lam: float,
        weights: np.ndarray,
    ) -> tuple[bool, bool]:
        """
        Minimize the objective over the signed support of ``theta``.

        On a fixed sign pattern s the objective is the quadratic whose
        minimizer solves G_A theta_A = W_A'Y/n - (lam/2) h_A * s. When that
        minimizer flips a sign the iterate moves towards it only up to the
        first zero crossing, the crossing coefficient leaves the support and
        the solve is repeated, at most MAX_SUPPORT_DROPS times. ``theta`` is
        updated in place only if the objective does not increase.

        Returns:
            Tuple of (restricted minimizer reached, theta changed)
        """
        r = problem.residual(theta)
        current = problem.objective(theta, r, lam, weights)
        trial = theta.copy()
        reached = False
        for _ in range(min(np.count_nonzero(theta), MAX_SUPPORT_DROPS) + 1):
            A = np.flatnonzero(trial)
            if A.size == 0:
                break
            signs = np.sign(trial[A])
            rhs = problem.wy_n[A] - 0.5 * lam * weights[A] * signs
            try:
                target = cholesky_solve(problem.gram_block(A), rhs)
            except NumericsError:
                break
            if not np.all(np.isfinite(target)):
                break
            flipped = target * signs <= 0.0
            if not flipped.any():
                trial[A] = target
                reached = True
                break
            step = target - trial[A]
            crossing = np.full(A.size, np.inf)
            crossing[flipped] = -trial[A][flipped] / step[flipped]
            first = int(np.argmin(crossing))
            moved = trial[A] + crossing[first] * step
            moved[moved * signs <= 0.0] = 0.0
            moved[first] = 0.0
            trial[A] = moved

        candidate = problem.objective(trial, problem.residual(trial), lam, weights)
        if candidate > current or np.array_equal(trial, theta):
            return False, False
        theta[:] = trial
        return reached, True

    def _assert_descent(self, problem, theta, r, lam, weights, previous):
        if not self.check_objective:
            return previous
        current = problem.objective(theta, r, lam, weights)
        assert current <= previous + 1e-12 * max(1.0, abs(previous)), (
            f"objective increased from {previous!r} to {current!r}"
        )
        return current

    def _finish(
        self,
        problem: _DemeanedProblem,
        penalty: Penalty,
        theta: np.ndarray,
        sweeps: int,
        converged: bool,
    ) -> LassoFit:
        r = problem.residual(theta)
        gaps = _kkt_gap(problem.gradient(r), theta, penalty.lam, penalty.weights)
        gaps[problem.excluded] = 0.0
        return LassoFit(
            intercept=float(problem.y_mean - problem.w_mean @ theta),
            coefficients=theta,
            penalty=penalty,
            active_set=np.flatnonzero(theta).tolist(),
            kkt_residual=float(np.max(gaps, initial=0.0)),
            objective=problem.objective(theta, r, penalty.lam, penalty.weights),
            sweeps=sweeps,
            converged=converged,
            degenerate=np.flatnonzero(problem.excluded).tolist(),
        )

    def kkt_violation(self, fit: LassoFit, Y: np.ndarray, W: np.ndarray) -> float:
        """
        Largest KKT gap of ``fit`` on (Y, W); 0 means exact stationarity.
        Columns the fit pinned at zero are skipped.
        """
        problem = _DemeanedProblem(Y, W)
        theta = np.asarray(fit.coefficients, dtype=float)
        if theta.shape != (problem.p,):
            raise LassoSolverError(f"Fit has {theta.shape[0]} coefficients, W has {problem.p} columns")
        gaps = _kkt_gap(problem.gradient(problem.residual(theta)), theta, fit.penalty.lam, fit.penalty.weights)
        gaps[fit.degenerate] = 0.0
        return float(np.max(gaps, initial=0.0))

    def lambda_max(
        self,
        Y: np.ndarray,
        W: np.ndarray,
        penalty_weights: np.ndarray,
        pinned: np.ndarray | None = None,
    ) -> float:
        """Smallest lambda at which theta = 0 satisfies the KKT conditions."""
        return _DemeanedProblem(Y, W, pinned).lambda_max(np.asarray(penalty_weights, dtype=float))

    @staticmethod
    def lambda_grid(lam_max: float, grid_size: int, eps_ratio: float) -> np.ndarray:
        """Log-spaced grid from lam_max down to eps_ratio * lam_max."""
        if grid_size < 2:
            raise LassoSolverError(f"grid_size must be >= 2, got {grid_size}")
        if not 0.0 < eps_ratio < 1.0:
            raise LassoSolverError(f"eps_ratio must lie in (0, 1), got {eps_ratio}")
        if lam_max <= 0.0:
            return np.zeros(grid_size)
        grid = np.geomspace(lam_max, eps_ratio * lam_max, grid_size)
        grid[0] = lam_max
        grid[-1] = eps_ratio * lam_max
        return grid

    def fit_path(
        self,
        Y: np.ndarray,
        W: np.ndarray,
        penalty_weights: np.ndarray,
        grid_size: int = 100,
        eps_ratio: float = 1e-4,
        lambdas: np.ndarray | None = None,
        pinned: np.ndarray | None = None,
    ) -> list[LassoFit]:
        """
        Warm-started fits along a decreasing lambda grid.

        Args:
            Y: response
            W: regressor matrix
            penalty_weights: positive weights of length p
            grid_size: number of lambda values
            eps_ratio: last lambda as a fraction of lambda_max
            lambdas: explicit grid; overrides grid_size/eps_ratio
            pinned: columns held at 0

        Returns:
            One LassoFit per lambda, in grid order
        """
        problem = _DemeanedProblem(Y, W, pinned)
        weights = np.asarray(penalty_weights, dtype=float)
        if lambdas is None:
            lambdas = self.lambda_grid(problem.lambda_max(weights), grid_size, eps_ratio)

        fits: list[LassoFit] = []
        theta = None
        for lam in lambdas:
            fit = self._solve(
                problem,
                Penalty(lam=float(lam), weights=weights),
                tol=self.tol,
                max_sweeps=self.max_sweeps,
                warm_start=theta,
            )
            theta = fit.coefficients
            fits.append(fit)
        return fits


class LassoSolverError(Exception):
    """Exception raised by LassoSolver"""

    pass


class DegenerateColumn(LassoSolverError):
    """A zero-variance column cannot be identified without a penalty"""


class MaxSweepsExceeded(LassoSolverError):
    """The sweep cap was reached; ``fit`` holds the best iterate"""

    def __init__(self, fit: LassoFit):
        super().__init__(
            f"Coordinate descent did not converge in {fit.sweeps} sweeps "
            f"(KKT gap {fit.kkt_residual:.3e})"
        )
        self.fit = fit
