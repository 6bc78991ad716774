"""
Numerical studies of the Gram matrix of persistent regressors: minimum
eigenvalues of i.i.d. versus unit-root panels, the Brownian functional
matrix D, the deviation bound, and sparse restricted eigenvalues.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from app.models.diagnostics import DeviationBoundRow, EigenStudyRow, ExpectedDSummary
from app.services.dgp_service import DgpService
from app.services.numerics import RngStream, min_eigenvalue

logger = logging.getLogger(__name__)

T = TypeVar("T")

MAX_SUPPORT = 8
MAX_COLUMNS = 20

# base-stream offsets so the studies of one run never share replication draws
EXPECTED_D_OFFSET = 2_000_000
DEVIATION_BOUND_OFFSET = 3_000_000

# sizes below which the E[D] average is a smoke run rather than a study
EXPECTED_D_MIN_N = 500
EXPECTED_D_MIN_REPS = 100


def scaled_gram(X: np.ndarray, unit_root: bool = False) -> np.ndarray:
    """
    Demeaned Gram matrix divided by n, and by n again for unit-root panels.

    Args:
        X: n x s panel, n >= 2
        unit_root: scale by n^2 instead of n

    Returns:
        s x s symmetric positive semidefinite matrix
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DiagnosticsError(f"scaled_gram needs an n x s panel with n >= 2, got {X.shape}")
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    gram = Xc.T @ Xc / n
    if unit_root:
        gram /= n
    return 0.5 * (gram + gram.T)


def sparse_restricted_min_eigen(Sigma: np.ndarray, k: int) -> float:
    """
    Smallest eigenvalue over all principal submatrices of size at most k.

    By eigenvalue interlacing the minimum is attained on supports of size
    exactly min(k, p), so only those are enumerated.

    Raises:
        DiagnosticsError: if Sigma is empty or k < 1
        TooLarge: if k > 8 or Sigma has more than 20 columns
    """
    Sigma = np.asarray(Sigma, dtype=float)
    p = Sigma.shape[1] if Sigma.ndim == 2 else 0
    if p == 0:
        raise DiagnosticsError(f"Sigma must be a nonempty square matrix, got shape {Sigma.shape}")
    if k < 1:
        raise DiagnosticsError(f"k must be >= 1, got {k}")
    if k > MAX_SUPPORT or p > MAX_COLUMNS:
        raise TooLarge(f"Support enumeration limited to k <= {MAX_SUPPORT}, p <= {MAX_COLUMNS}; got k={k}, p={p}")
    size = min(k, p)
    best = np.inf
    for support in itertools.combinations(range(p), size):
        idx = np.array(support)
        best = min(best, min_eigenvalue(Sigma[np.ix_(idx, idx)]))
    return float(best)


class DiagnosticsService:
    """Replicated eigenvalue and deviation-bound studies"""

    def __init__(self, dgp: DgpService, jobs: int = 1):
        self.dgp = dgp
        self.jobs = jobs

    def _replicate(self, reps: int, stream: RngStream, task: Callable[[RngStream], T]) -> list[T]:
        """Run ``task`` on stream.spawn(r) for r = 0..reps-1; results in replication order."""
        if reps < 1:
            raise DiagnosticsError(f"reps must be >= 1, got {reps}")
        children = [stream.spawn(rep) for rep in range(reps)]
        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                return list(pool.map(task, children))
        return [task(child) for child in children]

    def eigen_study(self, s_values: list[int], n: int, reps: int, stream: RngStream) -> list[EigenStudyRow]:
        """
        Compare i.i.d. N(0, I_s) panels with unit-root panels X_t = sum e_r.

        Each replication draws one n x max(s) panel of each type and studies
        its leading s columns for every s, so the unit-root minimum
        eigenvalue is nonincreasing in s replication by replication.

        Returns:
            One row per s, in the order given, averaged over replications
        """
        if not s_values:
            raise DiagnosticsError("eigen_study needs at least one s value")
        s_max = max(s_values)
        if min(s_values) < 1 or s_max >= n:
            raise DiagnosticsError(f"s values must lie in 1..{n - 1}, got {s_values}")

        def one(child: RngStream) -> np.ndarray:
            iid = child.normal_matrix(n, s_max)
            unit = np.cumsum(child.normal_matrix(n, s_max), axis=0)
            g_iid = scaled_gram(iid)
            g_unit = scaled_gram(unit, unit_root=True)
            out = np.empty((len(s_values), 4))
            for i, s in enumerate(s_values):
                a = g_iid[:s, :s]
                b = g_unit[:s, :s]
                out[i] = (np.min(np.diag(a)), min_eigenvalue(a), np.min(np.diag(b)), min_eigenvalue(b))
            return out

        results = self._replicate(reps, stream, one)
        total = np.zeros((len(s_values), 4))
        for result in results:
            total += result
        mean = total / reps
        logger.info(f"Eigen study done: n={n}, reps={reps}, s={s_values}")
        return [
            EigenStudyRow(
                s=s,
                min_diag_iid=float(mean[i, 0]),
                min_eig_iid=float(mean[i, 1]),
                min_diag_unit=float(mean[i, 2]),
                min_eig_unit=float(mean[i, 3]),
            )
            for i, s in enumerate(s_values)
        ]

    def expected_D(self, s: int, n: int, reps: int, stream: RngStream) -> np.ndarray:
        """
        Monte-Carlo mean of the scaled Gram of s independent Gaussian random
        walks, the discretized D_jk = int B_j B_k - int B_j int B_k.
        Its expectation is I_s / 6.

        Replication r draws from stream.spawn(EXPECTED_D_OFFSET + r). Runs
        with n < 500 or reps < 100 are accepted for smoke tests but logged,
        since the average is then too noisy to compare against I_s / 6.
        """
        if s < 1 or n < 2:
            raise DiagnosticsError(f"expected_D needs s >= 1 and n >= 2, got s={s}, n={n}")
        if n < EXPECTED_D_MIN_N or reps < EXPECTED_D_MIN_REPS:
            logger.warning(
                f"expected_D with n={n}, reps={reps} is below n={EXPECTED_D_MIN_N}, "
                f"reps={EXPECTED_D_MIN_REPS}; treat the average as a smoke run"
            )

        def one(child: RngStream) -> np.ndarray:
            return scaled_gram(np.cumsum(child.normal_matrix(n, s), axis=0), unit_root=True)

        total = np.zeros((s, s))
        for draw in self._replicate(reps, stream.spawn(EXPECTED_D_OFFSET), one):
            total += draw
        mean = total / reps
        return 0.5 * (mean + mean.T)

    @staticmethod
    def summarize_D(D: np.ndarray, n: int, reps: int) -> ExpectedDSummary:
        diag = np.diag(D)
        off = D - np.diag(diag)
        return ExpectedDSummary(
            s=D.shape[0],
            n=n,
            replications=reps,
            mean_diagonal=float(diag.mean()),
            max_abs_diagonal_error=float(np.max(np.abs(diag - 1.0 / 6.0))),
            max_abs_off_diagonal=float(np.max(np.abs(off))),
        )

    def deviation_bound_curve(self, p_values: list[int], n: int, reps: int, stream: RngStream) -> list[float]:
        """
        Replication average of 4 ||n^-1 sum_t X_{t-1} u_t||_inf with X demeaned.

        Each replication simulates (u_t, e_t) as a vector AR(1) with the full
        Toeplitz covariance, cumulates e into max(p) unit roots and reads off
        the statistic for the leading p columns. Replication r draws from
        stream.spawn(DEVIATION_BOUND_OFFSET + r).
        """
        if not p_values or min(p_values) < 1:
            raise DiagnosticsError(f"p values must be positive, got {p_values}")
        if n < 2:
            raise DiagnosticsError(f"n must be >= 2, got {n}")
        p_max = max(p_values)
        innov = self.dgp.innovation_spec(p_max + 1)

        def one(child: RngStream) -> np.ndarray:
            v = self.dgp.gen_var1(innov, n, child)
            u = v[1:, 0]
            X = np.zeros((n + 1, p_max))
            X[1:] = np.cumsum(v[1:, 1:], axis=0)
            lagged = X[:-1] - X[:-1].mean(axis=0)
            cross = np.abs(lagged.T @ u) / n
            running = np.maximum.accumulate(cross)
            return np.array([4.0 * running[p - 1] for p in p_values])

        total = np.zeros(len(p_values))
        for draw in self._replicate(reps, stream.spawn(DEVIATION_BOUND_OFFSET), one):
            total += draw
        return (total / reps).tolist()

    def deviation_bound_rows(self, p_values: list[int], n: int, reps: int, stream: RngStream) -> list[DeviationBoundRow]:
        curve = self.deviation_bound_curve(p_values, n, reps, stream)
        return [DeviationBoundRow(p=p, deviation=value) for p, value in zip(p_values, curve)]


class DiagnosticsError(Exception):
    """Exception raised by DiagnosticsService"""

    pass


class TooLarge(DiagnosticsError):
    """Support enumeration would be combinatorially too large"""
