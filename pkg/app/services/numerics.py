"""
Dense linear algebra and reproducible random numbers shared by every service.

Matrices are plain float64 ``numpy`` arrays. Random normals come from a
counter-based Philox stream: each raw 64-bit word becomes a uniform on (0, 1)
through ``((raw >> 11) + 0.5) * 2**-53`` and consecutive uniform pairs are
mapped to normals with the Box-Muller transform. That algorithm is frozen;
changing it invalidates every seeded fixture.
"""

import logging

import numba
import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

_TWO_POW_MINUS_53 = 2.0**-53
_SEED_MODULUS = 2**64


class RngStream:
    """
    Single-owner stream of standard-normal variates.

    The stream is fully determined by ``seed``; ``position`` counts the raw
    64-bit words consumed so far. Do not share one stream between threads,
    spawn a child per worker instead.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise NumericsError(f"Seed must be nonnegative, got {seed}")
        self.seed = int(seed) % _SEED_MODULUS
        self.position = 0
        self._bitgen = np.random.Philox(key=self.seed)

    def spawn(self, index: int) -> "RngStream":
        """Child stream for replication ``index``: seed + index (mod 2**64)."""
        return RngStream((self.seed + int(index)) % _SEED_MODULUS)

    def raw(self, count: int) -> np.ndarray:
        words = self._bitgen.random_raw(count)
        self.position += count
        return np.asarray(words, dtype=np.uint64)

    def normal(self, count: int) -> np.ndarray:
        return rng_normal(self, count)

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """rows x cols standard normals filled row by row (one row per period)."""
        return rng_normal(self, rows * cols).reshape(rows, cols)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, position={self.position})"


def rng_normal(stream: RngStream, count: int) -> np.ndarray:
    """
    Draw ``count`` i.i.d. standard normals and advance the stream.

    Variates are produced in Box-Muller pairs; an odd count discards the
    second member of the last pair so the position always advances by an
    even number of words.
    """
    if count < 0:
        raise NumericsError(f"count must be >= 0, got {count}")
    pairs = (count + 1) // 2
    if pairs == 0:
        return np.empty(0)
    raw = stream.raw(2 * pairs)
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_MINUS_53
    radius = np.sqrt(-2.0 * np.log(uniforms[0::2]))
    angle = 2.0 * np.pi * uniforms[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


def _as_square(A: np.ndarray, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericsError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericsError(f"{name} contains non-finite entries")
    return A


def cholesky_factor(A: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive definite matrix.

    When a pivot is not positive the factorization is retried once with
    ``1e-10 * trace(A) / n`` added to the diagonal.

    Raises:
        NotPositiveDefinite: if the jittered matrix still has a pivot <= 0
    """
    A = _as_square(A)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    try:
        return linalg.cholesky(A, lower=True, check_finite=False)
    except linalg.LinAlgError:
        jitter = 1e-10 * np.trace(A) / n
        logger.debug(f"Cholesky pivot <= 0, retrying with diagonal jitter {jitter:.3e}")
        try:
            return linalg.cholesky(A + jitter * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError as e:
            raise NotPositiveDefinite(
                f"Matrix is not positive definite even after jitter {jitter:.3e}: {e}"
            ) from e


def cholesky_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Solve A X = B for symmetric positive definite A.

    Args:
        A: n x n symmetric positive definite matrix
        B: right-hand side, vector of length n or n x k matrix

    Returns:
        X with the same shape as B

    Raises:
        NotPositiveDefinite: if A is not positive definite
    """
    L = cholesky_factor(A)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != L.shape[0]:
        raise NumericsError(f"Dimension mismatch: A is {L.shape}, B has {B.shape[0]} rows")
    return linalg.cho_solve((L, True), B, check_finite=False)


def ols(X: np.ndarray, y: np.ndarray, intercept: bool = True) -> tuple[float, np.ndarray]:
    """
    Least squares through the normal equations.

    Args:
        X: n x k regressor matrix (k may be 0)
        y: response of length n
        intercept: fit an unpenalized intercept by demeaning first

    Returns:
        Tuple of (intercept, coefficients)
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise NumericsError(f"Dimension mismatch: X {X.shape}, y {y.shape}")
    if intercept:
        x_bar = X.mean(axis=0)
        y_bar = y.mean()
        Xc = X - x_bar
        yc = y - y_bar
    else:
        x_bar = np.zeros(X.shape[1])
        y_bar = 0.0
        Xc, yc = X, y
    if X.shape[1] == 0:
        return float(y_bar), np.zeros(0)
    coef = cholesky_solve(Xc.T @ Xc, Xc.T @ yc)
    return float(y_bar - x_bar @ coef), coef


@numba.njit(cache=True, nogil=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if np.sqrt(2.0 * off) <= tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return max_sweeps


JACOBI_MAX_SWEEPS = 100


def sym_eigen(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm is at most
    ``1e-12 * ||A||_F``.

    Returns:
        Tuple of (eigenvalues ascending, eigenvectors as columns)

    Raises:
        NonSymmetric: if max |A_ij - A_ji| > 1e-10 * max |A_ij|
    """
    A = _as_square(A)
    n = A.shape[0]
    scale = float(np.max(np.abs(A))) if n else 0.0
    asym = float(np.max(np.abs(A - A.T))) if n else 0.0
    if asym > 1e-10 * scale:
        raise NonSymmetric(f"Matrix is not symmetric: max asymmetry {asym:.3e}")
    if n == 0 or scale == 0.0:
        return np.zeros(n), np.eye(n)

    work = np.ascontiguousarray(0.5 * (A + A.T))
    vectors = np.eye(n)
    tol = 1e-12 * np.linalg.norm(work)
    sweeps = _jacobi_sweeps(work, vectors, tol, JACOBI_MAX_SWEEPS)
    if sweeps >= JACOBI_MAX_SWEEPS:
        logger.warning(f"Jacobi eigensolver stopped after {sweeps} sweeps on a {n}x{n} matrix")

    values = np.diag(work).copy()
    order = np.argsort(values, kind="stable")
    return values[order], vectors[:, order]


def min_eigenvalue(A: np.ndarray) -> float:
    return float(sym_eigen(A)[0][0])


def column_stats(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Column means and population (divisor-n) standard deviations.

    Args:
        M: n x p matrix with n >= 2

    Returns:
        Tuple of (means, sds, degenerate) where ``degenerate`` flags columns
        whose s.d. is zero up to rounding; their s.d. is reported as 0.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 2:
        raise NumericsError(f"column_stats needs at least 2 rows, got shape {M.shape}")
    means = M.mean(axis=0)
    sds = np.sqrt(np.mean((M - means) ** 2, axis=0))
    magnitude = np.max(np.abs(M), axis=0)
    degenerate = sds <= 1e-13 * magnitude
    sds = np.where(degenerate, 0.0, sds)
    if np.any(degenerate):
        logger.debug(f"{int(degenerate.sum())} degenerate column(s) with zero s.d.")
    return means, sds, degenerate


class NumericsError(Exception):
    """Exception raised by the numerics layer"""

    pass


class NotPositiveDefinite(NumericsError):
    """A Cholesky pivot stayed <= 0 after jitter"""


class NonSymmetric(NumericsError):
    """A matrix passed to the symmetric eigensolver is not symmetric"""
