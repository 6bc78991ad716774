"""
Seeded generators for the simulation designs: mixed unit-root/stationary
regressors (DGP1, DGP2), pure unit roots (DGP3, DGP4) and a triangular
cointegration system.

Time convention: the innovation path covers t = 0..n+1. The regression uses
y_t = W_{t-1}' theta + u_t for t = 1..n; W_n and y_{n+1} are held out for the
one-step-ahead prediction error.
"""

import logging
import math

import numpy as np
from scipy.signal import lfilter

from app.models.simulation import (
    ColumnKind,
    CointSpec,
    DgpSample,
    DgpVariant,
    InnovationSpec,
    RegressorView,
)
from app.services.numerics import RngStream, cholesky_factor

logger = logging.getLogger(__name__)

FULL_VIEW = "full"
COINT_VIEWS = ("reg1", "reg2", "reg3")


def sparsity_index(n: int) -> int:
    """s_x = s_z = 2 * ceil(ln n)"""
    return 2 * math.ceil(math.log(n))


def toeplitz_omega(dim: int, rho: float = 0.8, zero_blocks: list[tuple[slice, slice]] | None = None) -> np.ndarray:
    """
    Omega_{jj'} = rho^|j - j'| with the listed cross blocks (and their
    transposes) set to zero.
    """
    idx = np.arange(dim)
    omega = rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    for rows, cols in zero_blocks or []:
        omega[rows, cols] = 0.0
        omega[cols, rows] = 0.0
    return omega


class DgpService:
    """Deterministic data generating processes driven by an RngStream"""

    def __init__(self, ar_coef: float = 0.4, rho: float = 0.8):
        self.ar_coef = ar_coef
        self.rho = rho

    def innovation_spec(
        self, dim: int, zero_blocks: list[tuple[slice, slice]] | None = None
    ) -> InnovationSpec:
        return InnovationSpec(
            dim=dim,
            ar_coef=self.ar_coef,
            omega=toeplitz_omega(dim, self.rho, zero_blocks),
        )

    def gen_var1(self, innov: InnovationSpec, n: int, stream: RngStream) -> np.ndarray:
        """
        Simulate v_0..v_n of the vector AR(1) innovation.

        v_0 is drawn from the stationary law N(0, Omega); then
        v_t = ar_coef v_{t-1} + eps_t with eps_t ~ N(0, variance_scale * Omega).

        Args:
            innov: innovation parameters
            n: number of recursion steps (output has n + 1 rows)
            stream: random stream, advanced by (n + burn_in + 1) * dim draws

        Returns:
            (n + 1) x dim matrix, row t holding v_t
        """
        if n < 0:
            raise InvalidConfig(f"n must be >= 0, got {n}")
        L = cholesky_factor(innov.omega)
        steps = n + innov.burn_in
        v0 = L @ stream.normal(innov.dim)
        eps = stream.normal_matrix(steps, innov.dim) @ (math.sqrt(innov.variance_scale) * L).T

        path = np.empty((steps + 1, innov.dim))
        path[0] = v0
        if steps:
            path[1:], _ = lfilter(
                [1.0], [1.0, -innov.ar_coef], eps, axis=0, zi=innov.ar_coef * v0[None, :]
            )
        return path[innov.burn_in:]

    def gen_mixed(
        self,
        n: int,
        p_x: int,
        p_z: int,
        coef_variant: DgpVariant,
        stream: RngStream,
    ) -> DgpSample:
        """
        Generate DGP1-DGP4.

        DGP1/DGP2 draw v_t = (e_t, Z_t, u_t) with the (Z, u) covariance
        zeroed; DGP3/DGP4 draw v_t = (e_t, u_t) with the full Toeplitz
        covariance. X_t = X_{t-1} + e_t with X_0 = 0, alpha* = 0.

        Raises:
            InvalidConfig: on inconsistent dimensions
        """
        if coef_variant == DgpVariant.COINT:
            raise InvalidConfig("Use gen_cointegrated for the cointegration design")
        if n < 10:
            raise InvalidConfig(f"n must be >= 10, got {n}")
        s = sparsity_index(n)
        if coef_variant.is_pure_unit_root and p_z != 0:
            raise InvalidConfig(f"{coef_variant.value} has no stationary regressors, got p_z={p_z}")
        if p_x < s:
            raise InvalidConfig(f"p_x={p_x} is smaller than the sparsity index s_x={s}")
        if not coef_variant.is_pure_unit_root and p_z < s:
            raise InvalidConfig(f"p_z={p_z} is smaller than the sparsity index s_z={s}")

        dim = p_x + p_z + 1
        zero_blocks = []
        if not coef_variant.is_pure_unit_root:
            zero_blocks.append((slice(p_x, p_x + p_z), slice(dim - 1, dim)))
        innov = self.innovation_spec(dim, zero_blocks)
        v = self.gen_var1(innov, n + 1, stream)

        e = v[:, :p_x]
        Z = v[:, p_x:p_x + p_z]
        u = v[:, -1]
        X = np.zeros_like(e)
        X[1:] = np.cumsum(e[1:], axis=0)

        beta = self._beta(n, p_x, s, coef_variant.uses_beta2)
        gamma = np.zeros(p_z)
        s_z = 0
        if p_z:
            s_z = s
            gamma[:s] = 0.3 * np.arange(1, s + 1)
        theta = np.concatenate([beta, gamma])

        W_path = np.hstack([X, Z])
        y_path = W_path[:-1] @ theta + u[1:]

        p = p_x + p_z
        sample = DgpSample(
            variant=coef_variant,
            y=y_path[:n],
            w=W_path[:n],
            theta_true=theta,
            column_kinds=[ColumnKind.UNIT_ROOT] * p_x + [ColumnKind.STATIONARY] * p_z,
            column_labels=[f"X{j + 1}" for j in range(p_x)] + [f"Z{j + 1}" for j in range(p_z)],
            next_regressors=W_path[n],
            y_next=float(y_path[n]),
            unit_root_innovations=e[1:n + 1],
            s_x=s,
            s_z=s_z,
            views={
                FULL_VIEW: RegressorView(
                    name=FULL_VIEW,
                    columns=list(range(p)),
                    theta_true=theta,
                    oracle_columns=np.flatnonzero(theta).tolist(),
                )
            },
        )
        return sample

    def coint_spec(self, p_c1: int, p_c2: int) -> CointSpec:
        """A = 1_{p_c1} kron (0.4 * 1_6', 0'), phi1 = 0.8 * 1_{p_c1}"""
        row = np.zeros(p_c2)
        row[:6] = 0.4
        return CointSpec(
            p_c1=p_c1,
            p_c2=p_c2,
            A=np.kron(np.ones((p_c1, 1)), row[None, :]),
            phi1=0.8 * np.ones(p_c1),
        )

    def gen_cointegrated(self, n: int, p: int, stream: RngStream, p_c1: int = 2) -> DgpSample:
        """
        Generate the cointegration design.

        Innovations v_t = (e2_t, e_t, v1_t, Z_t, u_t) with p_c2 = p/2 - p_c1,
        p_x = p/2 and p_z = 2n - p. Omega is Toeplitz except for zeros
        between (Z, u), (v1, u), (v1, Z_{s+1:}) and (Z_{1:s}, Z_{s+1:}).
        The observables are (X_co1, X_co2, X, Z).

        Raises:
            InvalidConfig: on inconsistent dimensions
        """
        if n < 10:
            raise InvalidConfig(f"n must be >= 10, got {n}")
        if p % 2:
            raise InvalidConfig(f"p must be even, got {p}")
        p_x = p // 2
        p_c2 = p_x - p_c1
        p_z = 2 * n - p
        s = sparsity_index(n)
        if p_x <= p_c1 + 6:
            raise InvalidConfig(f"p/2={p_x} must exceed p_c1 + 6 = {p_c1 + 6}")
        if p_x < s:
            raise InvalidConfig(f"p_x={p_x} is smaller than the sparsity index s_x={s}")
        if p_z < s:
            raise InvalidConfig(f"p_z=2n-p={p_z} is smaller than the sparsity index s={s}")

        coint = self.coint_spec(p_c1, p_c2)
        o_e2 = 0
        o_e = o_e2 + p_c2
        o_v1 = o_e + p_x
        o_z = o_v1 + p_c1
        o_u = o_z + p_z
        dim = o_u + 1
        v1_block = slice(o_v1, o_z)
        z_head = slice(o_z, o_z + s)
        z_tail = slice(o_z + s, o_u)
        u_block = slice(o_u, dim)
        innov = self.innovation_spec(
            dim,
            zero_blocks=[
                (slice(o_z, o_u), u_block),
                (v1_block, u_block),
                (v1_block, z_tail),
                (z_head, z_tail),
            ],
        )
        v = self.gen_var1(innov, n + 1, stream)

        e2 = v[:, o_e2:o_e]
        e = v[:, o_e:o_v1]
        v1 = v[:, v1_block]
        Z = v[:, o_z:o_u]
        u = v[:, o_u]

        X2 = np.zeros_like(e2)
        X2[1:] = np.cumsum(e2[1:], axis=0)
        X1 = X2 @ coint.A.T + v1
        X = np.zeros_like(e)
        X[1:] = np.cumsum(e[1:], axis=0)

        beta = self._beta(n, p_x, s, uses_beta2=True)
        gamma = np.zeros(p_z)
        y_path = X[:-1] @ beta + Z[:-1] @ gamma + v1[:-1] @ coint.phi1 + u[1:]

        W_path = np.hstack([X1, X2, X, Z])
        theta = np.concatenate([coint.phi1, coint.phi2, beta, gamma])
        n_co = p_c1 + p_c2
        x_cols = list(range(n_co, n_co + p_x))
        z_cols = list(range(n_co + p_x, n_co + p_x + p_z))
        active_x = [j for j in x_cols if theta[j] != 0]

        views = {
            "reg1": RegressorView(
                name="reg1",
                columns=x_cols,
                oracle_columns=list(range(len(active_x))),
            ),
            "reg2": RegressorView(
                name="reg2",
                columns=x_cols + z_cols,
                oracle_columns=list(range(len(active_x))) + list(range(p_x, p_x + s)),
            ),
            "reg3": RegressorView(
                name="reg3",
                columns=list(range(W_path.shape[1])),
                theta_true=theta,
                oracle_columns=list(range(p_c1)) + list(range(p_c1, p_c1 + 6)) + active_x,
            ),
        }
        return DgpSample(
            variant=DgpVariant.COINT,
            y=y_path[:n],
            w=W_path[:n],
            theta_true=theta,
            column_kinds=[ColumnKind.COINTEGRATED] * n_co
            + [ColumnKind.UNIT_ROOT] * p_x
            + [ColumnKind.STATIONARY] * p_z,
            column_labels=[f"C1_{j + 1}" for j in range(p_c1)]
            + [f"C2_{j + 1}" for j in range(p_c2)]
            + [f"X{j + 1}" for j in range(p_x)]
            + [f"Z{j + 1}" for j in range(p_z)],
            next_regressors=W_path[n],
            y_next=float(y_path[n]),
            unit_root_innovations=e[1:n + 1],
            s_x=s,
            s_z=s,
            views=views,
            coint=coint,
            latent={"v1": v1[:n + 1], "e2": e2[1:n + 1]},
        )

    @staticmethod
    def _beta(n: int, p_x: int, s_x: int, uses_beta2: bool) -> np.ndarray:
        beta = np.zeros(p_x)
        beta[:s_x] = n**-0.5
        if uses_beta2:
            beta[0] = 1.0
        return beta

    def generate(self, variant: DgpVariant, n: int, p_x: int, p_z: int, stream: RngStream) -> DgpSample:
        """Dispatch on the variant; for COINT the observable count is p = 2 * p_x."""
        if variant == DgpVariant.COINT:
            sample = self.gen_cointegrated(n, 2 * p_x, stream)
            if p_z != 2 * n - 2 * p_x:
                raise InvalidConfig(f"COINT fixes p_z = 2n - 2p_x = {2 * n - 2 * p_x}, got {p_z}")
            return sample
        return self.gen_mixed(n, p_x, p_z, variant, stream)


class DgpServiceError(Exception):
    """Exception raised by DgpService"""

    pass


class InvalidConfig(DgpServiceError):
    """Inconsistent simulation dimensions"""
