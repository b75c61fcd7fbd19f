"""
Weighted Least Squares Smoothing
Edge-preserving base layer of the lightness plane, solved as a sparse SPD
system with Jacobi-preconditioned conjugate gradients
"""

import logging
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg

from app.errors import ConvergenceError, ShapeError

logger = logging.getLogger(__name__)


class WlsParams(BaseModel):
    """Free parameters of the decomposition"""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(0.125, ge=0.0, description="smoothing weight lambda")
    alpha: float = Field(1.2, gt=0.0, description="gradient sensitivity exponent")
    eps: float = Field(1e-4, gt=0.0, description="affinity regularizer")
    cg_tol: float = Field(1e-6, gt=0.0, lt=1.0, description="relative residual tolerance")
    cg_max_iters: int = Field(0, ge=0, description="iteration cap, 0 means 10*H*W")

    def fingerprint(self) -> str:
        return f"l{self.lam:g}-a{self.alpha:g}-e{self.eps:g}-t{self.cg_tol:g}-i{self.cg_max_iters}"


def log_guide(lightness: np.ndarray) -> np.ndarray:
    """log10 luminance guide; the 0.01 offset keeps black pixels finite"""
    return np.log10(np.clip(lightness / 100.0, 0.0, 1.0) + 0.01)


def smoothness_weights(lightness: np.ndarray, alpha: float, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Affinities between horizontal and vertical neighbors

    Args:
        lightness: L plane [H, W]
        alpha: Gradient sensitivity exponent
        eps: Regularizer

    Returns:
        Tuple of (a_x [H, W-1], a_y [H-1, W])
    """
    guide = log_guide(lightness)
    a_x = 1.0 / (np.abs(np.diff(guide, axis=1)) ** alpha + eps)
    a_y = 1.0 / (np.abs(np.diff(guide, axis=0)) ** alpha + eps)
    return a_x, a_y


def _difference_operator(n: int) -> sparse.csr_matrix:
    """Forward differences (n-1) x n; one-sided at the border, no wraparound"""
    return sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")


def wls_system(lightness: np.ndarray, lam: float, alpha: float, eps: float) -> sparse.csr_matrix:
    """
    Assemble I + lam * (Dx^T Ax Dx + Dy^T Ay Dy) for a row-major flattened plane

    Args:
        lightness: L plane [H, W], also the source of the log guide
        lam: Smoothing weight
        alpha: Gradient sensitivity exponent
        eps: Regularizer

    Returns:
        Sparse symmetric positive definite matrix of size H*W
    """
    height, width = lightness.shape
    size = height * width
    system = sparse.identity(size, format="csr")
    if lam == 0.0:
        return system
    a_x, a_y = smoothness_weights(lightness, alpha, eps)
    if width > 1:
        d_x = sparse.kron(sparse.identity(height), _difference_operator(width), format="csr")
        system = system + lam * (d_x.T @ sparse.diags(a_x.ravel()) @ d_x)
    if height > 1:
        d_y = sparse.kron(_difference_operator(height), sparse.identity(width), format="csr")
        system = system + lam * (d_y.T @ sparse.diags(a_y.ravel()) @ d_y)
    return system.tocsr()


def wls_base(lightness: np.ndarray, params: WlsParams) -> np.ndarray:
    """
    Piecewise smooth base layer of a lightness plane

    Args:
        lightness: Tensor [1, H, W] (or [H, W]) of L values
        params: Smoothing and solver parameters

    Returns:
        Base layer with the shape of the input
    """
    plane = np.asarray(lightness, dtype=np.float64)
    squeeze = plane.ndim == 3
    if squeeze:
        if plane.shape[0] != 1:
            raise ShapeError(f"wls_base takes a single plane, got {plane.shape}")
        plane = plane[0]
    if plane.ndim != 2:
        raise ShapeError(f"wls_base expects [1, H, W], got {np.shape(lightness)}")
    if not np.all(np.isfinite(plane)):
        raise ShapeError("wls_base needs a finite lightness plane")

    if params.lam == 0.0:
        base = plane.copy()
    else:
        base = _solve(plane, params)
    return base[None] if squeeze else base


def _solve(plane: np.ndarray, params: WlsParams) -> np.ndarray:
    height, width = plane.shape
    system = wls_system(plane, params.lam, params.alpha, params.eps)
    rhs = plane.ravel()
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(plane)

    inv_diag = 1.0 / system.diagonal()
    preconditioner = LinearOperator(system.shape, matvec=lambda v: inv_diag * v, dtype=np.float64)
    max_iters = params.cg_max_iters or 10 * height * width

    solution, info = cg(
        system, rhs, x0=rhs.copy(), rtol=params.cg_tol, atol=0.0,
        maxiter=max_iters, M=preconditioner,
    )
    residual = float(np.linalg.norm(rhs - system @ solution) / rhs_norm)
    if info != 0:
        logger.warning("WLS solve stopped at relative residual %.3e", residual)
        raise ConvergenceError(residual, max_iters)
    logger.debug("WLS %dx%d solved, relative residual %.3e", height, width, residual)
    return solution.reshape(height, width)
