"""First non-zero eigenvalue of ``S f = lambda M f`` and Rayleigh quotients."""
from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .operators import LaplacianPair

DENSE_MAX = 3000
DENSE_FALLBACK_MAX = 8000  # dense solve when the iterative one fails on graded meshes
MAX_ITER = 5000
TOL = 1e-10
SEED = 12345
RESIDUAL_MAX = 1e-8


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralResult:
    lambda1: float
    eigenvector: np.ndarray  # mass-normalised, mass-orthogonal to constants
    num_converged: int
    residual: float  # backward error ||S f - lambda M f|| / ((||S||_1 + lambda ||M||_1) ||f||)
    method: str


def _check_connected(S):
    n, _ = connected_components(abs(S) > 0, directed=False)
    if n != 1:
        raise SpectralError(f"kernel of the stiffness matrix has dimension {n}; immersion is disconnected")


def _finish(lap, lam, f, nconv, method):
    S, w = lap.stiffness, lap.mass
    f = f - (f @ w) / w.sum()
    f = f / np.sqrt(f @ (w * f))
    # the Rayleigh quotient of the returned vector is accurate to second order,
    # which matters on strongly graded meshes where eigh loses digits in lambda
    lam = float(f @ (S @ f))
    if np.sum(f) < 0:
        f = -f
    scale = (abs(S).sum(axis=0).max() + abs(lam) * w.max()) * np.linalg.norm(f)
    res = float(np.linalg.norm(S @ f - lam * w * f) / scale)
    return SpectralResult(float(lam), f, nconv, res, method)


def lambda1_dense(lap: LaplacianPair) -> SpectralResult:
    """Whiten by ``M^(-1/2)`` and take the two smallest eigenpairs with LAPACK."""
    S, w = lap.stiffness, lap.mass
    _check_connected(S)
    s = 1.0 / np.sqrt(w)
    D = sp.diags(s)
    A = (D @ sp.csr_matrix(S) @ D).toarray()
    vals, vecs = sla.eigh(A, subset_by_index=[0, 1])
    return _finish(lap, vals[1], s * vecs[:, 1], 2, "dense")


def lambda1_iterative(lap: LaplacianPair, tol: float = TOL, maxiter: int = MAX_ITER,
                      seed: int = SEED) -> SpectralResult:
    """Block LOBPCG with the constants deflated as a hard constraint.

    Preconditioned by a sparse LU of ``S + sigma M`` (sigma a small fraction
    of the mean diagonal ratio), which makes convergence mesh-independent.
    """
    S, w = lap.stiffness.tocsc(), lap.mass
    _check_connected(S)
    n = S.shape[0]
    M = sp.diags(w).tocsc()
    sigma = 1e-3 * float(np.median(S.diagonal() / w))
    lu = spla.splu((S + sigma * M).tocsc())
    P = spla.LinearOperator((n, n), matvec=lu.solve, matmat=lu.solve, dtype=float)
    rng = np.random.default_rng(seed)
    k = 4
    X0 = rng.standard_normal((n, k))
    Y = np.ones((n, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = spla.lobpcg(S, X0, B=M, M=P, Y=Y, tol=tol, maxiter=maxiter, largest=False)
    order = np.argsort(vals)
    lam, f = vals[order[0]], vecs[:, order[0]]
    res = _finish(lap, lam, f, k, "lobpcg")
    if res.residual <= RESIDUAL_MAX:
        return res
    # shift-invert Lanczos fallback; the constant mode comes back as the first pair
    v0 = rng.standard_normal(n)
    try:
        vals, vecs = spla.eigsh(S, k=3, M=M, sigma=-sigma, which="LM", v0=v0, tol=tol, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(vals)
    res = _finish(lap, vals[order[1]], vecs[:, order[1]], 3, "lanczos")
    if res.residual > RESIDUAL_MAX:
        raise SpectralError(f"eigensolver did not converge (residual {res.residual:.3g})")
    return res


def lambda1(lap: LaplacianPair, method: str = "auto") -> SpectralResult:
    """Smallest non-zero generalized eigenvalue of the Laplacian pair.

    ``method`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (dense up to
    :data:`DENSE_MAX` vertices).  An iterative solve that fails to converge
    falls back to the dense one up to :data:`DENSE_FALLBACK_MAX` vertices.
    """
    n = lap.stiffness.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_MAX else "iterative"
    if method == "dense":
        return lambda1_dense(lap)
    if method == "iterative":
        try:
            return lambda1_iterative(lap)
        except SpectralError:
            if n > DENSE_FALLBACK_MAX:
                raise
            return lambda1_dense(lap)
    raise ValueError(f"unknown method {method!r}")


def rayleigh(lap: LaplacianPair, f, center: bool = True) -> float:
    """``f^T S f / f~^T M f~`` with ``f~`` the mass-mean-centred field when ``center``."""
    f = np.asarray(f, dtype=float)
    w = lap.mass
    g = f - (f @ w) / w.sum() if center else f
    den = float(g @ (w * g))
    # centring a constant leaves only rounding noise
    if den <= 1e-24 * float(f @ (w * f)):
        raise ZeroDivisionError("Rayleigh quotient of a (mass-)constant field")
    return float(f @ (lap.stiffness @ f)) / den
