"""Smallest-singular-value helpers shared by ``fsm`` and ``spectra``."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def sigma_min_dense(M: np.ndarray) -> float:
    if M.shape[0] == 0:
        return np.inf
    return float(sla.svdvals(M).min())


def sigma_min_sparse(M, tol: float = 1e-10, maxiter: int = 5000) -> float:
    """Smallest singular value of a square sparse matrix.

    Factor ``M = LU`` once, then run Lanczos (ARPACK) on the Hermitian
    operator ``(M^* M)^{-1} = M^{-1} M^{-*}``; its largest eigenvalue is
    ``sigma_min^{-2}``. This is inverse iteration on ``M^* M`` with a Krylov
    accelerator. Returns 0.0 when the factorisation finds ``M`` singular.
    """
    n = M.shape[0]
    if n <= 64:
        return sigma_min_dense(M.toarray() if sp.issparse(M) else np.asarray(M))
    try:
        lu = spla.splu(sp.csc_matrix(M, dtype=np.complex128))
    except RuntimeError:  # exactly singular
        return 0.0

    def matvec(x):
        y = lu.solve(np.asarray(x, dtype=np.complex128).ravel(), trans="H")
        return lu.solve(y)

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=np.complex128)
    v0 = np.ones(n, dtype=np.complex128)
    lam = spla.eigsh(op, k=1, which="LM", v0=v0, tol=tol, maxiter=maxiter,
                     return_eigenvectors=False)
    lam = float(np.real(lam[0]))
    if not np.isfinite(lam) or lam <= 0:
        return 0.0
    return 1.0 / np.sqrt(lam)
