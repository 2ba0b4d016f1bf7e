"""Pure numpy implementation of the per-iteration kernels.

Mirrors ``_kernels.pyx`` exactly; used when the compiled extension is
unavailable or ``DUALLINK_PURE_PYTHON`` is set.
"""

import numpy as np

from .hermitian import NotPositiveDefiniteError

BACKEND = "numpy"


def interference_cov(G, S, active):
    """Stacked interference-plus-noise covariances.

    ``out[l] = I + sum_k G[l, k] S[k] G[l, k]^H`` over pairs with
    ``active[l, k]`` set.

    Parameters
    ----------
    G : (L, L, R, T) complex array
    S : (L, T, T) complex array
    active : (L, L) bool/uint8 array
    """
    L, _, R, _ = G.shape
    act = np.asarray(active, dtype=bool)
    out = np.zeros((L, R, R), dtype=complex)
    rows, cols = np.nonzero(act)
    if rows.size:
        Gp = G[rows, cols]
        X = Gp @ S[cols] @ np.conj(np.swapaxes(Gp, -1, -2))
        np.add.at(out, rows, X)
    out += np.eye(R)
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def _chol_inv_logdet(A):
    try:
        C = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("Cholesky factorization failed") from None
    n = A.shape[-1]
    Cinv = np.linalg.solve(C, np.broadcast_to(np.eye(n), A.shape))
    inv = np.conj(np.swapaxes(Cinv, -1, -2)) @ Cinv
    logdet = 2.0 * np.log(np.diagonal(C, axis1=-2, axis2=-1).real).sum(axis=-1)
    return inv, logdet


def dual_map(Hd, S, Omega, w):
    """Per-link multiplier matrices and rates.

    Returns ``(lam, rates)`` with
    ``lam[l] = w[l] (Omega[l]^{-1} - (Omega[l] + Hd[l] S[l] Hd[l]^H)^{-1})``
    and ``rates[l] = logdet(Omega[l] + Hd S Hd^H) - logdet(Omega[l])``.
    """
    HdH = np.conj(np.swapaxes(Hd, -1, -2))
    A = Omega + Hd @ S @ HdH
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    inv_o, ld_o = _chol_inv_logdet(Omega)
    inv_a, ld_a = _chol_inv_logdet(A)
    lam = np.asarray(w, dtype=float)[:, None, None] * (inv_o - inv_a)
    lam = 0.5 * (lam + np.conj(np.swapaxes(lam, -1, -2)))
    return lam, ld_a - ld_o


def normalize_psd(lam, total_power, rtol):
    """Scale ``lam`` to total trace ``total_power`` and test ``S + rtol*P*I > 0``.

    Returns ``(S, bad)`` where ``bad`` is the first link failing the PSD
    test, ``-1`` if none, or ``-2`` (with ``S=None``) for a degenerate scale.
    """
    denom = np.trace(lam, axis1=1, axis2=2).real.sum()
    if not (denom > 0 and np.isfinite(denom)):
        return None, -2
    S = (total_power / denom) * lam
    S = 0.5 * (S + np.conj(np.swapaxes(S, -1, -2)))
    evals = np.linalg.eigvalsh(S)[:, 0]
    bad = np.nonzero(~(evals > -rtol * total_power))[0]
    return S, (int(bad[0]) if bad.size else -1)
