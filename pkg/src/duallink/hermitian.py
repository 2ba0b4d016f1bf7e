"""Dense Hermitian matrix helpers shared by the solvers.

All routines accept a single matrix or a stack of matrices with shape
``(..., n, n)``. Positive-definiteness failures raise
:class:`NotPositiveDefiniteError` instead of being regularized away.
"""

import numpy as np

__all__ = [
    "NotPositiveDefiniteError",
    "symmetrize",
    "inv_pd",
    "inv_sqrt_pd",
    "sqrt_psd",
    "logdet_pd",
    "water_fill",
    "is_hermitian_psd",
    "hermitian_psd_violation",
    "clip_psd",
]

# relative floor on the smallest eigenvalue, scaled by trace/dim
PD_RTOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a matrix that must be positive definite is not."""


def _require_square(a):
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    return a


def herm(a):
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def symmetrize(a):
    """Return ``(a + a^H) / 2``."""
    a = _require_square(a)
    return 0.5 * (a + herm(a))


def _eigh_pd(a):
    a = symmetrize(a)
    evals, evecs = np.linalg.eigh(a)
    n = a.shape[-1]
    scale = np.maximum(np.trace(a, axis1=-2, axis2=-1).real / n, 0.0)
    floor = PD_RTOL * scale
    if not np.all(np.isfinite(evals)) or np.any(evals <= floor[..., None]):
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (min eigenvalue {evals.min():.3e})")
    return evals, evecs


def _from_eig(evals, evecs):
    return (evecs * evals[..., None, :]) @ herm(evecs)


def inv_pd(a):
    """Inverse of a Hermitian positive definite matrix."""
    evals, evecs = _eigh_pd(a)
    return symmetrize(_from_eig(1.0 / evals, evecs))


def inv_sqrt_pd(a):
    """Hermitian inverse square root ``a^{-1/2}``."""
    evals, evecs = _eigh_pd(a)
    return symmetrize(_from_eig(1.0 / np.sqrt(evals), evecs))


def sqrt_psd(a):
    """Hermitian square root of a PSD matrix; tiny negative eigenvalues are zeroed."""
    a = symmetrize(a)
    evals, evecs = np.linalg.eigh(a)
    return symmetrize(_from_eig(np.sqrt(np.maximum(evals, 0.0)), evecs))


def logdet_pd(a):
    """Natural-log determinant of a Hermitian PD matrix via Cholesky."""
    a = symmetrize(a)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    diag = np.diagonal(chol, axis1=-2, axis2=-1).real
    return 2.0 * np.sum(np.log(diag), axis=-1)


def water_fill(gains, weight=1.0, budget=1.0, costs=None, return_level=False):
    """Weighted water-filling over parallel channels.

    Returns ``p_i = (nu * w_i - 1/g_i)_+`` with the common water level
    ``nu`` chosen so that ``sum_i c_i p_i = budget``. Without costs this
    maximizes ``sum_i w_i log(1 + g_i p_i)`` subject to ``sum_i p_i =
    budget``; with costs it is the level rule of polite water-filling,
    where the budget is spent in a different coordinate system. ``nu`` is
    found exactly by scanning the sorted activation thresholds.

    Parameters
    ----------
    gains : array_like
        Non-negative channel power gains. Zero gains never receive power.
    weight : float or array_like
        Per-entry weights ``w_i > 0``. Pass one weight per entry to share a
        water level across several links.
    budget : float
        Total (cost-weighted) power, must be positive.
    costs : array_like, optional
        Per-entry power costs ``c_i > 0``; defaults to one.
    return_level : bool
        Also return the water level ``nu``.

    Returns
    -------
    p : np.ndarray
        Power per entry, same shape as ``gains``.
    nu : float
        Only when ``return_level`` is set.
    """
    g = np.asarray(gains, dtype=float)
    shape = g.shape
    g = g.ravel()
    w = np.broadcast_to(np.asarray(weight, dtype=float), shape).ravel()
    c = (np.ones_like(g) if costs is None
         else np.broadcast_to(np.asarray(costs, dtype=float), shape).ravel())
    if budget <= 0:
        raise ValueError("budget must be positive")
    if np.any(w <= 0) or np.any(c <= 0):
        raise ValueError("weights and costs must be positive")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite and non-negative")
    if not np.any(g > 0):
        raise ValueError("all gains are zero")
    # gains so small that 1/(w g) overflows behave as zero
    with np.errstate(divide="ignore", over="ignore"):
        usable = np.nonzero((g > 0) & np.isfinite(1.0 / (w * g)))[0]
    if usable.size == 0:
        raise ValueError("all gains are too small to represent a water level")

    # entry i is active iff nu > t_i = 1 / (w_i g_i). With thresholds sorted,
    # f_k = sum_{j<k} c_j w_j (t_k - t_j) is the power needed to lift the
    # level to t_k; the recurrence avoids cancellation between large t's.
    t = 1.0 / (w[usable] * g[usable])
    idx = np.argsort(t, kind="stable")
    order, t = usable[idx], t[idx]
    cw = c[order] * w[order]
    C = np.cumsum(cw)
    f = np.concatenate(([0.0], np.cumsum(C[:-1] * np.diff(t))))
    K = int(np.count_nonzero(f < budget))
    delta = (budget - f[K - 1]) / C[K - 1]        # nu - t_{K-1} > 0
    nu = t[K - 1] + delta
    p = np.zeros_like(g)
    act = order[:K]
    p[act] = w[act] * (delta + (t[K - 1] - t[:K]))
    p = p.reshape(shape)
    if return_level:
        return p, float(nu)
    return p


def hermitian_psd_violation(a):
    """Return ``(asym, neg)``: relative asymmetry and relative negative eigenvalue."""
    a = _require_square(a)
    norm = np.linalg.norm(a, axis=(-2, -1))
    asym = np.linalg.norm(a - herm(a), axis=(-2, -1))
    asym = np.where(norm > 0, asym / np.where(norm > 0, norm, 1.0), asym)
    evals = np.linalg.eigvalsh(symmetrize(a))
    tr = np.abs(np.trace(a, axis1=-2, axis2=-1).real)
    neg = np.maximum(-evals.min(axis=-1), 0.0)
    neg = np.where(tr > 0, neg / np.where(tr > 0, tr, 1.0), neg)
    return np.max(asym), np.max(neg)


def is_hermitian_psd(a, tol=1e-10):
    """Check the HermitianPSD invariant with relative tolerance ``tol``."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        return False
    asym, neg = hermitian_psd_violation(a)
    return bool(asym <= tol and neg <= tol)


def clip_psd(a):
    """Symmetrize and zero negative eigenvalues. Validation use only."""
    evals, evecs = np.linalg.eigh(symmetrize(a))
    return symmetrize(_from_eig(np.maximum(evals, 0.0), evecs))
