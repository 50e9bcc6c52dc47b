"""Thin SVD with a reproducible sign convention, plus rank truncation."""

from dataclasses import dataclass

import numpy as np

from sekron.errors import RankError, ShapeError, SvdConvergenceError


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = u @ diag(s) @ v.T`` with orthonormal u/v columns and
    ``s`` sorted non-increasing."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.s.shape[0]


def svd(m) -> SvdResult:
    """Thin SVD of a 2-D array.

    Each singular pair is sign-normalized so the largest-magnitude entry of
    the left vector is positive, which makes factor files byte-reproducible
    across runs.  Non-convergence of the underlying LAPACK driver is reported
    as :class:`SvdConvergenceError`, never silently.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"svd expects a matrix, got {m.ndim} axes")
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input must be finite")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(f"SVD did not converge: {exc}") from exc
    v = vt.T
    for r in range(s.shape[0]):
        pivot = np.argmax(np.abs(u[:, r]))
        if u[pivot, r] < 0:
            u[:, r] = -u[:, r]
            v[:, r] = -v[:, r]
    return SvdResult(u=u, s=s, v=np.ascontiguousarray(v))


def truncate(res: SvdResult, r_hat: int) -> tuple[np.ndarray, np.ndarray]:
    """Top ``r_hat`` left vectors and sigma-scaled right vectors.

    ``u_r @ scaled_v_r.T`` is the optimal (Eckart-Young) rank-``r_hat``
    approximation of the decomposed matrix; the singular values are folded
    into the right factor.
    """
    if not 1 <= r_hat <= res.rank:
        raise RankError(f"rank {r_hat} out of range [1, {res.rank}]")
    u_r = res.u[:, :r_hat]
    scaled_v_r = res.v[:, :r_hat] * res.s[:r_hat]
    return u_r, scaled_v_r


def tail_energy(res: SvdResult, r_hat: int) -> float:
    """Sum of squared singular values beyond ``r_hat``."""
    if not 0 <= r_hat <= res.rank:
        raise RankError(f"rank {r_hat} out of range [0, {res.rank}]")
    return float(np.sum(res.s[r_hat:] ** 2))
