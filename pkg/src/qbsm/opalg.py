"""Dense linear algebra on small Hermitian operators.

Everything here works on plain ``numpy`` arrays.  Operators are at most
64 x 64; the functions favour robustness (explicit Hermiticity checks,
relative support thresholds) over speed.

Trace norms follow the half-normalised convention

.. math::

    \\|A\\| = \\tfrac{1}{2} \\operatorname{tr} \\sqrt{A^\\dagger A},

so that the trace distance between two density operators lies in [0, 1].
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_DIM = 64
HERMITIAN_TOL = 1e-8
DEFAULT_REL_THRESHOLD = 1e-12


class Spectrum(NamedTuple):
    """Eigenvalues in descending order with matching orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def _as_square(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a.astype(complex, copy=False)


def hermitize(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(A + A^H) / 2`` after checking that ``A`` is Hermitian.

    The deviation ``max |A - A^H|`` is compared against ``tol`` scaled by
    ``max(1, max |A|)``; anything larger raises ``ValueError``.
    """
    a = _as_square(a)
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if dev > tol * scale:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (a + a.conj().T)


def jacobi_eigh(h, tol: float = 1e-15, max_sweeps: int = 100) -> Spectrum:
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Sweeps visit the off-diagonal pairs ``(p, q)`` in row-major order, so
    the result is reproducible bit for bit on a given platform.  Each
    rotation zeroes ``A[p, q]`` with a complex Givens rotation.
    """
    a = hermitize(h).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = apq / mag
                theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
                c = np.cos(theta)
                s = np.sin(theta)
                # columns p, q of the unitary [[c, s*phase], [-s*conj(phase), c]]
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * phase * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * np.conj(phase) * vq
                v[:, q] = s * phase * vp + c * vq
    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return Spectrum(w[order], v[:, order])


def eig_hermitian(h, method: str = "lapack") -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    ``method="lapack"`` (default) calls ``numpy.linalg.eigh``;
    ``method="jacobi"`` uses :func:`jacobi_eigh`.
    """
    if method == "jacobi":
        return jacobi_eigh(h)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    a = hermitize(h)
    w, u = np.linalg.eigh(a)
    return Spectrum(w[::-1].copy(), u[:, ::-1].copy())


def eigvalsh_batch(stack) -> np.ndarray:
    """Eigenvalues (ascending) of a stack of Hermitian matrices, shape ``(..., d)``.

    No Hermiticity check; callers pass matrices they built themselves.
    """
    stack = np.asarray(stack)
    return np.linalg.eigvalsh(0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2))))


def trace_norm(a) -> float:
    """Half the sum of singular values of ``A``.

    For Hermitian input this is half the sum of absolute eigenvalues.
    """
    a = _as_square(a)
    if np.allclose(a, a.conj().T, rtol=0.0, atol=1e-13 * max(1.0, np.max(np.abs(a)))):
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T)))))
    return 0.5 * float(np.sum(np.linalg.svd(a, compute_uv=False)))


def trace_norms(stack) -> np.ndarray:
    """Batched :func:`trace_norm` for a stack of Hermitian matrices."""
    stack = np.asarray(stack)
    if stack.shape[0] == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(stack)):
        raise ValueError("matrix has non-finite entries")
    return 0.5 * np.sum(np.abs(eigvalsh_batch(stack)), axis=-1)


def check_psd(rho, tol: float = 1e-9) -> Spectrum:
    """Spectrum of ``rho``; raises if an eigenvalue is below ``-tol * max(1, lambda_max)``."""
    spec = eig_hermitian(rho)
    lam_max = max(float(spec.eigenvalues[0]), 0.0) if spec.eigenvalues.size else 0.0
    if spec.eigenvalues.size and spec.eigenvalues[-1] < -tol * max(1.0, lam_max):
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {spec.eigenvalues[-1]:.3e})")
    return spec


def _support(spec: Spectrum, rel_threshold: float) -> np.ndarray:
    lam = spec.eigenvalues
    lam_max = float(lam[0]) if lam.size else 0.0
    if lam_max <= 0.0:
        return np.zeros(lam.shape, dtype=bool)
    return lam > rel_threshold * lam_max


def numerical_rank(rho, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> int:
    spec = check_psd(rho)
    return int(np.count_nonzero(_support(spec, rel_threshold)))


def support_projector(rho, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> np.ndarray:
    spec = check_psd(rho)
    u = spec.eigenvectors[:, _support(spec, rel_threshold)]
    return u @ u.conj().T


def psd_sqrt(rho) -> np.ndarray:
    """Principal square root of a PSD matrix (tiny negative eigenvalues clipped)."""
    spec = check_psd(rho)
    lam = np.sqrt(np.clip(spec.eigenvalues, 0.0, None))
    u = spec.eigenvectors
    return (u * lam) @ u.conj().T


def psd_sqrt_pinv(rho, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> np.ndarray:
    """Inverse square root of ``rho`` restricted to its support.

    Eigenvalues at or below ``rel_threshold * lambda_max`` count as zero, so
    the result ``M`` satisfies ``M rho M = Pi`` with ``Pi`` the support
    projector of ``rho``.

    Raises
    ------
    ValueError
        If ``rho`` has an eigenvalue below ``-1e-9 * lambda_max``.
    """
    spec = check_psd(rho)
    keep = _support(spec, rel_threshold)
    u = spec.eigenvectors[:, keep]
    return (u / np.sqrt(spec.eigenvalues[keep])) @ u.conj().T


def variational_distance(p, q) -> float:
    """``0.5 * sum |P(x) - Q(x)|`` for two distributions on the same alphabet.

    Accepts array-likes of equal length or :class:`~qbsm.cqstate.Distribution`
    objects with identical label lists.
    """
    if hasattr(p, "labels") and hasattr(q, "labels"):
        if tuple(p.labels) != tuple(q.labels):
            raise ValueError("distributions are defined on different alphabets")
        p, q = p.probs, q.probs
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions are defined on different alphabets")
    return 0.5 * float(np.sum(np.abs(p - q)))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + g.conj().T)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator from the induced (Ginibre) measure of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def projector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())
