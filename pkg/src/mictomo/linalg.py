"""Dense complex Hermitian linear algebra for small dimensions (d <= 256).

Matrices are plain ``numpy`` arrays of shape ``(d, d)``.  The validators in
this module (:func:`check_hermitian`, :func:`check_density`) play the role of
the HermitianMatrix / DensityMatrix types: functions that need such an input
call the validator and raise :class:`~mictomo.errors.ValidationError` on
violation.

Vectorization follows the column-stacking convention
``vec(|i><j|) = |j> (x) |i>``, so that ``<<A|B>> = Tr[A^dagger B]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mictomo.errors import NumericalError, ValidationError

MAX_DIM = 256


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12  # absolute, per entry
    eig_residual: float = 1e-9  # Frobenius reconstruction / unitarity
    psd: float = 1e-10  # allowed negative eigenvalue slack
    trace: float = 1e-10


TOL = Tolerances()


# --------------------------------------------------------------------------
# validation


def as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValidationError(f"{name} dimension {a.shape[0]} exceeds {MAX_DIM}")
    return a


def is_hermitian(a, tol: float = TOL.hermitian) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.all(np.abs(a - a.conj().T) <= tol))


def check_hermitian(a, name: str = "matrix", tol: float = TOL.hermitian) -> np.ndarray:
    a = as_square(a, name)
    if not is_hermitian(a, tol):
        dev = float(np.max(np.abs(a - a.conj().T)))
        raise ValidationError(f"{name} is not Hermitian (max deviation {dev:.3e})")
    return a


def hermitize(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2


def is_density(a, psd_tol: float = TOL.psd, trace_tol: float = TOL.trace) -> bool:
    try:
        check_density(a, psd_tol=psd_tol, trace_tol=trace_tol)
    except ValidationError:
        return False
    return True


def check_density(a, name: str = "state", psd_tol: float = TOL.psd,
                  trace_tol: float = TOL.trace) -> np.ndarray:
    a = check_hermitian(a, name)
    tr = np.trace(a).real
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    lam_min = float(np.linalg.eigvalsh(hermitize(a))[0])
    if lam_min < -psd_tol:
        raise ValidationError(f"{name} is not PSD (min eigenvalue {lam_min:.3e})")
    return a


# --------------------------------------------------------------------------
# vectorization and products


def vectorize(a) -> np.ndarray:
    """Column-stacking vectorization, length ``d**2``."""
    a = np.asarray(a, dtype=complex)
    return a.reshape(-1, order="F").copy()


def unvectorize(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValidationError(f"vector of length {v.size} is not a vectorized {d}x{d} matrix")
    return v.reshape((d, d), order="F").copy()


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr[A^dagger B]``."""
    return complex(np.vdot(np.asarray(a), np.asarray(b)))


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


# --------------------------------------------------------------------------
# eigendecomposition


def eig_herm(a, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns, so that
    ``a == U @ diag(lam) @ U.conj().T``.

    Raises
    ------
    ValidationError
        If ``a`` is not Hermitian.
    NumericalError
        If LAPACK fails to converge or the reconstruction residual exceeds
        ``TOL.eig_residual`` (scaled by the matrix norm).
    """
    a = check_hermitian(a) if check else np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise NumericalError("eig_herm: matrix has non-finite entries")
    try:
        lam, u = np.linalg.eigh(hermitize(a))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eig_herm: {exc}") from exc
    lam, u = lam[::-1].copy(), u[:, ::-1].copy()
    if check:
        scale = max(1.0, float(np.linalg.norm(a)))
        resid = np.linalg.norm(u @ np.diag(lam) @ u.conj().T - a)
        if not np.isfinite(resid) or resid > TOL.eig_residual * scale:
            raise NumericalError(f"eig_herm: reconstruction residual {resid:.3e}")
    return lam, u


def eigvals_herm(a) -> np.ndarray:
    """Eigenvalues only (descending).  Accepts a stack ``(..., d, d)``."""
    a = np.asarray(a, dtype=complex)
    try:
        lam = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"eigvals_herm: {exc}") from exc
    return lam[..., ::-1]


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi eigensolver.

    Independent of LAPACK; used to cross-check :func:`eig_herm`.  Each
    rotation first removes the phase of the pivot ``a[p, q]`` and then applies
    the classical real Jacobi rotation.  Output ordering matches
    :func:`eig_herm` (descending).
    """
    a = hermitize(check_hermitian(a))
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    scale = max(float(np.linalg.norm(a)), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                b = a[p, q]
                mag = abs(b)
                if mag <= 1e-18 * scale:
                    a[p, q] = a[q, p] = 0.0
                    continue
                ph = np.conj(b / mag)
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s * ph, c * ph]], dtype=complex)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        raise NumericalError(f"jacobi_eigh: no convergence after {max_sweeps} sweeps")
    lam = np.diag(a).real.copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], v[:, order]


# --------------------------------------------------------------------------
# norms


def schatten_norm(a, p: float = 1) -> float:
    """Schatten p-norm for ``p`` in ``{1, 2, inf}`` (``'inf'`` accepted)."""
    a = as_square(a)
    if p in (np.inf, "inf", "op"):
        p = np.inf
    if p not in (1, 2, np.inf):
        raise ValidationError(f"unsupported Schatten order {p!r}")
    if p == 2:
        return float(np.linalg.norm(a))
    if is_hermitian(a):
        s = np.abs(eigvals_herm(hermitize(a)))
    else:
        s = np.linalg.svd(a, compute_uv=False)
    return float(np.max(s)) if p == np.inf else float(np.sum(s))


def trace_norm(a) -> float:
    return schatten_norm(a, 1)


def op_norm(a) -> float:
    return schatten_norm(a, np.inf)


def hs_norm(a) -> float:
    return schatten_norm(a, 2)


def trace_norms_herm(stack) -> np.ndarray:
    """Trace norms of a stack of Hermitian matrices ``(..., d, d)``."""
    return np.sum(np.abs(np.linalg.eigvalsh(np.asarray(stack, dtype=complex))), axis=-1)


def op_norms_herm(stack) -> np.ndarray:
    return np.max(np.abs(np.linalg.eigvalsh(np.asarray(stack, dtype=complex))), axis=-1)


# --------------------------------------------------------------------------
# projection onto density matrices


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex.

    Sort-and-shift: find the threshold ``tau`` with ``sum(max(v - tau, 0)) = 1``.
    """
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    cond = u - css / k > 0
    r = k[cond][-1]
    tau = css[r - 1] / r
    return np.maximum(v - tau, 0.0)


def project_to_density(a) -> np.ndarray:
    """Frobenius-nearest density matrix to a Hermitian matrix.

    Keeps the eigenvectors of ``a`` and projects its spectrum onto the
    probability simplex.
    """
    lam, u = eig_herm(a)
    p = project_simplex(lam)
    out = (u * p) @ u.conj().T
    return hermitize(out)


# --------------------------------------------------------------------------
# random matrices


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return hermitize(g)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt random state ``G G^dagger / Tr[G G^dagger]`` (rank ``d`` by default)."""
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


# --------------------------------------------------------------------------
# interchange format


def matrix_to_json(a) -> dict:
    """``{"d": d, "re": [[...]], "im": [[...]]}``, row-major."""
    a = as_square(a)
    return {"d": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        d = int(obj["d"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((d, d))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValidationError(f"matrix entries do not match declared dimension d={d}")
    return as_square(re + 1j * im)
