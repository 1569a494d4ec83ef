"""Dense complex linear algebra used by the qubit layer.

Vectors and matrices are plain ``numpy`` arrays with ``complex128`` entries.
Tensor factors are ordered most-significant first: in ``kron(a, b)`` the
factor ``a`` owns the high bits of the flattened index.
"""
from __future__ import annotations

import string
from typing import Iterable, Sequence

import numpy as np

ALGEBRA_TOL = 1e-12
EIGEN_TOL = 1e-9
HERMITIAN_TOL = 1e-10


class ShapeError(ValueError):
    """Raised when array shapes are incompatible with an operation."""


def as_cmatrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite complex array of rank 1 or 2."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim not in (1, 2) or arr.size == 0:
        raise ShapeError(f"expected a nonempty vector or matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("entries must be finite")
    return arr


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry (i*r_b + k, j*c_b + l) is a[i, j] * b[k, l].

    Two vectors give a vector, anything else gives a matrix.
    """
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    # a lone vector acts as a column
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    return np.kron(a, b)


def kron_all(factors: Iterable) -> np.ndarray:
    it = iter(factors)
    try:
        out = as_cmatrix(next(it))
    except StopIteration:
        raise ShapeError("kron_all needs at least one factor") from None
    for f in it:
        out = kron(out, f)
    return out


def dagger(a) -> np.ndarray:
    a = as_cmatrix(a)
    if a.ndim == 1:
        return a.conj()
    return a.conj().T


def matmul(a, b) -> np.ndarray:
    a, b = as_cmatrix(a), as_cmatrix(b)
    inner_a = a.shape[-1]
    inner_b = b.shape[0]
    if inner_a != inner_b:
        raise ShapeError(f"incompatible shapes for product: {a.shape} and {b.shape}")
    return a @ b


def _require_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")


def trace(a) -> complex:
    a = as_cmatrix(a)
    _require_square(a)
    return complex(np.trace(a))


def partial_trace(a, factor_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep`` (0-based).

    ``factor_dims`` gives the local dimension of each factor; their product
    must equal the matrix dimension. Kept factors stay in ascending order.
    """
    a = as_cmatrix(a)
    _require_square(a)
    dims = [int(d) for d in factor_dims]
    if not dims or any(d < 1 for d in dims):
        raise ShapeError(f"factor dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != a.shape[0]:
        raise ShapeError(
            f"factor dimensions {dims} multiply to {int(np.prod(dims))}, "
            f"matrix dimension is {a.shape[0]}"
        )
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise IndexError(f"keep indices {keep} out of range for {len(dims)} factors")

    n = len(dims)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    t = a.reshape(dims + dims)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(d, d)


def max_asymmetry(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_cmatrix(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and max_asymmetry(a) <= tol


def hermitian_eigenvalues(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted in descending order."""
    a = as_cmatrix(a)
    _require_square(a)
    asym = max_asymmetry(a)
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian: max |A - A^dagger| = {asym:.3e}")
    # symmetrize so the solver sees an exactly Hermitian input
    h = 0.5 * (a + a.conj().T)
    return np.linalg.eigvalsh(h)[::-1]


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def max_abs_diff(a, b) -> float:
    a, b = as_cmatrix(a), as_cmatrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))
