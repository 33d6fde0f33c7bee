"""Dense complex linear algebra and bipartite primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Operators on a
tensor product ``C^dA (x) C^dB`` are wrapped in :class:`BipartiteOperator` so the
factor dimensions travel with the matrix.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal

import numpy as np

from keb_lab.errors import DimensionError, NotHermitianError, NumericGateError

Side = Literal["first", "second"]

RESIDUAL_GATE = 1e-10


@dataclass(frozen=True)
class ToleranceProfile:
    """Numeric policy threaded through every decision procedure."""

    eps_psd: float = 1e-9
    eps_herm: float = 1e-10
    eps_sep: float = 1e-7
    eps_eq: float = 1e-10
    restarts: int = 64
    samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        for name in ("eps_psd", "eps_herm", "eps_sep", "eps_eq"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.restarts < 1 or self.samples < 1:
            raise ValueError("restarts and samples must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def replace(self, **changes) -> "ToleranceProfile":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOL = ToleranceProfile()


@dataclass(frozen=True, eq=False)
class BipartiteOperator:
    """A square matrix on ``C^dim_a (x) C^dim_b``."""

    matrix: np.ndarray
    dim_a: int
    dim_b: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dim_a * self.dim_b
        if self.dim_a < 1 or self.dim_b < 1:
            raise DimensionError("factor dimensions must be positive")
        if m.shape != (n, n):
            raise DimensionError(
                f"matrix shape {m.shape} does not match dims {self.dim_a}x{self.dim_b}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self) -> tuple[int, int]:
        return self.dim_a, self.dim_b

    def tensor4(self) -> np.ndarray:
        """View as ``T[i, a, j, b] = X[(i,a), (j,b)]``."""
        return self.matrix.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def with_matrix(self, m: np.ndarray) -> "BipartiteOperator":
        return BipartiteOperator(m, self.dim_a, self.dim_b)

    def swapped(self) -> "BipartiteOperator":
        """The same operator with tensor factors exchanged."""
        m = self.tensor4().transpose(1, 0, 3, 2).reshape(self.matrix.shape)
        return BipartiteOperator(m, self.dim_b, self.dim_a)


def as_matrix(x) -> np.ndarray:
    if isinstance(x, BipartiteOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product in the block convention ``[a_ij B]``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def basis_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def matrix_unit(d: int, i: int, j: int, cols: int | None = None) -> np.ndarray:
    e = np.zeros((d, d if cols is None else cols), dtype=complex)
    e[i, j] = 1.0
    return e


def omega_vector(d: int) -> np.ndarray:
    """Unnormalized maximally entangled vector ``sum_i e_i (x) e_i``."""
    if d < 1:
        raise DimensionError("d must be positive")
    return np.eye(d, dtype=complex).reshape(d * d)


def omega_projector(d: int) -> np.ndarray:
    w = omega_vector(d)
    return np.outer(w, w.conj())


def swap_operator(d: int) -> np.ndarray:
    """Flip operator ``sum_ij E_ij (x) E_ji``."""
    if d < 1:
        raise DimensionError("d must be positive")
    s = np.zeros((d, d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[i, j, j, i] = 1.0
    return s.reshape(d * d, d * d)


def _require_bipartite(x) -> BipartiteOperator:
    if not isinstance(x, BipartiteOperator):
        raise DimensionError("expected a BipartiteOperator")
    return x


def partial_trace(x: BipartiteOperator, side: Side) -> np.ndarray:
    """Trace out the ``side`` factor; ``"first"`` gives tr_1, ``"second"`` tr_2."""
    t = _require_bipartite(x).tensor4()
    if side == "first":
        return np.einsum("iaib->ab", t)
    if side == "second":
        return np.einsum("iaja->ij", t)
    raise ValueError(f"unknown side {side!r}")


def partial_transpose(x: BipartiteOperator, side: Side) -> BipartiteOperator:
    t = _require_bipartite(x).tensor4()
    if side == "first":
        p = t.transpose(2, 1, 0, 3)
    elif side == "second":
        p = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"unknown side {side!r}")
    return x.with_matrix(p.reshape(x.matrix.shape))


def realignment(x: BipartiteOperator) -> np.ndarray:
    """Reshuffle ``|i a><j b| -> |i j><a b|``; shape ``(dA^2, dB^2)``."""
    x = _require_bipartite(x)
    da, db = x.dims
    return x.tensor4().transpose(0, 2, 1, 3).reshape(da * da, db * db)


def inverse_realignment(r: np.ndarray, dim_a: int, dim_b: int) -> BipartiteOperator:
    r = np.asarray(r, dtype=complex)
    if r.shape != (dim_a * dim_a, dim_b * dim_b):
        raise DimensionError("realigned shape does not match dims")
    m = r.reshape(dim_a, dim_a, dim_b, dim_b).transpose(0, 2, 1, 3)
    return BipartiteOperator(m.reshape(dim_a * dim_b, dim_a * dim_b), dim_a, dim_b)


def hermitize(m: np.ndarray, eps_herm: float = DEFAULT_TOL.eps_herm) -> np.ndarray:
    """Return ``(M + M*)/2`` if ``M`` is Hermitian to ``eps_herm``; else raise."""
    m = as_matrix(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError("expected a square matrix")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > eps_herm:
        raise NotHermitianError(f"Hermiticity deviation {dev:.3e} exceeds {eps_herm:.1e}")
    return (m + m.conj().T) / 2


def _gate(residual: float, m: np.ndarray, what: str) -> None:
    scale = np.linalg.norm(m)
    if residual > RESIDUAL_GATE * max(scale, 1.0):
        raise NumericGateError(f"{what} residual {residual:.3e} failed the gate")


def hermitian_eig(
    m: np.ndarray, eps_herm: float = DEFAULT_TOL.eps_herm
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix."""
    h = hermitize(m, eps_herm)
    w, v = np.linalg.eigh(h)
    w, v = w[::-1], v[:, ::-1]
    _gate(np.linalg.norm(h - (v * w) @ v.conj().T), h, "eigendecomposition")
    return w, v


def eigvalsh(m: np.ndarray, eps_herm: float = DEFAULT_TOL.eps_herm) -> np.ndarray:
    """Ascending eigenvalues, no gate. Used in tight loops on small blocks."""
    return np.linalg.eigvalsh(hermitize(m, eps_herm))


def svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``U, s, V`` with ``M = U diag(s) V*`` (thin form)."""
    m = as_matrix(m)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    _gate(np.linalg.norm(m - (u * s) @ vh), m, "SVD")
    return u, s, vh.conj().T


def op_norm_inf(m: np.ndarray) -> float:
    """Largest singular value."""
    m = as_matrix(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def nuclear_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(as_matrix(m), compute_uv=False).sum())


def min_eig(m: np.ndarray, eps_herm: float = DEFAULT_TOL.eps_herm) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of a Hermitian matrix with a unit eigenvector."""
    w, v = np.linalg.eigh(hermitize(m, eps_herm))
    return float(w[0]), v[:, 0]


def is_psd(m: np.ndarray, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """The uniform PSD rule: smallest eigenvalue >= -eps_psd."""
    return min_eig(m, tol.eps_herm)[0] >= -tol.eps_psd


def rank(m: np.ndarray, tol: float = 1e-9) -> int:
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def range_basis(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) for the range of a PSD matrix."""
    w, v = np.linalg.eigh(hermitize(m, np.inf))
    keep = w > tol * max(1.0, abs(w[-1]))
    return v[:, keep]


def rng_from(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for a (seed, stream...) pair."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_psd(d: int, rng: np.random.Generator, rank_: int | None = None) -> np.ndarray:
    g = rng.standard_normal((d, rank_ or d)) + 1j * rng.standard_normal((d, rank_ or d))
    return g @ g.conj().T
