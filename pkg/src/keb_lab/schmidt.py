"""Schmidt decompositions and Schmidt-number bounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from keb_lab.errors import DimensionError, KebError
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    hermitian_eig,
    min_eig,
    omega_projector,
    swap_operator,
)

SR_TOL = 1e-8


@dataclass
class SchmidtDecomposition:
    """``xi = sum_i coefficients[i] * left[:, i] (x) right[:, i]``."""

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray
    norm: float

    @property
    def rank(self) -> int:
        return int(self.coefficients.size)

    def vector(self) -> np.ndarray:
        da, db = self.left.shape[0], self.right.shape[0]
        if self.rank == 0:
            return np.zeros(da * db, dtype=complex)
        return ((self.left * self.coefficients) @ self.right.T).reshape(-1)


@dataclass
class SnBounds:
    lower: int
    upper: int
    lower_evidence: dict = field(default_factory=dict)
    upper_evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.lower <= self.upper:
            raise KebError(f"inconsistent Schmidt-number bounds [{self.lower}, {self.upper}]")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


def schmidt_decompose(xi: np.ndarray, dim_a: int, dim_b: int, tol: float = SR_TOL) -> SchmidtDecomposition:
    """SVD of the ``dim_a x dim_b`` reshaping; coefficients below ``tol * max`` are dropped."""
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    if xi.size != dim_a * dim_b:
        raise DimensionError(f"vector length {xi.size} != {dim_a}*{dim_b}")
    nrm = float(np.linalg.norm(xi))
    if nrm == 0:
        return SchmidtDecomposition(np.zeros(0), np.zeros((dim_a, 0), complex), np.zeros((dim_b, 0), complex), 0.0)
    u, s, vh = np.linalg.svd(xi.reshape(dim_a, dim_b), full_matrices=False)
    keep = s > tol * s[0]
    return SchmidtDecomposition(s[keep], u[:, keep], vh[keep].T, nrm)


def schmidt_rank(xi: np.ndarray, dim_a: int, dim_b: int, tol: float = SR_TOL) -> int:
    return schmidt_decompose(xi, dim_a, dim_b, tol).rank


def _require_psd(x: BipartiteOperator, tol: ToleranceProfile) -> tuple[np.ndarray, np.ndarray]:
    w, v = hermitian_eig(x.matrix, tol.eps_herm)
    if w[-1] < -tol.eps_psd:
        raise KebError(f"operator is not PSD (min eigenvalue {w[-1]:.3e})")
    return w, v


def pure_parts(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL) -> list[np.ndarray]:
    """Vectors ``xi_i`` with ``X = sum |xi_i><xi_i|`` from the eigendecomposition."""
    w, v = _require_psd(x, tol)
    cutoff = max(tol.eps_psd, 1e-12 * max(1.0, w[0]))
    return [np.sqrt(mu) * v[:, i] for i, mu in enumerate(w) if mu > cutoff]


def sn_upper_bound(
    x: BipartiteOperator,
    kraus_lists: list[list[np.ndarray]] | None = None,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> tuple[int, dict]:
    """Max Schmidt rank over eigen-parts, improved by any supplied Kraus lists.

    ``kraus_lists`` are alternative Kraus decompositions of the map whose Choi
    matrix is ``x``; each gives the bound ``max rank(V_i)``.
    """
    parts = pure_parts(x, tol)
    best = max((schmidt_rank(p, *x.dims) for p in parts), default=1)
    evidence = {"kind": "eigen_parts", "terms": len(parts), "bound": best}
    for idx, ops in enumerate(kraus_lists or []):
        r = max((np.linalg.matrix_rank(np.asarray(v), tol=SR_TOL * max(1.0, np.linalg.norm(v, 2))) for v in ops),
                default=1)
        r = max(r, 1)
        if r < best:
            best = r
            evidence = {"kind": "kraus_ranks", "list_index": idx, "terms": len(ops), "bound": r}
    return max(best, 1), evidence


def _probe_ops(d: int, k: int) -> dict[str, np.ndarray]:
    """Choi tensors of the two k-positive probes on M_d, second-factor action."""
    return {
        f"W_1/{k}": (np.eye(d * d) - swap_operator(d) / k).reshape(d, d, d, d),
        f"T.W_1/{k}": (np.eye(d * d) - omega_projector(d) / k).reshape(d, d, d, d),
    }


def apply_second(c4: np.ndarray, x: BipartiteOperator) -> np.ndarray:
    """``(id (x) Phi)(X)`` for a map given by its Choi tensor ``c4``."""
    da, db = x.dims
    d2 = c4.shape[1]
    out = np.einsum("piqj,iajb->paqb", x.tensor4(), c4)
    return out.reshape(da * d2, da * d2)


def sn_lower_bound(x: BipartiteOperator, k_max: int | None = None,
                   tol: ToleranceProfile = DEFAULT_TOL) -> tuple[int, dict]:
    """``1 + max{k : a k-positive probe on the second factor yields a negative eigenvalue}``."""
    _require_psd(x, tol)
    da, db = x.dims
    cap = min(da, db)
    k_max = cap if k_max is None else min(k_max, cap)
    best, witness = 1, {"kind": "none"}
    for k in range(k_max - 1, 0, -1):
        for name, c4 in _probe_ops(db, k).items():
            m = apply_second(c4, x)
            val, vec = min_eig(m, np.inf)
            if val < -tol.eps_psd:
                return k + 1, {"kind": "eigen", "probe": name, "k": k, "eigenvalue": val, "vector": vec}
    return best, witness


def sn_bounds(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL,
              kraus_lists: list[list[np.ndarray]] | None = None) -> SnBounds:
    lo, lev = sn_lower_bound(x, tol=tol)
    hi, hev = sn_upper_bound(x, kraus_lists, tol)
    return SnBounds(lo, hi, lev, hev)


@dataclass
class SchmidtGroup:
    """Pure parts of equal Schmidt rank ``j`` written as ``(V (x) I) psi``."""

    rank: int
    isometries: list[np.ndarray] = field(default_factory=list)
    vectors: list[np.ndarray] = field(default_factory=list)


def sn_regroup(parts: list[np.ndarray], dim_a: int, dim_b: int, tol: float = SR_TOL) -> dict[int, SchmidtGroup]:
    """Group pure parts by Schmidt rank, compressing each onto its left Schmidt span."""
    groups: dict[int, SchmidtGroup] = {}
    for xi in parts:
        sd = schmidt_decompose(xi, dim_a, dim_b, tol)
        if sd.rank == 0:
            continue
        v = sd.left
        if np.linalg.norm(v.conj().T @ v - np.eye(sd.rank)) > 1e-9:
            raise KebError("extracted left Schmidt basis is not isometric")
        psi = (np.diag(sd.coefficients) @ sd.right.T).reshape(-1)
        g = groups.setdefault(sd.rank, SchmidtGroup(sd.rank))
        g.isometries.append(v)
        g.vectors.append(psi)
    return dict(sorted(groups.items()))


def regroup_reconstruct(groups: dict[int, SchmidtGroup], dim_b: int) -> np.ndarray:
    total = None
    for g in groups.values():
        for v, psi in zip(g.isometries, g.vectors):
            xi = np.kron(v, np.eye(dim_b)) @ psi
            term = np.outer(xi, xi.conj())
            total = term if total is None else total + term
    return total
