"""Linear maps between matrix algebras and the map calculus.

A map ``M_d1 -> M_d2`` is a :class:`ChannelRep`. The Choi matrix
``C = sum_ij E_ij (x) Phi(E_ij)`` is the canonical form; Kraus lists and named
families are kept alongside so that analytic answers stay available. Kraus
operators are ``d1 x d2`` and act as ``X -> sum_i V_i^* X V_i``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from keb_lab.errors import (
    DimensionError,
    InvalidParameterError,
    NotCompletelyPositiveError,
)
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    hermitize,
    omega_projector,
    swap_operator,
)

FAMILY_NAMES = (
    "WernerHolevo",
    "PhiLambda",
    "WernerModified",
    "Schur",
    "AdV",
    "Identity",
    "Transpose",
    "TraceMap",
    "DirectSum",
)


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """A named parametric family instance.

    ``params`` per family:

    * ``WernerHolevo``, ``PhiLambda``: ``lambda`` (real), ``d`` (int)
    * ``WernerModified``: ``lambda`` (real), ``gamma`` (a square :class:`ChannelRep`)
    * ``Schur``: ``A`` (square matrix)
    * ``AdV``: ``V`` (``d1 x d2`` matrix)
    * ``Identity``, ``Transpose``: ``d``
    * ``TraceMap``: ``d``, optional ``d_out``
    * ``DirectSum``: ``first``, ``second`` (ChannelReps with equal input dimension)
    """

    name: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in FAMILY_NAMES:
            raise InvalidParameterError(f"unknown family {self.name!r}")

    @property
    def lam(self) -> float:
        return float(self.params["lambda"])


class ChannelRep:
    """Immutable linear map ``M_dim_in -> M_dim_out``.

    Exactly one of ``choi``, ``kraus`` or ``family`` is given. Other forms are
    derived lazily and cached.
    """

    def __init__(
        self,
        dim_in: int,
        dim_out: int,
        *,
        choi: np.ndarray | BipartiteOperator | None = None,
        kraus: list[np.ndarray] | None = None,
        family: FamilySpec | None = None,
        equivariant: bool = False,
    ):
        if sum(b is not None for b in (choi, kraus, family)) != 1:
            raise ValueError("give exactly one body: choi, kraus or family")
        if dim_in < 1 or dim_out < 1:
            raise DimensionError("dimensions must be positive")
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.family = family
        # Caller's claim that Phi(U X U*) = V Phi(X) V* for every unitary U;
        # spot-checked before any criterion relies on it.
        self.equivariant = bool(equivariant)
        self._lock = threading.RLock()
        self._choi: BipartiteOperator | None = None
        self._kraus: tuple[np.ndarray, ...] | None = None
        self._body = "family" if family is not None else ("kraus" if kraus is not None else "choi")
        if choi is not None:
            m = choi.matrix if isinstance(choi, BipartiteOperator) else choi
            self._choi = BipartiteOperator(np.array(m, dtype=complex), dim_in, dim_out)
        if kraus is not None:
            ops = tuple(np.array(v, dtype=complex) for v in kraus)
            if not ops:
                raise ValueError("empty Kraus list")
            for v in ops:
                if v.shape != (dim_in, dim_out):
                    raise DimensionError(f"Kraus operator shape {v.shape} != {(dim_in, dim_out)}")
            self._kraus = ops

    @property
    def body_kind(self) -> str:
        return self._body

    @property
    def choi(self) -> BipartiteOperator:
        if self._choi is None:
            with self._lock:
                if self._choi is None:
                    self._choi = self._build_choi()
        return self._choi

    def _build_choi(self) -> BipartiteOperator:
        if self._kraus is not None:
            m = sum(np.outer(w, w.conj()) for w in (v.conj().reshape(-1) for v in self._kraus))
            return BipartiteOperator(m, self.dim_in, self.dim_out)
        return BipartiteOperator(_family_choi(self.family), self.dim_in, self.dim_out)

    def kraus(self, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[np.ndarray, ...]:
        """Kraus operators; derived from an eigendecomposition of the Choi matrix."""
        if self._kraus is None:
            with self._lock:
                if self._kraus is None:
                    self._kraus = kraus_from_choi(self.choi, tol)
        return self._kraus

    @property
    def is_square(self) -> bool:
        return self.dim_in == self.dim_out

    def apply(self, x: np.ndarray) -> np.ndarray:
        return apply(self, x)

    def __repr__(self) -> str:
        tag = self.family.name if self.family else self.body_kind
        return f"ChannelRep({self.dim_in}->{self.dim_out}, {tag})"


def kraus_from_choi(c: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[np.ndarray, ...]:
    d1, d2 = c.dims
    w, v = np.linalg.eigh(hermitize(c.matrix, tol.eps_herm))
    if w[0] < -tol.eps_psd:
        raise NotCompletelyPositiveError(
            f"Choi matrix has eigenvalue {w[0]:.3e}; no Kraus form exists"
        )
    cutoff = max(tol.eps_psd, 1e-12 * max(1.0, w[-1]))
    ops = [
        np.conj(np.sqrt(mu) * v[:, i]).reshape(d1, d2)
        for i, mu in enumerate(w)
        if mu > cutoff
    ]
    if not ops:
        ops = [np.zeros((d1, d2), dtype=complex)]
    return tuple(ops[::-1])


def _choi_tensor(phi: ChannelRep) -> np.ndarray:
    return phi.choi.tensor4()


def apply(phi: ChannelRep, x: np.ndarray) -> np.ndarray:
    """Evaluate ``Phi(X)``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (phi.dim_in, phi.dim_in):
        raise DimensionError(f"input shape {x.shape} does not match dim_in={phi.dim_in}")
    if phi.body_kind == "kraus":
        return sum(v.conj().T @ x @ v for v in phi._kraus)
    return np.einsum("ij,iajb->ab", x, _choi_tensor(phi))


def choi_of(phi: ChannelRep) -> BipartiteOperator:
    return phi.choi


def map_of_choi(c: BipartiteOperator | np.ndarray, dim_in: int | None = None,
                dim_out: int | None = None, tol: ToleranceProfile = DEFAULT_TOL) -> ChannelRep:
    """Map with the given Choi matrix. PSD inputs get their Kraus list precomputed."""
    if not isinstance(c, BipartiteOperator):
        c = BipartiteOperator(c, dim_in, dim_out)
    phi = ChannelRep(c.dim_a, c.dim_b, choi=c.matrix)
    try:
        phi.kraus(tol)
    except (NotCompletelyPositiveError, ValueError):
        pass
    return phi


def compose(phi: ChannelRep, psi: ChannelRep) -> ChannelRep:
    """``Phi o Psi`` (apply ``Psi`` first)."""
    if psi.dim_out != phi.dim_in:
        raise DimensionError(f"cannot compose: {psi.dim_out} != {phi.dim_in}")
    if (phi.body_kind == psi.body_kind == "kraus"
            and len(phi._kraus) * len(psi._kraus) <= psi.dim_in * phi.dim_out):
        # Ad_V o Ad_W = Ad_{WV}
        return ChannelRep(psi.dim_in, phi.dim_out, kraus=[w @ v for w in psi._kraus for v in phi._kraus])
    c = apply_id_tensor(phi, psi.choi.matrix, psi.dim_in, "left")
    return ChannelRep(psi.dim_in, phi.dim_out, choi=c)


def apply_id_tensor(phi: ChannelRep, x: np.ndarray, k: int, side: Literal["left", "right"] = "left") -> np.ndarray:
    """Evaluate ``(id_k (x) Phi)(X)`` (side ``left``) or ``(Phi (x) id_k)(X)``."""
    d1, d2 = phi.dim_in, phi.dim_out
    x = np.asarray(x, dtype=complex)
    if x.shape != (k * d1, k * d1):
        raise DimensionError(f"input shape {x.shape} does not match k*dim_in={k * d1}")
    c4 = _choi_tensor(phi)
    if side == "left":
        out = np.einsum("piqj,iajb->paqb", x.reshape(k, d1, k, d1), c4)
    elif side == "right":
        out = np.einsum("ipjq,iajb->apbq", x.reshape(d1, k, d1, k), c4)
    else:
        raise ValueError(f"unknown side {side!r}")
    return out.reshape(k * d2, k * d2)


def tensor_with_identity(phi: ChannelRep, k: int, side: Literal["left", "right"] = "left") -> ChannelRep:
    """``id_k (x) Phi`` (``left``) or ``Phi (x) id_k`` (``right``) as a map."""
    if k < 1:
        raise InvalidParameterError("k must be positive")
    d1, d2 = phi.dim_in, phi.dim_out
    eye = np.eye(k)
    c4 = _choi_tensor(phi)
    if side == "left":
        t = np.einsum("pr,qs,iajb->piraqjsb", eye, eye, c4)
    elif side == "right":
        t = np.einsum("pr,qs,iajb->iparjqbs", eye, eye, c4)
    else:
        raise ValueError(f"unknown side {side!r}")
    n = k * d1 * k * d2
    return ChannelRep(k * d1, k * d2, choi=t.reshape(n, n))


def adjoint(phi: ChannelRep) -> ChannelRep:
    """Hilbert-Schmidt adjoint ``Phi^*: M_d2 -> M_d1``."""
    if phi.body_kind == "kraus":
        return ChannelRep(phi.dim_out, phi.dim_in, kraus=[v.conj().T for v in phi._kraus])
    c4 = _choi_tensor(phi)
    n = phi.dim_in * phi.dim_out
    return ChannelRep(phi.dim_out, phi.dim_in, choi=np.conj(c4.transpose(1, 0, 3, 2)).reshape(n, n))


def transpose_conjugate(phi: ChannelRep) -> ChannelRep:
    """``T o Phi o T``; its Choi matrix is the full transpose of ``C_Phi``."""
    if phi.body_kind == "kraus":
        return ChannelRep(phi.dim_in, phi.dim_out, kraus=[v.conj() for v in phi._kraus])
    return ChannelRep(phi.dim_in, phi.dim_out, choi=phi.choi.matrix.T.copy())


def compose_transpose(phi: ChannelRep, where: Literal["before", "after"]) -> ChannelRep:
    """``Phi o T`` (``before``) or ``T o Phi`` (``after``)."""
    c4 = _choi_tensor(phi)
    if where == "before":
        t = c4.transpose(2, 1, 0, 3)
    elif where == "after":
        t = c4.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"unknown position {where!r}")
    n = phi.dim_in * phi.dim_out
    return ChannelRep(phi.dim_in, phi.dim_out, choi=t.reshape(n, n))


def linear_combination(terms: list[tuple[complex, ChannelRep]]) -> ChannelRep:
    d1, d2 = terms[0][1].dim_in, terms[0][1].dim_out
    for _, t in terms:
        if (t.dim_in, t.dim_out) != (d1, d2):
            raise DimensionError("all terms must share dimensions")
    return ChannelRep(d1, d2, choi=sum(a * t.choi.matrix for a, t in terms))


# ---------------------------------------------------------------- families

def _as_int(x, what: str) -> int:
    if isinstance(x, bool) or int(x) != x or int(x) < 1:
        raise InvalidParameterError(f"{what} must be a positive integer")
    return int(x)


def _as_real(x, what: str) -> float:
    try:
        v = complex(x)
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"{what} must be real") from exc
    if v.imag != 0 or not np.isfinite(v.real):
        raise InvalidParameterError(f"{what} must be a finite real")
    return v.real


def _family_dims(spec: FamilySpec) -> tuple[int, int]:
    p = spec.params
    name = spec.name
    if name in ("WernerHolevo", "PhiLambda", "Identity", "Transpose"):
        d = _as_int(p.get("d"), "d")
        return d, d
    if name == "TraceMap":
        d = _as_int(p.get("d"), "d")
        return d, _as_int(p.get("d_out", d), "d_out")
    if name == "WernerModified":
        g = p.get("gamma")
        if not isinstance(g, ChannelRep) or not g.is_square:
            raise InvalidParameterError("gamma must be a square ChannelRep")
        return g.dim_in, g.dim_in
    if name == "Schur":
        a = np.asarray(p.get("A"), dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidParameterError("Schur requires a square matrix A")
        return a.shape[0], a.shape[0]
    if name == "AdV":
        v = np.asarray(p.get("V"), dtype=complex)
        if v.ndim != 2 or min(v.shape) < 1:
            raise InvalidParameterError("AdV requires a matrix V")
        return v.shape
    if name == "DirectSum":
        a, b = p.get("first"), p.get("second")
        if not isinstance(a, ChannelRep) or not isinstance(b, ChannelRep):
            raise InvalidParameterError("DirectSum requires two ChannelReps")
        if a.dim_in != b.dim_in:
            raise InvalidParameterError("DirectSum summands need equal input dimension")
        return a.dim_in, a.dim_out + b.dim_out
    raise InvalidParameterError(f"unknown family {name!r}")


def _family_choi(spec: FamilySpec) -> np.ndarray:
    p = spec.params
    name = spec.name
    d1, d2 = _family_dims(spec)
    if name == "WernerHolevo":
        return np.eye(d1 * d1) - spec.lam * swap_operator(d1)
    if name == "PhiLambda":
        return np.eye(d1 * d1) + spec.lam * (omega_projector(d1) + swap_operator(d1))
    if name == "WernerModified":
        return np.eye(d1 * d1) + spec.lam * p["gamma"].choi.matrix
    if name == "Schur":
        a = np.asarray(p["A"], dtype=complex)
        c = np.zeros((d1, d1, d1, d1), dtype=complex)
        for i in range(d1):
            for j in range(d1):
                c[i, i, j, j] = a[i, j]
        return c.reshape(d1 * d1, d1 * d1)
    if name == "AdV":
        w = np.conj(np.asarray(p["V"], dtype=complex)).reshape(-1)
        return np.outer(w, w.conj())
    if name == "Identity":
        return omega_projector(d1)
    if name == "Transpose":
        return swap_operator(d1)
    if name == "TraceMap":
        return np.eye(d1 * d2, dtype=complex)
    if name == "DirectSum":
        a, b = p["first"], p["second"]
        ca, cb = a.choi.tensor4(), b.choi.tensor4()
        c = np.zeros((d1, d2, d1, d2), dtype=complex)
        c[:, : a.dim_out, :, : a.dim_out] = ca
        c[:, a.dim_out :, :, a.dim_out :] = cb
        return c.reshape(d1 * d2, d1 * d2)
    raise InvalidParameterError(f"unknown family {name!r}")


_EQUIVARIANT = {"WernerHolevo", "Identity", "Transpose", "TraceMap"}


def family_make(spec: FamilySpec) -> ChannelRep:
    """Validate parameters and build the family instance."""
    if "lambda" in spec.params:
        spec.params["lambda"] = _as_real(spec.params["lambda"], "lambda")
    d1, d2 = _family_dims(spec)
    equivariant = spec.name in _EQUIVARIANT and (spec.name != "TraceMap" or d1 == d2)
    return ChannelRep(d1, d2, family=spec, equivariant=equivariant)


def werner_holevo(lam: float, d: int) -> ChannelRep:
    """``X -> tr(X) I - lam X^T``."""
    return family_make(FamilySpec("WernerHolevo", {"lambda": lam, "d": d}))


def phi_lambda(lam: float, d: int) -> ChannelRep:
    """``X -> tr(X) I + lam (X + X^T)``."""
    return family_make(FamilySpec("PhiLambda", {"lambda": lam, "d": d}))


def werner_modified(lam: float, gamma: ChannelRep) -> ChannelRep:
    """``X -> tr(X) I + lam Gamma(X)``."""
    return family_make(FamilySpec("WernerModified", {"lambda": lam, "gamma": gamma}))


def schur_map(a: np.ndarray) -> ChannelRep:
    return family_make(FamilySpec("Schur", {"A": np.asarray(a, dtype=complex)}))


def ad_v(v: np.ndarray) -> ChannelRep:
    """``X -> V^* X V``."""
    return family_make(FamilySpec("AdV", {"V": np.asarray(v, dtype=complex)}))


def identity_map(d: int) -> ChannelRep:
    return family_make(FamilySpec("Identity", {"d": d}))


def transpose_map(d: int) -> ChannelRep:
    return family_make(FamilySpec("Transpose", {"d": d}))


def trace_map(d: int, d_out: int | None = None) -> ChannelRep:
    """``X -> tr(X) I_{d_out}``."""
    return family_make(FamilySpec("TraceMap", {"d": d, "d_out": d if d_out is None else d_out}))


def direct_sum(first: ChannelRep, second: ChannelRep) -> ChannelRep:
    return family_make(FamilySpec("DirectSum", {"first": first, "second": second}))


def random_cp_map(d_in: int, d_out: int, rng: np.random.Generator, kraus_rank: int | None = None,
                  max_rank: int | None = None) -> ChannelRep:
    """CP map with Gaussian Kraus operators, optionally each of rank <= max_rank."""
    n = kraus_rank or d_in * d_out
    ops = []
    for _ in range(n):
        if max_rank is None:
            v = rng.standard_normal((d_in, d_out)) + 1j * rng.standard_normal((d_in, d_out))
        else:
            a = rng.standard_normal((d_in, max_rank)) + 1j * rng.standard_normal((d_in, max_rank))
            b = rng.standard_normal((max_rank, d_out)) + 1j * rng.standard_normal((max_rank, d_out))
            v = a @ b
        ops.append(v / np.sqrt(2 * n))
    return ChannelRep(d_in, d_out, kraus=ops)
