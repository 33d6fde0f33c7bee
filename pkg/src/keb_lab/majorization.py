"""Weak majorization of spectra, and its use as a necessary condition for k-EB maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from keb_lab.certificates import Certificate, fails, holds, unknown
from keb_lab.channels import ChannelRep
from keb_lab.errors import DimensionError, InvalidParameterError
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    eigvalsh,
    kron,
    min_eig,
    partial_trace,
    partial_transpose,
    range_basis,
)

SLACK = 1e-9


@dataclass(frozen=True)
class SpectrumVector:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(sorted((float(v) for v in self.values), reverse=True))
        object.__setattr__(self, "values", vals)

    @classmethod
    def of_matrix(cls, m: np.ndarray) -> SpectrumVector:
        return cls(tuple(eigvalsh(np.asarray(m))))

    @property
    def padded_length(self) -> int:
        return len(self.values)

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, len(self.values)))
        out[: len(self.values)] = self.values
        return out

    def scaled(self, c: float) -> SpectrumVector:
        if c < 0:
            raise InvalidParameterError("scaling by a negative factor reverses the order")
        return SpectrumVector(tuple(c * v for v in self.values))


def _as_spectrum(v) -> SpectrumVector:
    return v if isinstance(v, SpectrumVector) else SpectrumVector(tuple(np.asarray(v, dtype=float).ravel()))


def weakly_majorizes(y, x) -> Certificate:
    """Is ``x`` weakly majorized by ``y``? Shorter vectors are padded with zeros."""
    x, y = _as_spectrum(x), _as_spectrum(y)
    n = max(x.padded_length, y.padded_length)
    px, py = np.cumsum(x.padded(n)), np.cumsum(y.padded(n))
    gaps = py - px
    bad = np.flatnonzero(gaps < -SLACK)
    if bad.size:
        i = int(bad[0])
        return fails("prefix sums", kind="prefix", index=i + 1, x_sum=float(px[i]), y_sum=float(py[i]))
    return holds("prefix sums", kind="prefix", min_gap=float(gaps.min()) if n else 0.0, length=n)


def majorizes(y, x) -> Certificate:
    """Weak majorization plus equal totals."""
    cert = weakly_majorizes(y, x)
    if cert.fails:
        return cert
    sx, sy = sum(_as_spectrum(x).values), sum(_as_spectrum(y).values)
    if abs(sx - sy) > SLACK:
        return fails("total sums", kind="sum", x_sum=sx, y_sum=sy)
    return cert


def doubly_substochastic_check(d: np.ndarray, tol: float = 1e-12) -> Certificate:
    d = np.asarray(d)
    if np.iscomplexobj(d):
        if np.abs(d.imag).max(initial=0.0) > tol:
            raise InvalidParameterError("doubly sub-stochastic matrices are real")
        d = d.real
    if d.ndim != 2:
        raise DimensionError("expected a matrix")
    if d.min(initial=0.0) < -tol:
        i, j = np.unravel_index(np.argmin(d), d.shape)
        return fails("entrywise", kind="entry", index=(int(i), int(j)), value=float(d[i, j]))
    rows, cols = d.sum(axis=1), d.sum(axis=0)
    if rows.max(initial=0.0) > 1 + tol:
        return fails("row sums", kind="row", index=int(np.argmax(rows)), value=float(rows.max()))
    if cols.max(initial=0.0) > 1 + tol:
        return fails("column sums", kind="column", index=int(np.argmax(cols)), value=float(cols.max()))
    return holds("entrywise and line sums", kind="lines", max_row=float(rows.max(initial=0.0)),
                 max_col=float(cols.max(initial=0.0)))


def substochastic_matrix(y, x) -> np.ndarray | None:
    """A doubly sub-stochastic ``D`` with ``x = D y`` (descending, padded), found by LP."""
    x, y = _as_spectrum(x), _as_spectrum(y)
    n = max(x.padded_length, y.padded_length)
    xv, yv = x.padded(n), y.padded(n)
    # unknowns D_ij row-major; equalities sum_j D_ij y_j = x_i; line sums <= 1
    a_eq = np.kron(np.eye(n), yv[None, :])
    a_ub = np.vstack([np.kron(np.eye(n), np.ones((1, n))), np.kron(np.ones((1, n)), np.eye(n))])
    res = linprog(np.zeros(n * n), A_ub=a_ub, b_ub=np.ones(2 * n), A_eq=a_eq, b_eq=xv,
                  bounds=(0, None), method="highs")
    return res.x.reshape(n, n) if res.status == 0 else None


# ----------------------------------------------------------- operator level

def support_compress(x: BipartiteOperator, side: str = "second") -> BipartiteOperator:
    """Restrict ``X`` to ``supp(tr_2 X) (x) C^dB`` (or the mirror for ``side="first"``)."""
    if side == "second":
        v = range_basis(partial_trace(x, "second"))
        w = kron(v, np.eye(x.dim_b))
        return BipartiteOperator(w.conj().T @ x.matrix @ w, v.shape[1], x.dim_b)
    v = range_basis(partial_trace(x, "first"))
    w = kron(np.eye(x.dim_a), v)
    return BipartiteOperator(w.conj().T @ x.matrix @ w, x.dim_a, v.shape[1])


def _hypothesis(x: BipartiteOperator, k: int, side: str) -> np.ndarray:
    if side == "second":
        return kron(partial_trace(x, "second"), np.eye(x.dim_b)) - x.matrix / k
    return kron(np.eye(x.dim_a), partial_trace(x, "first")) - x.matrix / k


def _transposed_hypothesis(x: BipartiteOperator, k: int, side: str) -> np.ndarray:
    if side == "second":
        return kron(partial_trace(x, "second"), np.eye(x.dim_b)) - partial_transpose(x, "second").matrix / k
    return kron(np.eye(x.dim_a), partial_trace(x, "first")) - partial_transpose(x, "first").matrix / k


def conditional_majorization_check(x: BipartiteOperator, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """``tr_2(X) (x) I - X/k >= 0`` implies ``sigma(X) <_w k sigma(tr_2 X)``; likewise for ``tr_1``.

    Hypothesis and conclusion are reported per side. The verdict is FAILS only if
    a hypothesis holds while its conclusion does not, which would contradict the
    theorem. The eigenvalue of the transposed form ``tr_2(X) (x) I - (id (x) T)(X)/k``
    is reported for comparison but never used as a hypothesis.
    """
    if k < 1:
        raise InvalidParameterError("k must be positive")
    if x.dim_a != x.dim_b:
        raise DimensionError("conditional majorization needs equal factors")
    if min_eig(x.matrix, np.inf)[0] < -tol.eps_psd:
        raise InvalidParameterError("X must be PSD")
    sides = {}
    verdict_fails = False
    for side in ("second", "first"):
        y = support_compress(x, side)
        hyp = min_eig(_hypothesis(y, k, side), np.inf)[0]
        ok = hyp >= -tol.eps_psd
        marg = SpectrumVector.of_matrix(partial_trace(x, side)).scaled(k)
        concl = weakly_majorizes(marg, SpectrumVector.of_matrix(x.matrix))
        sides[side] = {"hypothesis": bool(ok), "hypothesis_min_eig": hyp, "conclusion": concl.verdict.value,
                       "transposed_form_min_eig": min_eig(_transposed_hypothesis(x, k, side), np.inf)[0],
                       "prefix": concl.evidence}
        verdict_fails |= ok and concl.fails
    if verdict_fails:
        return fails("conditional majorization", kind="majorization", k=k, sides=sides)
    if any(s["hypothesis"] for s in sides.values()):
        return holds("conditional majorization", kind="majorization", k=k, sides=sides)
    return unknown("conditional majorization", kind="majorization", k=k, sides=sides,
                   note="hypothesis not met on either side")


def choi_majorization(c: BipartiteOperator, factor: float) -> Certificate:
    """``sigma(C) <_w factor * sigma(tr_i C)`` for both partial traces."""
    spec = SpectrumVector.of_matrix(c.matrix)
    out = {}
    for side in ("first", "second"):
        marg = SpectrumVector.of_matrix(partial_trace(c, side)).scaled(factor)
        cert = weakly_majorizes(marg, spec)
        out[side] = cert
        if cert.fails:
            return fails("Choi majorization", kind="majorization", side=side, factor=factor, prefix=cert.evidence)
    return holds("Choi majorization", kind="majorization", factor=factor,
                 min_gap={s: c_.evidence["min_gap"] for s, c_ in out.items()})


def keb_majorization_check(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """For certified k-EB ``Phi`` on ``M_d``: ``C_Phi <_w (d - k + 1) tr_i(C_Phi)``."""
    from keb_lab.keb import keb_certify

    if not phi.is_square:
        raise DimensionError("keb_majorization_check needs a square map")
    d = phi.dim_in
    if not 1 <= k <= d:
        raise InvalidParameterError("need 1 <= k <= d")
    rep = keb_certify(phi, k, tol)
    if not rep.holds:
        raise InvalidParameterError(f"map is not certified {k}-EB ({rep.summary()})")
    cert = choi_majorization(phi.choi, d - k + 1)
    cert.evidence["certified_by"] = rep.route
    return cert
