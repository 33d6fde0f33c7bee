"""Averaging over ``U (x) U`` for Haar-random real orthogonal ``U``.

The fixed-point space is spanned by ``I (x) I``, ``|Omega><Omega|`` and the swap
``Delta``. Coefficients are written ``a I + b |Omega><Omega| + c Delta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from keb_lab.certificates import Certificate, Verdict, fails, unknown
from keb_lab.errors import DimensionError, InvalidParameterError
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    min_eig,
    omega_projector,
    partial_transpose,
    rng_from,
    swap_operator,
)

CHUNK = 4096


@dataclass(frozen=True)
class TwirlCoefficients:
    a: float
    b: float
    c: float

    def operator(self, d: int) -> np.ndarray:
        return self.a * np.eye(d * d) + self.b * omega_projector(d) + self.c * swap_operator(d)

    def trace(self, d: int) -> float:
        return self.a * d * d + (self.b + self.c) * d

    def pairings(self, d: int) -> tuple[float, float, float]:
        """``(tr X, tr X|Omega><Omega|, tr X Delta)`` of the represented operator."""
        a, b, c = self.a, self.b, self.c
        return a * d * d + (b + c) * d, (a + c) * d + b * d * d, (a + b) * d + c * d * d

    def as_tuple(self) -> tuple[float, float, float]:
        return self.a, self.b, self.c


def coefficients_from_pairings(t: float, t_omega: float, t_swap: float, d: int) -> TwirlCoefficients:
    """Invert the Gram system of the three fixed points in closed form."""
    if d < 2:
        raise InvalidParameterError("the twirl needs d >= 2")
    den = d ** 3 + d ** 2 - 2 * d
    a = ((d + 1) * t - t_omega - t_swap) / den
    b = ((d + 1) * t_omega - t_swap - t) / den
    c = ((d + 1) * t_swap - t_omega - t) / den
    return TwirlCoefficients(float(a), float(b), float(c))


def _square_dim(x: BipartiteOperator) -> int:
    if x.dim_a != x.dim_b:
        raise DimensionError("twirl needs equal factor dimensions")
    if x.dim_a < 2:
        raise InvalidParameterError("the twirl needs d >= 2")
    return x.dim_a


def haar_orthogonal(d: int, rng: np.random.Generator | int = 0, size: int | None = None) -> np.ndarray:
    """Haar-random real orthogonal matrix (or a stack of ``size`` of them)."""
    if not isinstance(rng, np.random.Generator):
        rng = rng_from(rng, 0x0A)
    shape = (d, d) if size is None else (size, d, d)
    z = rng.standard_normal(shape)
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1
    return q * signs[..., None, :]


def twirl_monte_carlo(x: BipartiteOperator, samples: int, seed: int = 0) -> BipartiteOperator:
    """Empirical mean of ``(U (x) U)^* X (U (x) U)``."""
    d = _square_dim(x)
    rng = rng_from(seed, 0x7A)
    total = np.zeros((d * d, d * d), dtype=complex)
    done = 0
    while done < samples:
        n = min(CHUNK, samples - done)
        u = haar_orthogonal(d, rng, size=n)
        k = np.einsum("nij,nkl->nikjl", u, u).reshape(n, d * d, d * d)
        total += np.sum(np.transpose(k, (0, 2, 1)) @ x.matrix @ k, axis=0)
        done += n
    return x.with_matrix(total / samples)


def twirl_project(x: BipartiteOperator) -> tuple[BipartiteOperator, TwirlCoefficients]:
    """Exact twirl via the preserved pairings with the three fixed points."""
    d = _square_dim(x)
    m = x.matrix
    w = np.eye(d).reshape(-1)
    t = np.trace(m).real
    t_omega = np.real(w @ m @ w)
    t_swap = np.real(np.trace(m @ swap_operator(d)))
    coeffs = coefficients_from_pairings(t, t_omega, t_swap, d)
    return x.with_matrix(coeffs.operator(d)), coeffs


def twirl_product_coeffs(x: np.ndarray, y: np.ndarray, d: int | None = None) -> TwirlCoefficients:
    """Twirl of ``|x><x| (x) |y><y|`` from the norms and the two overlaps."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d = x.size if d is None else d
    if x.size != d or y.size != d:
        raise DimensionError("vectors must have length d")
    t = float(np.vdot(x, x).real * np.vdot(y, y).real)
    t_swap = abs(np.vdot(x, y)) ** 2
    t_omega = abs(np.sum(x * y)) ** 2
    return coefficients_from_pairings(t, t_omega, t_swap, d)


def normalized_point(coeffs: TwirlCoefficients, d: int) -> tuple[float, float, float]:
    """``(trace, p, q)`` with ``p = tr(X Delta)/tr X`` and ``q = tr(X Omega)/tr X``."""
    t, t_omega, t_swap = coeffs.pairings(d)
    if abs(t) < 1e-300:
        raise InvalidParameterError("operator has zero trace")
    return t, t_swap / t, t_omega / t


def structured_pairs(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Product pairs hitting the four corners of the separable square."""
    e = np.eye(d, dtype=complex)
    circ = (e[0] + 1j * e[1]) / np.sqrt(2)
    return [
        (e[0], e[1]),  # p = 0, q = 0
        (e[0], e[0]),  # p = 1, q = 1
        (circ, circ),  # p = 1, q = 0
        (circ, circ.conj()),  # p = 0, q = 1
    ]


def sample_pairs(d: int, n: int, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    pairs = structured_pairs(d)
    while len(pairs) < n:
        kind = len(pairs) % 3
        if kind == 0:
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        elif kind == 1:
            q = haar_orthogonal(d, rng)
            x, y = q[:, 0].astype(complex), q[:, 1].astype(complex)
            t = rng.uniform(0, np.pi / 2)
            y = np.cos(t) * y + np.sin(t) * x
        else:
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            y = x.conj() if rng.random() < 0.5 else x.copy()
            y = y + 0.3 * (rng.standard_normal(d) + 1j * rng.standard_normal(d))
        pairs.append((x / np.linalg.norm(x), y / np.linalg.norm(y)))
    return pairs


@dataclass
class TwirlCombination:
    """``trace * sum_i weights[i] * P(|x_i><x_i| (x) |y_i><y_i|)`` with unit ``x_i, y_i``."""

    trace: float
    weights: np.ndarray
    pairs: list[tuple[np.ndarray, np.ndarray]]

    def coefficients(self, d: int) -> TwirlCoefficients:
        acc = np.zeros(3)
        for w, (x, y) in zip(self.weights, self.pairs):
            acc += w * np.array(twirl_product_coeffs(x, y, d).as_tuple())
        return TwirlCoefficients(*(self.trace * acc))

    def operator(self, d: int) -> np.ndarray:
        return self.coefficients(d).operator(d)


def twirl_cone_membership(coeffs: TwirlCoefficients, d: int, sample_points: int = 2000,
                          tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """Is ``a I + b|Omega><Omega| + c Delta`` a nonnegative combination of twirled products?"""
    if d < 2:
        raise InvalidParameterError("the twirl needs d >= 2")
    target = coeffs.operator(d)
    t, p, q = normalized_point(coeffs, d)
    op = BipartiteOperator(target, d, d)
    if t > 0:
        slack = 1e-10
        if -slack <= p <= 1 + slack and -slack <= q <= 1 + slack:
            pc, qc = min(max(p, 0.0), 1.0), min(max(q, 0.0), 1.0)
            rng = rng_from(tol.seed, 0x1C, d)
            pairs = sample_pairs(d, max(sample_points, 4), rng)
            pts = np.array([normalized_point(twirl_product_coeffs(x, y, d), d)[1:] for x, y in pairs])
            a_eq = np.vstack([pts.T, np.ones(len(pairs))])
            res = linprog(np.zeros(len(pairs)), A_eq=a_eq, b_eq=[pc, qc, 1.0], bounds=(0, None), method="highs")
            if res.status == 0:
                w = np.clip(res.x, 0, None)
                support = np.flatnonzero(w > 1e-14)
                w = w[support] / w[support].sum()
                combo = TwirlCombination(t, w, [pairs[i] for i in support])
                residual = float(np.linalg.norm(combo.operator(d) - target))
                ev = {"kind": "decomposition", "route": "twirl cone LP", "point": (p, q),
                      "weights": w, "pairs": combo.pairs, "trace": t, "residual": residual}
                verdict = Verdict.HOLDS if residual <= tol.eps_sep else Verdict.UNKNOWN
                return Certificate(verdict, "twirl cone LP", ev, decomposition=combo)
    val, vec = min_eig(target, np.inf)
    if val < -tol.eps_psd:
        return fails("twirl cone: not PSD", kind="eigen", eigenvalue=val, vector=vec, point=(p, q))
    val, vec = min_eig(partial_transpose(op, "second").matrix, np.inf)
    if val < -tol.eps_psd:
        return fails("twirl cone: PPT", kind="eigen", eigenvalue=val, vector=vec,
                     operator="partial_transpose", point=(p, q))
    return unknown("twirl cone LP", kind="search", point=(p, q), samples=sample_points)


def in_fixed_space(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[bool, TwirlCoefficients | None]:
    if x.dim_a != x.dim_b or x.dim_a < 2:
        return False, None
    proj, coeffs = twirl_project(x)
    scale = max(1.0, float(np.linalg.norm(x.matrix)))
    return bool(np.linalg.norm(proj.matrix - x.matrix) <= 1e3 * tol.eps_eq * scale), coeffs
