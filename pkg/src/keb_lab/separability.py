"""Separability refutation and certification for bipartite PSD operators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, nnls

from keb_lab.certificates import Certificate, Verdict, fails, holds, unknown
from keb_lab.channels import ChannelRep, compose_transpose
from keb_lab.errors import InvalidParameterError, KebError
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    hermitize,
    min_eig,
    nuclear_norm,
    partial_trace,
    partial_transpose,
    range_basis,
    realignment,
    rng_from,
)
from keb_lab.twirl import TwirlCombination, in_fixed_space, twirl_cone_membership

LAMBDA_GRID = (-0.5, 0.0, 1.0, 10.0)
MAX_TERMS = 500


class NotPSDError(KebError, ValueError):
    """Separability questions are only posed for PSD operators."""


@dataclass
class SeparableDecomposition:
    """``X = sum_i A_i (x) B_i`` plus an optional twirled part.

    ``twirl`` holds a convex combination of twirled pure products; each such
    term is separable but is stored through its closed form.
    """

    terms: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    residual: float = 0.0
    twirl: TwirlCombination | None = None
    dims: tuple[int, int] = (0, 0)

    def reconstruct(self) -> np.ndarray:
        da, db = self.dims
        out = np.zeros((da * db, da * db), dtype=complex)
        for a, b in self.terms:
            out += np.kron(a, b)
        if self.twirl is not None:
            out += self.twirl.operator(da)
        return out

    def __len__(self) -> int:
        return len(self.terms) + (len(self.twirl.weights) if self.twirl is not None else 0)


def verify_decomposition(x: BipartiteOperator, dec: SeparableDecomposition,
                         tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Recompute the residual and check every factor is PSD."""
    for a, b in dec.terms:
        for f in (a, b):
            if np.max(np.abs(f - f.conj().T)) > 1e-8 * max(1.0, np.abs(f).max()):
                return False
            if np.linalg.eigvalsh(hermitize(f, np.inf))[0] < -tol.eps_psd:
                return False
    if dec.twirl is not None and np.any(dec.twirl.weights < 0):
        return False
    return float(np.linalg.norm(dec.reconstruct() - x.matrix)) <= tol.eps_sep


def _require_psd(x: BipartiteOperator, tol: ToleranceProfile) -> np.ndarray:
    h = hermitize(x.matrix, max(tol.eps_herm, 1e-12 * max(1.0, np.abs(x.matrix).max())))
    val = np.linalg.eigvalsh(h)[0]
    if val < -tol.eps_psd:
        raise NotPSDError(f"operator is not PSD (min eigenvalue {val:.3e})")
    return h


# ----------------------------------------------------------- refutation

def sep_necessary_inequality(x: BipartiteOperator, lam: float, side: str = "first",
                             tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """Eigensolve of ``lam X + lam (T (x) id)X + I (x) tr_1 X`` (or the second-factor variant)."""
    if lam < -0.5:
        raise InvalidParameterError("lambda must be >= -1/2")
    if x.dim_a != x.dim_b:
        raise InvalidParameterError("the inequality needs equal factor dimensions")
    d = x.dim_a
    if side == "first":
        op = lam * x.matrix + lam * partial_transpose(x, "first").matrix + np.kron(np.eye(d), partial_trace(x, "first"))
    elif side == "second":
        op = lam * x.matrix + lam * partial_transpose(x, "second").matrix + np.kron(partial_trace(x, "second"), np.eye(d))
    else:
        raise ValueError(f"unknown side {side!r}")
    val, vec = min_eig(op, np.inf)
    make = fails if val < -tol.eps_psd else holds
    return make("necessary inequality", kind="eigen", eigenvalue=val, vector=vec, lam=lam, side=side)


def _realignment_test(x: BipartiteOperator, tol: ToleranceProfile) -> Certificate | None:
    nn = nuclear_norm(realignment(x))
    tr = x.trace().real
    if nn > tr + tol.eps_psd * max(1.0, tr):
        return fails("realignment", kind="realignment", nuclear_norm=nn, trace=tr)
    return None


def _qubit_first(h: np.ndarray, da: int, db: int) -> tuple[np.ndarray, int, bool]:
    """Reorder so that a two-dimensional factor comes first."""
    if da == 2:
        return h, db, False
    if db == 2:
        return BipartiteOperator(h, da, db).swapped().matrix, da, True
    raise ValueError("no qubit factor")


def _qubit_vectors(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _compressed_min(h4: np.ndarray, a: np.ndarray) -> np.ndarray:
    m = np.einsum("ci,iajb,cj->cab", a.conj(), h4, a)
    return np.linalg.eigvalsh(m)[:, 0]


def qubit_product_minimum(h: np.ndarray, n: int) -> float:
    """Estimate ``min <a (x) b|H|a (x) b>`` over unit ``a in C^2``, ``b in C^n``."""
    h4 = h.reshape(2, n, 2, n)
    th = np.linspace(0, np.pi, 97)
    ph = np.linspace(0, 2 * np.pi, 192, endpoint=False)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    vals = _compressed_min(h4, _qubit_vectors(tt.ravel(), pp.ravel()))
    i = int(np.argmin(vals))
    t0, p0 = tt.ravel()[i], pp.ravel()[i]
    best = vals[i]
    step = np.pi / 96
    for _ in range(40):
        tl = np.clip(t0 + step * np.linspace(-2, 2, 9), 0, np.pi)
        pl = p0 + step * np.linspace(-2, 2, 9)
        tg, pg = np.meshgrid(tl, pl, indexing="ij")
        v = _compressed_min(h4, _qubit_vectors(tg.ravel(), pg.ravel()))
        j = int(np.argmin(v))
        if v[j] < best:
            best, t0, p0 = v[j], tg.ravel()[j], pg.ravel()[j]
        step /= 2
    return float(best)


def certify_qubit_product_bound(h: np.ndarray, n: int, eps: float, budget: int = 2_000_000) -> tuple[bool, int]:
    """Prove ``<a (x) b|H|a (x) b> >= eps`` for all unit product vectors (qubit first factor).

    Branch and bound over Bloch-sphere cells. For a cell with centre ``c`` the
    Bloch angle to any member is at most ``dtheta/2 + sin(theta_c) dphi/2``
    and the compressed minimum eigenvalue moves by at most ``||H||`` times that
    angle. Shifting ``H`` by the midpoint of its spectrum first shrinks that
    norm without changing the question.
    """
    w = np.linalg.eigvalsh(hermitize(h, np.inf))
    mu = (w[0] + w[-1]) / 2
    h = h - mu * np.eye(h.shape[0])
    eps = eps - mu
    h4 = h.reshape(2, n, 2, n)
    lip = float(w[-1] - mu)
    nt, npf = 32, 64
    t_edges = np.linspace(0, np.pi, nt + 1)
    p_edges = np.linspace(0, 2 * np.pi, npf + 1)
    t0, p0 = np.meshgrid(t_edges[:-1], p_edges[:-1], indexing="ij")
    cells = np.stack([t0.ravel(), p0.ravel(),
                      np.full(t0.size, np.pi / nt), np.full(t0.size, 2 * np.pi / npf)], axis=1)
    used = 0
    while cells.size:
        used += len(cells)
        if used > budget:
            return False, used
        tc = cells[:, 0] + cells[:, 2] / 2
        pc = cells[:, 1] + cells[:, 3] / 2
        vals = _compressed_min(h4, _qubit_vectors(tc, pc))
        if np.any(vals < eps):
            return False, used
        radius = cells[:, 2] / 2 + np.sin(tc) * cells[:, 3] / 2
        open_ = vals - lip * radius < eps
        c = cells[open_]
        if not c.size:
            break
        ht, hp = c[:, 2] / 2, c[:, 3] / 2
        cells = np.concatenate([
            np.stack([c[:, 0], c[:, 1], ht, hp], 1),
            np.stack([c[:, 0] + ht, c[:, 1], ht, hp], 1),
            np.stack([c[:, 0], c[:, 1] + hp, ht, hp], 1),
            np.stack([c[:, 0] + ht, c[:, 1] + hp, ht, hp], 1),
        ])
    return True, used


def _kernel_projector(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(m, np.inf))
    k = v[:, w <= 1e-10 * max(1.0, abs(w[-1]))]
    return k @ k.conj().T


def edge_witness(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate | None:
    """Witness ``W = P + Q^Gamma - eps I`` for a PPT operator with a qubit factor.

    ``P`` and ``Q`` project onto the kernels of ``X`` and ``X^Gamma``, so
    ``tr(W X) = -eps tr X``. ``W`` is block-positive once ``eps`` is a certified
    lower bound for ``<ef|P + Q^Gamma|ef>`` over product vectors. The operator
    is first compressed to its local supports, which may expose a qubit factor.
    """
    y, va, vb = _compress_local(x)
    if not np.allclose(_lift(y.matrix, va, vb), x.matrix, atol=1e-10 * max(1.0, np.abs(x.matrix).max())):
        y, va, vb = x, np.eye(x.dim_a), np.eye(x.dim_b)
    da, db = y.dims
    if 2 not in (da, db):
        return None
    p = _kernel_projector(y.matrix)
    q = _kernel_projector(partial_transpose(y, "second").matrix)
    if not p.any() and not q.any():
        return None
    h = p + partial_transpose(BipartiteOperator(q, da, db), "second").matrix
    hq, n, _ = _qubit_first(h, da, db)
    est = qubit_product_minimum(hq, n)
    if est <= 1e-6:
        return None
    eps = est / 2
    ok, cells = certify_qubit_product_bound(hq, n, eps)
    if not ok:
        return None
    w = h - eps * np.eye(da * db)
    value = float(np.real(np.trace(w @ y.matrix)))
    if value >= -tol.eps_psd:
        return None
    return fails("edge witness", kind="witness", witness=w, value=value, epsilon=eps, cells=cells,
                 isometry_a=va, isometry_b=vb)


def _lift(m: np.ndarray, va: np.ndarray, vb: np.ndarray) -> np.ndarray:
    v = np.kron(va, vb)
    return v @ m @ v.conj().T


def verify_entanglement_witness(x: BipartiteOperator, cert: Certificate, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Re-check ``tr(W Y) < 0`` for the compressed ``Y`` and block-positivity of ``W`` from scratch."""
    ev = cert.evidence
    w = np.asarray(ev["witness"])
    va, vb = np.asarray(ev["isometry_a"]), np.asarray(ev["isometry_b"])
    v = np.kron(va, vb)
    y = v.conj().T @ x.matrix @ v
    if float(np.real(np.trace(w @ y))) >= -tol.eps_psd:
        return False
    wq, n, _ = _qubit_first(w, va.shape[1], vb.shape[1])
    return certify_qubit_product_bound(wq, n, 0.0)[0]


def sep_refute(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """Try PPT, realignment, the necessary inequalities, then an edge witness."""
    _require_psd(x, tol)
    for side in ("second", "first"):
        val, vec = min_eig(partial_transpose(x, side).matrix, np.inf)
        if val < -tol.eps_psd:
            return fails("PPT", kind="eigen", eigenvalue=val, vector=vec, operator=f"partial_transpose_{side}")
    cert = _realignment_test(x, tol)
    if cert is not None:
        return cert
    margins = {}
    if x.dim_a == x.dim_b:
        for lam in LAMBDA_GRID:
            for side in ("first", "second"):
                c = sep_necessary_inequality(x, lam, side, tol)
                margins[f"{side}@{lam:g}"] = c.evidence["eigenvalue"]
                if c.fails:
                    c.method = "necessary inequality"
                    return c
    cert = edge_witness(x, tol)
    if cert is not None:
        return cert
    return unknown("separability refuters", kind="search", margins=margins,
                   realignment=nuclear_norm(realignment(x)), trace=x.trace().real)


def reverify_refutation(x: BipartiteOperator, cert: Certificate, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    ev = cert.evidence
    kind = ev.get("kind")
    if kind == "realignment":
        return nuclear_norm(realignment(x)) > x.trace().real + tol.eps_psd * max(1.0, x.trace().real)
    if kind == "witness":
        return verify_entanglement_witness(x, cert, tol)
    if kind == "eigen":
        v = np.asarray(ev["vector"])
        if "operator" in ev:
            side = ev["operator"].rsplit("_", 1)[1]
            m = partial_transpose(x, side).matrix
        elif "lam" in ev:
            d = x.dim_a
            lam, side = ev["lam"], ev["side"]
            if side == "first":
                m = lam * x.matrix + lam * partial_transpose(x, "first").matrix + np.kron(np.eye(d), partial_trace(x, "first"))
            else:
                m = lam * x.matrix + lam * partial_transpose(x, "second").matrix + np.kron(partial_trace(x, "second"), np.eye(d))
        else:
            m = x.matrix
        return float(np.real(np.vdot(v, m @ v))) / np.vdot(v, v).real < -tol.eps_psd
    return False


def eb_necessary(phi: ChannelRep, lam_grid=LAMBDA_GRID, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """The necessary inequalities applied to the Choi matrix of a square map."""
    if not phi.is_square:
        raise InvalidParameterError("eb_necessary needs a square map")
    d = phi.dim_in
    c = phi.choi.matrix
    phi_i = partial_trace(phi.choi, "first")
    c_t_first = compose_transpose(phi, "before").choi.matrix
    c_t_second = partial_transpose(phi.choi, "second").matrix
    tr2 = partial_trace(phi.choi, "second")
    margins = {}
    for lam in lam_grid:
        forms = {
            "first": np.kron(np.eye(d), phi_i) + lam * (c + c_t_first),
            "second": np.kron(tr2, np.eye(d)) + lam * (c + c_t_second),
        }
        for side, op in forms.items():
            val, vec = min_eig(op, np.inf)
            margins[f"{side}@{lam:g}"] = val
            if val < -tol.eps_psd:
                return fails("EB necessary inequality", kind="eigen", eigenvalue=val, vector=vec,
                             lam=lam, side=side, margins=margins)
    return holds("EB necessary inequality", kind="margins", margins=margins)


# --------------------------------------------------------- certification

def _product_route(x: BipartiteOperator, tol: ToleranceProfile) -> Certificate | None:
    r = realignment(x)
    u, s, vh = np.linalg.svd(r)
    if s[0] == 0 or (s.size > 1 and s[1] > 1e-12 * s[0]):
        return None
    da, db = x.dims
    a = (np.sqrt(s[0]) * u[:, 0]).reshape(da, da)
    b = (np.sqrt(s[0]) * vh[0]).reshape(db, db)
    phase = np.trace(a) / abs(np.trace(a)) if abs(np.trace(a)) > 0 else 1.0
    a, b = a / phase, b * phase
    dec = SeparableDecomposition([(a, b)], 0.0, dims=x.dims)
    dec.residual = float(np.linalg.norm(dec.reconstruct() - x.matrix))
    if verify_decomposition(x, dec, tol):
        return Certificate(Verdict.HOLDS, "product", {"kind": "decomposition", "terms": 1,
                                                      "residual": dec.residual}, decomposition=dec)
    return None


def _compress_local(x: BipartiteOperator) -> tuple[BipartiteOperator, np.ndarray, np.ndarray]:
    va = range_basis(partial_trace(x, "second"))
    vb = range_basis(partial_trace(x, "first"))
    v = np.kron(va, vb)
    return BipartiteOperator(v.conj().T @ x.matrix @ v, va.shape[1], vb.shape[1]), va, vb


def _ppt_route(x: BipartiteOperator, tol: ToleranceProfile) -> Certificate | None:
    y, va, vb = _compress_local(x)
    if y.dim_a * y.dim_b > 6:
        return None
    scale = max(1.0, float(np.linalg.norm(x.matrix)))
    if np.linalg.norm((np.kron(va, vb) @ y.matrix @ np.kron(va, vb).conj().T) - x.matrix) > 1e-8 * scale:
        return None
    val, _ = min_eig(partial_transpose(y, "second").matrix, np.inf)
    if val < -tol.eps_psd:
        return None
    cert = holds("Peres-Horodecki exact", kind="analytic",
                 citation="PPT is equivalent to separability when the local supports have dimension product <= 6",
                 local_ranks=(y.dim_a, y.dim_b), pt_min_eigenvalue=val)
    cert.flags.append("decomposition_absent")
    if y.dims != x.dims:
        cert.flags.append("local_support_compression")
    return cert


def _twirl_route(x: BipartiteOperator, tol: ToleranceProfile) -> Certificate | None:
    inside, coeffs = in_fixed_space(x, tol)
    if not inside:
        return None
    cert = twirl_cone_membership(coeffs, x.dim_a, tol=tol)
    if not cert.holds:
        return None
    combo = cert.decomposition
    dec = SeparableDecomposition([], 0.0, twirl=combo, dims=x.dims)
    dec.residual = float(np.linalg.norm(dec.reconstruct() - x.matrix))
    if dec.residual > tol.eps_sep:
        return None
    cert.decomposition = dec
    cert.method = "twirl cone LP"
    cert.evidence["residual"] = dec.residual
    return cert


def _best_product(r: np.ndarray, da: int, db: int, rng: np.random.Generator, starts: int = 4) -> tuple[float, np.ndarray, np.ndarray]:
    """Locally maximize ``<u (x) v|R|u (x) v>`` by alternating top eigenvectors."""
    r4 = r.reshape(da, db, da, db)
    w, v = np.linalg.eigh(r)
    sd = v[:, -1].reshape(da, db)
    uu, _, vh = np.linalg.svd(sd)
    inits = [uu[:, 0]] + [rng.standard_normal(da) + 1j * rng.standard_normal(da) for _ in range(starts - 1)]
    best = (-np.inf, None, None)
    for u in inits:
        u = u / np.linalg.norm(u)
        val = -np.inf
        for _ in range(100):
            mb = np.einsum("i,iajb,j->ab", u.conj(), r4, u)
            wb, vb = np.linalg.eigh(hermitize(mb, np.inf))
            b = vb[:, -1]
            ma = np.einsum("a,iajb,b->ij", b.conj(), r4, b)
            wa, va = np.linalg.eigh(hermitize(ma, np.inf))
            u = va[:, -1]
            if wa[-1] - val < 1e-14 * max(1.0, abs(wa[-1])):
                val = wa[-1]
                break
            val = wa[-1]
        if val > best[0]:
            best = (float(val), u, b)
    return best


def _fit_products(x: np.ndarray, a0: np.ndarray, b0: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least squares for ``X = sum_i |a_i b_i><a_i b_i|`` (weights absorbed into ``a_i``)."""
    n, da = a0.shape
    db = b0.shape[1]
    big = da * db
    half = n * (da + db)
    ea, eb = np.eye(da), np.eye(db)

    def unpack(z):
        z = z[:half] + 1j * z[half:]
        return z[: n * da].reshape(n, da), z[n * da:].reshape(n, db)

    def resid(z):
        a, b = unpack(z)
        psi = np.einsum("ni,na->nia", a, b).reshape(n, big)
        diff = psi.T @ psi.conj() - x
        return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

    def jac(z):
        a, b = unpack(z)
        psi = np.einsum("ni,na->nia", a, b).reshape(n, big)
        # direction vectors in C^{da db} for each a- and b-coordinate of each term
        da_dirs = np.einsum("kl,na->nkla", ea, b).reshape(n * da, big)
        db_dirs = np.einsum("ni,ab->nbia", a, eb).reshape(n * db, big)
        dirs = np.concatenate([da_dirs, db_dirs])
        owner = np.concatenate([np.repeat(np.arange(n), da), np.repeat(np.arange(n), db)])
        ps = psi[owner]
        t1 = np.einsum("pi,pj->pij", dirs, ps.conj())
        t2 = np.einsum("pi,pj->pij", ps, dirs.conj())
        re_cols = (t1 + t2).reshape(len(dirs), -1)
        im_cols = (1j * (t1 - t2)).reshape(len(dirs), -1)
        cols = np.concatenate([re_cols, im_cols])
        return np.concatenate([cols.real, cols.imag], axis=1).T

    z0 = np.concatenate([a0.ravel(), b0.ravel()])
    z0 = np.concatenate([z0.real, z0.imag])
    sol = least_squares(resid, z0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=400)
    a, b = unpack(sol.x)
    return a, b, float(np.linalg.norm(resid(sol.x)))


def _greedy_atoms(target: np.ndarray, da: int, db: int, max_terms: int, eps: float,
                  rng: np.random.Generator) -> tuple[list, np.ndarray, float]:
    """Matching pursuit over pure products with nonnegative least-squares refits."""
    scale = max(1.0, float(np.linalg.norm(target)))
    tvec = np.concatenate([target.real.ravel(), target.imag.ravel()])
    factors: list[tuple[np.ndarray, np.ndarray]] = []
    cols: list[np.ndarray] = []
    weights = np.zeros(0)
    resid = target.copy()
    res = float(np.linalg.norm(target))
    best_res, stall = res, 0
    while len(factors) < max_terms:
        val, u, v = _best_product(resid, da, db, rng)
        if val <= 1e-14 * scale:
            break
        p = np.kron(u, v)
        factors.append((u, v))
        op = np.outer(p, p.conj()).ravel()
        cols.append(np.concatenate([op.real, op.imag]))
        if len(factors) <= 60 or len(factors) % 10 == 0:
            weights, _ = nnls(np.array(cols).T, tvec, maxiter=50 * len(cols) + 100)
        else:
            weights = np.append(weights, val)
        approx = (np.array(cols).T @ weights)
        half = approx.size // 2
        resid = target - (approx[:half] + 1j * approx[half:]).reshape(target.shape)
        res = float(np.linalg.norm(resid))
        if res <= eps:
            break
        if res < best_res * (1 - 1e-3):
            best_res, stall = res, 0
        else:
            stall += 1
            if stall >= 25:
                break
    return factors, weights, res


def _pursuit_route(x: BipartiteOperator, tol: ToleranceProfile, max_terms: int = MAX_TERMS) -> Certificate:
    """Greedy pursuit, then joint least-squares fits with growing term counts."""
    da, db = x.dims
    target = x.matrix
    rng = rng_from(tol.seed, 0x5E9)
    factors, weights, res = _greedy_atoms(target, da, db, max_terms, tol.eps_sep, rng)
    keep = np.flatnonzero(weights > 0)
    order = keep[np.argsort(weights[keep])[::-1]]
    a_all = np.array([np.sqrt(weights[i]) * factors[i][0] for i in order]).reshape(len(order), da)
    b_all = np.array([factors[i][1] for i in order]).reshape(len(order), db)
    best = (a_all, b_all, res)
    if res > tol.eps_sep and len(order):
        r0 = max(1, int(np.sum(np.linalg.eigvalsh(target) > 1e-10 * max(1.0, np.abs(target).max()))))
        sizes = sorted({n for n in range(r0, min(len(order), 2 * (da * db) ** 2) + 1)
                        if n <= r0 + 4 or n % max(1, r0) == 0} | {len(order)})
        for n in sizes:
            # only overdetermined fits; underdetermined ones rarely help and are slow
            if n * (da + db) > (da * db) ** 2:
                break
            a0, b0 = a_all[:n], b_all[:n]
            if n > len(order):
                break
            a, b, r = _fit_products(target, a0, b0)
            if r < best[2]:
                best = (a, b, r)
            if r <= tol.eps_sep / 10:
                break
    a_all, b_all, _ = best
    terms = [(np.outer(u, u.conj()), np.outer(v, v.conj())) for u, v in zip(a_all, b_all)]
    dec = SeparableDecomposition(terms, 0.0, dims=x.dims)
    dec.residual = float(np.linalg.norm(dec.reconstruct() - target))
    ev = {"kind": "decomposition", "terms": len(terms), "residual": dec.residual}
    if terms and verify_decomposition(x, dec, tol):
        return Certificate(Verdict.HOLDS, "matching pursuit", ev, decomposition=dec)
    ev["kind"] = "search"
    return Certificate(Verdict.UNKNOWN, "matching pursuit", ev)


def sep_certify(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL, max_terms: int = MAX_TERMS) -> Certificate:
    """Routes in order: product, exact PPT regime, twirl cone, matching pursuit."""
    h = _require_psd(x, tol)
    x = x.with_matrix(h)
    for route in (_product_route, _ppt_route, _twirl_route):
        cert = route(x, tol)
        if cert is not None:
            return cert
    return _pursuit_route(x, tol, max_terms)


def sep_decide(x: BipartiteOperator, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """Refutation first, then certification."""
    cert = sep_refute(x, tol)
    if cert.fails:
        return cert
    return sep_certify(x, tol)
