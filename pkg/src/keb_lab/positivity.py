"""Positivity, k-positivity, complete positivity and the PPT property of maps."""

from __future__ import annotations

import numpy as np

from keb_lab.certificates import Certificate, Verdict, analytic, fails, holds, unknown
from keb_lab.channels import ChannelRep, apply
from keb_lab.errors import DimensionError
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    hermitize,
    min_eig,
    partial_transpose,
    random_unitary,
    rng_from,
)
from keb_lab.schmidt import schmidt_rank

MAX_SWEEPS = 60


# ------------------------------------------------------------ block search

def _random_isometry(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return np.linalg.qr(z)[0]


def _orth_cols(m: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal basis of the column span of ``m``, padded to ``k`` columns."""
    q, r = np.linalg.qr(m)
    q = q[:, :k]
    if q.shape[1] < k or np.min(np.abs(np.diag(r))[:k]) < 1e-13:
        q = np.linalg.qr(np.hstack([q, _random_isometry(m.shape[0], k, rng)]))[0][:, :k]
    return q


def _local_search(c: np.ndarray, da: int, db: int, k: int, a0: np.ndarray,
                  rng: np.random.Generator, stop_below: float) -> tuple[float, np.ndarray]:
    """Alternate between the best vector in ``span(A) (x) C^db`` and ``C^da (x) span(B)``."""
    a = a0
    best_val, best_vec = np.inf, None
    eye_a, eye_b = np.eye(da), np.eye(db)
    for _ in range(MAX_SWEEPS):
        ka = np.kron(a, eye_b)
        val, phi = min_eig(ka.conj().T @ c @ ka, np.inf)
        psi = ka @ phi
        mat = psi.reshape(da, db)
        b = _orth_cols(mat.T, k, rng)
        kb = np.kron(eye_a, b)
        val2, chi = min_eig(kb.conj().T @ c @ kb, np.inf)
        psi2 = kb @ chi
        improved = val2 < best_val - 1e-13
        if val2 < best_val:
            best_val, best_vec = val2, psi2
        if best_val < stop_below or not improved:
            break
        a = _orth_cols(psi2.reshape(da, db), k, rng)
    return best_val, best_vec


def block_positivity(c: BipartiteOperator, k: int, tol: ToleranceProfile = DEFAULT_TOL,
                     hints: list[np.ndarray] | None = None) -> Certificate:
    """Is ``<psi|C|psi> >= 0`` for all ``psi`` of Schmidt rank at most ``k``?

    Exact when ``k >= min(dA, dB)``; otherwise a seeded multi-start search that
    can only return FAILS or UNKNOWN. ``hints`` are candidate witnesses tried
    before the random restarts.
    """
    da, db = c.dims
    flags = []
    if k < 1:
        raise ValueError("k must be positive")
    if k > min(da, db):
        k = min(da, db)
        flags.append("k_clamped")
    h = hermitize(c.matrix, tol.eps_herm)
    if k == min(da, db):
        val, vec = min_eig(h, np.inf)
        cert = (fails if val < -tol.eps_psd else holds)(
            "full eigensolve", kind="eigen", eigenvalue=val, vector=vec, k=k)
        cert.flags.extend(flags)
        return cert
    for idx, hv in enumerate(hints or []):
        hv = np.asarray(hv, dtype=complex).reshape(-1)
        hv = hv / np.linalg.norm(hv)
        val = float(np.real(np.vdot(hv, h @ hv)))
        if val < -tol.eps_psd and schmidt_rank(hv, da, db) <= k:
            cert = fails("block search (hint)", kind="sr_vector", vector=hv, value=val,
                         schmidt_rank=schmidt_rank(hv, da, db), k=k, restart=-1 - idx)
            cert.flags.extend(flags)
            return cert
    rng = rng_from(tol.seed, 0xB10C, k)
    best = np.inf
    for r in range(tol.restarts):
        a0 = _random_isometry(da, k, rng)
        val, vec = _local_search(h, da, db, k, a0, rng, -tol.eps_psd)
        best = min(best, val)
        if val < -tol.eps_psd:
            vec = vec / np.linalg.norm(vec)
            cert = fails("block search", kind="sr_vector", vector=vec,
                         value=float(np.real(np.vdot(vec, h @ vec))),
                         schmidt_rank=schmidt_rank(vec, da, db), k=k, restart=r)
            cert.flags.extend(flags)
            return cert
    cert = unknown("block search", kind="search", restarts=tol.restarts, best_value=float(best), k=k)
    cert.flags.extend(flags)
    return cert


def verify_block_witness(c: BipartiteOperator, cert: Certificate, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Recompute a FAILS witness from :func:`block_positivity`."""
    ev = cert.evidence
    v = np.asarray(ev["vector"], dtype=complex)
    v = v / np.linalg.norm(v)
    val = float(np.real(np.vdot(v, c.matrix @ v)))
    k = ev.get("k", min(c.dims))
    return val < -tol.eps_psd and schmidt_rank(v, *c.dims) <= k


# --------------------------------------------------------------- CP / PPT

def is_cp(phi: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    val, vec = min_eig(phi.choi.matrix, tol.eps_herm)
    make = fails if val < -tol.eps_psd else holds
    return make("Choi eigensolve", kind="eigen", eigenvalue=val, vector=vec)


def is_ppt_map(phi: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    cp = is_cp(phi, tol)
    if cp.fails:
        cp.method = "Choi eigensolve (CP part)"
        return cp
    pt = partial_transpose(phi.choi, "second").matrix
    val, vec = min_eig(pt, tol.eps_herm)
    if val < -tol.eps_psd:
        return fails("partial transpose eigensolve", kind="eigen", eigenvalue=val, vector=vec,
                     operator="partial_transpose")
    return holds("Choi and partial transpose eigensolve", kind="eigen",
                 eigenvalue=min(val, cp.evidence["eigenvalue"]), vector=vec)


# ------------------------------------------------------------- positivity

def _input_witness(phi: ChannelRep, u: np.ndarray, tol: ToleranceProfile) -> Certificate | None:
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.norm(u)
    out = apply(phi, np.outer(u, u.conj()))
    val, w = min_eig(out, np.inf)
    if val < -tol.eps_psd:
        return fails("", kind="input_witness", u=u, w=w, value=val)
    return None


def verify_positivity_witness(phi: ChannelRep, cert: Certificate, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    ev = cert.evidence
    u = np.asarray(ev["u"], dtype=complex)
    w = np.asarray(ev["w"], dtype=complex)
    u, w = u / np.linalg.norm(u), w / np.linalg.norm(w)
    val = float(np.real(np.vdot(w, apply(phi, np.outer(u, u.conj())) @ w)))
    return val < -tol.eps_psd


def _family_positivity(phi: ChannelRep, tol: ToleranceProfile) -> tuple[Verdict, str, np.ndarray | None] | None:
    """Closed-form positivity verdicts, with a candidate witness input for FAILS."""
    f = phi.family
    if f is None:
        return None
    p = f.params
    d = phi.dim_in
    e1 = np.eye(d)[0].astype(complex)
    if f.name == "WernerHolevo":
        if f.lam <= 1:
            return Verdict.HOLDS, "tr(X)I - lam X^T is positive iff lam <= 1", None
        return Verdict.FAILS, "tr(X)I - lam X^T is positive iff lam <= 1", e1
    if f.name == "PhiLambda":
        if f.lam >= -0.5:
            return Verdict.HOLDS, "tr(X)I + lam(X + X^T) is positive iff lam >= -1/2", None
        return Verdict.FAILS, "tr(X)I + lam(X + X^T) is positive iff lam >= -1/2", e1
    if f.name == "WernerModified":
        g = p["gamma"]
        if not is_positive_map(g, tol).holds:
            return None
        gnorm = float(np.linalg.norm(apply(g, np.eye(d)), 2))
        if f.lam >= 0 or gnorm == 0 or f.lam >= -1 / gnorm:
            return Verdict.HOLDS, "tr(X)I + lam Gamma(X) is positive for lam >= -1/||Gamma||", None
        return None
    if f.name == "Schur":
        a = np.asarray(p["A"], dtype=complex)
        ok = np.max(np.abs(a - a.conj().T)) <= tol.eps_herm and np.linalg.eigvalsh(hermitize(a, np.inf))[0] >= -tol.eps_psd
        if ok:
            return Verdict.HOLDS, "Schur multiplier is positive iff A is PSD", None
        # S_A applied to the all-ones projector returns A itself
        return Verdict.FAILS, "Schur multiplier is positive iff A is PSD", np.ones(d, dtype=complex)
    if f.name in ("Identity", "AdV", "TraceMap"):
        return Verdict.HOLDS, f"{f.name} is completely positive", None
    if f.name == "Transpose":
        return Verdict.HOLDS, "transpose preserves the spectrum", None
    if f.name == "DirectSum":
        c1 = is_positive_map(p["first"], tol)
        c2 = is_positive_map(p["second"], tol)
        if c1.holds and c2.holds:
            return Verdict.HOLDS, "direct sum of positive maps", None
        for c in (c1, c2):
            if c.fails:
                return Verdict.FAILS, "direct sum with a non-positive summand", c.evidence["u"]
        return None
    return None


def is_positive_map(phi: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """Positivity of ``Phi``; FAILS carries an input ``|u><u|`` with non-PSD image."""
    fam = _family_positivity(phi, tol)
    if fam is not None:
        verdict, citation, u = fam
        if verdict is Verdict.HOLDS:
            return analytic(Verdict.HOLDS, "family threshold", citation)
        wit = _input_witness(phi, u, tol)
        if wit is not None:
            wit.method = "family threshold"
            wit.evidence["citation"] = citation
            return wit
    if is_cp(phi, tol).holds:
        return analytic(Verdict.HOLDS, "complete positivity", "Choi matrix is PSD")
    cert = block_positivity(phi.choi, 1, tol)
    if cert.fails:
        # <u (x) w|C|u (x) w> = <w|Phi(|conj u><conj u|)|w>
        sd_vec = cert.evidence["vector"].reshape(phi.dim_in, phi.dim_out)
        uu, s, vh = np.linalg.svd(sd_vec)
        u = np.conj(uu[:, 0])
        wit = _input_witness(phi, u, tol)
        if wit is not None:
            wit.method = "alternating eigenvector search"
            wit.evidence["restart"] = cert.evidence.get("restart")
            return wit
    return unknown("alternating eigenvector search", kind="search", restarts=tol.restarts,
                   best_value=cert.evidence.get("best_value"))


# ------------------------------------------------------- principal blocks

def principal_block(c: BipartiteOperator, indices: list[int], basis: np.ndarray | None = None) -> BipartiteOperator:
    """``[Phi(F_{i_a i_b})]_{a,b}`` with ``F_ij = U E_ij U*`` (``U = I`` by default).

    Equals the Choi matrix of ``Phi o Ad_Q`` for ``Q = F_sel^*``, where
    ``F_sel`` holds the selected columns of ``U``.
    """
    d1, d2 = c.dims
    idx = list(indices)
    if len(set(idx)) != len(idx) or any(not 0 <= i < d1 for i in idx):
        raise DimensionError(f"indices {indices} invalid for dimension {d1}")
    u = np.eye(d1, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    f = u[:, idx]
    left = np.kron(f.T, np.eye(d2))
    right = np.kron(f.conj(), np.eye(d2))
    return BipartiteOperator(left @ c.matrix @ right, len(idx), d2)


def _superop(phi: ChannelRep) -> np.ndarray:
    """Matrix of ``vec(X) -> vec(Phi(X))`` in row-major vectorization."""
    c4 = phi.choi.tensor4()
    d1, d2 = phi.dim_in, phi.dim_out
    return c4.transpose(1, 3, 0, 2).reshape(d2 * d2, d1 * d1)


def _ad_superop(v: np.ndarray) -> np.ndarray:
    # vec(V* X V) = (V* (x) V^T) vec(X) in row-major vectorization
    return np.kron(v.conj().T, v.T)


def equivariance_spot_check(phi: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL, trials: int = 5) -> bool:
    """Check ``Phi o Ad_U = Ad_V o Phi`` for ``trials`` Haar-random unitaries ``U``."""
    if not phi.is_square:
        return False
    d = phi.dim_in
    s = _superop(phi)
    scale = max(1.0, np.linalg.norm(s))
    pinv = np.linalg.pinv(s)
    rng = rng_from(tol.seed, 0xE9)
    for _ in range(trials):
        u = random_unitary(d, rng)
        target = s @ _ad_superop(u)
        ok = False
        for v in (np.eye(d), u, u.conj(), u.T, u.conj().T):
            if np.linalg.norm(_ad_superop(v) @ s - target) <= 1e-8 * scale:
                ok = True
                break
        if not ok:
            lmat = target @ pinv
            if np.linalg.norm(lmat @ s - target) <= 1e-8 * scale:
                # Choi of L must be rank one and PSD for L = Ad_V
                c = lmat.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)
                w = np.linalg.eigvalsh(hermitize(c, np.inf))
                ok = w[0] >= -1e-8 * scale and np.sum(w > 1e-8 * scale) == 1
        if not ok:
            return False
    return True


def equivariant_k_positive(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """k-positivity of an equivariant map from its leading ``k x k`` block of the Choi matrix."""
    k_eff = min(k, phi.dim_in)
    if not phi.equivariant or not equivariance_spot_check(phi, tol):
        cert = block_positivity(phi.choi, k_eff, tol)
        return cert.with_flag("equivariance_not_confirmed")
    block = principal_block(phi.choi, list(range(k_eff)))
    val, vec = min_eig(block.matrix, tol.eps_herm)
    make = fails if val < -tol.eps_psd else holds
    cert = make("equivariant principal block", kind="eigen", eigenvalue=val, vector=vec, k=k_eff)
    if k_eff != k:
        cert.with_flag("k_clamped")
    return cert


def is_k_positive(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """k-positivity by the cheapest sound route available."""
    if k == 1:
        return is_positive_map(phi, tol)
    if is_cp(phi, tol).holds:
        return analytic(Verdict.HOLDS, "complete positivity", "Choi matrix is PSD")
    if phi.equivariant:
        cert = equivariant_k_positive(phi, k, tol)
        if "equivariance_not_confirmed" not in cert.flags:
            return cert
    return block_positivity(phi.choi, k, tol)
