"""k-entanglement-breaking maps: certification, refutation and the surrounding theorems.

A map ``Phi: M_d1 -> M_d2`` is k-EB when it is k-positive and
``(id_k (x) Phi)(X)`` is separable for every PSD ``X``. Equivalently ``Phi o Psi``
is entanglement breaking for every CP ``Psi: M_k -> M_d1``. For ``k = 1`` this is
plain positivity and for ``k >= d1`` it is entanglement breaking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from keb_lab.certificates import Certificate, Verdict, analytic, fails, holds, unknown
from keb_lab.channels import (
    ChannelRep,
    FamilySpec,
    apply_id_tensor,
    compose,
    random_cp_map,
)
from keb_lab.errors import DimensionError, InvalidParameterError
from keb_lab.linalg import (
    DEFAULT_TOL,
    BipartiteOperator,
    ToleranceProfile,
    op_norm_inf,
    partial_trace,
    partial_transpose,
    random_psd,
    random_unitary,
    rng_from,
)
from keb_lab.positivity import (
    equivariance_spot_check,
    equivariant_k_positive,
    is_cp,
    is_positive_map,
    is_ppt_map,
    principal_block,
)
from keb_lab.schmidt import SnBounds, sn_lower_bound, sn_upper_bound
from keb_lab.separability import reverify_refutation, sep_certify, sep_refute

ROUTES = (
    "CompositionWitness",
    "ProjectionWitness",
    "PrincipalBlock",
    "FamilyThreshold",
    "NormSufficient",
    "DirectSum",
    "DualPairing",
    "Positivity",
    "PPTShortcut",
    "None",
)

MAX_COORDINATE_SUBSETS = 120


@dataclass
class KebReport:
    k: int
    verdict: Certificate
    route: str
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"unknown route {self.route!r}")

    @property
    def holds(self) -> bool:
        return self.verdict.holds

    @property
    def fails(self) -> bool:
        return self.verdict.fails

    @property
    def unknown(self) -> bool:
        return self.verdict.unknown

    def summary(self) -> str:
        return f"{self.k}-EB {self.verdict.verdict.value} via {self.route} ({self.verdict.method})"

    def to_dict(self) -> dict:
        from keb_lab.serialization import certificate_to_dict

        return {"k": self.k, "route": self.route, **certificate_to_dict(self.verdict), "details": self.details}


def _report(k: int, cert: Certificate, route: str, **details) -> KebReport:
    return KebReport(k, cert, route, details)


def _sep_of_block(block: BipartiteOperator, tol: ToleranceProfile) -> Certificate:
    """sep_refute, or a FAILS when the block is not even PSD."""
    w, v = np.linalg.eigh((block.matrix + block.matrix.conj().T) / 2)
    if w[0] < -tol.eps_psd:
        return fails("not k-positive", kind="eigen", eigenvalue=float(w[0]), vector=v[:, 0])
    return sep_refute(block, tol)


# ------------------------------------------------------------- refutation

def keb_refute(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL, bases: int = 20,
               trials: int = 20) -> KebReport:
    """Search for a CP ``Psi: M_k -> M_d1`` with ``Phi o Psi`` not entanglement breaking.

    Tries coordinate and random rank-``min(k, d1)`` compressions, then random CP
    maps of Kraus rank at most ``k``, then random rank-``k`` ``Ad_V``.
    """
    if k < 1:
        raise InvalidParameterError("k must be positive")
    d1 = phi.dim_in
    k_eff = min(k, d1)
    c = phi.choi
    subsets = list(itertools.combinations(range(d1), k_eff))
    rng = rng_from(tol.seed, 0x4EB, k_eff)
    if len(subsets) > MAX_COORDINATE_SUBSETS:
        picks = rng.choice(len(subsets), MAX_COORDINATE_SUBSETS, replace=False)
        subsets = [subsets[i] for i in sorted(picks)]
    for idx in subsets:
        cert = _sep_of_block(principal_block(c, list(idx)), tol)
        if cert.fails:
            return _report(k, _wrap(cert), "ProjectionWitness", indices=list(idx), basis=None, block_dims=(k_eff, phi.dim_out))
    for _ in range(bases):
        u = random_unitary(d1, rng)
        idx = list(range(k_eff))
        cert = _sep_of_block(principal_block(c, idx, u), tol)
        if cert.fails:
            return _report(k, _wrap(cert), "ProjectionWitness", indices=idx, basis=u, block_dims=(k_eff, phi.dim_out))
    for _ in range(trials):
        psi = random_cp_map(k_eff, d1, rng, kraus_rank=int(rng.integers(1, k_eff + 1)))
        comp = BipartiteOperator(apply_id_tensor(phi, psi.choi.matrix, k_eff), k_eff, phi.dim_out)
        cert = _sep_of_block(comp, tol)
        if cert.fails:
            return _report(k, _wrap(cert), "CompositionWitness", psi_kraus=list(psi.kraus()), kind="cp")
    for _ in range(trials):
        v = rng.standard_normal((k_eff, d1)) + 1j * rng.standard_normal((k_eff, d1))
        comp = BipartiteOperator(apply_id_tensor(phi, np.outer(v.conj().ravel(), v.ravel()), k_eff), k_eff, phi.dim_out)
        cert = _sep_of_block(comp, tol)
        if cert.fails:
            return _report(k, _wrap(cert), "CompositionWitness", psi_kraus=[v], kind="AdV")
    return _report(k, unknown("composition search", kind="search", subsets=len(subsets), bases=bases, trials=trials),
                   "None")


def _wrap(cert: Certificate) -> Certificate:
    return cert.with_flag("composite_choi")


def witness_operator(phi: ChannelRep, report: KebReport) -> BipartiteOperator:
    """Rebuild the composite Choi matrix a FAILS report refers to."""
    d = report.details
    k_eff = min(report.k, phi.dim_in)
    if report.route == "ProjectionWitness":
        return principal_block(phi.choi, d["indices"], d["basis"])
    if report.route == "CompositionWitness":
        ops = [np.asarray(v) for v in d["psi_kraus"]]
        psi = ChannelRep(k_eff, phi.dim_in, kraus=ops)
        return BipartiteOperator(apply_id_tensor(phi, psi.choi.matrix, k_eff), k_eff, phi.dim_out)
    if report.route == "PrincipalBlock":
        return principal_block(phi.choi, list(range(k_eff)))
    raise ValueError(f"report route {report.route} carries no composite")


def verify_keb_refutation(phi: ChannelRep, report: KebReport, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Recompute the composite Choi matrix and re-check its non-separability evidence."""
    if not report.fails:
        return False
    x = witness_operator(phi, report)
    return reverify_refutation(x, report.verdict, tol)


# ---------------------------------------------------------- certification

def _frac(x: float) -> str:
    return str(Fraction(x).limit_denominator(1000))


def _family_route(phi: ChannelRep, k: int, tol: ToleranceProfile) -> KebReport | None:
    fam = phi.family
    if fam is None:
        return None
    name, p = fam.name, fam.params
    d = phi.dim_in
    if name == "WernerHolevo":
        lam = fam.lam
        ok = -1 - 1e-15 <= lam <= 1 / k + 1e-15
        cert = analytic(Verdict.HOLDS if ok else Verdict.FAILS, "Werner-Holevo threshold",
                        "W_lambda is k-EB iff lambda in [-1, 1/k]", interval=(-1.0, 1 / k), lam=lam)
        return _report(k, cert, "FamilyThreshold")
    if name == "PhiLambda":
        lam = fam.lam
        if k >= d:
            lo_s = lo_n = -1 / (d + 1)
        else:
            lo_s, lo_n = -1 / (2 * k), -1 / (k + 1)
        if lo_s - 1e-15 <= lam <= 1 + 1e-15:
            v = Verdict.HOLDS
        elif lam < lo_n - 1e-15 or lam > 1 + 1e-15:
            v = Verdict.FAILS
        else:
            v = Verdict.UNKNOWN
        cert = analytic(v, "Phi_lambda interval", "sufficient [-1/(2k), 1], necessary [-1/(k+1), 1]; exact at k = d",
                        sufficient=(lo_s, 1.0), necessary=(lo_n, 1.0), lam=lam)
        if v is Verdict.UNKNOWN:
            cert.flags.append("gap")
            cert.evidence["gap"] = (lo_n, lo_s)
            cert.evidence["note"] = (f"lambda in the open gap [{_frac(lo_n)}, {_frac(lo_s)}): "
                                     "neither the sufficient nor the necessary condition decides it")
        return _report(k, cert, "FamilyThreshold")
    if name == "WernerModified":
        gamma = p["gamma"]
        if not is_positive_map(gamma, tol).holds:
            return None
        g = op_norm_inf(gamma.apply(np.eye(d)))
        lam = fam.lam
        if g == 0 or -1 / (k * g) - 1e-15 <= lam <= 1 / g + 1e-15:
            cert = analytic(Verdict.HOLDS, "modified Werner interval",
                            "W_{lambda,Gamma} is k-EB for lambda in [-1/(k||Gamma||), 1/||Gamma||]",
                            interval=(-1 / (k * g) if g else -np.inf, 1 / g if g else np.inf), gamma_norm=g)
            return _report(k, cert, "FamilyThreshold")
        return None
    if name == "Schur":
        a = np.asarray(p["A"])
        if np.linalg.eigvalsh((a + a.conj().T) / 2)[0] < -tol.eps_psd or np.abs(a - a.conj().T).max() > tol.eps_herm:
            cert = analytic(Verdict.FAILS, "Schur threshold", "S_A is positive iff A is PSD")
            return _report(k, cert, "FamilyThreshold")
        diag = np.abs(a - np.diag(np.diag(a))).max() <= tol.eps_eq
        cert = analytic(Verdict.HOLDS if diag else Verdict.FAILS, "Schur threshold",
                        "for PSD A, S_A is 2-EB iff A is diagonal iff S_A is EB")
        return _report(k, cert, "FamilyThreshold")
    if name == "AdV":
        v = np.asarray(p["V"])
        r = int(np.linalg.matrix_rank(v, tol=1e-10 * max(1.0, np.linalg.norm(v, 2))))
        cert = analytic(Verdict.HOLDS if r <= 1 else Verdict.FAILS, "Ad_V threshold",
                        "Ad_V is 2-EB iff rank V = 1 iff Ad_V is EB", rank=r)
        return _report(k, cert, "FamilyThreshold")
    if name == "TraceMap":
        return _report(k, analytic(Verdict.HOLDS, "trace map", "X -> tr(X) I is entanglement breaking"),
                       "FamilyThreshold")
    if name in ("Identity", "Transpose"):
        ok = d == 1
        return _report(k, analytic(Verdict.HOLDS if ok else Verdict.FAILS, f"{name} map",
                                   "not 2-EB for d >= 2"), "FamilyThreshold")
    return None


def _complement_positive(phi: ChannelRep, tol: ToleranceProfile) -> str | None:
    """How ``X -> tr(X) I - Phi(X)`` is known to be positive, if it is."""
    d = phi.dim_in
    tp = np.linalg.norm(partial_trace(phi.choi, "second") - np.eye(d)) <= 1e3 * tol.eps_eq * d
    # a positive trace-preserving map has Phi(X) <= ||Phi(X)|| I <= tr(X) I
    if tp and is_positive_map(phi, tol).holds:
        return "positive and trace preserving"
    comp = np.eye(d * d) - phi.choi.matrix
    if np.linalg.eigvalsh(comp)[0] >= -tol.eps_psd:
        return "complement is CP"
    comp_t = partial_transpose(BipartiteOperator(comp, d, d), "second").matrix
    if np.linalg.eigvalsh(comp_t)[0] >= -tol.eps_psd:
        return "complement is co-CP"
    return None


def _norm_route(phi: ChannelRep, k: int, tol: ToleranceProfile) -> KebReport | None:
    """``Phi = tr(.) I - Gamma`` with ``Gamma`` positive and ``||Gamma(I)|| <= 1/k`` is k-EB."""
    if not phi.is_square or k < 2:
        return None
    d = phi.dim_in
    norm = op_norm_inf(d * np.eye(d) - phi.apply(np.eye(d)))
    if norm > 1 / k + tol.eps_psd:
        return None
    how = _complement_positive(phi, tol)
    if how is None:
        return None
    cert = analytic(Verdict.HOLDS, "norm condition",
                    "Phi with tr(X) I - Phi(X) positive and ||tr(X) I - Phi(X)|| <= ||X||/k is k-EB",
                    norm=norm, bound=1 / k, complement=how)
    return _report(k, cert, "NormSufficient")


def _direct_sum_route(phi: ChannelRep, k: int, tol: ToleranceProfile) -> KebReport | None:
    fam = phi.family
    if fam is None or fam.name != "DirectSum":
        return None
    a = keb_certify(fam.params["first"], k, tol)
    b = keb_certify(fam.params["second"], k, tol)
    if a.holds and b.holds:
        v = Verdict.HOLDS
    elif a.fails or b.fails:
        v = Verdict.FAILS
    else:
        v = Verdict.UNKNOWN
    cert = Certificate(v, "direct sum", {"kind": "analytic", "citation": "a direct sum is k-EB iff both summands are",
                                         "first": a.summary(), "second": b.summary()})
    return _report(k, cert, "DirectSum", first=a, second=b)


def _ppt_route(phi: ChannelRep, k: int, tol: ToleranceProfile) -> KebReport | None:
    if phi.dim_out not in (2, 3) or not is_ppt_map(phi, tol).holds:
        return None
    shortcut = ppt_keb_shortcut(phi, tol)
    if shortcut.holds and k <= shortcut.k:
        return KebReport(k, shortcut.verdict, "PPTShortcut", {"certified_k": shortcut.k})
    return None


def _block_route(phi: ChannelRep, k: int, tol: ToleranceProfile) -> KebReport | None:
    d1 = phi.dim_in
    if k >= d1:
        c = phi.choi
        if not is_cp(phi, tol).holds:
            return _report(k, fails("Choi not PSD", kind="eigen", eigenvalue=is_cp(phi, tol).evidence["eigenvalue"],
                                    vector=is_cp(phi, tol).evidence["vector"]), "PrincipalBlock", full_choi=True)
        cert = sep_certify(c, tol)
        if cert.holds:
            return _report(k, cert, "PrincipalBlock", full_choi=True)
        ref = sep_refute(c, tol)
        if ref.fails:
            return _report(k, ref, "PrincipalBlock", full_choi=True)
        return None
    if not phi.equivariant or not equivariance_spot_check(phi, tol):
        return None
    kp = equivariant_k_positive(phi, k, tol)
    if kp.fails:
        return _report(k, fails("not k-positive", **{kk: v for kk, v in kp.evidence.items()}), "PrincipalBlock")
    block = principal_block(phi.choi, list(range(k)))
    cert = sep_certify(block, tol)
    if cert.holds:
        return _report(k, cert, "PrincipalBlock", block_dims=block.dims)
    ref = sep_refute(block, tol)
    if ref.fails:
        return _report(k, ref, "PrincipalBlock", block_dims=block.dims)
    return None


def keb_certify(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> KebReport:
    """Analytic routes first, then separability of the leading Choi block."""
    if k < 1:
        raise InvalidParameterError("k must be positive")
    flags = []
    if k > phi.dim_in:
        flags.append("k_clamped")
    k_eff = min(k, phi.dim_in)
    if k_eff == 1:
        pos = is_positive_map(phi, tol)
        rep = KebReport(k, pos, "Positivity")
    else:
        rep = None
        for route in (_family_route, _norm_route, _direct_sum_route, _ppt_route, _block_route):
            rep = route(phi, k_eff, tol)
            if rep is not None and not rep.unknown:
                break
            if rep is not None and rep.route == "FamilyThreshold":
                break
        if rep is None:
            rep = _report(k_eff, unknown("no certification route applies", kind="none"), "None")
        rep.k = k
        if rep.fails and rep.route in ("FamilyThreshold", "DirectSum"):
            # attach a concrete composite when the search can find one
            ref = keb_refute(phi, k_eff, tol)
            if ref.fails:
                rep.details["witness"] = ref
    for f in flags:
        rep.verdict.with_flag(f)
    return rep


def keb_decide(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> KebReport:
    """keb_certify; when that is UNKNOWN, keb_refute."""
    rep = keb_certify(phi, k, tol)
    if rep.unknown and "gap" not in rep.verdict.flags:
        ref = keb_refute(phi, k, tol)
        if ref.fails:
            return ref
    return rep


# ------------------------------------------------------------- thresholds

@dataclass(frozen=True)
class ThresholdInterval:
    family: str
    d: int
    k: int
    certified: tuple[float, float]
    necessary: tuple[float, float]
    gap: tuple[float, float] | None = None
    note: str = ""

    @property
    def exact(self) -> bool:
        return self.gap is None

    def status(self, lam: float) -> Verdict:
        if self.certified[0] - 1e-15 <= lam <= self.certified[1] + 1e-15:
            return Verdict.HOLDS
        if lam < self.necessary[0] - 1e-15 or lam > self.necessary[1] + 1e-15:
            return Verdict.FAILS
        return Verdict.UNKNOWN

    def to_dict(self) -> dict:
        return {"family": self.family, "d": self.d, "k": self.k, "certified": list(self.certified),
                "necessary": list(self.necessary), "gap": None if self.gap is None else list(self.gap),
                "exact": self.exact, "note": self.note}


def keb_threshold(family: FamilySpec | str, k: int, d: int | None = None) -> ThresholdInterval:
    """Interval of lambda for which the family is a k-EB map.

    The ``k = 1`` row is the CP interval of the family.
    """
    if isinstance(family, FamilySpec):
        name = family.name
        d = int(family.params.get("d", d)) if d is None else d
    else:
        name = family
    if name not in ("WernerHolevo", "PhiLambda"):
        raise InvalidParameterError(f"{name} has no lambda threshold")
    if d is None or d < 1 or k < 1:
        raise InvalidParameterError("need positive d and k")
    if name == "WernerHolevo":
        hi = 1.0 if k == 1 else 1 / min(k, d)
        note = "CP interval" if k == 1 else ""
        return ThresholdInterval(name, d, k, (-1.0, hi), (-1.0, hi), None, note)
    cp = (-1 / (d + 1), 1.0)
    if k == 1:
        return ThresholdInterval(name, d, k, cp, cp, None, "CP interval")
    if k >= d:
        return ThresholdInterval(name, d, k, cp, cp, None, "k >= d: k-EB is EB")
    suff, nec = (-1 / (2 * k), 1.0), (-1 / (k + 1), 1.0)
    return ThresholdInterval(name, d, k, suff, nec, (nec[0], suff[0]), "gap unresolved")


# ------------------------------------------------------------ dual pairing

def dual_pairing(gamma: ChannelRep, theta: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """``tr(C_Gamma C_Theta)``."""
    if (gamma.dim_in, gamma.dim_out) != (theta.dim_in, theta.dim_out):
        raise DimensionError("pairing needs maps with equal dimensions")
    val = np.trace(gamma.choi.matrix @ theta.choi.matrix)
    scale = max(1.0, np.linalg.norm(gamma.choi.matrix) * np.linalg.norm(theta.choi.matrix))
    if abs(val.imag) > 1e-9 * scale:
        raise InvalidParameterError(f"pairing has imaginary part {val.imag:.3e}; inputs are not Hermiticity preserving")
    return float(val.real)


# ---------------------------------------------------------- theorem checks

def _require_certified(phi: ChannelRep, k: int, tol: ToleranceProfile) -> KebReport:
    rep = keb_certify(phi, k, tol)
    if not rep.holds:
        raise InvalidParameterError(f"map is not certified {k}-EB ({rep.summary()})")
    return rep


def flip_separability_check(phi: ChannelRep, k: int, trials: int = 25, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """For certified k-EB ``Phi``, ``(Phi (x) id_k)(X)`` must never be refuted as separable."""
    _require_certified(phi, k, tol)
    rng = rng_from(tol.seed, 0xF11, k)
    d1 = phi.dim_in
    for t in range(trials):
        x = random_psd(d1 * k, rng, rank_=int(rng.integers(1, d1 * k + 1)))
        y = BipartiteOperator(apply_id_tensor(phi, x, k, "right"), phi.dim_out, k)
        cert = sep_refute(y, tol)
        if cert.fails:
            return fails("flip check counterexample", kind="counterexample", trial=t, input=x, refutation=cert.method)
    return holds("flip check", kind="search", trials=trials)


def sn_reduction_check(phi: ChannelRep, psi: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """For 2-EB ``Phi`` and non-EB CP ``Psi: M_m -> M_d1``, is ``SN(Phi o Psi) < SN(Psi)`` provable?"""
    _require_certified(phi, 2, tol)
    if psi.dim_out != phi.dim_in:
        raise DimensionError("Psi must map into the domain of Phi")
    if not 2 <= psi.dim_in <= phi.dim_out:
        raise InvalidParameterError("need 2 <= m <= d2 for the input dimension m of Psi")
    if not is_cp(psi, tol).holds:
        raise InvalidParameterError("Psi must be CP")
    ref = sep_refute(psi.choi, tol)
    if not ref.fails:
        raise InvalidParameterError("Psi must be certified not entanglement breaking")
    comp = compose(phi, psi)
    lo_psi = max(2, sn_lower_bound(psi.choi, tol=tol)[0])
    hi_psi = sn_upper_bound(psi.choi, tol=tol)[0]
    sep = sep_certify(comp.choi, tol)
    if sep.holds:
        hi_comp, hev = 1, {"kind": "separable", "method": sep.method}
    else:
        hi_comp, hev = sn_upper_bound(comp.choi, tol=tol)
    lo_comp = sn_lower_bound(comp.choi, tol=tol)[0]
    b_psi = SnBounds(lo_psi, max(hi_psi, lo_psi))
    b_comp = SnBounds(lo_comp, max(hi_comp, lo_comp), upper_evidence=hev)
    make = holds if b_comp.upper < b_psi.lower else unknown
    return make("Schmidt number reduction", kind="sn_bounds", composite=(b_comp.lower, b_comp.upper),
                psi=(b_psi.lower, b_psi.upper), composite_method=sep.method if sep.holds else None)


def composition_degree(n: int, m: int, d: int) -> int:
    """An n-EB CP map after an m-EB CP map on M_d is (n + m - 1)-EB (capped at d)."""
    if not (2 <= n <= d and 2 <= m <= d):
        raise InvalidParameterError("need 2 <= n, m <= d")
    return min(n + m - 1, d)


def power_to_eb(phi: ChannelRep, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[int, dict]:
    """``m = min(SN(Phi), ceil((d-1)/(k-1)))`` for a k-EB CP map; ``Phi^m`` is then EB."""
    if k < 2:
        raise InvalidParameterError("k must be at least 2")
    if not phi.is_square:
        raise DimensionError("power_to_eb needs a square map")
    d = phi.dim_in
    if k > d:
        raise InvalidParameterError("need k <= d")
    if not is_cp(phi, tol).holds:
        raise InvalidParameterError("map must be CP")
    _require_certified(phi, k, tol)
    sn, ev = sn_upper_bound(phi.choi, tol=tol)
    m = min(sn, math.ceil((d - 1) / (k - 1)))
    return m, {"schmidt_number_upper": sn, "ceiling": math.ceil((d - 1) / (k - 1)), "sn_evidence": ev}


def map_power(phi: ChannelRep, m: int) -> ChannelRep:
    if m < 1:
        raise InvalidParameterError("power must be positive")
    out = phi
    for _ in range(m - 1):
        out = compose(phi, out)
    return out


def verify_power_eb(phi: ChannelRep, m: int, tol: ToleranceProfile = DEFAULT_TOL) -> Certificate:
    """Check that ``Phi^m`` has a separable Choi matrix."""
    return sep_certify(map_power(phi, m).choi, tol)


def ppt_keb_shortcut(phi: ChannelRep, tol: ToleranceProfile = DEFAULT_TOL) -> KebReport:
    """PPT maps into M_2 are 3-EB and PPT maps into M_3 are 2-EB."""
    if not is_ppt_map(phi, tol).holds:
        raise InvalidParameterError("map is not PPT")
    if phi.dim_out == 2:
        cert = analytic(Verdict.HOLDS, "PPT into M_2", "PPT maps into M_2 are 3-EB")
        return KebReport(3, cert, "PPTShortcut")
    if phi.dim_out == 3:
        cert = analytic(Verdict.HOLDS, "PPT into M_3", "PPT maps into M_3 are 2-EB")
        return KebReport(2, cert, "PPTShortcut")
    return KebReport(2, unknown("PPT shortcut", kind="none", note="no conclusion for output dimension >= 4"), "None")
