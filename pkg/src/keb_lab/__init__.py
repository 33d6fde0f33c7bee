"""Numerical toolkit for k-entanglement-breaking maps between matrix algebras."""

from keb_lab.certificates import Certificate, Verdict
from keb_lab.channels import (
    ChannelRep,
    FamilySpec,
    ad_v,
    compose,
    direct_sum,
    identity_map,
    phi_lambda,
    schur_map,
    trace_map,
    transpose_map,
    werner_holevo,
    werner_modified,
)
from keb_lab.errors import KebError
from keb_lab.keb import KebReport, keb_certify, keb_decide, keb_refute, keb_threshold
from keb_lab.linalg import DEFAULT_TOL, BipartiteOperator, ToleranceProfile
from keb_lab.majorization import keb_majorization_check, weakly_majorizes
from keb_lab.positivity import is_cp, is_k_positive, is_positive_map, is_ppt_map
from keb_lab.separability import sep_certify, sep_decide, sep_refute
from keb_lab.twirl import twirl_cone_membership, twirl_project

__version__ = "0.1.0"

__all__ = [
    "BipartiteOperator",
    "Certificate",
    "ChannelRep",
    "DEFAULT_TOL",
    "FamilySpec",
    "KebError",
    "KebReport",
    "ToleranceProfile",
    "Verdict",
    "ad_v",
    "compose",
    "direct_sum",
    "identity_map",
    "is_cp",
    "is_k_positive",
    "is_positive_map",
    "is_ppt_map",
    "keb_certify",
    "keb_decide",
    "keb_majorization_check",
    "keb_refute",
    "keb_threshold",
    "phi_lambda",
    "schur_map",
    "sep_certify",
    "sep_decide",
    "sep_refute",
    "trace_map",
    "transpose_map",
    "twirl_cone_membership",
    "twirl_project",
    "weakly_majorizes",
    "werner_holevo",
    "werner_modified",
]
