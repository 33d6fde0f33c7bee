"""Three-valued verdicts with machine-checkable evidence."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any


class Verdict(str, enum.Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    UNKNOWN = "UNKNOWN"

    def __str__(self) -> str:
        return self.value


@dataclass
class Certificate:
    """Outcome of a decision procedure.

    ``evidence`` always carries a ``"kind"`` key. Kinds used in the package:

    ``eigen``
        an eigenpair (``eigenvalue``, ``vector``) of the tested operator.
    ``input_witness``
        rank-one input ``u`` and output vector ``w`` with
        ``<w|Phi(|u><u|)|w> = value``.
    ``sr_vector``
        a vector of Schmidt rank at most ``k`` with ``<psi|C|psi> = value``.
    ``decomposition``
        a :class:`~keb_lab.separability.SeparableDecomposition` in
        ``decomposition``.
    ``analytic``
        a closed-form criterion (``citation`` and usually ``interval``).
    ``search``
        search statistics when nothing was found.
    """

    verdict: Verdict
    method: str
    evidence: dict[str, Any] = field(default_factory=lambda: {"kind": "none"})
    flags: list[str] = field(default_factory=list)
    decomposition: Any = None

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    @property
    def fails(self) -> bool:
        return self.verdict is Verdict.FAILS

    @property
    def unknown(self) -> bool:
        return self.verdict is Verdict.UNKNOWN

    @property
    def analytic(self) -> bool:
        return self.evidence.get("kind") == "analytic"

    def with_flag(self, flag: str) -> "Certificate":
        if flag not in self.flags:
            self.flags.append(flag)
        return self

    def summary(self) -> str:
        return f"{self.verdict.value} ({self.method})"


def holds(method: str, **evidence) -> Certificate:
    evidence.setdefault("kind", "none")
    return Certificate(Verdict.HOLDS, method, evidence)


def fails(method: str, **evidence) -> Certificate:
    evidence.setdefault("kind", "none")
    return Certificate(Verdict.FAILS, method, evidence)


def unknown(method: str, **evidence) -> Certificate:
    evidence.setdefault("kind", "none")
    return Certificate(Verdict.UNKNOWN, method, evidence)


def analytic(verdict: Verdict, method: str, citation: str, **extra) -> Certificate:
    return Certificate(verdict, method, {"kind": "analytic", "citation": citation, **extra})
