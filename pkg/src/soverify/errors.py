"""Exceptions and the fixed list of reason codes reported with Unsupported."""
from __future__ import annotations

# Reason codes.  Every Unsupported result carries exactly one of these.
EXISTENTIAL = "existential-quantifier"
NON_ID_QUANTIFIER = "non-id-quantifier"
NESTED_QUANTIFIER = "nested-quantifier"
HORN_DEPTH = "horn-depth-bound"
WF_AXIOM_SHAPE = "wf-axiom-shape"
NON_MONOTONE_UPDATE = "non-monotone-update"
PRECONDITION = "mode-precondition"
NOT_GROUND = "formula-not-ground"
UNDECIDED_DISEQUALITY = "undecided-disequality"
STATE_NOT_QF = "not-quantifier-free"

REASON_CODES = {
    EXISTENTIAL: "existential quantifier outside the universal-Id fragment",
    NON_ID_QUANTIFIER: "universal quantifier over a sort that is neither Id nor enumerated",
    NESTED_QUANTIFIER: "quantifier below the top-level universal prefix",
    HORN_DEPTH: "saturation pruned facts at the term-depth bound; satisfiability is bound-relative",
    WF_AXIOM_SHAPE: "workflow axiom is not a universal sentence",
    NON_MONOTONE_UPDATE: "a predicate used in policy rule bodies is updated non-monotonically",
    PRECONDITION: "the system violates a precondition of the selected mode",
    NOT_GROUND: "formula handed to the ground procedure has variables or quantifiers",
    UNDECIDED_DISEQUALITY: "rule body compares terms whose arrangement is not fixed",
    STATE_NOT_QF: "scenario state formula or guard is quantified after expanding enumerated sorts",
}


class SoverifyError(Exception):
    pass


class Unsupported(SoverifyError):
    """Raised when a query falls outside the decidable fragment."""

    def __init__(self, code: str, detail: str = "") -> None:
        assert code in REASON_CODES, code
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail or REASON_CODES[code]}")


class UnmappedPrimeError(SoverifyError):
    pass


class RecursiveUpdateError(SoverifyError):
    pass
