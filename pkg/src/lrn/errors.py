"""Exception types shared across the package.

Every error carries a stable machine ``code`` so the HTTP facade can map
exceptions to structured API errors without string matching.
"""

from __future__ import annotations


class LrnError(Exception):
    """Base class for all package errors."""

    code = "Error"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- pubmed client ---------------------------------------------------------


class InvalidSpec(LrnError):
    code = "InvalidSpec"
    http_status = 400


class NetworkError(LrnError):
    code = "NetworkError"
    http_status = 502


class ParseError(LrnError):
    code = "ParseError"
    http_status = 502

    def __init__(self, message: str = "", line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class RateLimited(LrnError):
    code = "RateLimited"
    http_status = 429


# --- ruleset ---------------------------------------------------------------


class DuplicateActiveRule(LrnError):
    code = "DuplicateActiveRule"
    http_status = 409


class RuleNotActive(LrnError):
    code = "RuleNotActive"
    http_status = 409


class InvalidRule(LrnError):
    code = "InvalidRule"
    http_status = 400


# --- label model / classifier ----------------------------------------------


class EmptyRuleset(LrnError):
    code = "EmptyRuleset"
    http_status = 409


class DegenerateMatrix(LrnError):
    code = "DegenerateMatrix"
    http_status = 409


class EmptyCorpus(LrnError):
    code = "EmptyCorpus"
    http_status = 409


class InsufficientData(LrnError):
    code = "InsufficientData"
    http_status = 409


class NonFiniteLoss(LrnError):
    code = "NonFiniteLoss"
    http_status = 500


class DimensionMismatch(LrnError):
    code = "DimensionMismatch"
    http_status = 400


# --- statistics ------------------------------------------------------------


class InvalidP(LrnError):
    code = "InvalidP"
    http_status = 400


class EmptyList(LrnError):
    code = "EmptyList"
    http_status = 400


class SetsNotInUniverse(LrnError):
    code = "SetsNotInUniverse"
    http_status = 400


# --- prisma ----------------------------------------------------------------


class InconsistentState(LrnError):
    code = "InconsistentState"
    http_status = 500


class UnsupportedFormat(LrnError):
    code = "UnsupportedFormat"
    http_status = 400


# --- session ---------------------------------------------------------------


class InvalidConfig(LrnError):
    code = "InvalidConfig"
    http_status = 400


class NoEligibleRecords(LrnError):
    code = "NoEligibleRecords"
    http_status = 409


class UnknownPmid(LrnError):
    code = "UnknownPmid"
    http_status = 409


class PhaseViolation(LrnError):
    code = "PhaseViolation"
    http_status = 409


class TrainingFailure(LrnError):
    code = "TrainingFailure"
    http_status = 500


class NoSuchIteration(LrnError):
    code = "NoSuchIteration"
    http_status = 404


class NoSuchSession(LrnError):
    code = "NoSuchSession"
    http_status = 404


class ClockSkew(LrnError):
    code = "ClockSkew"
    http_status = 400


# --- summarizer ------------------------------------------------------------


class InvalidWindow(LrnError):
    code = "InvalidWindow"
    http_status = 400


class BudgetTooSmall(LrnError):
    code = "BudgetTooSmall"
    http_status = 400


class BackendError(LrnError):
    """Completion backend failure; names the section that failed and keeps
    whatever sections completed before it."""

    code = "BackendError"
    http_status = 502

    def __init__(self, message: str, section: str, completed: dict[str, str] | None = None):
        super().__init__(message)
        self.section = section
        self.completed = completed or {}


# --- api -------------------------------------------------------------------


class BindFailure(LrnError):
    code = "BindFailure"
    http_status = 500
