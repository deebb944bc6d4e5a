"""Exception hierarchy. Every error carries a stable machine-readable code."""

from __future__ import annotations


class CasekitError(Exception):
    """Base class for all toolkit errors."""

    code = "E_INTERNAL"

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail


class SyntaxDumpError(CasekitError):
    """Unrecoverable syntax error in a dump file."""

    code = "E_SYNTAX"

    def __init__(self, line: int, expected: str):
        super().__init__(f"line {line}: expected {expected}")
        self.line = line
        self.expected = expected


class EmptyDumpError(CasekitError):
    code = "E_EMPTY"


class HeaderError(CasekitError):
    code = "E_HEADER"


class PhoneError(CasekitError):
    code = "E_PHONE"


class DuplicateChatError(CasekitError):
    code = "E_DUP_CHAT"


class NoSuchNodeError(CasekitError):
    code = "E_NO_NODE"


class NoSuchDocError(CasekitError):
    code = "E_NO_DOC"


class NoDocsError(CasekitError):
    code = "E_NO_DOCS"


class SpanError(CasekitError):
    code = "E_SPAN"


class KindError(CasekitError):
    code = "E_KIND"


class TypeMismatchError(CasekitError):
    code = "E_TYPE"


class NoCandidatesError(CasekitError):
    code = "E_NO_CANDIDATES"


class EmptyGraphError(CasekitError):
    code = "E_EMPTY"


class EmptyReferenceError(CasekitError):
    code = "E_EMPTY_REF"


class StaleDocumentError(CasekitError):
    code = "E_STALE"


class OverlapError(CasekitError):
    code = "E_OVERLAP"


class NoSuchMentionError(CasekitError):
    code = "E_NO_MENTION"


class BundleError(CasekitError):
    code = "E_BUNDLE"


class PortError(CasekitError):
    code = "E_PORT"


class IOFailure(CasekitError):
    code = "E_IO"
