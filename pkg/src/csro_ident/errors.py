"""Exception hierarchy shared across the engine.

Grouping matters for the CLI: ``InputError`` maps to exit code 1 (bad
artefact or usage), ``KBError`` to exit code 2 (knowledge-base problem).
"""

from __future__ import annotations


class CsroIdentError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CsroIdentError):
    """An input artefact (compose file, lint report, overrides, flag) is unusable."""


class ComposeParseError(InputError):
    """The compose document is malformed or names no usable service."""


class LintReportError(InputError):
    """The linter report is not a well-formed findings array."""


class OverridesError(InputError):
    """The assumption-overrides document is malformed or inconsistent with the KB."""


class KBError(CsroIdentError):
    """The knowledge base cannot be used (load failure or failed validation)."""


class KBLoadError(KBError):
    """Raised while parsing or linking a KB document.

    ``location`` is a dotted path into the document (or a line/column for
    syntax errors) so authors can find the offending entry.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{message} (at {location})" if location else message)
