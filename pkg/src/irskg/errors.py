"""Exception hierarchy shared across the package.

Every domain error derives from :class:`IrskgError` so callers (notably the
CLI) can separate data/contract failures from programming errors.
"""

from __future__ import annotations


class IrskgError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# Graph store
# ---------------------------------------------------------------------------

class EmptyLabel(IrskgError):
    """A vertex or edge label was empty."""


class DanglingEndpoint(IrskgError):
    """An edge refers to a vertex id that is not in the graph."""


class UnknownVertex(IrskgError):
    """Lookup of a vertex id that is not in the graph."""


class UnknownEdge(IrskgError):
    """Lookup of an edge id that is not in the graph."""


class MissingIdentityKey(IrskgError):
    """upsert was asked to key on a property the payload does not carry."""


# ---------------------------------------------------------------------------
# Log parsing / ingestion
# ---------------------------------------------------------------------------

class LogParseError(IrskgError):
    """A log line could not be parsed.

    ``span`` holds the offending slice of the input line, so messages can
    point at exactly what was wrong.
    """

    def __init__(self, message: str, span: str | None = None):
        if span is not None:
            message = f"{message}: {span!r}"
        super().__init__(message)
        self.span = span


class MalformedStructure(LogParseError):
    """Line does not follow the `[ts] ip -> ip: proto action` shape."""


class MalformedTimestamp(LogParseError):
    """Bracketed timestamp is not `YYYY-MM-DD HH:MM:SS`."""


class MalformedIp(LogParseError):
    """Source or destination is not a dotted-quad IPv4 address."""


class EmptyAction(LogParseError):
    """No action token followed the protocol field."""


class AbortedAtLine(IrskgError):
    """Ingestion under the abort policy stopped at the first bad line."""

    def __init__(self, line_no: int, reason: str, report=None):
        super().__init__(f"aborted at line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason
        self.report = report


# ---------------------------------------------------------------------------
# Rule documents and templates
# ---------------------------------------------------------------------------

class RuleError(IrskgError):
    """Base for rule/template document problems."""


class MissingField(RuleError):
    def __init__(self, name: str, context: str = "rule"):
        super().__init__(f"{context} is missing required field {name!r}")
        self.name = name


class UnknownField(RuleError):
    def __init__(self, name: str, context: str = "rule"):
        super().__init__(f"{context} has unknown field {name!r}")
        self.name = name


class BadSelector(RuleError):
    """A source/target selector is not a string or a {label, filters} object."""


class BadConstraint(RuleError):
    def __init__(self, value):
        super().__init__(f"constraint must be 'allow' or 'deny', got {value!r}")
        self.value = value


class DuplicateRuleId(RuleError):
    def __init__(self, rule_id: str):
        super().__init__(f"duplicate rule id {rule_id!r}")
        self.rule_id = rule_id


class DuplicateTemplate(RuleError):
    def __init__(self, system_id: str):
        super().__init__(f"more than one template for system {system_id!r}")
        self.system_id = system_id


class InvalidRule(RuleError):
    """A rule failed structural (meta) validation where validity is required."""

    def __init__(self, rule_id: str, violations: list[str]):
        super().__init__(f"rule {rule_id!r} is invalid: " + "; ".join(violations))
        self.rule_id = rule_id
        self.violations = violations


# ---------------------------------------------------------------------------
# Transformation
# ---------------------------------------------------------------------------

class MissingVertexCounts(IrskgError):
    """Edge counts requested before vertex counts were computed."""


class PenaltyTooSmall(IrskgError):
    """|penalty| does not strictly exceed the largest |count| in the graph."""

    def __init__(self, penalty: int, max_abs_count: int):
        super().__init__(
            f"penalty {penalty} is too small: |penalty| must strictly exceed "
            f"the maximum |count| of {max_abs_count}"
        )
        self.penalty = penalty
        self.max_abs_count = max_abs_count


# ---------------------------------------------------------------------------
# JSON-lines serialization
# ---------------------------------------------------------------------------

class RecordError(IrskgError):
    """An import problem attributable to one input line."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class BadJson(RecordError):
    """Line is not a single well-formed JSON record."""


class UnknownRecordType(RecordError):
    """Record `type` is neither `node` nor `relationship`."""


class DanglingEndpointRef(RecordError):
    """Relationship start/end refers to a node id not yet imported."""


class MultiLabel(RecordError):
    """A record carries zero or more than one label."""


class DuplicateExternalId(RecordError):
    """Two records of the same kind share an external id."""


class SinkWriteFailure(IrskgError):
    """Export could not write to its sink."""


class IoFailure(IrskgError):
    """Snapshot file could not be read or written."""
