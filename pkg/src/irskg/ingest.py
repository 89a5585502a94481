"""Parsing and graph ingestion of network-flow log lines.

Accepted line grammar (surrounding whitespace is trimmed, CR-LF tolerated):

    [YYYY-MM-DD HH:MM:SS] <src-ip> -> <dst-ip>: <protocol> <action>

Each accepted line becomes one edge between the deduplicated source and
destination endpoint vertices; repeats of the same interaction produce
parallel edges on purpose, so connection counts stay exact. The edge label
is the normalized action token (uppercase, '-' mapped to '_'), and the
timestamp is decomposed onto the edge as `time`, `time_year`, `time_month`
and `time_date` properties alongside `protocol`.

Parsing of independent lines could run in parallel, but application to the
graph is serialized in input order so the result is identical to a
sequential pass.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable

from .errors import (
    AbortedAtLine,
    EmptyAction,
    LogParseError,
    MalformedIp,
    MalformedStructure,
    MalformedTimestamp,
)
from .graph import PropertyGraph

ON_ERROR_SKIP = "skip"
ON_ERROR_ABORT = "abort"

LABEL_POLICY_INDEXED = "indexed"
LABEL_POLICY_CONSTANT = "constant"
DEFAULT_CONSTANT_LABEL = "NetworkEndpoint"
DEFAULT_IDENTITY_KEY = "ip"

_TIMESTAMP_SHAPE = re.compile(r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}")
_TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class LogEvent:
    """One parsed flow-log line."""

    timestamp: datetime
    src_ip: str
    dst_ip: str
    protocol: str
    action: str


@dataclass
class IngestReport:
    """Counters for one ingestion run; rejects carry (line number, reason)."""

    lines_read: int = 0
    lines_rejected: int = 0
    vertices_created: int = 0
    vertices_merged: int = 0
    edges_created: int = 0
    rejects: list[tuple[int, str]] = field(default_factory=list)

    @property
    def lines_accepted(self) -> int:
        return self.lines_read - self.lines_rejected

    def to_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "lines_rejected": self.lines_rejected,
            "vertices_created": self.vertices_created,
            "vertices_merged": self.vertices_merged,
            "edges_created": self.edges_created,
            "rejects": [[line_no, reason] for line_no, reason in self.rejects],
        }


def normalize_action(action: str) -> str:
    """Canonical action label: uppercase with '-' mapped to '_'. Idempotent."""
    return action.upper().replace("-", "_")


def _validate_ipv4(token: str) -> str:
    parts = token.split(".")
    if len(parts) != 4:
        raise MalformedIp("not a dotted-quad IPv4 address", token)
    for part in parts:
        if not part.isdigit() or str(int(part)) != part or int(part) > 255:
            raise MalformedIp("not a dotted-quad IPv4 address", token)
    return token


def parse_log_line(line: str) -> LogEvent:
    """Parse one log line into a LogEvent.

    Raises:
        MalformedStructure: the bracket/arrow/colon skeleton is missing.
        MalformedTimestamp: bracketed text is not `YYYY-MM-DD HH:MM:SS`.
        MalformedIp: an endpoint is not a dotted-quad IPv4 address.
        EmptyAction: no action token follows the protocol.
    """
    text = line.strip()
    if not text.startswith("["):
        raise MalformedStructure("line does not start with '['", text[:32])
    close = text.find("] ")
    if close < 0:
        raise MalformedStructure("missing '] ' after the timestamp", text[:32])
    ts_text = text[1:close]
    if not _TIMESTAMP_SHAPE.fullmatch(ts_text):
        raise MalformedTimestamp("timestamp is not 'YYYY-MM-DD HH:MM:SS'", ts_text)
    try:
        timestamp = datetime.strptime(ts_text, _TIMESTAMP_FORMAT)
    except ValueError:
        raise MalformedTimestamp("timestamp has out-of-range fields", ts_text) from None

    remainder = text[close + 2 :]
    src_text, arrow, rest = remainder.partition(" -> ")
    if not arrow:
        raise MalformedStructure("missing ' -> ' between the endpoints", remainder)
    dst_text, colon, tail = rest.partition(": ")
    if not colon:
        raise MalformedStructure("missing ': ' before the protocol", rest)
    src_ip = _validate_ipv4(src_text)
    dst_ip = _validate_ipv4(dst_text)

    tokens = tail.split(" ")
    if tokens == [""]:
        raise MalformedStructure("missing protocol and action", tail)
    if len(tokens) == 1:
        raise EmptyAction("no action token after the protocol", tail)
    if len(tokens) != 2 or not tokens[0] or not tokens[1]:
        raise MalformedStructure("expected exactly 'PROTO ACTION' after ': '", tail)
    return LogEvent(
        timestamp=timestamp,
        src_ip=src_ip,
        dst_ip=dst_ip,
        protocol=tokens[0],
        action=tokens[1],
    )


def render_log_line(event: LogEvent) -> str:
    """Inverse of parse_log_line for accepted lines (whitespace-canonical)."""
    return (
        f"[{event.timestamp.strftime(_TIMESTAMP_FORMAT)}] "
        f"{event.src_ip} -> {event.dst_ip}: {event.protocol} {event.action}"
    )


class VertexLabelAllocator:
    """Label policy for newly discovered endpoint vertices.

    ``indexed`` hands out "IP1", "IP2", ... by discovery order; ``constant``
    always returns the same label. ``peek`` is called before the upsert (the
    label is only used if a vertex is actually created) and ``advance``
    afterwards when it was.
    """

    def __init__(
        self,
        policy: str = LABEL_POLICY_INDEXED,
        constant_label: str = DEFAULT_CONSTANT_LABEL,
        start: int = 0,
    ):
        if policy not in (LABEL_POLICY_INDEXED, LABEL_POLICY_CONSTANT):
            raise ValueError(f"unknown label policy {policy!r}")
        self.policy = policy
        self.constant_label = constant_label
        self._discovered = start

    def peek(self) -> str:
        if self.policy == LABEL_POLICY_CONSTANT:
            return self.constant_label
        return f"IP{self._discovered + 1}"

    def advance(self) -> None:
        self._discovered += 1


def event_to_graph(
    graph: PropertyGraph,
    event: LogEvent,
    label_allocator: VertexLabelAllocator,
    identity_key: str = DEFAULT_IDENTITY_KEY,
) -> int:
    """Apply one event: upsert both endpoints, append one labeled edge.

    Returns the new edge id.
    """
    endpoint_ids = []
    for ip in (event.src_ip, event.dst_ip):
        vid, created = graph.upsert_vertex(
            label_allocator.peek(), identity_key, {identity_key: ip}
        )
        if created:
            label_allocator.advance()
        endpoint_ids.append(vid)
    ts = event.timestamp
    properties = {
        "time": ts.strftime("%H:%M:%S"),
        "time_year": ts.year,
        "time_month": ts.month,
        "time_date": ts.day,
        "protocol": event.protocol,
    }
    return graph.add_edge(
        endpoint_ids[0], endpoint_ids[1], normalize_action(event.action), properties
    )


def ingest_stream(
    graph: PropertyGraph,
    lines: Iterable[str],
    on_error: str = ON_ERROR_SKIP,
    identity_key: str = DEFAULT_IDENTITY_KEY,
    label_policy: str = LABEL_POLICY_INDEXED,
    constant_label: str = DEFAULT_CONSTANT_LABEL,
) -> IngestReport:
    """Parse and apply lines in order; blank lines are ignored.

    ``on_error="skip"`` records rejects and keeps going; ``"abort"`` raises
    AbortedAtLine at the first bad line (the partial report rides on the
    exception). Line numbers are 1-based over the raw stream.

    Raises:
        AbortedAtLine: first parse failure under the abort policy.
    """
    if on_error not in (ON_ERROR_SKIP, ON_ERROR_ABORT):
        raise ValueError(f"unknown on_error policy {on_error!r}")
    allocator = VertexLabelAllocator(
        policy=label_policy, constant_label=constant_label, start=graph.vertex_count
    )
    report = IngestReport()
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        report.lines_read += 1
        try:
            event = parse_log_line(line)
        except LogParseError as exc:
            report.lines_rejected += 1
            report.rejects.append((line_no, str(exc)))
            if on_error == ON_ERROR_ABORT:
                raise AbortedAtLine(line_no, str(exc), report) from exc
            continue
        before = graph.vertex_count
        event_to_graph(graph, event, allocator, identity_key=identity_key)
        created = graph.vertex_count - before
        report.vertices_created += created
        report.vertices_merged += 2 - created
        report.edges_created += 1
    graph.check_integrity()
    return report
