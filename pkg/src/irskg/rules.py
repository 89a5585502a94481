"""Rules of Engagement: loading, validation, graph storage and matching.

A rule is a two-vertex/one-edge shape - a source selector, an action verb
and a target selector - plus an allow/deny constraint. Selectors match
endpoint vertices either by wildcard ("*", with "any" accepted on input)
or by equality against the vertex's identity property ("ip" or
"ip_address"), optionally narrowed by per-key equality filters.

System templates restrict which verbs and constraints the rules of one
enterprise system may use; the structural (meta) checks apply to every rule
regardless of template. Rules and templates are immutable once loaded, and
matching is read-only over the graph, so it is safe to run concurrently
with other readers.

Rule file format (JSON, UTF-8)::

    {"rules": [{"id": "...", "source": "*" | {"label": "...", "filters": {...}},
                "target": ..., "action": "...", "constraint": "allow" | "deny",
                "properties": {...}}]}

Template file format::

    {"system_id": "...", "allowed_actions": [...],
     "allowed_constraints": [...], "required_vertex_keys": [...]}

Unknown keys are rejected with a diagnostic naming the key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (
    BadConstraint,
    BadSelector,
    DuplicateRuleId,
    DuplicateTemplate,
    InvalidRule,
    MissingField,
    UnknownField,
)
from .graph import PropertyGraph, PropertyMap, prop_equal, validate_property_map
from .ingest import normalize_action

WILDCARD = "*"
CONSTRAINT_ALLOW = "allow"
CONSTRAINT_DENY = "deny"
CONSTRAINTS = (CONSTRAINT_ALLOW, CONSTRAINT_DENY)

# Identity properties a literal selector may match, in precedence order:
# ingested endpoints carry "ip", rule-materialized endpoints "ip_address".
IDENTITY_PROPERTY_KEYS = ("ip", "ip_address")

RULE_VERTEX_LABEL = "NetworkEndpoint"
RULE_EDGE_LABEL = "COMMUNICATES_TO"
RULE_VERTEX_KEY = "ip_address"

_RULE_FIELDS = {"id", "source", "target", "action", "constraint", "properties"}
_TEMPLATE_FIELDS = {
    "system_id",
    "allowed_actions",
    "allowed_constraints",
    "required_vertex_keys",
}


@dataclass
class VertexSelector:
    """Who/which side of a rule: a label pattern plus equality filters."""

    label_match: str
    filters: PropertyMap = field(default_factory=dict)

    @property
    def is_wildcard(self) -> bool:
        return self.label_match == WILDCARD


@dataclass
class Rule:
    id: str
    source: VertexSelector
    target: VertexSelector
    action: str
    constraint: str
    extra_properties: PropertyMap = field(default_factory=dict)


@dataclass
class RuleTemplate:
    """Per-enterprise-system restriction on verbs, constraints and selector keys."""

    system_id: str
    allowed_actions: frozenset[str]
    allowed_constraints: frozenset[str] = frozenset(CONSTRAINTS)
    required_vertex_keys: frozenset[str] = frozenset()


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _parse_selector(value, role: str) -> VertexSelector:
    if isinstance(value, str):
        label, filters = value, {}
    elif isinstance(value, dict):
        unknown = set(value) - {"label", "filters"}
        if unknown:
            raise UnknownField(sorted(unknown)[0], context=f"{role} selector")
        if "label" not in value:
            raise MissingField("label", context=f"{role} selector")
        label = value["label"]
        filters = value.get("filters") or {}
        if not isinstance(filters, dict):
            raise BadSelector(f"{role} selector filters must be an object")
    else:
        raise BadSelector(f"{role} selector must be a string or an object, got {value!r}")
    if not isinstance(label, str) or not label:
        raise BadSelector(f"{role} selector label must be a non-empty string")
    if label.lower() == "any":
        label = WILDCARD
    filters = dict(filters)
    validate_property_map(filters)
    return VertexSelector(label_match=label, filters=filters)


def parse_rule(doc: dict) -> Rule:
    """Build a Rule from one rule object, canonicalizing wildcard and action.

    Raises:
        MissingField / UnknownField: document keys are wrong.
        BadSelector: a selector is malformed.
        BadConstraint: constraint is not "allow" or "deny".
    """
    if not isinstance(doc, dict):
        raise BadSelector(f"rule document must be an object, got {type(doc).__name__}")
    unknown = set(doc) - _RULE_FIELDS
    if unknown:
        raise UnknownField(sorted(unknown)[0])
    for name in ("id", "source", "target", "action", "constraint"):
        if name not in doc or doc[name] in ("", None):
            raise MissingField(name)
    rule_id = doc["id"]
    if not isinstance(rule_id, str):
        raise BadSelector(f"rule id must be a string, got {rule_id!r}")
    action = doc["action"]
    if not isinstance(action, str):
        raise BadSelector(f"rule action must be a string, got {action!r}")
    constraint = doc["constraint"]
    if not isinstance(constraint, str) or constraint.lower() not in CONSTRAINTS:
        raise BadConstraint(constraint)
    extra = doc.get("properties") or {}
    if not isinstance(extra, dict):
        raise BadSelector("rule properties must be an object")
    extra = dict(extra)
    validate_property_map(extra)
    return Rule(
        id=rule_id,
        source=_parse_selector(doc["source"], "source"),
        target=_parse_selector(doc["target"], "target"),
        action=normalize_action(action),
        constraint=constraint.lower(),
        extra_properties=extra,
    )


def render_rule(rule: Rule) -> dict:
    """Canonical document form; parse_rule(render_rule(r)) == r."""

    def selector_doc(sel: VertexSelector):
        if sel.filters:
            return {"label": sel.label_match, "filters": dict(sel.filters)}
        return sel.label_match

    doc = {
        "id": rule.id,
        "source": selector_doc(rule.source),
        "target": selector_doc(rule.target),
        "action": rule.action,
        "constraint": rule.constraint,
    }
    if rule.extra_properties:
        doc["properties"] = dict(rule.extra_properties)
    return doc


def parse_rules_doc(doc: dict) -> list[Rule]:
    """Parse a whole rule file document, enforcing unique rule ids."""
    if not isinstance(doc, dict):
        raise BadSelector("rule file must be a JSON object")
    unknown = set(doc) - {"rules"}
    if unknown:
        raise UnknownField(sorted(unknown)[0], context="rule file")
    if "rules" not in doc:
        raise MissingField("rules", context="rule file")
    if not isinstance(doc["rules"], list):
        raise BadSelector("rule file 'rules' must be an array")
    rules = []
    seen: set[str] = set()
    for entry in doc["rules"]:
        rule = parse_rule(entry)
        if rule.id in seen:
            raise DuplicateRuleId(rule.id)
        seen.add(rule.id)
        rules.append(rule)
    return rules


def load_rules(path) -> list[Rule]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_rules_doc(json.load(handle))


def parse_template(doc: dict) -> RuleTemplate:
    """Build a RuleTemplate from its document form.

    allowed_constraints defaults to both constraints and required_vertex_keys
    to none when absent; allowed_actions must be a non-empty list of verbs.
    """
    if not isinstance(doc, dict):
        raise BadSelector("template file must be a JSON object")
    unknown = set(doc) - _TEMPLATE_FIELDS
    if unknown:
        raise UnknownField(sorted(unknown)[0], context="template file")
    for name in ("system_id", "allowed_actions"):
        if name not in doc or doc[name] in ("", None):
            raise MissingField(name, context="template")
    system_id = doc["system_id"]
    if not isinstance(system_id, str):
        raise BadSelector(f"template system_id must be a string, got {system_id!r}")
    actions = doc["allowed_actions"]
    if not isinstance(actions, list) or not actions:
        raise BadSelector("template allowed_actions must be a non-empty array")
    for verb in actions:
        if not isinstance(verb, str) or not verb:
            raise BadSelector(f"template action must be a non-empty string, got {verb!r}")
    constraints = doc.get("allowed_constraints")
    if constraints is None:
        constraints = list(CONSTRAINTS)
    if not isinstance(constraints, list):
        raise BadSelector("template allowed_constraints must be an array")
    for value in constraints:
        if value not in CONSTRAINTS:
            raise BadConstraint(value)
    keys = doc.get("required_vertex_keys") or []
    if not isinstance(keys, list) or not all(isinstance(k, str) and k for k in keys):
        raise BadSelector("template required_vertex_keys must be an array of keys")
    return RuleTemplate(
        system_id=system_id,
        allowed_actions=frozenset(normalize_action(a) for a in actions),
        allowed_constraints=frozenset(constraints),
        required_vertex_keys=frozenset(keys),
    )


def load_template(path) -> RuleTemplate:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_template(json.load(handle))


def load_templates(docs) -> dict[str, RuleTemplate]:
    """Parse several template documents; one template per system id."""
    out: dict[str, RuleTemplate] = {}
    for doc in docs:
        template = parse_template(doc)
        if template.system_id in out:
            raise DuplicateTemplate(template.system_id)
        out[template.system_id] = template
    return out


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_meta(rule: Rule) -> ValidationResult:
    """Structural checks every rule must pass regardless of system template."""
    violations = []
    if not rule.source.label_match:
        violations.append("source selector label is empty")
    if not rule.target.label_match:
        violations.append("target selector label is empty")
    if not rule.action:
        violations.append("action is empty")
    if rule.constraint not in CONSTRAINTS:
        violations.append(f"constraint {rule.constraint!r} is not 'allow' or 'deny'")
    return ValidationResult(violations)


def validate_rule(rule: Rule, template: RuleTemplate) -> ValidationResult:
    """Meta checks plus the template's clauses.

    Including the meta checks keeps the subsumption guarantee: a rule that
    fails validate_meta fails against every template.
    """
    violations = list(validate_meta(rule).violations)
    if rule.action not in template.allowed_actions:
        violations.append(
            f"action {rule.action!r} not allowed by template {template.system_id!r}"
        )
    if rule.constraint not in template.allowed_constraints:
        violations.append(
            f"constraint {rule.constraint!r} not allowed by template {template.system_id!r}"
        )
    for key in sorted(template.required_vertex_keys):
        if key not in rule.source.filters:
            violations.append(f"source selector missing required filter key {key!r}")
        if key not in rule.target.filters:
            violations.append(f"target selector missing required filter key {key!r}")
    return ValidationResult(violations)


# ---------------------------------------------------------------------------
# Graph storage and matching
# ---------------------------------------------------------------------------

def rule_to_graph(rule: Rule, graph: PropertyGraph) -> tuple[int, int, int]:
    """Materialize a rule as two endpoint vertices and one connecting edge.

    Vertices are upserted by their "ip_address" property (the selector
    literal, or "*" for a wildcard), so re-applying the same rule set does
    not duplicate them; the edge carries action, constraint and the rule id
    and is refreshed in place when an edge for this rule id already joins
    the pair. Returns (source vertex id, edge id, target vertex id).
    """
    meta = validate_meta(rule)
    if not meta.ok:
        raise InvalidRule(rule.id, meta.violations)
    endpoint_ids = []
    for selector in (rule.source, rule.target):
        properties = {**selector.filters, RULE_VERTEX_KEY: selector.label_match}
        vid, _ = graph.upsert_vertex(RULE_VERTEX_LABEL, RULE_VERTEX_KEY, properties)
        endpoint_ids.append(vid)
    src_id, dst_id = endpoint_ids
    properties = {
        "action": rule.action,
        "constraint": rule.constraint,
        "id": rule.id,
        **rule.extra_properties,
    }
    validate_property_map(properties)
    for eid in graph.edges_between(src_id, dst_id):
        edge = graph.edge(eid)
        if edge.src == src_id and edge.dst == dst_id and edge.properties.get("id") == rule.id:
            edge.properties = properties
            return src_id, eid, dst_id
    edge_id = graph.add_edge(src_id, dst_id, RULE_EDGE_LABEL, properties)
    return src_id, edge_id, dst_id


def _selector_matches(selector: VertexSelector, vertex) -> bool:
    if not selector.is_wildcard:
        identity = None
        for key in IDENTITY_PROPERTY_KEYS:
            if key in vertex.properties:
                identity = vertex.properties[key]
                break
        if identity is None or not prop_equal(identity, selector.label_match):
            return False
    for key, expected in selector.filters.items():
        if key not in vertex.properties or not prop_equal(vertex.properties[key], expected):
            return False
    return True


def match_rule(rule: Rule, graph: PropertyGraph, edge_id: int) -> bool:
    """True when source matches src, target matches dst and the verb matches.

    Pure function of the rule, the edge and its endpoint vertices.

    Raises:
        UnknownEdge: edge_id is not in the graph.
    """
    edge = graph.edge(edge_id)
    if rule.action != edge.label:
        return False
    return _selector_matches(rule.source, graph.vertex(edge.src)) and _selector_matches(
        rule.target, graph.vertex(edge.dst)
    )


def matching_edges(rules: list[Rule], graph: PropertyGraph) -> dict[str, list[int]]:
    """Edge ids matched per rule id; every rule gets an entry, ids ascending."""
    return {
        rule.id: [eid for eid in graph.edges if match_rule(rule, graph, eid)]
        for rule in rules
    }
