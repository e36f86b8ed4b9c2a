"""Concept vocabularies and subsumption.

The builtin top ontology ``hat_top`` carries the domain-independent concepts
every runtime shares; domain ontologies import it and extend the hierarchy.
Validation checks that every concept term used in message content resolves.
No inference beyond parent-link subsumption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

TOP_ONTOLOGY_ID = "hat_top"


class OntologyError(Exception):
    pass


class UnresolvedConcept(OntologyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unresolved concept {name!r}")


class CycleDetected(OntologyError):
    def __init__(self, path: list[str]):
        self.path = path
        super().__init__("cycle in parent links: " + " -> ".join(path))


class DuplicateName(OntologyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate concept name {name!r}")


class UnknownOntology(OntologyError):
    def __init__(self, ontology_id: str):
        self.ontology_id = ontology_id
        super().__init__(f"no loaded ontology {ontology_id!r}")


@dataclass(frozen=True)
class Concept:
    name: str
    parent: str | None = None
    relations: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Ontology:
    id: str
    concepts: Mapping[str, Concept]
    imports: tuple[str, ...] = ()

    def __contains__(self, name: str) -> bool:
        return name in self.concepts


@dataclass(frozen=True)
class UnknownTerm:
    term: str


_TOP_CONCEPTS = [
    Concept("Actor", None, (("pursues", "Goal"), ("performs", "Action"))),
    Concept("Human", "Actor"),
    Concept("Agent", "Actor"),
    Concept("Goal"),
    Concept("Plan", None, (("achieves", "Goal"), ("composedOf", "Action"))),
    Concept("Action"),
    Concept("Information"),
    Concept("Topic", None, (("about", "Information"),)),
    # Closure concepts referenced by other runtime parts: the consequent of
    # implicit query/subscribe agreements, and violation topics surfaced to
    # the operator.
    Concept("SendInformation", "Action"),
    Concept("WaViolation", "Information"),
]


def builtin_top() -> Ontology:
    o = Ontology(TOP_ONTOLOGY_ID, {c.name: c for c in _TOP_CONCEPTS})
    _check(o)
    return o


def _check(o: Ontology) -> None:
    for concept in o.concepts.values():
        if concept.parent is not None and concept.parent not in o.concepts:
            raise UnresolvedConcept(concept.parent)
        for _, target in concept.relations:
            if target not in o.concepts:
                raise UnresolvedConcept(target)
    for name in o.concepts:
        seen: list[str] = []
        cur: str | None = name
        while cur is not None:
            if cur in seen:
                raise CycleDetected(seen + [cur])
            seen.append(cur)
            cur = o.concepts[cur].parent


def load_ontology(
    doc: dict | str | Path, registry: Mapping[str, Ontology] | None = None
) -> Ontology:
    """Load a domain ontology document, resolving imports against ``registry``.

    The top ontology is always merged in, whether or not it is declared.
    """
    if isinstance(doc, (str, Path)):
        doc = json.loads(Path(doc).read_text())
    registry = dict(registry or {})
    registry.setdefault(TOP_ONTOLOGY_ID, builtin_top())

    imports = list(doc.get("imports", []))
    if TOP_ONTOLOGY_ID not in imports:
        imports.insert(0, TOP_ONTOLOGY_ID)

    merged: dict[str, Concept] = {}
    for imp in imports:
        if imp not in registry:
            raise UnknownOntology(imp)
        for name, concept in registry[imp].concepts.items():
            if name in merged and merged[name] != concept:
                raise DuplicateName(name)
            merged[name] = concept

    for entry in doc.get("concepts", []):
        concept = Concept(
            entry["name"],
            entry.get("parent"),
            tuple((rel, target) for rel, target in entry.get("relations", [])),
        )
        if concept.name in merged:
            raise DuplicateName(concept.name)
        merged[concept.name] = concept

    o = Ontology(doc["id"], merged, tuple(imports))
    _check(o)
    return o


def is_a(o: Ontology, concept: str, ancestor: str) -> bool:
    """Reflexive reachability through parent links."""
    if concept not in o.concepts:
        raise UnresolvedConcept(concept)
    if ancestor not in o.concepts:
        raise UnresolvedConcept(ancestor)
    cur: str | None = concept
    while cur is not None:
        if cur == ancestor:
            return True
        cur = o.concepts[cur].parent
    return False


def _concept_terms(content: Any) -> Iterable[str]:
    """Concept terms used in content: values of 'type' and 'action' keys."""
    if isinstance(content, dict):
        for key, value in content.items():
            if key in ("type", "action") and isinstance(value, str):
                yield value
            else:
                yield from _concept_terms(value)
    elif isinstance(content, list):
        for item in content:
            yield from _concept_terms(item)


def validate_content(content: Any, o: Ontology) -> list[UnknownTerm]:
    return [
        UnknownTerm(term) for term in _concept_terms(content) if term not in o.concepts
    ]
