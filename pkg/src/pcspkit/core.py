"""Finite relational structures, (P)CSP templates and instances, and brute-force solvers.

Atoms and variables are plain strings.  Every container is sorted at
construction time (domains, variable sets, relation names), so equal objects
serialize to identical bytes and every enumeration below is deterministic.
Constraint lists keep their given order because violations are reported by
constraint index.

All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InputError, ResourceError, StructuralError

DEFAULT_BUDGET = 10_000_000

# Variables and atoms are embedded into composite labels elsewhere, so a few
# separator characters are reserved.
_FORBIDDEN_CHARS = (",", "|", "#", ">")


def _check_label(kind: str, label: str) -> None:
    if not isinstance(label, str) or not label:
        raise InputError(f"{kind} must be a nonempty string, got {label!r}")
    for ch in _FORBIDDEN_CHARS:
        if ch in label:
            raise InputError(f"{kind} {label!r} contains reserved character {ch!r}")


@dataclass(frozen=True)
class Relation:
    """A named relation's payload: arity plus a nonempty set of tuples."""

    arity: int
    tuples: frozenset

    def __post_init__(self):
        if self.arity < 1:
            raise InputError(f"relation arity must be positive, got {self.arity}")
        if not self.tuples:
            raise InputError("relations must be nonempty")
        object.__setattr__(self, "tuples", frozenset(tuple(t) for t in self.tuples))
        for t in self.tuples:
            if len(t) != self.arity:
                raise InputError(f"tuple {t} does not match arity {self.arity}")

    @property
    def sorted_tuples(self) -> tuple:
        return tuple(sorted(self.tuples))


@dataclass(frozen=True)
class RelationalStructure:
    """A finite domain together with named, nonempty relations."""

    domain: tuple
    relations: dict

    def __init__(self, domain: Iterable[str], relations: Mapping[str, Relation]):
        domain = tuple(sorted(set(domain)))
        if not domain:
            raise InputError("domain must be nonempty")
        for atom in domain:
            _check_label("atom", atom)
        rels = {}
        for name in sorted(relations):
            _check_label("relation name", name)
            rel = relations[name]
            if not isinstance(rel, Relation):
                rel = Relation(rel["arity"], frozenset(map(tuple, rel["tuples"])))
            for t in rel.tuples:
                for entry in t:
                    if entry not in domain:
                        raise InputError(
                            f"relation {name} uses {entry!r} outside the domain"
                        )
            rels[name] = rel
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "relations", rels)

    def signature(self) -> tuple:
        return tuple((name, rel.arity) for name, rel in sorted(self.relations.items()))

    def similar_to(self, other: "RelationalStructure") -> bool:
        return self.signature() == other.signature()

    def to_payload(self) -> dict:
        return {
            "domain": list(self.domain),
            "relations": {
                name: {"arity": rel.arity, "tuples": [list(t) for t in rel.sorted_tuples]}
                for name, rel in self.relations.items()
            },
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "RelationalStructure":
        return RelationalStructure(
            payload["domain"],
            {
                name: Relation(rel["arity"], frozenset(map(tuple, rel["tuples"])))
                for name, rel in payload["relations"].items()
            },
        )


def structure(domain: Iterable[str], **relations) -> RelationalStructure:
    """Convenience constructor: structure("01", neq=(2, {("0","1"), ...}))."""
    return RelationalStructure(
        domain,
        {name: Relation(arity, frozenset(tuples)) for name, (arity, tuples) in relations.items()},
    )


def complete_graph(n: int) -> RelationalStructure:
    """Domain {0..n-1} with the binary disequality relation."""
    atoms = [str(i) for i in range(n)]
    neq = frozenset((a, b) for a in atoms for b in atoms if a != b)
    return structure(atoms, neq=(2, neq))


@dataclass(frozen=True)
class PcspTemplate:
    """A pair of similar structures: strict constraints and their relaxations."""

    strict: RelationalStructure
    relaxed: RelationalStructure

    def __post_init__(self):
        if not self.strict.similar_to(self.relaxed):
            raise StructuralError("strict and relaxed sides are not similar")
        if _find_homomorphism(self.strict, self.relaxed) is None:
            raise StructuralError("no homomorphism from the strict to the relaxed side")

    def side(self, which: str) -> RelationalStructure:
        if which == "strict":
            return self.strict
        if which == "relaxed":
            return self.relaxed
        raise InputError(f"unknown template side {which!r}")

    def to_payload(self) -> dict:
        return {"strict": self.strict.to_payload(), "relaxed": self.relaxed.to_payload()}

    @staticmethod
    def from_payload(payload: Mapping) -> "PcspTemplate":
        return PcspTemplate(
            RelationalStructure.from_payload(payload["strict"]),
            RelationalStructure.from_payload(payload["relaxed"]),
        )


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    relation: str

    def __init__(self, scope: Sequence[str], relation: str):
        object.__setattr__(self, "scope", tuple(scope))
        object.__setattr__(self, "relation", relation)


@dataclass(frozen=True)
class Instance:
    """Variables plus constraints referencing named template relations.

    Repeated variables inside a scope are allowed.  The constraint list keeps
    its given order; the variable tuple is sorted.
    """

    variables: tuple
    constraints: tuple

    def __init__(self, variables: Iterable[str], constraints: Iterable[Constraint]):
        variables = tuple(sorted(set(variables)))
        for v in variables:
            _check_label("variable", v)
        constraints = tuple(
            c if isinstance(c, Constraint) else Constraint(*c) for c in constraints
        )
        vset = set(variables)
        for c in constraints:
            for v in c.scope:
                if v not in vset:
                    raise InputError(f"constraint scope uses unknown variable {v!r}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "constraints", constraints)

    def induced(self, subset: Sequence[str]) -> "Instance":
        """Sub-instance on `subset`: the constraints whose scope lies inside it."""
        sub = set(subset)
        if not sub <= set(self.variables):
            raise InputError("subset is not contained in the variable set")
        kept = [c for c in self.constraints if set(c.scope) <= sub]
        return Instance(subset, kept)

    def to_payload(self) -> dict:
        return {
            "variables": list(self.variables),
            "constraints": [
                {"scope": list(c.scope), "relation": c.relation} for c in self.constraints
            ],
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "Instance":
        return Instance(
            payload["variables"],
            [Constraint(c["scope"], c["relation"]) for c in payload["constraints"]],
        )


@dataclass(frozen=True)
class Assignment:
    """A total map variable -> atom, with an optional tag naming which
    template side the values range over."""

    values: tuple
    side: Optional[str] = None

    def __init__(self, mapping: Mapping[str, str], side: Optional[str] = None):
        object.__setattr__(self, "values", tuple(sorted(mapping.items())))
        object.__setattr__(self, "side", side)

    @property
    def mapping(self) -> dict:
        return dict(self.values)

    def __getitem__(self, var: str) -> str:
        for v, a in self.values:
            if v == var:
                return a
        raise KeyError(var)

    def restrict(self, variables: Iterable[str]) -> "Assignment":
        keep = set(variables)
        return Assignment({v: a for v, a in self.values if v in keep}, side=self.side)

    def to_payload(self) -> dict:
        payload = {"values": dict(self.values)}
        if self.side is not None:
            payload["side"] = self.side
        return payload

    @staticmethod
    def from_payload(payload: Mapping) -> "Assignment":
        return Assignment(payload["values"], side=payload.get("side"))


def _validate_against(instance: Instance, side: RelationalStructure) -> None:
    for i, c in enumerate(instance.constraints):
        rel = side.relations.get(c.relation)
        if rel is None:
            raise StructuralError(f"constraint {i} names unknown relation {c.relation!r}")
        if len(c.scope) != rel.arity:
            raise StructuralError(
                f"constraint {i} scope length {len(c.scope)} != arity {rel.arity}"
            )


def check_homomorphism(
    h: Mapping[str, str], src: RelationalStructure, dst: RelationalStructure
) -> bool:
    """Does h preserve every relation tuple from src into dst?"""
    if not src.similar_to(dst):
        raise StructuralError("structures are not similar")
    for atom in src.domain:
        if atom not in h:
            raise InputError(f"map is not total: missing {atom!r}")
        if h[atom] not in dst.domain:
            raise InputError(f"map sends {atom!r} outside the target domain")
    for name, rel in src.relations.items():
        target = dst.relations[name].tuples
        for t in rel.tuples:
            if tuple(h[a] for a in t) not in target:
                return False
    return True


def _find_homomorphism(src: RelationalStructure, dst: RelationalStructure):
    """First homomorphism src -> dst in lexicographic order, or None."""
    for images in itertools.product(dst.domain, repeat=len(src.domain)):
        h = dict(zip(src.domain, images))
        ok = all(
            tuple(h[a] for a in t) in dst.relations[name].tuples
            for name, rel in src.relations.items()
            for t in rel.tuples
        )
        if ok:
            return h
    return None


def evaluate(instance: Instance, side: RelationalStructure, f: Assignment) -> list:
    """Indices of the constraints that f violates (empty iff f is a solution)."""
    _validate_against(instance, side)
    mapping = f.mapping if isinstance(f, Assignment) else dict(f)
    for v in instance.variables:
        if v not in mapping:
            raise InputError(f"assignment is not total: missing {v!r}")
    violated = []
    for i, c in enumerate(instance.constraints):
        values = tuple(mapping[v] for v in c.scope)
        if values not in side.relations[c.relation].tuples:
            violated.append(i)
    return violated


def _candidate_count(instance: Instance, side: RelationalStructure) -> int:
    return len(side.domain) ** len(instance.variables)


def _iter_assignments(instance: Instance, side: RelationalStructure):
    for values in itertools.product(side.domain, repeat=len(instance.variables)):
        yield dict(zip(instance.variables, values))


def _satisfies(mapping: dict, instance: Instance, side: RelationalStructure) -> bool:
    for c in instance.constraints:
        if tuple(mapping[v] for v in c.scope) not in side.relations[c.relation].tuples:
            return False
    return True


def brute_force_solve(
    instance: Instance,
    side: RelationalStructure,
    budget: int = DEFAULT_BUDGET,
    tag: Optional[str] = None,
) -> Optional[Assignment]:
    """First solution in lexicographic variable/domain order, or None.

    The candidate space |domain|^|V| is checked against `budget` up front; an
    exceeded budget is an error, never a silent truncation.
    """
    _validate_against(instance, side)
    total = _candidate_count(instance, side)
    if total > budget:
        raise ResourceError(
            f"brute force would enumerate {total} candidates, over the budget of {budget}"
        )
    for mapping in _iter_assignments(instance, side):
        if _satisfies(mapping, instance, side):
            return Assignment(mapping, side=tag)
    return None


def all_solutions(
    instance: Instance,
    side: RelationalStructure,
    budget: int = DEFAULT_BUDGET,
    tag: Optional[str] = None,
) -> tuple:
    """Every solution, in lexicographic order."""
    _validate_against(instance, side)
    total = _candidate_count(instance, side)
    if total > budget:
        raise ResourceError(
            f"brute force would enumerate {total} candidates, over the budget of {budget}"
        )
    found = []
    for mapping in _iter_assignments(instance, side):
        if _satisfies(mapping, instance, side):
            found.append(Assignment(mapping, side=tag))
    return tuple(found)
