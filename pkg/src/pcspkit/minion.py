"""Finite functions of set arity, minors, polymorphisms, and free templates.

Arities are ordered label sets rather than integers, which lets the same
machinery handle coordinates named by variables, by domain elements, or by
relation tuples without choosing bijections.  Tables are stored densely as
|A|^|X| value vectors in mixed-radix order over the sorted arity labels, so
function equality is table equality and serialization is bit-exact.

A minion is infinite; everything here works with finite slices, and every
homomorphism check is a bounded verification over the arity sets it is given.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .core import DEFAULT_BUDGET, PcspTemplate, RelationalStructure
from .errors import InputError, ResourceError, StructuralError


def tuple_label(t: Sequence[str]) -> str:
    """Canonical label for a relation tuple used as an arity coordinate."""
    return ",".join(t)


@dataclass(frozen=True)
class FiniteFunction:
    """A total function in_domain^X -> out_domain with explicit arity set X."""

    arity_set: tuple
    in_domain: tuple
    out_domain: tuple
    table: tuple

    def __init__(self, arity_set, in_domain, out_domain, table):
        arity_set = tuple(sorted(arity_set))
        in_domain = tuple(sorted(set(in_domain)))
        out_domain = tuple(sorted(set(out_domain)))
        table = tuple(table)
        if not arity_set:
            raise InputError("arity set must be nonempty")
        if len(arity_set) != len(set(arity_set)):
            raise InputError("arity set has repeated labels")
        if len(table) != len(in_domain) ** len(arity_set):
            raise InputError(
                f"table has {len(table)} entries, expected "
                f"{len(in_domain) ** len(arity_set)}"
            )
        for value in table:
            if value not in out_domain:
                raise InputError(f"table value {value!r} outside the output domain")
        object.__setattr__(self, "arity_set", arity_set)
        object.__setattr__(self, "in_domain", in_domain)
        object.__setattr__(self, "out_domain", out_domain)
        object.__setattr__(self, "table", table)

    def index_of(self, args: Sequence[str]) -> int:
        base = len(self.in_domain)
        pos = {a: i for i, a in enumerate(self.in_domain)}
        idx = 0
        for value in args:
            idx = idx * base + pos[value]
        return idx

    def apply(self, assignment) -> str:
        """Evaluate on a mapping label -> atom or on a tuple aligned with the
        sorted arity set."""
        if isinstance(assignment, Mapping):
            args = tuple(assignment[x] for x in self.arity_set)
        else:
            args = tuple(assignment)
        return self.table[self.index_of(args)]

    def inputs(self):
        """All argument tuples in table order."""
        return itertools.product(self.in_domain, repeat=len(self.arity_set))

    def to_payload(self) -> dict:
        return {
            "arity_set": list(self.arity_set),
            "in_domain": list(self.in_domain),
            "out_domain": list(self.out_domain),
            "table": list(self.table),
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "FiniteFunction":
        return FiniteFunction(
            payload["arity_set"], payload["in_domain"], payload["out_domain"], payload["table"]
        )


def function_from_callable(arity_set, in_domain, out_domain, fn) -> FiniteFunction:
    arity_set = tuple(sorted(arity_set))
    in_domain = tuple(sorted(set(in_domain)))
    table = [
        fn(dict(zip(arity_set, args)))
        for args in itertools.product(in_domain, repeat=len(arity_set))
    ]
    return FiniteFunction(arity_set, in_domain, out_domain, table)


def dictator(arity_set, domain, coordinate: str) -> FiniteFunction:
    """The projection onto one coordinate of the arity set."""
    if coordinate not in arity_set:
        raise InputError(f"{coordinate!r} is not in the arity set")
    return function_from_callable(arity_set, domain, domain, lambda g: g[coordinate])


def minor(
    t: FiniteFunction, pi: Mapping[str, str], target: Optional[Sequence[str]] = None
) -> FiniteFunction:
    """The pi-minor of t for pi: X -> Y; the result s satisfies
    s(f) = t(f o pi) for every f.

    The codomain Y defaults to the image of pi; pass `target` when the minor
    should live on a larger arity set (maps need not be surjective).
    """
    for x in t.arity_set:
        if x not in pi:
            raise InputError(f"minor map is missing coordinate {x!r}")
    if target is None:
        target = tuple(sorted(set(pi.values())))
    else:
        target = tuple(sorted(set(target)))
        if not set(pi.values()) <= set(target):
            raise InputError("minor map leaves the declared codomain")

    def value(g):
        return t.apply({x: g[pi[x]] for x in t.arity_set})

    return function_from_callable(target, t.in_domain, t.out_domain, value)


def compose_maps(first: Mapping, second: Mapping) -> dict:
    """second o first as coordinate maps (apply `first`, then `second`)."""
    return {x: second[y] for x, y in first.items()}


def is_polymorphism(t: FiniteFunction, template: PcspTemplate) -> bool:
    """Does applying t to the rows of every matrix of strict-relation columns
    land in the corresponding relaxed relation?"""
    strict, relaxed = template.strict, template.relaxed
    if t.in_domain != strict.domain or t.out_domain != relaxed.domain:
        raise StructuralError("function domains do not match the template")
    n = len(t.arity_set)
    for name, rel in strict.relations.items():
        target = relaxed.relations[name].tuples
        cols = rel.sorted_tuples
        for matrix in itertools.product(cols, repeat=n):
            # matrix[j] is the column at arity coordinate j; row i collects
            # the i-th entries across coordinates.
            image = tuple(
                t.apply(tuple(matrix[j][i] for j in range(n))) for i in range(rel.arity)
            )
            if image not in target:
                return False
    return True


def enumerate_polymorphisms(
    template: PcspTemplate, arity_set: Sequence[str], budget: int = DEFAULT_BUDGET
) -> tuple:
    """The exact arity slice of the template's polymorphisms, canonically ordered."""
    arity_set = tuple(sorted(arity_set))
    a, b = template.strict.domain, template.relaxed.domain
    count = len(b) ** (len(a) ** len(arity_set))
    if count > budget:
        raise ResourceError(
            f"enumerating {count} candidate tables exceeds the budget of {budget}"
        )
    found = []
    size = len(a) ** len(arity_set)
    for table in itertools.product(b, repeat=size):
        fn = FiniteFunction(arity_set, a, b, table)
        if is_polymorphism(fn, template):
            found.append(fn)
    return tuple(found)


@dataclass(frozen=True)
class MinionSlice:
    """A finite, explicitly enumerated family of functions grouped by arity set."""

    in_domain: tuple
    out_domain: tuple
    functions: dict

    def __init__(self, in_domain, out_domain, functions: Mapping):
        in_domain = tuple(sorted(set(in_domain)))
        out_domain = tuple(sorted(set(out_domain)))
        grouped = {}
        for arity_set in sorted(functions, key=lambda x: (len(x), x)):
            fns = tuple(functions[arity_set])
            key = tuple(sorted(arity_set))
            for fn in fns:
                if fn.arity_set != key:
                    raise StructuralError(f"function filed under wrong arity {key}")
                if fn.in_domain != in_domain or fn.out_domain != out_domain:
                    raise StructuralError("function domains disagree with the slice")
            grouped[key] = tuple(sorted(fns, key=lambda f: f.table))
        object.__setattr__(self, "in_domain", in_domain)
        object.__setattr__(self, "out_domain", out_domain)
        object.__setattr__(self, "functions", grouped)

    @property
    def arity_sets(self) -> tuple:
        return tuple(self.functions)

    def members(self, arity_set) -> tuple:
        return self.functions.get(tuple(sorted(arity_set)), ())

    def contains(self, fn: FiniteFunction) -> bool:
        return fn in self.functions.get(fn.arity_set, ())

    def all_functions(self):
        for fns in self.functions.values():
            yield from fns

    def to_payload(self) -> dict:
        return {
            "in_domain": list(self.in_domain),
            "out_domain": list(self.out_domain),
            "functions": [fn.to_payload() for fn in self.all_functions()],
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "MinionSlice":
        grouped = {}
        for item in payload["functions"]:
            fn = FiniteFunction.from_payload(item)
            grouped.setdefault(fn.arity_set, []).append(fn)
        return MinionSlice(payload["in_domain"], payload["out_domain"], grouped)


def polymorphism_slice(
    template: PcspTemplate, arity_sets: Iterable, budget: int = DEFAULT_BUDGET
) -> MinionSlice:
    return MinionSlice(
        template.strict.domain,
        template.relaxed.domain,
        {
            tuple(sorted(x)): enumerate_polymorphisms(template, x, budget=budget)
            for x in arity_sets
        },
    )


def dictator_slice(domain, arity_sets: Iterable) -> MinionSlice:
    domain = tuple(sorted(set(domain)))
    return MinionSlice(
        domain,
        domain,
        {
            tuple(sorted(x)): tuple(dictator(x, domain, c) for c in sorted(x))
            for x in arity_sets
        },
    )


class LazyPolymorphismSlice:
    """Membership-only view of a template's polymorphisms.

    Large arities make enumeration impossible while membership stays cheap;
    this is the slice handed to the decoding pipeline.
    """

    def __init__(self, template: PcspTemplate, budget: int = DEFAULT_BUDGET):
        self.template = template
        self.in_domain = template.strict.domain
        self.out_domain = template.relaxed.domain
        self.budget = budget
        self._cache: dict = {}

    def contains(self, fn: FiniteFunction) -> bool:
        return is_polymorphism(fn, self.template)

    def members(self, arity_set) -> tuple:
        key = tuple(sorted(arity_set))
        if key not in self._cache:
            self._cache[key] = enumerate_polymorphisms(self.template, key, budget=self.budget)
        return self._cache[key]


class LazyDictatorSlice:
    """The projections on a fixed domain, available at every arity set."""

    def __init__(self, domain):
        self.in_domain = tuple(sorted(set(domain)))
        self.out_domain = self.in_domain

    def members(self, arity_set) -> tuple:
        key = tuple(sorted(arity_set))
        return tuple(dictator(key, self.in_domain, c) for c in key)

    def contains(self, fn: FiniteFunction) -> bool:
        if fn.in_domain != self.in_domain or fn.out_domain != self.out_domain:
            return False
        return any(fn == cand for cand in self.members(fn.arity_set))


@dataclass(frozen=True)
class ClosureCheck:
    ok: bool
    counterexample: Optional[tuple] = None  # (t, pi, missing minor)

    def __bool__(self):
        return self.ok


def check_minor_closure(slice_: MinionSlice) -> ClosureCheck:
    """Is the slice closed under every minor map between its declared arities?"""
    for x in slice_.arity_sets:
        for t in slice_.members(x):
            for y in slice_.arity_sets:
                for pi in _all_maps(x, y):
                    s = minor(t, pi, target=y)
                    if not slice_.contains(s):
                        return ClosureCheck(False, (t, pi, s))
    return ClosureCheck(True, None)


def _all_maps(x: tuple, y: tuple):
    for images in itertools.product(y, repeat=len(x)):
        yield dict(zip(x, images))


@dataclass(frozen=True)
class HomomorphismCheck:
    ok: bool
    counterexample: Optional[tuple] = None

    def __bool__(self):
        return self.ok


def check_minion_homomorphism(
    xi: Mapping[FiniteFunction, FiniteFunction],
    source: MinionSlice,
    declared: Optional[Iterable] = None,
) -> HomomorphismCheck:
    """Does xi preserve arities and every minor between the declared arities?"""
    arities = tuple(tuple(sorted(x)) for x in (declared or source.arity_sets))
    for x in arities:
        for t in source.members(x):
            if t not in xi:
                raise InputError(f"map is not total: missing a function of arity {x}")
            if xi[t].arity_set != t.arity_set:
                raise StructuralError("map does not preserve arities")
    for x in arities:
        for t in source.members(x):
            for y in arities:
                for pi in _all_maps(x, y):
                    s = minor(t, pi, target=y)
                    if not source.contains(s):
                        continue
                    if minor(xi[t], pi, target=y) != xi[s]:
                        return HomomorphismCheck(False, (t, pi, s))
    return HomomorphismCheck(True, None)


# -- set-valued chain-preserving tables ---------------------------------------


class ExplicitDrTable:
    """A finite set-valued map between slices: each source function gets a
    nonempty set of at most d same-arity target functions."""

    kind = "explicit"

    def __init__(self, d: int, r: int, mapping: Mapping[FiniteFunction, Sequence[FiniteFunction]]):
        if d < 1 or r < 1:
            raise InputError("d and r must be positive")
        self.d = d
        self.r = r
        self.mapping = {}
        for t, images in mapping.items():
            images = tuple(images)
            if not images:
                raise StructuralError("image sets must be nonempty")
            if len(images) > d:
                raise StructuralError(f"image set of size {len(images)} exceeds d={d}")
            for g in images:
                if g.arity_set != t.arity_set:
                    raise StructuralError("image function changes the arity set")
            self.mapping[t] = images

    def image(self, t: FiniteFunction) -> tuple:
        if t not in self.mapping:
            raise InputError(f"table does not cover a function of arity {t.arity_set}")
        return self.mapping[t]

    def covers(self, t: FiniteFunction) -> bool:
        return t in self.mapping

    def to_payload(self) -> dict:
        items = sorted(self.mapping.items(), key=lambda kv: (kv[0].arity_set, kv[0].table))
        return {
            "kind": self.kind,
            "d": self.d,
            "r": self.r,
            "source": [t.to_payload() for t, _ in items],
            "images": [[g.to_payload() for g in images] for _, images in items],
        }


class IdentityDrTable:
    """t maps to {t}: the sharpest table, defined on every polymorphism of its
    template.  Evaluable at any arity without enumerating a slice."""

    kind = "identity"

    def __init__(self, template: PcspTemplate, r: int = 1):
        if r < 1:
            raise InputError("r must be positive")
        self.template = template
        self.d = 1
        self.r = r

    def image(self, t: FiniteFunction) -> tuple:
        if not self.covers(t):
            raise InputError(
                f"identity table does not cover a non-polymorphism of arity {t.arity_set}"
            )
        return (t,)

    def covers(self, t: FiniteFunction) -> bool:
        try:
            return is_polymorphism(t, self.template)
        except StructuralError:
            return False

    def to_payload(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "r": self.r,
            "template": self.template.to_payload(),
        }


def dr_table_from_payload(payload: Mapping):
    if payload["kind"] == "identity":
        return IdentityDrTable(PcspTemplate.from_payload(payload["template"]), r=payload["r"])
    if payload["kind"] == "explicit":
        source = [FiniteFunction.from_payload(p) for p in payload["source"]]
        images = [
            tuple(FiniteFunction.from_payload(p) for p in group) for group in payload["images"]
        ]
        return ExplicitDrTable(payload["d"], payload["r"], dict(zip(source, images)))
    raise InputError(f"unknown table kind {payload['kind']!r}")


@dataclass(frozen=True)
class ChainCheck:
    ok: bool
    counterexample: Optional[tuple] = None  # (functions, maps)

    def __bool__(self):
        return self.ok


def check_dr_homomorphism(
    table, source: MinionSlice, budget: int = DEFAULT_BUDGET
) -> ChainCheck:
    """Verify the weak chain condition on every length-r minor chain whose
    members stay inside the source slice:

    for the chain t_0 -> ... -> t_r there must be i < j and g in xi(t_i),
    h in xi(t_j) with h equal to the composed-map minor of g.
    """
    r = table.r
    arities = source.arity_sets
    total = 0
    for shape in itertools.product(arities, repeat=r + 1):
        steps = len(source.members(shape[0]))
        for x, y in zip(shape, shape[1:]):
            steps *= len(y) ** len(x)
        total += steps
        if total > budget:
            raise ResourceError(f"chain enumeration exceeds the budget of {budget}")

    for t0 in source.all_functions():
        for chain, maps in _chains_from(t0, source, r):
            if not _chain_admits_pair(table, chain, maps):
                return ChainCheck(False, (chain, maps))
    return ChainCheck(True, None)


def _chains_from(t0: FiniteFunction, source: MinionSlice, r: int):
    def extend(chain, maps):
        if len(maps) == r:
            yield tuple(chain), tuple(maps)
            return
        current = chain[-1]
        for y in source.arity_sets:
            for pi in _all_maps(current.arity_set, y):
                nxt = minor(current, pi, target=y)
                if not source.contains(nxt):
                    continue
                yield from extend(chain + [nxt], maps + [pi])

    yield from extend([t0], [])


def _chain_admits_pair(table, chain, maps) -> bool:
    for i in range(len(chain)):
        if not table.covers(chain[i]):
            raise InputError(f"table does not cover a chain member of arity {chain[i].arity_set}")
    for i in range(len(chain)):
        for j in range(i + 1, len(chain)):
            composed = maps[i]
            for step in maps[i + 1 : j]:
                composed = compose_maps(composed, step)
            for g in table.image(chain[i]):
                target = minor(g, composed, target=chain[j].arity_set)
                if any(target == h for h in table.image(chain[j])):
                    return True
    return False


# -- free templates ------------------------------------------------------------


def free_relation(c_labels: Sequence[str], slice_, rel_tuples: Iterable) -> frozenset:
    """The lift of a relation R over C to the slice's C-ary members: the tuples
    (s_1, ..., s_m) obtained from each R-ary member by the coordinate
    projections R -> C."""
    c_labels = tuple(sorted(c_labels))
    rel = sorted(tuple(t) for t in rel_tuples)
    if not rel:
        raise InputError("relations must be nonempty")
    m = len(rel[0])
    arity_labels = tuple(tuple_label(t) for t in rel)
    label_to_tuple = dict(zip(arity_labels, rel))
    out = set()
    for t in slice_.members(arity_labels):
        projected = []
        for i in range(m):
            pi = {lab: label_to_tuple[lab][i] for lab in arity_labels}
            projected.append(minor(t, pi, target=c_labels))
        out.add(tuple(projected))
    return frozenset(out)


@dataclass(frozen=True)
class FreeTemplate:
    template: PcspTemplate
    carrier: dict  # relaxed-domain label -> FiniteFunction
    relation_tuples: dict  # relation name -> tuples over C


def build_free_template(
    m: int,
    c_labels: Sequence[str],
    slice_,
    relations: Optional[Mapping[str, Iterable]] = None,
    budget: int = DEFAULT_BUDGET,
) -> FreeTemplate:
    """Strict side: C with relations of arity up to m (all nonempty ones, or
    just the requested family); relaxed side: the C-ary slice members with the
    corresponding free relations.

    The full relation family has sum_i (2^(|C|^i) - 1) members and is budget
    checked; reductions only ever request graphs of maps, so passing the
    needed family explicitly is the intended mode at scale.
    """
    c_labels = tuple(sorted(set(c_labels)))
    if relations is None:
        total = sum(2 ** (len(c_labels) ** i) - 1 for i in range(1, m + 1))
        if total > budget:
            raise ResourceError(
                f"materializing {total} relations exceeds the budget of {budget}"
            )
        relations = {}
        for arity in range(1, m + 1):
            universe = sorted(itertools.product(c_labels, repeat=arity))
            for idx, size in enumerate(_nonempty_subsets(universe)):
                relations[f"r{arity}_{idx:04d}"] = size
    else:
        for name, tuples in relations.items():
            arities = {len(t) for t in tuples}
            if not tuples or len(arities) != 1 or max(arities) > m:
                raise InputError(f"relation {name!r} is empty or has bad arity")

    members = slice_.members(c_labels)
    if not members:
        raise InputError("the slice has no members of the carrier arity")
    width = len(str(len(members) - 1))
    carrier = {f"t{idx:0{width}d}": fn for idx, fn in enumerate(members)}
    label_of = {fn: lab for lab, fn in carrier.items()}

    strict_rels = {}
    relaxed_rels = {}
    for name in sorted(relations):
        tuples = frozenset(tuple(t) for t in relations[name])
        arity = len(next(iter(tuples)))
        strict_rels[name] = {"arity": arity, "tuples": tuples}
        lifted = free_relation(c_labels, slice_, tuples)
        if not lifted:
            raise InputError(
                f"the slice has no members of the arity needed for relation {name!r}"
            )
        relaxed_rels[name] = {
            "arity": arity,
            "tuples": frozenset(tuple(label_of[fn] for fn in group) for group in lifted),
        }

    strict = RelationalStructure(
        c_labels,
        {n: _as_relation(item) for n, item in strict_rels.items()},
    )
    relaxed = RelationalStructure(
        carrier.keys(),
        {n: _as_relation(item) for n, item in relaxed_rels.items()},
    )
    template = PcspTemplate(strict, relaxed)
    return FreeTemplate(template, carrier, {n: strict_rels[n]["tuples"] for n in strict_rels})


def _as_relation(item):
    from .core import Relation

    return Relation(item["arity"], item["tuples"])


def _nonempty_subsets(universe):
    for size in range(1, len(universe) + 1):
        for combo in itertools.combinations(universe, size):
            yield frozenset(combo)


def restriction_to(fn: FiniteFunction, sub_labels: Sequence[str]) -> Optional[FiniteFunction]:
    """The unique function on a label subset whose extension minor is fn, if fn
    depends only on those coordinates; None otherwise."""
    sub = tuple(sorted(sub_labels))
    if not set(sub) <= set(fn.arity_set):
        raise InputError("restriction labels must lie inside the arity set")
    positions = [fn.arity_set.index(x) for x in sub]
    seen = {}
    for args, value in zip(fn.inputs(), fn.table):
        key = tuple(args[p] for p in positions)
        if seen.setdefault(key, value) != value:
            return None
    table = [seen[args] for args in itertools.product(fn.in_domain, repeat=len(sub))]
    return FiniteFunction(sub, fn.in_domain, fn.out_domain, table)


def decode_partial_map_constraint(
    s1: FiniteFunction,
    s2: FiniteFunction,
    c1: Sequence[str],
    c2: Sequence[str],
    pi: Mapping[str, str],
    slice_,
) -> Optional[tuple]:
    """Invert a graph-of-a-map free constraint: recover the unique pair
    (t1, t2) of slice members on the sub-arities with t1 mapping onto t2 along
    pi and each t_i extending to s_i, or None when (s1, s2) is not in the
    lifted relation.
    """
    c1 = tuple(sorted(c1))
    c2 = tuple(sorted(c2))
    for x in c1:
        if x not in pi:
            raise InputError(f"partial map is missing {x!r}")
        if pi[x] not in c2:
            raise InputError(f"partial map sends {x!r} outside its codomain")
    t1 = restriction_to(s1, c1)
    if t1 is None:
        return None
    t2 = restriction_to(s2, c2)
    if t2 is None:
        return None
    if minor(t1, dict(pi), target=c2) != t2:
        return None
    if not (slice_.contains(t1) and slice_.contains(t2)):
        return None
    return t1, t2
