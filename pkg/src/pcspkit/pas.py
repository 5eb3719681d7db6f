"""Partial assignment systems and the staged solution-extraction machinery.

A partial assignment system (PAS) of arity k over variables V and domain A
assigns to every k-subset of V a nonempty set of total maps from that subset
into A.  Entries are stored as value tuples aligned with the sorted subset.

The extraction algorithm recovers, from a consistent sequence of low-value
systems at suitable arities, a global assignment whose every m-subset
restriction is realized inside some system of the sequence.  All parameter
arithmetic uses exact integers; no floating point appears in this module.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Optional, Sequence

from .core import Assignment, DEFAULT_BUDGET, Instance, RelationalStructure, all_solutions
from .errors import (
    InputError,
    InvariantError,
    ParameterError,
    ResourceError,
    StructuralError,
)

PARAMETER_LIMIT = 10**18


def _proj(values: tuple, key: tuple, subkey: tuple) -> tuple:
    """Restrict a value tuple aligned with `key` to the positions of `subkey`."""
    idx = {v: i for i, v in enumerate(key)}
    return tuple(values[idx[v]] for v in subkey)


@dataclass(frozen=True)
class Pas:
    """An arity-k map from k-subsets of the variables to nonempty sets of
    partial assignments on that subset."""

    variables: tuple
    domain: tuple
    arity: int
    entries: dict

    def __init__(self, variables, domain, arity, entries: Mapping):
        variables = tuple(sorted(set(variables)))
        domain = tuple(sorted(set(domain)))
        if not (1 <= arity <= len(variables)):
            raise InputError(f"arity {arity} out of range for {len(variables)} variables")
        canonical = {}
        for key, group in entries.items():
            key = tuple(sorted(key))
            group = frozenset(tuple(g) for g in group)
            if len(key) != arity or not set(key) <= set(variables):
                raise InputError(f"entry key {key} is not an arity-{arity} variable subset")
            if not group:
                raise InputError(f"entry for {key} is empty")
            for g in group:
                if len(g) != arity or not set(g) <= set(domain):
                    raise InputError(f"assignment {g} for {key} is malformed")
            canonical[key] = group
        expected = comb(len(variables), arity)
        if len(canonical) != expected:
            raise InputError(
                f"expected entries for all {expected} subsets, got {len(canonical)}"
            )
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "arity", arity)
        object.__setattr__(self, "entries", canonical)

    def subsets(self):
        return itertools.combinations(self.variables, self.arity)

    def to_payload(self) -> dict:
        return {
            "arity": self.arity,
            "domain": list(self.domain),
            "variables": list(self.variables),
            "entries": [
                {
                    "set": list(key),
                    "assignments": [dict(zip(key, g)) for g in sorted(group)],
                }
                for key, group in sorted(self.entries.items())
            ],
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "Pas":
        entries = {}
        for item in payload["entries"]:
            key = tuple(sorted(item["set"]))
            entries[key] = frozenset(
                tuple(assignment[v] for v in key) for assignment in item["assignments"]
            )
        return Pas(payload["variables"], payload["domain"], payload["arity"], entries)


def pas_from_assignment(f: Mapping[str, str], variables, domain, arity: int) -> Pas:
    """The PAS whose every entry is the single restriction of f."""
    variables = tuple(sorted(set(variables)))
    fmap = dict(f)
    entries = {
        u: frozenset({tuple(fmap[v] for v in u)})
        for u in itertools.combinations(variables, arity)
    }
    return Pas(variables, domain, arity, entries)


@dataclass(frozen=True)
class PasSequence:
    """Systems over common variables and domain, with non-increasing arities."""

    systems: tuple

    def __init__(self, systems: Iterable[Pas]):
        systems = tuple(systems)
        if not systems:
            raise InputError("a sequence needs at least one system")
        v0, a0 = systems[0].variables, systems[0].domain
        for s in systems[1:]:
            if s.variables != v0 or s.domain != a0:
                raise StructuralError("systems disagree on variables or domain")
        arities = [s.arity for s in systems]
        if any(a < b for a, b in zip(arities, arities[1:])):
            raise StructuralError(f"arities {arities} are not non-increasing")
        object.__setattr__(self, "systems", systems)

    def __len__(self):
        return len(self.systems)

    def __getitem__(self, i) -> Pas:
        return self.systems[i]

    @property
    def arities(self) -> tuple:
        return tuple(s.arity for s in self.systems)

    def to_payload(self) -> dict:
        return {"systems": [s.to_payload() for s in self.systems]}

    @staticmethod
    def from_payload(payload: Mapping) -> "PasSequence":
        return PasSequence([Pas.from_payload(p) for p in payload["systems"]])


def pas_value(system: Pas) -> int:
    """The maximal entry size."""
    return max(len(group) for group in system.entries.values())


def sequence_value(seq: PasSequence) -> int:
    return max(pas_value(s) for s in seq.systems)


def is_m_solution(f, system: Pas, m: int) -> bool:
    """True iff every m-subset restriction of f appears among the projections
    of some entry of the system."""
    if m > system.arity:
        raise InputError(f"m={m} exceeds the system arity {system.arity}")
    fmap = f.mapping if isinstance(f, Assignment) else dict(f)
    v = system.variables
    for u in itertools.combinations(v, m):
        want = tuple(fmap[x] for x in u)
        ok = False
        for w in itertools.combinations(v, system.arity):
            if not set(u) <= set(w):
                continue
            if any(_proj(g, w, u) == want for g in system.entries[w]):
                ok = True
                break
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class ConsistencyResult:
    ok: bool
    chain: Optional[tuple] = None

    def __bool__(self):
        return self.ok


def check_consistent(seq: PasSequence) -> ConsistencyResult:
    """For every nested subset chain there must be a pair i < j whose entries
    meet under projection.  Returns a violating chain on failure."""
    systems = seq.systems
    arities = seq.arities
    v = systems[0].variables

    def chains(prefix):
        i = len(prefix)
        if i == len(systems):
            yield tuple(prefix)
            return
        pool = v if i == 0 else prefix[-1]
        for u in itertools.combinations(pool, arities[i]):
            yield from chains(prefix + [u])

    for chain in chains([]):
        if not _chain_has_agreement(systems, chain):
            return ConsistencyResult(False, chain)
    return ConsistencyResult(True, None)


def _chain_has_agreement(systems, chain) -> bool:
    for i in range(len(systems)):
        for j in range(i + 1, len(systems)):
            ui, uj = chain[i], chain[j]
            down = {_proj(g, ui, uj) for g in systems[i].entries[ui]}
            if down & systems[j].entries[uj]:
                return True
    return False


class LocalProperty(enum.Enum):
    """Quantified local properties of a pair (X, f) relative to a system.

    EXTENSION: every l-subset W admits a k-superset U of X union W whose entry
    contains some g extending f on X.
    AVOIDANCE: every l-subset W admits a k-superset U of X union W whose entry
    contains no g extending f on X.

    Their negations swap the quantifiers; the failing W returned below is
    exactly the witness of the negated property.
    """

    EXTENSION = "extension"
    AVOIDANCE = "avoidance"


@dataclass(frozen=True)
class PropertyCheck:
    holds: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.holds


def has_property(
    system: Pas, xs: Sequence[str], f: Sequence[str], l: int, which: LocalProperty
) -> PropertyCheck:
    """Evaluate a local property of (X, f); on failure the first (lexicographic)
    failing l-subset is reported as witness.

    If for some W no k-superset of X union W exists the inner existential is
    false and W already witnesses failure.
    """
    xs = tuple(sorted(xs))
    f = tuple(f)
    if len(xs) != len(set(xs)) or len(f) != len(xs):
        raise InputError("X must be a set and f must assign exactly its elements")
    if len(xs) > system.arity or l > system.arity:
        raise InputError("|X| and l must not exceed the system arity")
    v = system.variables
    k = system.arity
    for w in itertools.combinations(v, l):
        base = tuple(sorted(set(xs) | set(w)))
        if len(base) > k:
            return PropertyCheck(False, w)
        rest = [x for x in v if x not in base]
        found = False
        for extra in itertools.combinations(rest, k - len(base)):
            u = tuple(sorted(base + extra))
            extends = any(_proj(g, u, xs) == f for g in system.entries[u])
            if which is LocalProperty.EXTENSION and extends:
                found = True
                break
            if which is LocalProperty.AVOIDANCE and not extends:
                found = True
                break
        if not found:
            return PropertyCheck(False, w)
    return PropertyCheck(True, None)


def find_extendable_assignment(system: Pas, xs: Sequence[str], l: int) -> tuple:
    """First f on X (lexicographic) with the l-EXTENSION property.

    Requires k >= |A|^|X| * l + |X|; under that inequality such an f always
    exists, so not finding one is an internal error.
    """
    xs = tuple(sorted(xs))
    k, a = system.arity, len(system.domain)
    bound = a ** len(xs) * l + len(xs)
    if k < bound:
        raise ParameterError(
            f"extension search needs arity >= {bound}, system has {k}"
        )
    for f in itertools.product(system.domain, repeat=len(xs)):
        if has_property(system, xs, f, l, LocalProperty.EXTENSION):
            return f
    raise InvariantError("no assignment with the extension property despite valid parameters")


def solve_value_one(system: Pas, l: int, selector: Mapping[str, str]) -> Assignment:
    """Lift a verified per-variable selector of a value-1 system to a global
    assignment that is a floor(k/(l+1))-solution.

    The selector must map every variable v to a value a such that (v, a) has
    the negated l-AVOIDANCE property (every large enough entry extends it).
    """
    if pas_value(system) != 1:
        raise StructuralError("solve_value_one requires a value-1 system")
    for v in system.variables:
        if v not in selector:
            raise InputError(f"selector is missing variable {v!r}")
        if has_property(system, (v,), (selector[v],), l, LocalProperty.AVOIDANCE):
            raise InputError(f"selector value for {v!r} fails its verification")
    s = Assignment({v: selector[v] for v in system.variables})
    m = system.arity // (l + 1)
    if not is_m_solution(s, system, m):
        raise InvariantError("selector lift failed post-verification")
    return s


def refine(system: Pas, target_arity: int, ex: Mapping) -> Pas:
    """The lower-arity system J(U) = proj_U I(ex(U)) for an extension map ex
    with U contained in ex(U).  Never increases the value."""
    v = system.variables
    entries = {}
    for u in itertools.combinations(v, target_arity):
        if u not in ex:
            raise InputError(f"extension map is missing subset {u}")
        big = tuple(sorted(ex[u]))
        if not set(u) <= set(big):
            raise InputError(f"extension of {u} does not contain it")
        if len(big) != system.arity:
            raise InputError(f"extension of {u} has wrong size {len(big)}")
        entries[u] = frozenset(_proj(g, big, u) for g in system.entries[big])
    return Pas(v, system.domain, target_arity, entries)


def split_to_value_one(
    system: Pas, l: int, k_prime: int, k_dblprime: int, selector: Mapping
) -> tuple:
    """Split a system into a refinement of arity k'' and a value-1 system of
    arity k' whose pair passes the consistency check.

    The selector maps every k'-subset X to an f with the negated l-AVOIDANCE
    property; the refinement extends each k''-set past all selector witnesses.
    """
    k = system.arity
    if k < k_dblprime + comb(k_dblprime, k_prime) * l:
        raise ParameterError(
            f"split needs arity >= {k_dblprime + comb(k_dblprime, k_prime) * l}, got {k}"
        )
    v = system.variables
    witnesses = {}
    singles = {}
    for xs in itertools.combinations(v, k_prime):
        if xs not in selector:
            raise InputError(f"selector is missing subset {xs}")
        f = tuple(selector[xs])
        chk = has_property(system, xs, f, l, LocalProperty.AVOIDANCE)
        if chk.holds:
            raise InputError(f"selector assignment for {xs} fails its verification")
        witnesses[xs] = chk.witness
        singles[xs] = frozenset({f})
    value_one = Pas(v, system.domain, k_prime, singles)

    ex = {}
    for y in itertools.combinations(v, k_dblprime):
        need = set(y)
        for xs in itertools.combinations(y, k_prime):
            need |= set(witnesses[xs])
        ex[y] = _lex_superset(v, need, k)
    refined = refine(system, k_dblprime, ex)

    pair = PasSequence([refined, value_one])
    if not check_consistent(pair):
        raise InvariantError("split produced an inconsistent pair")
    return refined, value_one


def _lex_superset(variables: tuple, base: set, size: int) -> tuple:
    """Lexicographically-first size-`size` subset of `variables` containing base."""
    if len(base) > size:
        raise InvariantError(f"cannot extend a {len(base)}-set to size {size}")
    rest = [x for x in variables if x not in base]
    extra = rest[: size - len(base)]
    return tuple(sorted(base | set(extra)))


# -- parameter recursion ------------------------------------------------------

K0_MODES = ("compact", "conservative")


@dataclass(frozen=True)
class GapParameters:
    """Arity/threshold record driving the extraction recursion.

    `values` bounds the entry sizes per position, `k` the arities, `l` the
    local-property thresholds, `p` the arities of the refined sequence used by
    the recursive step, and `split[i]` the (k'', k') pair for positions where
    the splitting step applies.  `mode` selects the arity formula at position
    zero (see gap_parameters).
    """

    domain_size: int
    m: int
    values: tuple
    k: tuple
    l: tuple
    p: tuple
    split: tuple
    mode: str
    k0_raw: int
    trace: tuple

    @property
    def r(self) -> int:
        return len(self.values) - 1

    @property
    def k_prime(self) -> tuple:
        out = [None]
        for i in range(1, len(self.values)):
            out.append(self.split[i][1] if self.split[i] else 1)
        return tuple(out)

    def to_payload(self) -> dict:
        return {
            "domain_size": self.domain_size,
            "m": self.m,
            "values": list(self.values),
            "k": list(self.k),
            "l": list(self.l),
            "p": list(self.p),
            "split": [list(s) if s else None for s in self.split],
            "mode": self.mode,
            "k0_raw": self.k0_raw,
            "trace": list(self.trace),
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "GapParameters":
        return GapParameters(
            payload["domain_size"],
            payload["m"],
            tuple(payload["values"]),
            tuple(payload["k"]),
            tuple(payload["l"]),
            tuple(payload["p"]),
            tuple(tuple(s) if s else None for s in payload["split"]),
            payload["mode"],
            payload["k0_raw"],
            tuple(payload["trace"]),
        )


def gap_parameters(
    domain_size: int, m: int, values: Sequence[int], mode: str = "compact"
) -> GapParameters:
    """Compute the arity sequence under which low-value consistent sequences
    are guaranteed extractable, by structural recursion on `values`.

    For position i >= 1 the threshold is
        l_i = p_i + sum_{j>i} C(p_i, p_j) (k_j - p_j)
    and the arity is (l_i + 1) m when values[i] == 1, else k''_i +
    C(k''_i, k'_i) l_i with (k''_i, k'_i) taken from the recursion on
    (values[i], 1).  Position zero uses
        compact mode:      k_0 = S + |A|^S            where S = sum k'_j,
        conservative mode: k_0 = S + |A|^S * l_0,
    in both cases raised to max(k_0, k_1) to keep arities non-increasing.
    The conservative form is the one that always satisfies the extension
    search precondition at position zero.
    """
    values = tuple(int(d) for d in values)
    if len(values) < 2:
        raise InputError("need at least two values")
    if any(d < 1 for d in values):
        raise InputError("all values must be at least 1")
    if domain_size < 1 or m < 1:
        raise InputError("domain size and m must be positive")
    if mode not in K0_MODES:
        raise InputError(f"unknown mode {mode!r}; expected one of {K0_MODES}")
    return _gap_parameters(domain_size, m, values, mode)


@lru_cache(maxsize=None)
def _gap_parameters(domain_size: int, m: int, values: tuple, mode: str) -> GapParameters:
    r = len(values) - 1
    trace = [f"values={list(values)} domain_size={domain_size} m={m} mode={mode}"]

    if values[0] >= 2:
        sub = _gap_parameters(domain_size, m, (values[0] - 1,) + values[1:], mode)
        p = sub.k
        trace.append(f"p from recursion on {list(sub.values)}: {list(p)}")
    else:
        p = (1,) * (r + 1)
        trace.append("p = all ones (first value is 1; position 0 copies position 1)")

    k = [0] * (r + 1)
    l = [0] * (r + 1)
    split = [None] * (r + 1)
    for i in range(r, 0, -1):
        l[i] = p[i] + sum(comb(p[i], p[j]) * (k[j] - p[j]) for j in range(i + 1, r + 1))
        if values[i] == 1:
            k[i] = (l[i] + 1) * m
            trace.append(f"l[{i}]={l[i]} k[{i}]=(l+1)m={k[i]} k'[{i}]=1")
        else:
            sub_i = _gap_parameters(domain_size, m, (values[i], 1), mode)
            kdd, kd = sub_i.k
            split[i] = (kdd, kd)
            k[i] = kdd + comb(kdd, kd) * l[i]
            trace.append(
                f"l[{i}]={l[i]} split[{i}]=({kdd},{kd}) k[{i}]={kdd}+C({kdd},{kd})*{l[i]}={k[i]}"
            )
        if k[i] > PARAMETER_LIMIT:
            raise ResourceError(f"arity k[{i}]={k[i]} exceeds the limit {PARAMETER_LIMIT}")

    l[0] = p[0] + sum(comb(p[0], p[j]) * (k[j] - p[j]) for j in range(1, r + 1))
    s = sum(split[i][1] if split[i] else 1 for i in range(1, r + 1))
    raw = s + domain_size**s
    if mode == "conservative":
        raw = s + domain_size**s * l[0]
    k[0] = max(raw, k[1])
    trace.append(f"l[0]={l[0]} sum k'={s} k0_raw={raw} k[0]=max(raw,k[1])={k[0]}")
    if k[0] > PARAMETER_LIMIT:
        raise ResourceError(f"arity k[0]={k[0]} exceeds the limit {PARAMETER_LIMIT}")

    if any(a < b for a, b in zip(k, k[1:])):
        raise InvariantError(f"parameter recursion produced increasing arities {k}")
    if k[r] < m:
        raise InvariantError(f"final arity {k[r]} below m={m}")

    return GapParameters(
        domain_size=domain_size,
        m=m,
        values=values,
        k=tuple(k),
        l=tuple(l),
        p=tuple(p),
        split=tuple(split),
        mode=mode,
        k0_raw=raw,
        trace=tuple(trace),
    )


# -- extraction ---------------------------------------------------------------


@dataclass(frozen=True)
class Extraction:
    index: int
    assignment: Assignment

    def __iter__(self):
        return iter((self.index, self.assignment))


def extract_solution(seq: PasSequence, params: GapParameters, m: int) -> Extraction:
    """Recover (i, f) with f an m-solution of seq[i].

    Refuses inputs whose arities do not exactly match the parameter record,
    verifies consistency and the per-position value bounds up front, and
    post-verifies every result with is_m_solution before returning it.
    """
    if m != params.m:
        raise ParameterError(f"m={m} does not match the parameter record's m={params.m}")
    if seq.arities != params.k:
        raise StructuralError(
            f"sequence arities {seq.arities} do not match parameters {params.k}"
        )
    for i, system in enumerate(seq.systems):
        if pas_value(system) > params.values[i]:
            raise StructuralError(
                f"system {i} has value {pas_value(system)} > allowed {params.values[i]}"
            )
    cons = check_consistent(seq)
    if not cons:
        raise StructuralError(f"input sequence is inconsistent on chain {cons.chain}")
    return _extract(seq, params, m)


def _verified(seq: PasSequence, index: int, f: Assignment, m: int) -> Extraction:
    if not is_m_solution(f, seq[index], m):
        raise InvariantError(f"extracted assignment fails m-solution verification at {index}")
    return Extraction(index, f)


def _extract(seq: PasSequence, params: GapParameters, m: int) -> Extraction:
    r = len(seq) - 1
    v = seq[0].variables
    domain = seq[0].domain

    # Stage one: per position, either lift a selector (or split and recurse)
    # or record a subset on which every assignment has the avoidance property.
    blocked = {}
    for i in range(1, r + 1):
        system = seq[i]
        l_i = params.l[i]
        if params.values[i] == 1:
            selector, bad = _singleton_selector(system, l_i)
            if bad is None:
                s = solve_value_one(system, l_i, selector)
                if system.arity // (l_i + 1) < m:
                    raise InvariantError("selector lift solves for too small an m")
                return _verified(seq, i, s, m)
            blocked[i] = (bad,)
        else:
            sub = _gap_parameters(len(domain), m, (params.values[i], 1), params.mode)
            kdd, kd = sub.k
            if params.split[i] != (kdd, kd):
                raise InvariantError("split record disagrees with its recursion")
            selector, bad = _subset_selector(system, l_i, kd)
            if bad is None:
                refined, singles = split_to_value_one(system, l_i, kd, kdd, selector)
                inner = extract_solution(PasSequence([refined, singles]), sub, m)
                return _verified(seq, i, inner.assignment, m)
            blocked[i] = bad

    # Stage two: an assignment on the union of blocked subsets that the top
    # system extends densely.
    xs = tuple(sorted(set(itertools.chain.from_iterable(blocked.values()))))
    f = find_extendable_assignment(seq[0], xs, params.l[0])
    fmap = dict(zip(xs, f))

    # Stage three: refine every system down to the p-arities, choosing
    # extension sets through the avoidance/extension properties, strip the
    # extensions of f from position zero, and recurse on the reduced values.
    p = params.p
    ex = {i: {} for i in range(r + 1)}
    for i in range(r, 0, -1):
        x_i = blocked[i]
        f_i = tuple(fmap[x] for x in x_i)
        for y in itertools.combinations(v, p[i]):
            need = set(y)
            for j in range(i + 1, r + 1):
                for z in itertools.combinations(y, p[j]):
                    need |= set(ex[j][z])
            ex[i][y] = _avoiding_superset(seq[i], x_i, f_i, need)

    stripped = {}
    x_idx = xs
    for y in itertools.combinations(v, p[0]):
        need = set(y)
        for j in range(1, r + 1):
            for z in itertools.combinations(y, p[j]):
                need |= set(ex[j][z])
        u = _extending_superset(seq[0], x_idx, f, need)
        survivors = frozenset(
            _proj(g, u, y) for g in seq[0].entries[u] if _proj(g, u, x_idx) != f
        )
        if not survivors:
            raise InvariantError(
                "stripping emptied an entry; the input cannot have been a "
                f"consistent sequence within its value bounds (subset {y})"
            )
        stripped[y] = survivors

    head = Pas(v, domain, p[0], stripped)
    if pas_value(head) > params.values[0] - 1:
        raise InvariantError("stripped system exceeds its reduced value bound")
    tail = [refine(seq[i], p[i], ex[i]) for i in range(1, r + 1)]
    sub = _gap_parameters(len(domain), m, (params.values[0] - 1,) + params.values[1:], params.mode)
    if sub.k != p:
        raise InvariantError("refined arities disagree with the recursion record")
    inner = extract_solution(PasSequence([head] + tail), sub, m)
    return _verified(seq, inner.index, inner.assignment, m)


def _singleton_selector(system: Pas, l: int):
    """Per-variable search for a value with the negated avoidance property.

    Returns (selector, None) on full success or (partial, v) where v is the
    first variable for which every value has the avoidance property.
    """
    selector = {}
    for v in system.variables:
        found = None
        for a in system.domain:
            if not has_property(system, (v,), (a,), l, LocalProperty.AVOIDANCE):
                found = a
                break
        if found is None:
            return selector, v
        selector[v] = found
    return selector, None


def _subset_selector(system: Pas, l: int, size: int):
    """Per-subset analogue of _singleton_selector over all size-`size` subsets."""
    selector = {}
    for xs in itertools.combinations(system.variables, size):
        found = None
        for f in itertools.product(system.domain, repeat=size):
            if not has_property(system, xs, f, l, LocalProperty.AVOIDANCE):
                found = f
                break
        if found is None:
            return selector, xs
        selector[xs] = found
    return selector, None


def _avoiding_superset(system: Pas, xs: tuple, f: tuple, need: set) -> tuple:
    """Lexicographically-first arity-sized superset of X union `need` none of
    whose entry elements extends f on X."""
    base = set(xs) | set(need)
    for u in itertools.combinations(system.variables, system.arity):
        if not base <= set(u):
            continue
        if all(_proj(g, u, xs) != f for g in system.entries[u]):
            return u
    raise InvariantError(f"no avoiding superset exists for {xs}; avoidance property broken")


def _extending_superset(system: Pas, xs: tuple, f: tuple, need: set) -> tuple:
    """Lexicographically-first arity-sized superset of X union `need` whose
    entry contains an extension of f on X."""
    base = set(xs) | set(need)
    for u in itertools.combinations(system.variables, system.arity):
        if not base <= set(u):
            continue
        if any(_proj(g, u, xs) == f for g in system.entries[u]):
            return u
    raise InvariantError(f"no extending superset exists for {xs}; extension property broken")


# -- exact instance-level value oracle ---------------------------------------


def csp_value_oracle(
    phi: Instance,
    side: RelationalStructure,
    k: Sequence[int],
    d: int,
    budget: int = DEFAULT_BUDGET,
) -> bool:
    """Exact decision: does a consistent sequence with arities `k`, entries
    drawn from partial solutions of phi, and entry sizes at most d exist?

    Enumerates candidate sequences by backtracking over (position, subset)
    slots in layer-major order, pruning a branch as soon as some fully decided
    chain admits no agreeing pair.
    """
    k = tuple(int(x) for x in k)
    if any(a < b for a, b in zip(k, k[1:])):
        raise InputError(f"arities {list(k)} must be non-increasing")
    v = phi.variables
    if k[0] > len(v):
        raise InputError("top arity exceeds the number of variables")

    partials = {}
    for size in sorted(set(k)):
        for u in itertools.combinations(v, size):
            sols = all_solutions(phi.induced(u), side, budget=budget)
            partials[u] = tuple(tuple(s.mapping[x] for x in u) for s in sols)

    slots = []
    for i, size in enumerate(k):
        for u in itertools.combinations(v, size):
            slots.append((i, u))

    candidates = []
    for i, u in slots:
        pool = partials[u]
        if not pool:
            return False
        options = [
            frozenset(combo)
            for size in range(1, min(d, len(pool)) + 1)
            for combo in itertools.combinations(pool, size)
        ]
        if len(options) > budget:
            raise ResourceError(f"value oracle slot with over {budget} candidate entries")
        candidates.append(options)

    slot_index = {su: n for n, su in enumerate(slots)}
    chains = []
    r = len(k) - 1

    def build(prefix):
        if len(prefix) == r + 1:
            chains.append(tuple(prefix))
            return
        pool = v if not prefix else prefix[-1]
        for u in itertools.combinations(pool, k[len(prefix)]):
            build(prefix + [u])

    build([])
    # A chain can only be judged once its last slot (layer-major order) is set.
    finish_at = {}
    for chain in chains:
        last = max(slot_index[(i, u)] for i, u in enumerate(chain))
        finish_at.setdefault(last, []).append(chain)

    chosen = [None] * len(slots)
    visited = [0]

    def consistent_chain(chain) -> bool:
        for i in range(len(chain)):
            gi = chosen[slot_index[(i, chain[i])]]
            for j in range(i + 1, len(chain)):
                gj = chosen[slot_index[(j, chain[j])]]
                down = {_proj(g, chain[i], chain[j]) for g in gi}
                if down & gj:
                    return True
        return False

    def search(n) -> bool:
        if n == len(slots):
            return True
        for option in candidates[n]:
            visited[0] += 1
            if visited[0] > budget:
                raise ResourceError(
                    f"value oracle visited over {budget} candidate entries"
                )
            chosen[n] = option
            if all(consistent_chain(c) for c in finish_at.get(n, ())):
                if search(n + 1):
                    return True
        chosen[n] = None
        return False

    return search(0)
