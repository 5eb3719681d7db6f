"""Layered label cover instances and the subset reduction from bounded-scope CSPs.

Variables live in ordered layers; constraints are total maps that only point
from lower to higher layer index, at most one per ordered pair.  A chain picks
one variable per layer with every pairwise constraint present; a set-valued
assignment weakly satisfies a chain when at least one of those constraint maps
carries its source set into the target set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .core import DEFAULT_BUDGET, Instance, RelationalStructure, all_solutions
from .errors import InputError, InvariantError, ResourceError, StructuralError
from .pas import Pas, PasSequence, check_consistent


@dataclass(frozen=True)
class LlcInstance:
    layers: tuple  # tuple of tuples of variable names
    domains: dict  # variable -> tuple of atoms (possibly empty)
    constraints: dict  # (x, y) -> dict mapping A_x -> A_y
    has_empty_domain: bool = False

    def __init__(self, layers, domains, constraints, has_empty_domain=None):
        layers = tuple(tuple(layer) for layer in layers)
        seen = set()
        for layer in layers:
            for x in layer:
                if x in seen:
                    raise InputError(f"variable {x!r} appears in two layers")
                seen.add(x)
        domains = {x: tuple(domains[x]) for layer in layers for x in layer}
        index = {x: i for i, layer in enumerate(layers) for x in layer}
        cmap = {}
        for (x, y), psi in dict(constraints).items():
            if index[x] >= index[y]:
                raise StructuralError(f"constraint {x}->{y} does not go to a higher layer")
            psi = dict(psi)
            if set(psi) != set(domains[x]):
                raise InputError(f"constraint {x}->{y} is not total on the source domain")
            for value in psi.values():
                if value not in domains[y]:
                    raise InputError(f"constraint {x}->{y} leaves the target domain")
            cmap[(x, y)] = psi
        empty = any(not domains[x] for x in domains)
        if has_empty_domain is not None and bool(has_empty_domain) != empty:
            raise InputError("has_empty_domain flag disagrees with the domains")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "domains", domains)
        object.__setattr__(self, "constraints", cmap)
        object.__setattr__(self, "has_empty_domain", empty)

    def layer_of(self, x: str) -> int:
        for i, layer in enumerate(self.layers):
            if x in layer:
                return i
        raise KeyError(x)

    def to_payload(self) -> dict:
        return {
            "layers": [list(layer) for layer in self.layers],
            "domains": {x: list(dom) for x, dom in self.domains.items()},
            "constraints": [
                {"from": x, "to": y, "map": dict(psi)}
                for (x, y), psi in sorted(self.constraints.items())
            ],
            "has_empty_domain": self.has_empty_domain,
        }

    @staticmethod
    def from_payload(payload: Mapping) -> "LlcInstance":
        return LlcInstance(
            payload["layers"],
            payload["domains"],
            {(c["from"], c["to"]): c["map"] for c in payload["constraints"]},
            payload.get("has_empty_domain"),
        )


@dataclass(frozen=True)
class DAssignment:
    """Maps each variable to a nonempty subset of its domain of size <= d."""

    choices: tuple

    def __init__(self, choices: Mapping[str, Sequence[str]]):
        normalized = tuple(
            (x, tuple(sorted(set(vals)))) for x, vals in sorted(dict(choices).items())
        )
        for x, vals in normalized:
            if not vals:
                raise InputError(f"choice set for {x!r} is empty")
        object.__setattr__(self, "choices", normalized)

    @property
    def mapping(self) -> dict:
        return {x: set(vals) for x, vals in self.choices}

    @property
    def width(self) -> int:
        return max(len(vals) for _, vals in self.choices)

    def to_payload(self) -> dict:
        return {"choices": {x: list(vals) for x, vals in self.choices}}

    @staticmethod
    def from_payload(payload: Mapping) -> "DAssignment":
        return DAssignment(payload["choices"])


def enumerate_chains(inst: LlcInstance) -> tuple:
    """All cross-layer tuples with every pairwise constraint present."""
    chains = []

    def extend(prefix):
        i = len(prefix)
        if i == len(inst.layers):
            chains.append(tuple(prefix))
            return
        for x in inst.layers[i]:
            if all((p, x) in inst.constraints for p in prefix):
                extend(prefix + [x])

    extend([])
    return tuple(chains)


def weakly_satisfies(f: DAssignment, chain: Sequence[str], inst: LlcInstance) -> bool:
    """Does some constraint along the chain carry f's source set into the target?"""
    mapping = f.mapping
    for i in range(len(chain)):
        for j in range(i + 1, len(chain)):
            psi = inst.constraints[(chain[i], chain[j])]
            image = {psi[a] for a in mapping[chain[i]]}
            if image & mapping[chain[j]]:
                return True
    return False


def _llc_variable(layer: int, subset) -> str:
    return f"L{layer}|{','.join(subset)}"


def _encode_partial(values) -> str:
    return ",".join(values)


def _decode_partial(atom: str) -> tuple:
    return tuple(atom.split(","))


def reduce_mcsp_to_llc(
    phi: Instance,
    side: RelationalStructure,
    k: Sequence[int],
    budget: int = DEFAULT_BUDGET,
) -> LlcInstance:
    """Layer i holds one variable per k_i-subset of the original variables,
    whose domain is the set of partial solutions on that subset; each nested
    pair across layers gets the restriction map as its constraint.

    The reduction is total: subsets with no partial solution produce empty
    domains and the instance is flagged instead of rejected.
    """
    k = tuple(int(x) for x in k)
    if any(a < b for a, b in zip(k, k[1:])):
        raise InputError(f"arities {list(k)} must be non-increasing")
    v = phi.variables
    if k[0] > len(v):
        raise InputError("top arity exceeds the number of variables")

    solutions = {}
    layers = []
    domains = {}
    for i, size in enumerate(k):
        layer = []
        for u in itertools.combinations(v, size):
            if u not in solutions:
                sols = all_solutions(phi.induced(u), side, budget=budget)
                solutions[u] = tuple(tuple(s.mapping[x] for x in u) for s in sols)
            name = _llc_variable(i, u)
            layer.append(name)
            domains[name] = tuple(_encode_partial(g) for g in solutions[u])
        layers.append(tuple(layer))

    constraints = {}
    for i in range(len(k)):
        for j in range(i + 1, len(k)):
            for u in itertools.combinations(v, k[i]):
                for w in itertools.combinations(u, k[j]):
                    idx = [u.index(x) for x in w]
                    psi = {
                        _encode_partial(g): _encode_partial(tuple(g[p] for p in idx))
                        for g in solutions[u]
                    }
                    constraints[(_llc_variable(i, u), _llc_variable(j, w))] = psi

    return LlcInstance(layers, domains, constraints)


@dataclass(frozen=True)
class LayeredValueResult:
    """Exact combinatorial layered value up to a cap; value is None when every
    width up to the cap fails."""

    value: Optional[int]
    witness: Optional[DAssignment]

    def __bool__(self):
        return self.value is not None


def combinatorial_layered_value(
    inst: LlcInstance, max_d: int, budget: int = DEFAULT_BUDGET
) -> LayeredValueResult:
    """Smallest d <= max_d admitting a d-assignment that weakly satisfies every
    chain, found by exhaustive backtracking."""
    if inst.has_empty_domain:
        return LayeredValueResult(None, None)
    chains = enumerate_chains(inst)
    order = [x for layer in inst.layers for x in layer]
    position = {x: n for n, x in enumerate(order)}
    finish_at = {}
    for chain in chains:
        last = max(position[x] for x in chain)
        finish_at.setdefault(last, []).append(chain)

    for d in range(1, max_d + 1):
        options = {}
        for x in order:
            dom = inst.domains[x]
            opts = [
                frozenset(combo)
                for size in range(1, min(d, len(dom)) + 1)
                for combo in itertools.combinations(dom, size)
            ]
            if len(opts) > budget:
                raise ResourceError(
                    f"layered value search at d={d} exceeds the budget of {budget}"
                )
            options[x] = opts

        chosen = {}
        visited = [0]

        def satisfied(chain) -> bool:
            for i in range(len(chain)):
                for j in range(i + 1, len(chain)):
                    psi = inst.constraints[(chain[i], chain[j])]
                    image = {psi[a] for a in chosen[chain[i]]}
                    if image & chosen[chain[j]]:
                        return True
            return False

        def search(n) -> bool:
            if n == len(order):
                return True
            x = order[n]
            for opt in options[x]:
                visited[0] += 1
                if visited[0] > budget:
                    raise ResourceError(
                        f"layered value search visited over {budget} nodes"
                    )
                chosen[x] = opt
                if all(satisfied(c) for c in finish_at.get(n, ())):
                    if search(n + 1):
                        return True
            chosen.pop(x, None)
            return False

        if search(0):
            witness = DAssignment({x: chosen[x] for x in order})
            return LayeredValueResult(d, witness)
    return LayeredValueResult(None, None)


def d_assignment_to_pas(
    f: DAssignment,
    phi: Instance,
    side: RelationalStructure,
    k: Sequence[int],
    budget: int = DEFAULT_BUDGET,
) -> PasSequence:
    """Read a weakly satisfying d-assignment of the reduced instance back as a
    sequence of partial assignment systems over the original variables.

    The reduced instance is rebuilt deterministically from (phi, k); the
    assignment must weakly satisfy all of its chains.
    """
    inst = reduce_mcsp_to_llc(phi, side, k, budget=budget)
    if inst.has_empty_domain:
        raise InputError("the reduced instance has an empty domain; no assignment exists")
    mapping = f.mapping
    for x in inst.domains:
        if x not in mapping:
            raise InputError(f"assignment is missing variable {x!r}")
        if not set(mapping[x]) <= set(inst.domains[x]):
            raise InputError(f"assignment for {x!r} leaves its domain")
    for chain in enumerate_chains(inst):
        if not weakly_satisfies(f, chain, inst):
            raise InputError(f"assignment fails weak satisfaction on chain {chain}")

    v = phi.variables
    systems = []
    for i, size in enumerate(k):
        entries = {}
        for u in itertools.combinations(v, size):
            name = _llc_variable(i, u)
            entries[u] = frozenset(_decode_partial(atom) for atom in mapping[name])
        systems.append(Pas(v, side.domain, size, entries))
    seq = PasSequence(systems)
    cons = check_consistent(seq)
    if not cons:
        raise InvariantError(
            f"a weakly satisfying assignment decoded to an inconsistent sequence ({cons.chain})"
        )
    return seq
