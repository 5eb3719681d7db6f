"""Instance-level reductions between promise CSPs.

The pipeline has two stages.  First the source instance is rewritten over its
bounded-size variable subsets: one variable per subset, whose values are the
partial solutions on that subset, renamed into a fixed label set C so that the
constraints become graphs of maps C -> C.  Second comes the long-code step:
every variable of the subset instance gets a cloud of positions indexed by the
functions C -> A, every constraint a cloud indexed by functions on its graph,
constraints force each cloud to behave like a function application compatible
with the target template, and merges identify variable-cloud positions with
the corresponding projection positions of constraint clouds.

The decoder walks the same data backwards: cloud functions are restricted to
their determining coordinates, re-indexed by partial solutions, pushed through
a set-valued chain-preserving table, and assembled into a sequence of partial
assignment systems from which the extraction machinery recovers a solution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .core import (
    Assignment,
    DEFAULT_BUDGET,
    Constraint,
    Instance,
    PcspTemplate,
    RelationalStructure,
    all_solutions,
    brute_force_solve,
    evaluate,
)
from .errors import (
    InputError,
    InvariantError,
    ParameterError,
    PromiseViolationError,
    ResourceError,
    StructuralError,
)
from .minion import (
    FiniteFunction,
    LazyPolymorphismSlice,
    decode_partial_map_constraint,
    is_polymorphism,
    minor,
    tuple_label,
)
from .pas import (
    GapParameters,
    Pas,
    PasSequence,
    check_consistent,
    extract_solution,
    gap_parameters,
    pas_value,
)

PAD_PREFIX = "~pad"


def _subset_name(subset) -> str:
    return ",".join(subset)


@dataclass(frozen=True)
class PsiVariable:
    name: str
    subset: tuple
    layers: tuple
    solutions: tuple  # partial solutions as value tuples, lexicographic
    sigma: dict  # value tuple -> C label

    def labels(self) -> tuple:
        """C labels actually used by this variable, sorted."""
        return tuple(sorted(self.sigma.values()))


@dataclass(frozen=True)
class PsiConstraint:
    u: str
    w: str
    cmap: dict  # C label -> C label, the renamed restriction map

    def graph(self) -> tuple:
        return tuple(sorted((a, b) for a, b in self.cmap.items()))


@dataclass(frozen=True)
class AuxiliaryInstance:
    """The subset instance: variables are subsets of the source variables,
    values are their partial solutions renamed into C, and constraints are
    graphs of the restriction maps."""

    k: tuple
    c_labels: tuple
    c_mode: str
    uniform_c_size: int
    source_variables: tuple
    variables: tuple  # PsiVariable, first-occurrence order
    constraints: tuple  # PsiConstraint

    def variable(self, name: str) -> PsiVariable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(name)


def build_auxiliary(
    phi: Instance,
    strict_side: RelationalStructure,
    k: Sequence[int],
    c_mode: str = "fitted",
    c_size: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
) -> AuxiliaryInstance:
    """Rewrite phi over its k_i-subsets with partial solutions renamed into C.

    In fitted mode |C| is the largest number of partial solutions any subset
    carries, which is the smallest C the renaming supports; uniform mode sizes C
    as |A|^k_0 independently of the instance, which is reported either way.
    An empty partial-solution set is a broken promise and is rejected.
    """
    k = tuple(int(x) for x in k)
    if any(a < b for a, b in zip(k, k[1:])):
        raise InputError(f"arities {list(k)} must be non-increasing")
    v = phi.variables
    if k[0] > len(v):
        raise InputError("top arity exceeds the number of variables; pad the instance first")

    order = []
    layer_map: dict = {}
    solutions: dict = {}
    for i, size in enumerate(k):
        for u in itertools.combinations(v, size):
            if u not in solutions:
                sols = all_solutions(phi.induced(u), strict_side, budget=budget)
                solutions[u] = tuple(tuple(s.mapping[x] for x in u) for s in sols)
                if not solutions[u]:
                    raise PromiseViolationError(
                        f"no partial solution on subset {_subset_name(u)}; "
                        "the strict side is unsolvable"
                    )
                order.append(u)
            layer_map.setdefault(u, []).append(i)

    fitted = max(len(solutions[u]) for u in order)
    uniform_size = len(strict_side.domain) ** k[0]
    if c_mode == "fitted":
        size = fitted
    elif c_mode == "uniform":
        size = uniform_size
    else:
        raise InputError(f"unknown C mode {c_mode!r}")
    if c_size is not None:
        if c_size < fitted:
            raise ParameterError(f"explicit |C|={c_size} is below the required {fitted}")
        size = c_size
    if size > budget:
        raise ResourceError(f"|C|={size} exceeds the budget of {budget}")
    width = len(str(size - 1))
    c_labels = tuple(f"c{i:0{width}d}" for i in range(size))

    variables = []
    by_name = {}
    for u in order:
        sigma = {g: c_labels[idx] for idx, g in enumerate(solutions[u])}
        var = PsiVariable(
            name=_subset_name(u),
            subset=u,
            layers=tuple(layer_map[u]),
            solutions=solutions[u],
            sigma=sigma,
        )
        variables.append(var)
        by_name[var.name] = var

    pairs = set()
    for i in range(len(k)):
        for j in range(i + 1, len(k)):
            for u in itertools.combinations(v, k[i]):
                for w in itertools.combinations(u, k[j]):
                    pairs.add((u, w))
    constraints = []
    for u, w in sorted(pairs):
        uvar, wvar = by_name[_subset_name(u)], by_name[_subset_name(w)]
        idx = [u.index(x) for x in w]
        cmap = {
            uvar.sigma[g]: wvar.sigma[tuple(g[p] for p in idx)] for g in uvar.solutions
        }
        constraints.append(PsiConstraint(uvar.name, wvar.name, cmap))

    return AuxiliaryInstance(
        k=k,
        c_labels=c_labels,
        c_mode=c_mode,
        uniform_c_size=uniform_size,
        source_variables=v,
        variables=tuple(variables),
        constraints=tuple(constraints),
    )


# -- clouds and the long-code step ---------------------------------------------


@dataclass(frozen=True)
class Cloud:
    id: str
    kind: str  # "variable" or "constraint"
    ref: str  # psi variable name, or "u>w" for a constraint
    index_labels: tuple  # coordinates of the positions: C labels or graph pairs

    def size(self, alphabet: int) -> int:
        return alphabet ** len(self.index_labels)


@dataclass(frozen=True)
class CloudLayout:
    """Everything the decoder needs: the subset instance, the clouds, and the
    union-find representatives of merged positions."""

    target: PcspTemplate
    aux: Optional[AuxiliaryInstance]
    clouds: tuple
    reps: dict  # position name -> representative, identity entries omitted
    padding: tuple  # variables added to reach the top arity
    gadget: bool = False
    gadget_reason: str = ""

    def rep(self, position: str) -> str:
        return self.reps.get(position, position)

    def cloud_by_ref(self, kind: str, ref: str) -> Cloud:
        for cloud in self.clouds:
            if cloud.kind == kind and cloud.ref == ref:
                return cloud
        raise KeyError((kind, ref))

    def position(self, cloud: Cloud, index: int) -> str:
        width = len(str(cloud.size(len(self.target.strict.domain)) - 1))
        return f"{cloud.id}p{index:0{width}d}"

    def to_payload(self) -> dict:
        payload = {
            "target": self.target.to_payload(),
            "gadget": self.gadget,
            "gadget_reason": self.gadget_reason,
            "padding": list(self.padding),
            "clouds": [
                {
                    "id": c.id,
                    "kind": c.kind,
                    "ref": c.ref,
                    "index_labels": [list(x) if isinstance(x, tuple) else x for x in c.index_labels],
                }
                for c in self.clouds
            ],
            "reps": dict(self.reps),
        }
        if self.aux is not None:
            payload["aux"] = {
                "k": list(self.aux.k),
                "c_labels": list(self.aux.c_labels),
                "c_mode": self.aux.c_mode,
                "uniform_c_size": self.aux.uniform_c_size,
                "source_variables": list(self.aux.source_variables),
                "variables": [
                    {
                        "name": var.name,
                        "subset": list(var.subset),
                        "layers": list(var.layers),
                        "solutions": [list(g) for g in var.solutions],
                        "sigma": {tuple_label(g): c for g, c in var.sigma.items()},
                    }
                    for var in self.aux.variables
                ],
                "constraints": [
                    {"u": c.u, "w": c.w, "map": dict(c.cmap)} for c in self.aux.constraints
                ],
            }
        return payload

    @staticmethod
    def from_payload(payload: Mapping) -> "CloudLayout":
        aux = None
        if "aux" in payload:
            data = payload["aux"]
            variables = []
            for item in data["variables"]:
                solutions = tuple(tuple(g) for g in item["solutions"])
                sigma = {g: item["sigma"][tuple_label(g)] for g in solutions}
                variables.append(
                    PsiVariable(
                        name=item["name"],
                        subset=tuple(item["subset"]),
                        layers=tuple(item["layers"]),
                        solutions=solutions,
                        sigma=sigma,
                    )
                )
            aux = AuxiliaryInstance(
                k=tuple(data["k"]),
                c_labels=tuple(data["c_labels"]),
                c_mode=data["c_mode"],
                uniform_c_size=data["uniform_c_size"],
                source_variables=tuple(data["source_variables"]),
                variables=tuple(variables),
                constraints=tuple(
                    PsiConstraint(c["u"], c["w"], dict(c["map"])) for c in data["constraints"]
                ),
            )
        clouds = tuple(
            Cloud(
                id=c["id"],
                kind=c["kind"],
                ref=c["ref"],
                index_labels=tuple(
                    tuple(x) if isinstance(x, list) else x for x in c["index_labels"]
                ),
            )
            for c in payload["clouds"]
        )
        return CloudLayout(
            target=PcspTemplate.from_payload(payload["target"]),
            aux=aux,
            clouds=clouds,
            reps=dict(payload["reps"]),
            padding=tuple(payload["padding"]),
            gadget=payload["gadget"],
            gadget_reason=payload.get("gadget_reason", ""),
        )


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x: str) -> str:
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while self.parent.get(x, x) != x:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra


def _function_index(digits: Sequence[int], base: int) -> int:
    idx = 0
    for d in digits:
        idx = idx * base + d
    return idx


def longcode_reduce(
    aux: AuxiliaryInstance,
    target: PcspTemplate,
    budget: int = DEFAULT_BUDGET,
    padding: Sequence[str] = (),
) -> tuple:
    """Emit the long-code instance of the target promise CSP plus its layout.

    Per variable cloud (positions: functions C -> A) and per constraint cloud
    (positions: functions on the constraint's graph) and per target relation,
    one constraint for every matrix of relation tuples indexed by the cloud's
    coordinates: the scope collects the positions given by the matrix rows.
    Merges identify each variable-cloud position f with the constraint-cloud
    position f composed with the corresponding graph projection; scopes then
    reference the lexicographically least member of each merge class.
    """
    a1 = target.strict.domain
    base = len(a1)
    digit = {atom: i for i, atom in enumerate(a1)}

    vwidth = len(str(max(len(aux.variables) - 1, 0)))
    ewidth = len(str(max(len(aux.constraints) - 1, 0)))
    clouds = []
    cloud_of_var = {}
    cloud_of_con = {}
    for n, var in enumerate(aux.variables):
        cloud = Cloud(
            id=f"u{n:0{vwidth}d}", kind="variable", ref=var.name, index_labels=aux.c_labels
        )
        clouds.append(cloud)
        cloud_of_var[var.name] = cloud
    for n, con in enumerate(aux.constraints):
        cloud = Cloud(
            id=f"e{n:0{ewidth}d}",
            kind="constraint",
            ref=f"{con.u}>{con.w}",
            index_labels=con.graph(),
        )
        clouds.append(cloud)
        cloud_of_con[(con.u, con.w)] = cloud

    total_positions = 0
    total_matrices = 0
    for cloud in clouds:
        size = cloud.size(base)
        total_positions += size
        for rel in target.strict.relations.values():
            total_matrices += len(rel.tuples) ** len(cloud.index_labels)
    if total_positions > budget or total_matrices > budget:
        raise ResourceError(
            f"cloud enumeration needs {total_positions} positions and "
            f"{total_matrices} matrices, over the budget of {budget}"
        )

    layout_stub = CloudLayout(
        target=target,
        aux=aux,
        clouds=tuple(clouds),
        reps={},
        padding=tuple(padding),
    )

    uf = _UnionFind()
    cpos = {c: i for i, c in enumerate(aux.c_labels)}
    for con in aux.constraints:
        econ = cloud_of_con[(con.u, con.w)]
        graph = econ.index_labels
        for side_idx, varname in ((0, con.u), (1, con.w)):
            vcloud = cloud_of_var[varname]
            perm = [cpos[pair[side_idx]] for pair in graph]
            for fidx, fdigits in enumerate(
                itertools.product(range(base), repeat=len(aux.c_labels))
            ):
                gidx = _function_index([fdigits[p] for p in perm], base)
                uf.union(
                    layout_stub.position(vcloud, fidx), layout_stub.position(econ, gidx)
                )

    emitted = set()
    for cloud in clouds:
        nlabels = len(cloud.index_labels)
        for rel_name, rel in sorted(target.strict.relations.items()):
            cols = rel.sorted_tuples
            for matrix in itertools.product(cols, repeat=nlabels):
                scope = []
                for row in range(rel.arity):
                    digits = [digit[matrix[c][row]] for c in range(nlabels)]
                    pos = layout_stub.position(cloud, _function_index(digits, base))
                    scope.append(uf.find(pos))
                emitted.add((rel_name, tuple(scope)))

    roots = set()
    for cloud in clouds:
        size = cloud.size(base)
        for idx in range(size):
            roots.add(uf.find(layout_stub.position(cloud, idx)))

    reps = {x: uf.find(x) for x in uf.parent}
    reps = {x: r for x, r in reps.items() if x != r}
    layout = CloudLayout(
        target=target,
        aux=aux,
        clouds=tuple(clouds),
        reps=reps,
        padding=tuple(padding),
    )
    instance = Instance(
        sorted(roots),
        [Constraint(scope, rel_name) for rel_name, scope in sorted(emitted)],
    )
    return instance, layout


# -- the full pipeline ----------------------------------------------------------


@dataclass(frozen=True)
class PipelineResult:
    instance: Instance
    layout: CloudLayout
    params: GapParameters


def _pad_instance(phi: Instance, up_to: int) -> tuple:
    if len(phi.variables) >= up_to:
        return phi, ()
    pads = tuple(f"{PAD_PREFIX}{i}" for i in range(up_to - len(phi.variables)))
    for p in pads:
        if p in phi.variables:
            raise InputError(f"variable {p!r} collides with padding names")
    return Instance(phi.variables + pads, phi.constraints), pads


def find_unsolvable_gadget(
    target: PcspTemplate, budget: int = DEFAULT_BUDGET
) -> Optional[Instance]:
    """Smallest instance of the target with an unsolvable relaxed side, if one
    exists among instances with at most two variables and three constraints."""
    for nvars in (1, 2):
        variables = [f"z{i}" for i in range(nvars)]
        pool = []
        for name, rel in sorted(target.strict.relations.items()):
            for scope in itertools.product(variables, repeat=rel.arity):
                pool.append(Constraint(scope, name))
        for count in (1, 2, 3):
            for combo in itertools.combinations(pool, count):
                inst = Instance(variables, combo)
                if brute_force_solve(inst, target.relaxed, budget=budget) is None:
                    return inst
    return None


def pipeline_reduce(
    phi: Instance,
    source: PcspTemplate,
    target: PcspTemplate,
    dr_table,
    params: Optional[GapParameters] = None,
    c_mode: str = "fitted",
    budget: int = DEFAULT_BUDGET,
) -> PipelineResult:
    """Reduce an instance of the source promise CSP to one of the target.

    The arity sequence comes from the extraction parameters for the relaxed
    source domain at the table's (d, r); instances smaller than the top arity
    are padded with unconstrained variables.  A detected promise violation
    (the strict side has no partial solutions at some subset) certifies the
    input as a no-instance, which is mapped to a fixed relaxed-unsolvable
    gadget of the target.
    """
    m = max(rel.arity for rel in source.strict.relations.values())
    if params is None:
        params = gap_parameters(
            len(source.relaxed.domain), m, (dr_table.d,) * (dr_table.r + 1)
        )
    else:
        expected = (len(source.relaxed.domain), m, (dr_table.d,) * (dr_table.r + 1))
        got = (params.domain_size, params.m, params.values)
        if expected != got:
            raise ParameterError(f"parameter record {got} does not match the pipeline {expected}")

    padded, pads = _pad_instance(phi, params.k[0])
    try:
        aux = build_auxiliary(padded, source.strict, params.k, c_mode=c_mode, budget=budget)
    except PromiseViolationError as exc:
        gadget = find_unsolvable_gadget(target, budget=budget)
        if gadget is None:
            raise InputError(
                "the input is a no-instance but the target has no small "
                "relaxed-unsolvable gadget to map it to"
            ) from exc
        layout = CloudLayout(
            target=target,
            aux=None,
            clouds=(),
            reps={},
            padding=pads,
            gadget=True,
            gadget_reason=str(exc),
        )
        return PipelineResult(gadget, layout, params)

    instance, layout = longcode_reduce(aux, target, budget=budget, padding=pads)
    return PipelineResult(instance, layout, params)


# -- decoding --------------------------------------------------------------------


def read_cloud_functions(
    assignment: Mapping[str, str], layout: CloudLayout, out_domain: Sequence[str]
) -> dict:
    """Collect, per subset variable, the function its cloud spells out under an
    assignment of the long-code instance."""
    if layout.gadget:
        raise InputError("a gadget layout has no clouds to read")
    a1 = layout.target.strict.domain
    out = {}
    for cloud in layout.clouds:
        if cloud.kind != "variable":
            continue
        table = []
        for idx in range(cloud.size(len(a1))):
            pos = layout.rep(layout.position(cloud, idx))
            if pos not in assignment:
                raise InputError(f"assignment is missing position {pos!r}")
            table.append(assignment[pos])
        out[cloud.ref] = FiniteFunction(cloud.index_labels, a1, out_domain, table)
    return out


def lift_strict_solution(h, layout: CloudLayout) -> Assignment:
    """The canonical strict solution of the long-code instance induced by a
    strict solution of the (padded) source: every cloud becomes the evaluation
    map at the encoded partial solution."""
    if layout.gadget:
        raise InputError("cannot lift through a gadget layout")
    aux = layout.aux
    hmap = h.mapping if isinstance(h, Assignment) else dict(h)
    star = {}
    for var in aux.variables:
        restriction = tuple(hmap[x] for x in var.subset)
        if restriction not in var.sigma:
            raise InputError(f"assignment is not a partial solution on {var.name}")
        star[var.name] = var.sigma[restriction]

    values = {}

    def put(position, value):
        rep = layout.rep(position)
        if values.setdefault(rep, value) != value:
            raise InvariantError("merge classes received clashing lifted values")

    base = len(layout.target.strict.domain)
    a1 = layout.target.strict.domain
    for cloud in layout.clouds:
        if cloud.kind == "variable":
            pick = cloud.index_labels.index(star[cloud.ref])
        else:
            uname, wname = cloud.ref.split(">")
            pair = (star[uname], star[wname])
            pick = cloud.index_labels.index(pair)
        for idx, args in enumerate(itertools.product(a1, repeat=len(cloud.index_labels))):
            put(layout.position(cloud, idx), args[pick])
    return Assignment(values, side="strict")


def decode_relaxed_solution(
    s: Mapping[str, FiniteFunction],
    layout: CloudLayout,
    dr_table,
    phi: Instance,
    source: PcspTemplate,
    budget: int = DEFAULT_BUDGET,
) -> PasSequence:
    """Turn a solution of the subset instance over the lifted side into a
    sequence of partial assignment systems for the relaxed source.

    Every step the construction promises is re-verified here: restriction
    uniqueness, the minor chain along every constraint, membership of the
    decoded functions in the target's polymorphisms, entries being partial
    solutions, the value bound, and consistency of the final sequence.  Any
    breach aborts loudly.
    """
    if layout.gadget:
        raise InputError("a gadget layout cannot be decoded")
    aux = layout.aux
    padded, pads = _pad_instance(phi, aux.k[0])
    if pads != layout.padding:
        raise InputError("instance does not match the layout's padding record")
    if padded.variables != aux.source_variables:
        raise InputError("instance variables do not match the layout")

    target_polys = LazyPolymorphismSlice(layout.target, budget=budget)

    # Restriction step: each subset variable's function must be determined by
    # its own labels, and the restrictions must commute with every constraint.
    decoded: dict = {}
    for con in aux.constraints:
        uvar, wvar = aux.variable(con.u), aux.variable(con.w)
        if con.u not in s or con.w not in s:
            raise InputError(f"solution is missing subset variable {con.u!r} or {con.w!r}")
        pair = decode_partial_map_constraint(
            s[con.u], s[con.w], uvar.labels(), wvar.labels(), con.cmap, target_polys
        )
        if pair is None:
            raise InputError(
                f"constraint {con.u}->{con.w} is not satisfied in the lifted relation"
            )
        t_u, t_w = pair
        for name, t in ((con.u, t_u), (con.w, t_w)):
            if decoded.setdefault(name, t) != t:
                raise InvariantError(f"two constraints decoded {name} differently")

    for var in aux.variables:
        if var.name not in decoded:
            raise InvariantError(f"subset variable {var.name} is unconstrained")

    # Re-index from C labels to partial-solution labels.
    functions: dict = {}
    for var in aux.variables:
        label_of = {var.sigma[g]: tuple_label(g) for g in var.solutions}
        sol_labels = tuple(sorted(label_of.values()))
        functions[var.name] = minor(decoded[var.name], label_of, target=sol_labels)
        if not is_polymorphism(functions[var.name], layout.target):
            raise InvariantError(f"re-indexed function at {var.name} left the polymorphisms")

    for con in aux.constraints:
        uvar, wvar = aux.variable(con.u), aux.variable(con.w)
        idx = [uvar.subset.index(x) for x in wvar.subset]
        restriction = {
            tuple_label(g): tuple_label(tuple(g[p] for p in idx)) for g in uvar.solutions
        }
        wanted = minor(
            functions[con.u],
            restriction,
            target=functions[con.w].arity_set,
        )
        if wanted != functions[con.w]:
            raise InvariantError(f"minor chain broken along {con.u}->{con.w}")

    # Push through the table and evaluate on the partial-solution matrices.
    relaxed_domain = source.relaxed.domain
    entries_by_layer: dict = {i: {} for i in range(len(aux.k))}
    d_bound = dr_table.d
    for var in aux.variables:
        t = functions[var.name]
        if not dr_table.covers(t):
            raise InputError(
                f"table does not cover the decoded function of arity {t.arity_set}"
            )
        images = dr_table.image(t)
        # rows[x] maps each partial solution (as an arity label) to its value at x.
        rows = {
            x: {tuple_label(g): g[var.subset.index(x)] for g in var.solutions}
            for x in var.subset
        }
        produced = set()
        for q in images:
            if q.arity_set != t.arity_set:
                raise StructuralError("table image changes the arity set")
            value_tuple = tuple(q.apply(rows[x]) for x in var.subset)
            produced.add(value_tuple)
        if len(produced) > d_bound:
            raise InvariantError("entry exceeds the table's width bound")
        for x_tuple in produced:
            check = evaluate(
                padded.induced(var.subset),
                source.relaxed,
                Assignment(dict(zip(var.subset, x_tuple))),
            )
            if check:
                raise InvariantError(
                    f"decoded entry at {var.name} violates relaxed constraints {check}"
                )
        for layer in var.layers:
            entries_by_layer[layer][var.subset] = frozenset(produced)

    systems = [
        Pas(padded.variables, relaxed_domain, aux.k[i], entries_by_layer[i])
        for i in range(len(aux.k))
    ]
    seq = PasSequence(systems)
    if max(pas_value(sys_) for sys_ in systems) > d_bound:
        raise InvariantError("decoded sequence exceeds the width bound")
    cons = check_consistent(seq)
    if not cons:
        raise InvariantError(f"decoded sequence is inconsistent on chain {cons.chain}")
    return seq


def recover_source_solution(
    assignment: Mapping[str, str],
    layout: CloudLayout,
    dr_table,
    phi: Instance,
    source: PcspTemplate,
    params: Optional[GapParameters] = None,
    budget: int = DEFAULT_BUDGET,
) -> Assignment:
    """Full completeness path: read the clouds of a relaxed solution of the
    long-code instance, decode them to a sequence of systems, extract an
    assignment, and verify it solves the relaxed source."""
    m = max(rel.arity for rel in source.strict.relations.values())
    if params is None:
        params = gap_parameters(
            len(source.relaxed.domain), m, (dr_table.d,) * (dr_table.r + 1)
        )
    s = read_cloud_functions(assignment, layout, layout.target.relaxed.domain)
    seq = decode_relaxed_solution(s, layout, dr_table, phi, source, budget=budget)
    extraction = extract_solution(seq, params, m)
    solution = extraction.assignment.restrict(phi.variables)
    solution = Assignment(solution.mapping, side="relaxed")
    if evaluate(phi, source.relaxed, solution):
        raise InvariantError("recovered assignment fails the relaxed source instance")
    return solution
