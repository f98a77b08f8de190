"""Finite idempotent algebras as operation tables, clone slices, and
satisfiability of identity systems by witness search.

Tables are flat tuples in row-major order with the last argument varying
fastest.  Everything is immutable; witness search is deterministic (first
witness in slice order, projections before composite operations).
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from . import reducts
from .terms import App, Partition, Symbol, System, Term, TermUniverse, Var


@dataclass(frozen=True)
class OperationTable:
    name: str
    size: int
    arity: int
    table: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.table) != self.size**self.arity:
            raise ValueError(f"table for {self.name} has wrong length")
        if any(v < 0 or v >= self.size for v in self.table):
            raise ValueError(f"table for {self.name} has out-of-range values")

    def apply(self, args: Sequence[int]) -> int:
        idx = 0
        for a in args:
            idx = idx * self.size + a
        return self.table[idx]

    def is_idempotent(self) -> bool:
        return all(self.apply((a,) * self.arity) == a for a in range(self.size))


def projection(size: int, arity: int, position: int) -> OperationTable:
    table = tuple(
        args[position] for args in itertools.product(range(size), repeat=arity)
    )
    return OperationTable(f"pi{position + 1}", size, arity, table)


def table_from_function(name: str, size: int, arity: int, fn) -> OperationTable:
    table = tuple(fn(*args) for args in itertools.product(range(size), repeat=arity))
    return OperationTable(name, size, arity, table)


@dataclass(frozen=True)
class FiniteAlgebra:
    """Finite universe with idempotent basic operations.

    affine_reduct_modulus marks the module-reduct algebras, whose clone slices
    are written down directly instead of recomputed by fixed-point iteration
    (affine operations compose to affine operations, so the full inventory of
    idempotent affine operations is already closed; the closure property is
    exercised by randomised tests).
    """

    size: int
    ops: tuple[OperationTable, ...]
    affine_reduct_modulus: Optional[int] = None

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError("algebras need at least two elements")
        for op in self.ops:
            if op.size != self.size:
                raise ValueError(f"operation {op.name} over wrong universe")
            if not op.is_idempotent():
                raise ValueError(f"basic operation {op.name} is not idempotent")

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "ops": [
                {"name": op.name, "arity": op.arity, "table": list(op.table)}
                for op in self.ops
            ],
        }


def semilattice_b() -> FiniteAlgebra:
    """The two-element meet semilattice, with 0 as the absorbing bottom."""
    return FiniteAlgebra(2, (table_from_function("meet", 2, 2, min),))


def majority_a(m: int = 3) -> FiniteAlgebra:
    """Majority algebra: f returns the repeated argument, else the first one."""
    if m < 2:
        raise ValueError("majority algebra needs at least two elements")

    def f(a: int, b: int, c: int) -> int:
        return b if b == c else a

    return FiniteAlgebra(m, (table_from_function("f", m, 3, f),))


def reduct_algebra(n: int) -> FiniteAlgebra:
    """Full idempotent reduct of a module over Z_n: every ternary idempotent
    affine operation is a basic operation (n**2 of them)."""
    if n < 2:
        raise ValueError("modulus must be at least 2")
    ops = []
    for term in reducts.affine_terms(n, 3):
        ops.append(
            table_from_function(str(term), n, 3, lambda a, b, c, t=term: t.evaluate((a, b, c)))
        )
    return FiniteAlgebra(n, tuple(ops), affine_reduct_modulus=n)


# ---------------------------------------------------------------------------
# Clone slices
# ---------------------------------------------------------------------------


class CloneCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CloneSlice:
    arity: int
    ops: tuple[OperationTable, ...]

    def __len__(self) -> int:
        return len(self.ops)

    def tables(self) -> set[tuple[int, ...]]:
        return {op.table for op in self.ops}

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "count": len(self.ops),
            "ops": [
                {"name": op.name, "arity": op.arity, "table": list(op.table)}
                for op in self.ops
            ],
        }


def _compose(g: OperationTable, hs: Sequence[OperationTable], size: int, arity: int) -> tuple[int, ...]:
    """Table of g(h_1, ..., h_r) as an arity-ary operation."""
    values = []
    for idx in range(size**arity):
        inner = tuple(h.table[idx] for h in hs)
        values.append(g.apply(inner))
    return tuple(values)


def _affine_slice(n: int, arity: int, cap: int) -> CloneSlice:
    """Term operations of a module reduct: all idempotent affine operations."""
    if n**(arity - 1) > cap:
        raise CloneCapExceeded(f"clone slice exceeds cap {cap} for arity {arity}")
    named = []
    for term in reducts.affine_terms(n, arity):
        table = tuple(
            term.evaluate(args) for args in itertools.product(range(n), repeat=arity)
        )
        named.append((table, str(term)))
    projections = [projection(n, arity, i) for i in range(arity)]
    proj_tables = {op.table for op in projections}
    rest = sorted((t, name) for t, name in named if t not in proj_tables)
    ordered = projections + [OperationTable(name, n, arity, t) for t, name in rest]
    return CloneSlice(arity, tuple(ordered))


@functools.lru_cache(maxsize=None)
def clone_slice(algebra: FiniteAlgebra, arity: int, cap: int = 4096) -> CloneSlice:
    """All arity-ary term operations: close the projections under composition
    with basic operations, to a fixed point.

    Every term operation is rooted in a basic operation, so composing basic
    operations over the current slice reaches the full closure.  Raises
    CloneCapExceeded past cap.
    """
    if arity not in (1, 2, 3):
        raise ValueError("clone slices supported for arities 1..3")
    if algebra.affine_reduct_modulus is not None:
        return _affine_slice(algebra.affine_reduct_modulus, arity, cap)
    size = algebra.size
    tables: dict[tuple[int, ...], None] = {}
    frontier: list[OperationTable] = []
    members: list[OperationTable] = []
    for i in range(arity):
        op = projection(size, arity, i)
        tables[op.table] = None
        members.append(op)
        frontier.append(op)
    while frontier:
        new_frontier: list[OperationTable] = []
        for g in algebra.ops:
            for hs in itertools.product(members, repeat=g.arity):
                if not any(h in frontier for h in hs):
                    continue
                table = _compose(g, hs, size, arity)
                if table not in tables:
                    if len(tables) >= cap:
                        raise CloneCapExceeded(
                            f"clone slice exceeds cap {cap} for arity {arity}"
                        )
                    tables[table] = None
                    op = OperationTable(f"t{len(tables)}", size, arity, table)
                    new_frontier.append(op)
        members.extend(new_frontier)
        frontier = new_frontier
    # canonical order: projections first, then by table; name composites
    # after a basic operation when the tables coincide
    basic_names = {op.table: op.name for op in algebra.ops if op.arity == arity}
    projections = members[:arity]
    rest = sorted((op.table for op in members[arity:]), key=lambda t: t)
    ordered = list(projections)
    for i, table in enumerate(rest):
        name = basic_names.get(table, f"op{i + 1}")
        ordered.append(OperationTable(name, size, arity, table))
    return CloneSlice(arity, tuple(ordered))


# ---------------------------------------------------------------------------
# Satisfiability in a finite algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SatVerdict:
    satisfiable: bool
    witness: Optional[tuple[tuple[Symbol, OperationTable], ...]]

    def witness_dict(self) -> dict[Symbol, OperationTable]:
        return dict(self.witness or ())

    def to_json(self) -> dict:
        data: dict = {"satisfiable": self.satisfiable}
        if self.witness is not None:
            data["witness"] = {
                sym.value: {"name": op.name, "table": list(op.table)}
                for sym, op in self.witness
            }
        return data


def _eval_vector(
    t: Term,
    assignments: Sequence[tuple[int, ...]],
    op: Optional[OperationTable] = None,
) -> tuple[int, ...]:
    if isinstance(t, Var):
        return tuple(a[t.index] for a in assignments)
    assert op is not None
    return tuple(op.apply(tuple(a[v] for v in t.pattern)) for a in assignments)


def holds_in(s: System, algebra: FiniteAlgebra, cap: int = 4096) -> SatVerdict:
    """Search the clone slices for term operations satisfying every identity.

    Deterministic: the reported witness is minimal in slice order (projections
    first, then table order), taking symbols in canonical order.
    """
    symbols = tuple(sorted(s.signature, key=lambda sy: sy.order))
    assignments = list(itertools.product(range(algebra.size), repeat=s.num_vars))
    slices = {sym: clone_slice(algebra, sym.arity, cap) for sym in symbols}

    var_only: list[tuple[Term, Term]] = []
    unary: dict[Symbol, list[tuple[Term, Term]]] = {sym: [] for sym in symbols}
    cross: dict[tuple[Symbol, Symbol], list[tuple[Term, Term]]] = {}
    for ident in s.sorted_identities():
        left, right = ident.left, ident.right
        lsym = left.sym if isinstance(left, App) else None
        rsym = right.sym if isinstance(right, App) else None
        if lsym is None and rsym is None:
            var_only.append((left, right))
        elif lsym == rsym or rsym is None:
            unary[lsym].append((left, right))
        elif lsym is None:
            unary[rsym].append((right, left))
        else:
            a, b = sorted((lsym, rsym), key=lambda sy: sy.order)
            pair = (left, right) if lsym is a else (right, left)
            cross.setdefault((a, b), []).append(pair)

    for left, right in var_only:
        if _eval_vector(left, assignments) != _eval_vector(right, assignments):
            return SatVerdict(False, None)

    candidates: dict[Symbol, list[OperationTable]] = {}
    for sym in symbols:
        ok = []
        for op in slices[sym].ops:
            good = True
            for left, right in unary[sym]:
                lv = _eval_vector(left, assignments, op)
                rv = _eval_vector(right, assignments, op if isinstance(right, App) else None)
                if lv != rv:
                    good = False
                    break
            if good:
                ok.append(op)
        if not ok:
            return SatVerdict(False, None)
        candidates[sym] = ok

    witness: dict[Symbol, OperationTable] = {}

    def cross_key(sym: Symbol, op: OperationTable, other: Symbol) -> tuple:
        pair = tuple(sorted((sym, other), key=lambda sy: sy.order))
        key = []
        for left, right in cross.get(pair, ()):
            own = left if (isinstance(left, App) and left.sym is sym) else right
            key.append(_eval_vector(own, assignments, op))
        return tuple(key)

    if len(symbols) <= 1:
        for sym in symbols:
            witness[sym] = candidates[sym][0]
    elif len(symbols) == 2:
        a, b = symbols
        buckets: dict[tuple, OperationTable] = {}
        for op in reversed(candidates[b]):
            buckets[cross_key(b, op, a)] = op
        found = False
        for op_a in candidates[a]:
            mate = buckets.get(cross_key(a, op_a, b))
            if mate is not None:
                witness[a] = op_a
                witness[b] = mate
                found = True
                break
        if not found:
            return SatVerdict(False, None)
    else:
        order = list(symbols)

        def rec(k: int) -> bool:
            if k == len(order):
                return True
            sym = order[k]
            for op in candidates[sym]:
                witness[sym] = op
                ok = True
                for j in range(k):
                    other = order[j]
                    pair = tuple(sorted((sym, other), key=lambda sy: sy.order))
                    for left, right in cross.get(pair, ()):
                        lv = _eval_vector(left, assignments, witness[left.sym])
                        rv = _eval_vector(right, assignments, witness[right.sym])
                        if lv != rv:
                            ok = False
                            break
                    if not ok:
                        break
                if ok and rec(k + 1):
                    return True
                del witness[sym]
            return False

        if not rec(0):
            return SatVerdict(False, None)

    return SatVerdict(True, tuple((sym, witness[sym]) for sym in symbols))


def induced_partition(
    witness: Mapping[Symbol, OperationTable],
    universe: TermUniverse,
    algebra: FiniteAlgebra,
) -> Partition:
    """Group universe terms by pointwise-equal evaluation under the witness."""
    assignments = list(
        itertools.product(range(algebra.size), repeat=universe.num_vars)
    )
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, t in enumerate(universe.terms):
        op = witness[t.sym] if isinstance(t, App) else None
        vec = _eval_vector(t, assignments, op)
        groups.setdefault(vec, []).append(i)
    return Partition(universe, tuple(tuple(g) for g in groups.values()))


def check_wnu_bridge(algebra: FiniteAlgebra) -> bool:
    """For the majority algebra: g(x,y,w,z) = f(x,y,f(x,w,z)) is a 4-ary weak
    near-unanimity operation with g(y,x,x,x) = f(y,x,x)."""
    f = algebra.ops[0]
    m = algebra.size

    def g(x: int, y: int, w: int, z: int) -> int:
        return f.apply((x, y, f.apply((x, w, z))))

    if any(g(a, a, a, a) != a for a in range(m)):
        return False
    for a, b in itertools.product(range(m), repeat=2):
        one_off = (g(b, a, a, a), g(a, b, a, a), g(a, a, b, a), g(a, a, a, b))
        if len(set(one_off)) != 1:
            return False
        if one_off[0] != f.apply((b, a, a)):
            return False
    return True
