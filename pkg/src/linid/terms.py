"""Syntax of linear identities: terms, identities, systems, symmetries.

A term is either a bare variable or a single operation symbol applied to
variables (no nesting).  Systems are sets of unordered identities; their
semantics is the equivalence ("closure") partition they generate on a finite
term universe.  All values here are immutable and hashable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence, Union


class Symbol(Enum):
    P = "p"
    Q = "q"
    T = "t"
    S = "s"

    @property
    def arity(self) -> int:
        return 2 if self in (Symbol.T, Symbol.S) else 3

    @property
    def order(self) -> int:
        return _SYMBOL_ORDER[self]


_SYMBOL_ORDER = {Symbol.P: 0, Symbol.Q: 1, Symbol.T: 2, Symbol.S: 3}

VAR_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self) -> str:
        return VAR_NAMES[self.index]


@dataclass(frozen=True)
class App:
    sym: Symbol
    pattern: tuple[int, ...]

    def __str__(self) -> str:
        args = ",".join(VAR_NAMES[v] for v in self.pattern)
        return f"{self.sym.value}({args})"


Term = Union[Var, App]


def app(sym: Symbol, pattern: Sequence[int]) -> Term:
    """Build an applied term, collapsing constant patterns by idempotence.

    t(v,...,v) denotes the same operation as the bare variable v for
    idempotent t, so constant patterns are never stored.
    """
    pattern = tuple(pattern)
    if len(pattern) != sym.arity:
        raise ValueError(f"{sym.value} takes {sym.arity} arguments, got {len(pattern)}")
    if any(v < 0 or v >= len(VAR_NAMES) for v in pattern):
        raise ValueError(f"variable index out of range in {pattern}")
    if len(set(pattern)) == 1:
        return Var(pattern[0])
    return App(sym, pattern)


def term_key(t: Term) -> tuple:
    """Total order on terms: variables first, then by symbol and pattern."""
    if isinstance(t, Var):
        return (0, t.index, ())
    return (1, t.sym.order, t.pattern)


def term_vars(t: Term) -> frozenset[int]:
    if isinstance(t, Var):
        return frozenset((t.index,))
    return frozenset(t.pattern)


def rename_term(t: Term, mapping: Sequence[int]) -> Term:
    if isinstance(t, Var):
        return Var(mapping[t.index])
    return app(t.sym, tuple(mapping[v] for v in t.pattern))


@dataclass(frozen=True)
class Identity:
    """Unordered pair of distinct terms; stored with the smaller term first."""

    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise ValueError(f"trivial identity {self.left} = {self.right}")
        if term_key(self.left) > term_key(self.right):
            lo, hi = self.right, self.left
            object.__setattr__(self, "left", lo)
            object.__setattr__(self, "right", hi)

    def terms(self) -> tuple[Term, Term]:
        return (self.left, self.right)

    def key(self) -> tuple:
        return (term_key(self.left), term_key(self.right))

    def __str__(self) -> str:
        return f"{self.left}={self.right}"


@dataclass(frozen=True)
class System:
    """A set of linear identities over declared symbols and variables.

    The identity set is normalised at construction: identities are regrouped
    into chains (consecutive pairs of each closure block, ordered by term
    order), so two systems generating the same equivalence compare equal.
    num_vars and signature are construction metadata and do not take part in
    equality; build instances through :func:`system`.
    """

    identities: frozenset[Identity]
    num_vars: int = field(compare=False, default=2)
    signature: frozenset[Symbol] = field(compare=False, default=frozenset())
    warnings: tuple[str, ...] = field(compare=False, default=())

    def sorted_identities(self) -> tuple[Identity, ...]:
        return tuple(sorted(self.identities, key=Identity.key))

    def mentioned_terms(self) -> tuple[Term, ...]:
        seen = set()
        for ident in self.identities:
            seen.update(ident.terms())
        return tuple(sorted(seen, key=term_key))

    def blocks(self) -> tuple[tuple[Term, ...], ...]:
        """Connected components of the identity graph, each sorted."""
        return _merge_terms(self.identities)

    def __str__(self) -> str:
        return format_system(self)

    def __len__(self) -> int:
        return len(self.identities)


def _merge_terms(identities: Iterable[Identity]) -> tuple[tuple[Term, ...], ...]:
    parent: dict[Term, Term] = {}

    def find(t: Term) -> Term:
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    for ident in identities:
        for t in ident.terms():
            parent.setdefault(t, t)
        a, b = find(ident.left), find(ident.right)
        if a != b:
            parent[a] = b
    groups: dict[Term, list[Term]] = {}
    for t in parent:
        groups.setdefault(find(t), []).append(t)
    blocks = [tuple(sorted(g, key=term_key)) for g in groups.values()]
    blocks.sort(key=lambda b: term_key(b[0]))
    return tuple(blocks)


def _chain_identities(blocks: Iterable[Sequence[Term]]) -> frozenset[Identity]:
    idents = set()
    for block in blocks:
        for a, b in zip(block, block[1:]):
            idents.add(Identity(a, b))
    return frozenset(idents)


def system(
    identities: Iterable[Identity],
    num_vars: Optional[int] = None,
    signature: Optional[Iterable[Symbol]] = None,
    warnings: Sequence[str] = (),
) -> System:
    """Normalise an identity set into a System.

    num_vars defaults to the variables actually used (at least 2); signature
    defaults to the symbols actually used.
    """
    idents = _chain_identities(_merge_terms(identities))
    used_vars: set[int] = set()
    used_syms: set[Symbol] = set()
    for ident in idents:
        for t in ident.terms():
            used_vars.update(term_vars(t))
            if isinstance(t, App):
                used_syms.add(t.sym)
    if num_vars is None:
        num_vars = max(used_vars, default=1) + 1
    num_vars = max(num_vars, 2)
    if num_vars not in (2, 3):
        raise ValueError(f"systems use 2 or 3 variables, got {num_vars}")
    if any(v >= num_vars for v in used_vars):
        raise ValueError("identity uses an undeclared variable")
    sig = frozenset(signature) if signature is not None else frozenset(used_syms)
    if not used_syms <= sig:
        raise ValueError("identity uses an undeclared symbol")
    return System(idents, num_vars, sig, tuple(warnings))



# ---------------------------------------------------------------------------
# DSL parsing and printing
#
# system   := identity (";" identity)* ";"?
# identity := term ("=" term)+          ("≈" is a synonym of "=")
# term     := var | sym "(" var "," var ["," var] ")"
# sym      := "p" | "q" | "t"     var := "x" | "y" | "z"
# ---------------------------------------------------------------------------

_SYM_BY_NAME = {s.value: s for s in Symbol}
_VAR_BY_NAME = {n: i for i, n in enumerate(VAR_NAMES)}


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self._advance()

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        ch = self.peek()
        self._advance()
        return ch

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)


def _parse_term(sc: _Scanner, used_vars: set[int], used_syms: set[Symbol]) -> Term:
    sc.skip_ws()
    ch = sc.peek()
    if ch in _VAR_BY_NAME:
        sc.take()
        used_vars.add(_VAR_BY_NAME[ch])
        return Var(_VAR_BY_NAME[ch])
    if ch in _SYM_BY_NAME:
        sym = _SYM_BY_NAME[sc.take()]
        used_syms.add(sym)
        sc.skip_ws()
        if sc.peek() != "(":
            raise sc.error(f"expected '(' after symbol '{sym.value}'")
        sc.take()
        args = []
        while True:
            sc.skip_ws()
            v = sc.peek()
            if v not in _VAR_BY_NAME:
                raise sc.error(f"expected a variable, found {v!r}")
            sc.take()
            args.append(_VAR_BY_NAME[v])
            used_vars.add(_VAR_BY_NAME[v])
            sc.skip_ws()
            nxt = sc.peek()
            if nxt == ",":
                sc.take()
                continue
            if nxt == ")":
                sc.take()
                break
            raise sc.error(f"expected ',' or ')', found {nxt!r}")
        if len(args) != sym.arity:
            raise sc.error(
                f"symbol '{sym.value}' takes {sym.arity} arguments, got {len(args)}"
            )
        return app(sym, args)
    if ch.isalpha():
        raise sc.error(f"unknown symbol {ch!r}")
    raise sc.error(f"expected a term, found {ch!r}")


def parse_system(text: str) -> System:
    """Parse the identity DSL.  Chains a=b=c expand to consecutive pairs.

    Identities whose sides coincide after idempotent collapse are dropped and
    recorded on ``System.warnings``.  Variables and symbols mentioned in the
    text (even in dropped identities) determine num_vars and signature.
    """
    sc = _Scanner(text)
    idents: list[Identity] = []
    warnings: list[str] = []
    used_vars: set[int] = set()
    used_syms: set[Symbol] = set()

    sc.skip_ws()
    while sc.pos < len(sc.text):
        chain = [_parse_term(sc, used_vars, used_syms)]
        sc.skip_ws()
        while sc.peek() in ("=", "≈"):
            sc.take()
            chain.append(_parse_term(sc, used_vars, used_syms))
            sc.skip_ws()
        if len(chain) < 2:
            raise sc.error("expected '=' in identity")
        for a, b in zip(chain, chain[1:]):
            if a == b:
                warnings.append(f"dropped trivial identity {a}={b}")
            else:
                idents.append(Identity(a, b))
        sc.skip_ws()
        if sc.peek() == ";":
            sc.take()
            sc.skip_ws()
        elif sc.pos < len(sc.text):
            raise sc.error(f"expected ';' between identities, found {sc.peek()!r}")
    num_vars = max(max(used_vars, default=1) + 1, 2)
    return system(idents, num_vars=num_vars, signature=used_syms, warnings=warnings)


def format_system(s: System) -> str:
    """Canonical text form: one chain per closure block, blocks in term order.

    parse_system(format_system(s)) == s for every System.
    """
    return "; ".join("=".join(str(t) for t in block) for block in s.blocks())


# ---------------------------------------------------------------------------
# Term universes and partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TermUniverse:
    """All legal terms for a signature and variable count, in term order."""

    signature: frozenset[Symbol]
    num_vars: int
    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def index(self, t: Term) -> int:
        try:
            return self._index[t]  # type: ignore[attr-defined]
        except KeyError:
            raise ValueError(f"term {t} outside universe") from None

    def __len__(self) -> int:
        return len(self.terms)


def term_universe(signature: Iterable[Symbol], num_vars: int) -> TermUniverse:
    if num_vars not in (2, 3):
        raise ValueError("universes use 2 or 3 variables")
    sig = frozenset(signature)
    terms: list[Term] = [Var(i) for i in range(num_vars)]
    for sym in sorted(sig, key=lambda s: s.order):
        for pattern in itertools.product(range(num_vars), repeat=sym.arity):
            if len(set(pattern)) > 1:
                terms.append(App(sym, pattern))
    return TermUniverse(sig, num_vars, tuple(terms))


@dataclass(frozen=True)
class Partition:
    """Disjoint covering blocks of a term universe, stored as index tuples.

    Blocks are sorted internally and ordered by least element.
    """

    universe: TermUniverse
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        flat = [i for b in self.blocks for i in b]
        if sorted(flat) != list(range(len(self.universe))):
            raise ValueError("blocks must partition the universe")
        normal = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        object.__setattr__(self, "blocks", normal)

    def term_blocks(self) -> tuple[tuple[Term, ...], ...]:
        terms = self.universe.terms
        return tuple(tuple(terms[i] for i in b) for b in self.blocks)

    def block_of(self, t: Term) -> tuple[Term, ...]:
        i = self.universe.index(t)
        for b in self.blocks:
            if i in b:
                return tuple(self.universe.terms[j] for j in b)
        raise AssertionError("unreachable: partition covers universe")

    def nontrivial_blocks(self) -> tuple[tuple[int, ...], ...]:
        return tuple(b for b in self.blocks if len(b) > 1)

    def refines(self, other: "Partition") -> bool:
        """True iff every block of self is contained in a block of other."""
        if self.universe != other.universe:
            raise ValueError("partitions over different universes")
        owner = {}
        for k, b in enumerate(other.blocks):
            for i in b:
                owner[i] = k
        return all(len({owner[i] for i in b}) == 1 for b in self.blocks)

    def singletons_only(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)


def partition_from_blocks(
    universe: TermUniverse, nontrivial: Iterable[Sequence[int]]
) -> Partition:
    """Partition with the given (index) blocks; unmentioned terms singleton."""
    blocks = [tuple(sorted(b)) for b in nontrivial]
    covered = {i for b in blocks for i in b}
    if len(covered) != sum(len(b) for b in blocks):
        raise ValueError("blocks overlap")
    blocks.extend((i,) for i in range(len(universe)) if i not in covered)
    return Partition(universe, tuple(blocks))


def partition_closure(s: System, universe: TermUniverse) -> Partition:
    """Smallest equivalence on the universe containing all identities of s."""
    return partition_from_blocks(
        universe,
        [tuple(universe.index(t) for t in block) for block in s.blocks()],
    )


def system_from_partition(p: Partition) -> System:
    """The system whose identities chain each non-singleton block."""
    blocks = [tuple(p.universe.terms[i] for i in b) for b in p.nontrivial_blocks()]
    return system(
        _chain_identities(blocks),
        num_vars=p.universe.num_vars,
        signature=p.universe.signature,
    )


# ---------------------------------------------------------------------------
# Variable substitution
# ---------------------------------------------------------------------------


def substitute_variable(s: System, src: int, dst: int) -> System:
    """Replace variable src by dst everywhere; drop identities that trivialise."""
    if src >= s.num_vars:
        raise ValueError(f"variable {VAR_NAMES[src]} not declared in system")
    mapping = [dst if v == src else v for v in range(len(VAR_NAMES))]
    idents = []
    for ident in s.identities:
        left = rename_term(ident.left, mapping)
        right = rename_term(ident.right, mapping)
        if left != right:
            idents.append(Identity(left, right))
    return system(idents, signature=s.signature)


# ---------------------------------------------------------------------------
# The symmetry group: variable renamings, per-symbol argument permutations,
# and the p<->q swap.  Substituting s(x_perm) for s everywhere is invertible
# and preserves satisfiability, so orbits share all classification verdicts.
# ---------------------------------------------------------------------------

_ID2 = (0, 1)
_ID3 = (0, 1, 2)


def _perm_compose(f: tuple[int, ...], g: tuple[int, ...]) -> tuple[int, ...]:
    """(f o g)[i] = f[g[i]]."""
    return tuple(f[g[i]] for i in range(len(g)))


def _perm_inverse(f: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(f)
    for i, v in enumerate(f):
        inv[v] = i
    return tuple(inv)


@dataclass(frozen=True)
class SymmetryElement:
    """One element of the symmetry group acting on terms and systems.

    Action on a term: permute the argument positions of its symbol (pattern[j]
    becomes pattern[arg_perm[j]]), then swap same-arity symbols if requested,
    then rename variables.  var_perm may fix variables beyond the system's
    num_vars.
    """

    var_perm: tuple[int, ...] = (0, 1, 2)
    p_arg_perm: tuple[int, ...] = _ID3
    q_arg_perm: tuple[int, ...] = _ID3
    t_arg_perm: tuple[int, ...] = _ID2
    s_arg_perm: tuple[int, ...] = _ID2
    swap_pq: bool = False
    swap_ts: bool = False

    def arg_perm(self, sym: Symbol) -> tuple[int, ...]:
        return {
            Symbol.P: self.p_arg_perm,
            Symbol.Q: self.q_arg_perm,
            Symbol.T: self.t_arg_perm,
            Symbol.S: self.s_arg_perm,
        }[sym]

    def map_symbol(self, sym: Symbol) -> Symbol:
        if self.swap_pq and sym in (Symbol.P, Symbol.Q):
            return Symbol.Q if sym is Symbol.P else Symbol.P
        if self.swap_ts and sym in (Symbol.T, Symbol.S):
            return Symbol.S if sym is Symbol.T else Symbol.T
        return sym

    def apply_term(self, t: Term) -> Term:
        if isinstance(t, Var):
            return Var(self.var_perm[t.index])
        perm = self.arg_perm(t.sym)
        pattern = tuple(self.var_perm[t.pattern[perm[j]]] for j in range(len(perm)))
        return app(self.map_symbol(t.sym), pattern)

    def compose(self, other: "SymmetryElement") -> "SymmetryElement":
        """Element acting as self after other: (self*other)(t) = self(other(t))."""
        if other.swap_pq:
            p_inner, q_inner = self.q_arg_perm, self.p_arg_perm
        else:
            p_inner, q_inner = self.p_arg_perm, self.q_arg_perm
        if other.swap_ts:
            t_inner, s_inner = self.s_arg_perm, self.t_arg_perm
        else:
            t_inner, s_inner = self.t_arg_perm, self.s_arg_perm
        return SymmetryElement(
            var_perm=_perm_compose(self.var_perm, other.var_perm),
            p_arg_perm=_perm_compose(other.p_arg_perm, p_inner),
            q_arg_perm=_perm_compose(other.q_arg_perm, q_inner),
            t_arg_perm=_perm_compose(other.t_arg_perm, t_inner),
            s_arg_perm=_perm_compose(other.s_arg_perm, s_inner),
            swap_pq=self.swap_pq != other.swap_pq,
            swap_ts=self.swap_ts != other.swap_ts,
        )

    def inverse(self) -> "SymmetryElement":
        p_inv = _perm_inverse(self.p_arg_perm)
        q_inv = _perm_inverse(self.q_arg_perm)
        if self.swap_pq:
            p_inv, q_inv = q_inv, p_inv
        t_inv = _perm_inverse(self.t_arg_perm)
        s_inv = _perm_inverse(self.s_arg_perm)
        if self.swap_ts:
            t_inv, s_inv = s_inv, t_inv
        return SymmetryElement(
            var_perm=_perm_inverse(self.var_perm),
            p_arg_perm=p_inv,
            q_arg_perm=q_inv,
            t_arg_perm=t_inv,
            s_arg_perm=s_inv,
            swap_pq=self.swap_pq,
            swap_ts=self.swap_ts,
        )


IDENTITY_ELEMENT = SymmetryElement()


def apply_symmetry(s: System, g: SymmetryElement) -> System:
    idents = [Identity(g.apply_term(i.left), g.apply_term(i.right)) for i in s.identities]
    sig = frozenset(g.map_symbol(sym) for sym in s.signature)
    return system(idents, num_vars=s.num_vars, signature=sig)


def symmetry_group(
    signature: Iterable[Symbol], num_vars: int
) -> tuple[SymmetryElement, ...]:
    """Full group for a signature, in a fixed deterministic order.

    Variable permutations move only declared variables; argument permutations
    exist per declared symbol; equal-arity symbol pairs may be swapped when
    both are declared.  Order 2*6*6*2 = 144 for two ternary symbols over two
    variables.
    """
    sig = frozenset(signature)
    var_perms = [
        tuple(p) + tuple(range(num_vars, len(VAR_NAMES)))
        for p in itertools.permutations(range(num_vars))
    ]
    p_perms = list(itertools.permutations(range(3))) if Symbol.P in sig else [_ID3]
    q_perms = list(itertools.permutations(range(3))) if Symbol.Q in sig else [_ID3]
    t_perms = list(itertools.permutations(range(2))) if Symbol.T in sig else [_ID2]
    s_perms = list(itertools.permutations(range(2))) if Symbol.S in sig else [_ID2]
    pq_swaps = [False, True] if {Symbol.P, Symbol.Q} <= sig else [False]
    ts_swaps = [False, True] if {Symbol.T, Symbol.S} <= sig else [False]
    return tuple(
        SymmetryElement(v, p, q, t, s, sw_pq, sw_ts)
        for v in var_perms
        for p in p_perms
        for q in q_perms
        for t in t_perms
        for s in s_perms
        for sw_pq in pq_swaps
        for sw_ts in ts_swaps
    )


def system_key(s: System) -> tuple:
    """Deterministic sort key: the sorted tuple of identity keys."""
    return tuple(sorted(i.key() for i in s.identities))


def canonicalize(
    s: System, signature: Optional[Iterable[Symbol]] = None
) -> tuple[System, SymmetryElement]:
    """Lexicographic minimum of the orbit of s under the full symmetry group.

    The ambient signature defaults to the system's own; pass the family
    signature to canonicalise within a larger group.  Returns the canonical
    form and a group element mapping s to it.
    """
    sig = frozenset(signature) if signature is not None else s.signature
    blocks = s.blocks()
    best: Optional[tuple] = None
    best_g = IDENTITY_ELEMENT
    for g in symmetry_group(sig, s.num_vars):
        # bijections carry closure blocks to closure blocks, so the key of
        # the transformed system falls out without re-normalising
        pairs = []
        for block in blocks:
            moved = sorted((term_key(g.apply_term(t)) for t in block))
            pairs.extend(zip(moved, moved[1:]))
        key = tuple(sorted(pairs))
        if best is None or key < best:
            best = key
            best_g = g
    return apply_symmetry(s, best_g), best_g


def mirror(s: System) -> System:
    """Swap the variables x and y throughout."""
    swap = (1, 0) + tuple(range(2, len(VAR_NAMES)))
    return apply_symmetry(s, SymmetryElement(var_perm=swap))


# ---------------------------------------------------------------------------
# Set-partition enumeration (restricted growth strings) and weakenings
# ---------------------------------------------------------------------------


def set_partitions(items: Sequence) -> Iterator[tuple[tuple, ...]]:
    """All partitions of items, in restricted-growth-string order.

    The first partition is the single block (all items together); the last is
    all singletons.  Bell(len(items)) partitions in total.
    """
    items = list(items)
    n = len(items)
    if n == 0:
        yield ()
        return

    def rec(i: int, assignment: list[int], nblocks: int) -> Iterator[tuple[tuple, ...]]:
        if i == n:
            blocks: list[list] = [[] for _ in range(nblocks)]
            for j, b in enumerate(assignment):
                blocks[b].append(items[j])
            yield tuple(tuple(b) for b in blocks)
            return
        for b in range(nblocks + 1):
            assignment.append(b)
            yield from rec(i + 1, assignment, max(nblocks, b + 1))
            assignment.pop()

    yield from rec(0, [], 0)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def weakenings(p: Partition) -> Iterator[Partition]:
    """All partitions strictly refining p, in deterministic order.

    Count for a partition with block sizes k_1..k_r is Bell(k_1)...Bell(k_r)-1.
    """
    splittable = p.nontrivial_blocks()
    singles = [b for b in p.blocks if len(b) == 1]
    options = [list(set_partitions(b)) for b in splittable]
    for combo in itertools.product(*options):
        if all(len(parts) == 1 for parts in combo):
            continue  # the unrefined partition itself
        blocks = list(singles)
        for parts in combo:
            blocks.extend(parts)
        yield Partition(p.universe, tuple(blocks))
