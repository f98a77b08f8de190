"""Satisfiability of identity systems in full idempotent reducts of modules.

A full idempotent reduct of a module over Z_n has exactly the affine
operations a1*x1 + ... + ak*xk with a1 + ... + ak = 1 (mod n) as its k-ary
term operations.  Equality of two affine operations over every module reduces
to equality of per-variable coefficient sums (evaluate at the unit vectors of
a free module), so a system of linear identities turns into an integer linear
system over the symbols' coefficients.  Solvability over some finite ring is
decided through the Smith normal form of that system.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

from .terms import App, Symbol, System, Term, Var, VAR_NAMES, rename_term


# ---------------------------------------------------------------------------
# Affine terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineTerm:
    """Idempotent affine operation over Z_n: coefficients summing to 1 mod n."""

    modulus: int
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.modulus < 2:
            raise ValueError("modulus must be at least 2")
        coeffs = tuple(c % self.modulus for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if sum(coeffs) % self.modulus != 1:
            raise ValueError(f"coefficients {coeffs} do not sum to 1 mod {self.modulus}")

    @property
    def arity(self) -> int:
        return len(self.coeffs)

    def evaluate(self, args: Sequence[int]) -> int:
        return sum(c * a for c, a in zip(self.coeffs, args)) % self.modulus

    def __str__(self) -> str:
        parts = []
        for c, name in zip(self.coeffs, VAR_NAMES):
            if c == 0:
                continue
            parts.append(name if c == 1 else f"{c}{name}")
        return "+".join(parts) if parts else "0"


def parse_affine(text: str, modulus: int, arity: int = 3) -> AffineTerm:
    """Parse strings like "3x+3y", "x+2y+3z", "x" into an AffineTerm."""
    coeffs = [0] * arity
    for part in text.replace(" ", "").split("+"):
        if not part:
            raise ValueError(f"empty summand in {text!r}")
        name = part[-1]
        if name not in VAR_NAMES or VAR_NAMES.index(name) >= arity:
            raise ValueError(f"bad variable in affine term {text!r}")
        digits = part[:-1]
        coeff = int(digits) if digits else 1
        coeffs[VAR_NAMES.index(name)] += coeff
    return AffineTerm(modulus, tuple(coeffs))


def affine_coefficients(n: int, k: int) -> list[tuple[int, ...]]:
    """All k-tuples over Z_n summing to 1, projections first then lexicographic.

    This is the canonical candidate order used everywhere a least witness is
    reported.  Exactly n**(k-1) tuples.
    """
    if n < 2:
        raise ValueError("modulus must be at least 2")
    projections = []
    for i in range(k):
        unit = [0] * k
        unit[i] = 1
        projections.append(tuple(unit))
    rest = []
    for head in itertools.product(range(n), repeat=k - 1):
        tail = (1 - sum(head)) % n
        coeffs = head + (tail,)
        if coeffs not in projections:
            rest.append(coeffs)
    rest.sort()
    return projections + rest


def affine_terms(n: int, k: int) -> list[AffineTerm]:
    """All idempotent affine k-ary operations over Z_n, in canonical order."""
    return [AffineTerm(n, c) for c in affine_coefficients(n, k)]


# ---------------------------------------------------------------------------
# Coefficient systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearSystem:
    """Integer system A v = b over the symbols' affine coefficients.

    Unknown layout: the coefficients of each symbol in canonical symbol order
    (three per ternary symbol, two per binary), concatenated.  One row per
    identity per variable, then one affine row (coefficients sum to 1) per
    symbol.
    """

    symbols: tuple[Symbol, ...]
    matrix: tuple[tuple[int, ...], ...]
    rhs: tuple[int, ...]

    @property
    def num_unknowns(self) -> int:
        return sum(s.arity for s in self.symbols)

    def offset(self, sym: Symbol) -> int:
        off = 0
        for s in self.symbols:
            if s is sym:
                return off
            off += s.arity
        raise ValueError(f"symbol {sym} not in system")


def _side_contribution(
    t: Term, var: int, symbols: Sequence[Symbol], width: int
) -> tuple[list[int], int]:
    """Coefficient row and constant contributed by one identity side for var."""
    row = [0] * width
    const = 0
    if isinstance(t, Var):
        const = 1 if t.index == var else 0
        return row, const
    off = 0
    for s in symbols:
        if s is t.sym:
            break
        off += s.arity
    for pos, v in enumerate(t.pattern):
        if v == var:
            row[off + pos] += 1
    return row, const


def coefficient_system(s: System) -> LinearSystem:
    """Extract the integer linear system equivalent to s over module reducts."""
    symbols = tuple(sorted(s.signature, key=lambda sy: sy.order))
    width = sum(sy.arity for sy in symbols)
    rows: list[tuple[int, ...]] = []
    rhs: list[int] = []
    for ident in s.sorted_identities():
        for var in range(s.num_vars):
            lrow, lconst = _side_contribution(ident.left, var, symbols, width)
            rrow, rconst = _side_contribution(ident.right, var, symbols, width)
            rows.append(tuple(l - r for l, r in zip(lrow, rrow)))
            rhs.append(rconst - lconst)
    off = 0
    for sym in symbols:
        row = [0] * width
        for j in range(sym.arity):
            row[off + j] = 1
        rows.append(tuple(row))
        rhs.append(1)
        off += sym.arity
    return LinearSystem(symbols, tuple(rows), tuple(rhs))


# ---------------------------------------------------------------------------
# Smith normal form (with the row transform applied to the right-hand side)
# ---------------------------------------------------------------------------


def smith_diagonalize(
    matrix: Sequence[Sequence[int]], rhs: Sequence[int]
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Diagonalise A via unimodular row and column operations.

    Returns (diag, c) where diag are the nonnegative diagonal entries
    d_0 | d_1 | ... and c is the rhs after the same row operations.  Column
    operations reparametrise the unknowns and leave the rhs untouched, so
    A v = b is solvable mod n exactly when diag_i * w_i = c_i is (rows past
    the diagonal count as zero-diagonal rows).  Exact integer arithmetic
    throughout; Python integers are unbounded.
    """
    m = [list(row) for row in matrix]
    c = list(rhs)
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    if any(len(row) != ncols for row in m) or len(c) != nrows:
        raise ValueError("ragged linear system")

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        c[i], c[j] = c[j], c[i]

    def swap_cols(i, j):
        for row in m:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, factor):
        m[dst] = [a + factor * b for a, b in zip(m[dst], m[src])]
        c[dst] += factor * c[src]

    def add_col(dst, src, factor):
        for row in m:
            row[dst] += factor * row[src]

    rank_bound = min(nrows, ncols)
    for s in range(rank_bound):
        while True:
            pivot = None
            for i in range(s, nrows):
                for j in range(s, ncols):
                    if m[i][j] != 0 and (pivot is None or abs(m[i][j]) < abs(m[pivot[0]][pivot[1]])):
                        pivot = (i, j)
            if pivot is None:
                break
            swap_rows(s, pivot[0])
            swap_cols(s, pivot[1])
            if m[s][s] < 0:
                m[s] = [-a for a in m[s]]
                c[s] = -c[s]
            clean = True
            for i in range(s + 1, nrows):
                if m[i][s] != 0:
                    add_row(i, s, -(m[i][s] // m[s][s]))
                    if m[i][s] != 0:
                        clean = False
            for j in range(s + 1, ncols):
                if m[s][j] != 0:
                    add_col(j, s, -(m[s][j] // m[s][s]))
                    if m[s][j] != 0:
                        clean = False
            if clean:
                # enforce divisibility of the remaining block by the pivot
                offender = None
                for i in range(s + 1, nrows):
                    for j in range(s + 1, ncols):
                        if m[i][j] % m[s][s] != 0:
                            offender = i
                            break
                    if offender is not None:
                        break
                if offender is None:
                    break
                add_row(s, offender, 1)
        if m[s][s] == 0:
            break
    diag = tuple(m[i][i] for i in range(rank_bound))
    return diag, tuple(c)


def _solvable_from_diag(diag: Sequence[int], c: Sequence[int], n: int) -> bool:
    """Solvability of diag_i * w_i = c_i (mod n), rows past diag being zero."""
    for i, ci in enumerate(c):
        d = diag[i] if i < len(diag) else 0
        if ci % math.gcd(d, n) != 0:
            return False
    return True


def solvable_mod(linsys: LinearSystem, n: int) -> bool:
    if n < 2:
        raise ValueError("modulus must be at least 2")
    diag, c = smith_diagonalize(linsys.matrix, linsys.rhs)
    return _solvable_from_diag(diag, c, n)


def solve_mod(
    linsys: LinearSystem, n: int
) -> Optional[dict[Symbol, AffineTerm]]:
    """Least solution of the system mod n, or None.

    The order is the canonical affine-candidate order per symbol (projections
    first, then lexicographic), product-ordered over symbols.
    """
    if n < 2:
        raise ValueError("modulus must be at least 2")
    symbols = linsys.symbols
    rows = [list(r) for r in linsys.matrix]
    rhs = list(linsys.rhs)

    def rec(k: int, cols_off: int, rows_k, rhs_k) -> Optional[list[tuple[int, ...]]]:
        diag, c = smith_diagonalize([r[cols_off:] for r in rows_k], rhs_k)
        if not _solvable_from_diag(diag, c, n):
            return None
        if k == len(symbols):
            return []
        arity = symbols[k].arity
        for cand in affine_coefficients(n, arity):
            folded = [
                rv - sum(row[cols_off + j] * cand[j] for j in range(arity))
                for row, rv in zip(rows_k, rhs_k)
            ]
            tail = rec(k + 1, cols_off + arity, rows_k, folded)
            if tail is not None:
                return [cand] + tail
        return None

    solution = rec(0, 0, rows, rhs)
    if solution is None:
        return None
    return {sym: AffineTerm(n, coeffs) for sym, coeffs in zip(symbols, solution)}


# ---------------------------------------------------------------------------
# Decision over all finite rings
#
# A finite ring maps onto a simple quotient, a matrix ring over a finite
# field; an integer linear system is solvable over M_k(F_q) iff entrywise
# over F_q, and over F_q iff over its prime field F_p (rank does not change
# under field extension).  So "solvable in a reduct over some finite ring"
# reduces to "solvable mod some prime".
# ---------------------------------------------------------------------------


def _prime_factors(n: int) -> list[int]:
    n = abs(n)
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _primes() -> Iterator[int]:
    yield 2
    n = 3
    while True:
        if all(n % p for p in range(3, int(n**0.5) + 1, 2)):
            yield n
        n += 2


@dataclass(frozen=True)
class RingVerdict:
    """Outcome of the some-finite-ring decision, with its certificate.

    Satisfiable: least admissible prime and the least witness mod that prime.
    Unsatisfiable: the diagonalised system plus, per candidate prime (divisor
    of the gcd of blocked right-hand sides), a row excluding it.
    """

    satisfiable: bool
    prime: Optional[int]
    witness: Optional[tuple[tuple[Symbol, AffineTerm], ...]]
    snf_diag: tuple[int, ...]
    snf_rhs: tuple[int, ...]
    blocked_rows: tuple[int, ...]
    blocked_gcd: int
    exclusions: tuple[tuple[int, int], ...]

    def witness_dict(self) -> dict[Symbol, AffineTerm]:
        return dict(self.witness or ())

    def to_json(self) -> dict:
        data: dict = {
            "status": "satisfiable" if self.satisfiable else "unsatisfiable-all-finite-rings",
            "snf": {"diag": list(self.snf_diag), "transformed_rhs": list(self.snf_rhs)},
        }
        if self.satisfiable:
            data["prime"] = self.prime
            data["witness"] = {
                sym.value: list(term.coeffs) for sym, term in (self.witness or ())
            }
        else:
            data["blocked_rows"] = list(self.blocked_rows)
            data["blocked_gcd"] = self.blocked_gcd
            data["excluded_primes"] = [
                {"prime": p, "row": r} for p, r in self.exclusions
            ]
        return data


def solve_some_finite_ring(linsys: LinearSystem) -> RingVerdict:
    """Decide whether any finite ring's reduct satisfies the system."""
    diag, c = smith_diagonalize(linsys.matrix, linsys.rhs)

    def row_diag(i: int) -> int:
        return diag[i] if i < len(diag) else 0

    def admissible(p: int) -> Optional[int]:
        """None if p works, else the index of a row excluding it."""
        for i, ci in enumerate(c):
            if row_diag(i) % p == 0 and ci % p != 0:
                return i
        return None

    blocked = tuple(i for i, ci in enumerate(c) if row_diag(i) == 0 and ci != 0)
    if not blocked:
        # only finitely many primes (divisors of nonzero diagonal entries)
        # can fail, so the scan terminates
        for p in _primes():
            if admissible(p) is None:
                witness = solve_mod(linsys, p)
                assert witness is not None, "admissible prime must yield a witness"
                return RingVerdict(
                    True, p, tuple(sorted(witness.items(), key=lambda kv: kv[0].order)),
                    diag, c, blocked, 0, (),
                )
    g = 0
    for i in blocked:
        g = math.gcd(g, c[i])
    exclusions = []
    for p in sorted(_prime_factors(g)):
        row = admissible(p)
        if row is None:
            witness = solve_mod(linsys, p)
            assert witness is not None
            return RingVerdict(
                True, p, tuple(sorted(witness.items(), key=lambda kv: kv[0].order)),
                diag, c, blocked, g, (),
            )
        exclusions.append((p, row))
    return RingVerdict(False, None, None, diag, c, blocked, g, tuple(exclusions))


# ---------------------------------------------------------------------------
# Witness verification by direct substitution (independent of the
# coefficient-row route: evaluates both sides pointwise over Z_n tuples)
# ---------------------------------------------------------------------------


def _eval_term(t: Term, assignment: Sequence[int], witness: Mapping[Symbol, AffineTerm], n: int) -> int:
    if isinstance(t, Var):
        return assignment[t.index] % n
    return witness[t.sym].evaluate([assignment[v] for v in t.pattern])


def verify_witness(
    s: System, n: int, witness: Mapping[Symbol, AffineTerm]
) -> bool:
    """Check a claimed reduct witness by evaluating every identity pointwise."""
    for sym in s.signature:
        if sym not in witness:
            return False
        if witness[sym].modulus != n or witness[sym].arity != sym.arity:
            return False
    for assignment in itertools.product(range(n), repeat=s.num_vars):
        for ident in s.identities:
            if _eval_term(ident.left, assignment, witness, n) != _eval_term(
                ident.right, assignment, witness, n
            ):
                return False
    return True


# ---------------------------------------------------------------------------
# The three-variable reduction check
#
# For one ternary symbol, identities with three variables on both sides
# (permutation identities) or with {x,y} on the left and {x,z} on the right
# reduce to the two-variable case: any affine operation satisfying both
# substitution instances (z -> x and z -> y) satisfies the original identity.
# ---------------------------------------------------------------------------


def _coeff_identity_holds(left: Term, right: Term, w: Sequence[int], p: int) -> bool:
    """Whether an identity on one ternary symbol holds for coefficients w mod p."""
    if left == right:
        return True
    for var in range(3):
        lhs = rhs = 0
        for side, sign in ((left, 1), (right, -1)):
            if isinstance(side, Var):
                val = 1 if side.index == var else 0
            else:
                val = sum(w[i] for i, v in enumerate(side.pattern) if v == var)
            if sign > 0:
                lhs = val
            else:
                rhs = val
        if (lhs - rhs) % p != 0:
            return False
    return True


def _substitute_term(t: Term, src: int, dst: int) -> Term:
    mapping = [dst if v == src else v for v in range(len(VAR_NAMES))]
    return rename_term(t, mapping)


@dataclass(frozen=True)
class LemmaCounterexample:
    prime: int
    left: Term
    right: Term
    witness: tuple[int, ...]


@dataclass(frozen=True)
class LemmaReport:
    primes: tuple[int, ...]
    shapes_checked: int
    counterexamples: tuple[LemmaCounterexample, ...]

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def three_variable_shapes() -> list[tuple[Term, Term]]:
    """Single-symbol shapes covered by the two-variable reduction.

    (a) permutation identities p(x,y,z) = p(sigma(x,y,z)), sigma nontrivial;
    (b) two variables on each side, {x,y} left and {x,z} right.
    """
    shapes: list[tuple[Term, Term]] = []
    base = App(Symbol.P, (0, 1, 2))
    for perm in itertools.permutations(range(3)):
        if perm != (0, 1, 2):
            shapes.append((base, App(Symbol.P, perm)))
    xy = [p for p in itertools.product((0, 1), repeat=3) if len(set(p)) == 2]
    xz = [p for p in itertools.product((0, 2), repeat=3) if len(set(p)) == 2]
    for pl in xy:
        for pr in xz:
            shapes.append((App(Symbol.P, pl), App(Symbol.P, pr)))
    return shapes


def substitution_lemma_check(primes: Sequence[int]) -> LemmaReport:
    """Verify the reduction on every shape: a witness of both substitution
    instances is a witness of the original identity."""
    shapes = three_variable_shapes()
    counterexamples = []
    for p in primes:
        if p < 2:
            raise ValueError("primes must be at least 2")
        candidates = affine_coefficients(p, 3)
        for left, right in shapes:
            insts = []
            for dst in (0, 1):
                l2 = _substitute_term(left, 2, dst)
                r2 = _substitute_term(right, 2, dst)
                insts.append((l2, r2))
            for w in candidates:
                if all(_coeff_identity_holds(l, r, w, p) for l, r in insts):
                    if not _coeff_identity_holds(left, right, w, p):
                        counterexamples.append(
                            LemmaCounterexample(p, left, right, w)
                        )
    return LemmaReport(tuple(primes), len(shapes), tuple(counterexamples))
