"""Symmetry-reduced enumeration and classification of identity systems.

A two-variable system can hold in the majority algebra only if its closure
partition refines one of the partitions induced by assigning each symbol a
witness type (a projection or, for ternary symbols, the majority class; all
majority operations agree on two-variable argument patterns).  Enumeration
therefore walks the partitions of the block containing x in each master
partition, mirrors being implied by renaming x and y.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from . import algebra as alg
from . import reducts
from .terms import (
    Partition,
    Symbol,
    System,
    TermUniverse,
    Var,
    canonicalize,
    partition_closure,
    partition_from_blocks,
    set_partitions,
    symmetry_group,
    system_from_partition,
    system_key,
    term_universe,
    weakenings,
)


class Family(Enum):
    TWO_TERNARY = "TwoTernary"
    SINGLE_TERNARY = "SingleTernary"
    BINARY_PLUS_TERNARY = "BinaryPlusTernary"
    SINGLE_BINARY = "SingleBinary"
    TWO_BINARY = "TwoBinary"

    @property
    def signature(self) -> frozenset[Symbol]:
        return _FAMILY_SIGNATURES[self]

    @property
    def universe(self) -> TermUniverse:
        return term_universe(self.signature, 2)

    @staticmethod
    def parse(name: str) -> "Family":
        for fam in Family:
            if fam.value.lower() == name.lower():
                return fam
        raise ValueError(f"unknown family {name!r}")


_FAMILY_SIGNATURES = {
    Family.TWO_TERNARY: frozenset((Symbol.P, Symbol.Q)),
    Family.SINGLE_TERNARY: frozenset((Symbol.P,)),
    Family.BINARY_PLUS_TERNARY: frozenset((Symbol.P, Symbol.T)),
    Family.SINGLE_BINARY: frozenset((Symbol.T,)),
    Family.TWO_BINARY: frozenset((Symbol.T, Symbol.S)),
}


_WITNESS_ALGEBRA = alg.majority_a(3)


def _witness_types(sym: Symbol) -> tuple[str, ...]:
    if sym.arity == 3:
        return ("pi1", "pi2", "pi3", "maj")
    return ("pi1", "pi2")


def _witness_op(sym: Symbol, type_name: str) -> alg.OperationTable:
    m = _WITNESS_ALGEBRA.size
    if type_name == "maj":
        return _WITNESS_ALGEBRA.ops[0]
    position = int(type_name[2:]) - 1
    return alg.projection(m, sym.arity, position)


def master_partitions(
    family: Family,
) -> list[tuple[tuple[tuple[Symbol, str], ...], Partition]]:
    """Induced partition of the family universe per witness-type assignment."""
    universe = family.universe
    symbols = sorted(family.signature, key=lambda s: s.order)
    out = []
    for combo in itertools.product(*[_witness_types(s) for s in symbols]):
        witness = {s: _witness_op(s, t) for s, t in zip(symbols, combo)}
        part = alg.induced_partition(witness, universe, _WITNESS_ALGEBRA)
        out.append((tuple(zip(symbols, combo)), part))
    return out


# ---------------------------------------------------------------------------
# Canonical forms on index partitions (fast path, equivalent to
# terms.canonicalize because the universe is sorted in term order)
# ---------------------------------------------------------------------------


def _index_perms(universe: TermUniverse) -> tuple[tuple[int, ...], ...]:
    perms = []
    for g in symmetry_group(universe.signature, universe.num_vars):
        perms.append(tuple(universe.index(g.apply_term(t)) for t in universe.terms))
    return tuple(perms)


def _chain_pairs(blocks: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    pairs = []
    for b in blocks:
        bs = sorted(b)
        pairs.extend(zip(bs, bs[1:]))
    return tuple(sorted(pairs))


def _canonical_blocks(
    blocks: Sequence[Sequence[int]], perms: Sequence[Sequence[int]]
) -> tuple[tuple[tuple[int, int], ...], tuple[tuple[int, ...], ...]]:
    best_key: Optional[tuple] = None
    best_blocks: tuple[tuple[int, ...], ...] = ()
    for perm in perms:
        moved = tuple(
            sorted((tuple(sorted(perm[i] for i in b)) for b in blocks))
        )
        key = _chain_pairs(moved)
        if best_key is None or key < best_key:
            best_key = key
            best_blocks = moved
    return best_key or (), best_blocks


def _system_from_index_blocks(
    universe: TermUniverse, blocks: Iterable[Sequence[int]]
) -> System:
    return system_from_partition(partition_from_blocks(universe, blocks))


def enumerate_family(family: Family) -> tuple[System, ...]:
    """All canonical systems in the family, deduplicated and ordered.

    Every partition of the x-containing block of every master partition is
    converted to a system (identities chain each block; the y side is implied
    by the x/y renaming) and reduced to its canonical form.
    """
    universe = family.universe
    perms = _index_perms(universe)
    x_index = universe.index(Var(0))
    seen_raw: set = set()
    canon: dict[tuple, tuple[tuple[int, ...], ...]] = {}
    for _types, master in master_partitions(family):
        xblock = next(b for b in master.blocks if x_index in b)
        for parts in set_partitions(xblock):
            raw = tuple(sorted(tuple(sorted(p)) for p in parts if len(p) > 1))
            if raw in seen_raw:
                continue
            seen_raw.add(raw)
            key, blocks = _canonical_blocks(raw, perms)
            if key not in canon:
                canon[key] = blocks
    return tuple(
        _system_from_index_blocks(universe, canon[key]) for key in sorted(canon)
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    system: System
    ring_verdict: reducts.RingVerdict
    holds_in_b: alg.SatVerdict
    holds_in_a: alg.SatVerdict

    @property
    def is_candidate(self) -> bool:
        return (
            not self.ring_verdict.satisfiable
            and self.holds_in_b.satisfiable
            and self.holds_in_a.satisfiable
        )

    def to_json(self) -> dict:
        from .terms import format_system

        return {
            "system": format_system(self.system),
            "ring": self.ring_verdict.to_json(),
            "holds_in_b": self.holds_in_b.to_json(),
            "holds_in_a": self.holds_in_a.to_json(),
            "is_candidate": self.is_candidate,
        }


def classify_system(s: System) -> Classification:
    ring = reducts.solve_some_finite_ring(reducts.coefficient_system(s))
    in_b = alg.holds_in(s, alg.semilattice_b())
    in_a = alg.holds_in(s, _WITNESS_ALGEBRA)
    return Classification(s, ring, in_b, in_a)


@dataclass(frozen=True)
class WeakeningRecord:
    system: System
    ring_verdict: reducts.RingVerdict

    @property
    def prime(self) -> Optional[int]:
        return self.ring_verdict.prime


@dataclass(frozen=True)
class MinimalityRecord:
    """For a candidate: ring evidence for every strict weakening.

    Weakenings of a candidate still hold in both test algebras (refinements of
    its closure keep its witnesses), so a weakening fails to be a candidate
    exactly when some reduct satisfies it.
    """

    candidate: System
    weakenings: tuple[WeakeningRecord, ...]
    weaker_candidates: tuple[System, ...]

    @property
    def is_minimal(self) -> bool:
        return not self.weaker_candidates

    def minimal_below(self, minimal: Sequence[System]) -> tuple[System, ...]:
        """The family's minimal candidates among this one's weakenings.

        The weakening sweep covers every strict refinement, so a non-minimal
        candidate always contains at least one minimal candidate here.
        """
        return tuple(w for w in self.weaker_candidates if w in set(minimal))


@dataclass(frozen=True)
class CandidateReport:
    family: Family
    total_enumerated: int
    num_ring_satisfiable: int
    num_fails_b: int
    num_fails_a: int
    candidates: tuple[Classification, ...]
    minimality: tuple[MinimalityRecord, ...]

    @property
    def minimal_candidates(self) -> tuple[System, ...]:
        return tuple(r.candidate for r in self.minimality if r.is_minimal)

    def to_json(self) -> dict:
        from .terms import format_system

        return {
            "family": self.family.value,
            "total_enumerated": self.total_enumerated,
            "counts": {
                "ring_satisfiable": self.num_ring_satisfiable,
                "fails_in_b": self.num_fails_b,
                "fails_in_a": self.num_fails_a,
                "candidates": len(self.candidates),
                "minimal_candidates": len(self.minimal_candidates),
            },
            "candidates": [c.to_json() for c in self.candidates],
            "minimal_candidates": [
                format_system(s) for s in self.minimal_candidates
            ],
            "minimality": [
                {
                    "candidate": format_system(r.candidate),
                    "is_minimal": r.is_minimal,
                    "weaker_candidates": [
                        format_system(w) for w in r.weaker_candidates
                    ],
                    "contains_minimal": [
                        format_system(w)
                        for w in r.minimal_below(self.minimal_candidates)
                    ],
                    "weakenings": [
                        {
                            "system": format_system(w.system),
                            "ring": w.ring_verdict.to_json(),
                        }
                        for w in r.weakenings
                    ],
                }
                for r in self.minimality
            ],
        }


def candidate_weakenings(s: System, universe: TermUniverse) -> tuple[System, ...]:
    """Systems of all partitions strictly refining the closure partition."""
    closure = partition_closure(s, universe)
    return tuple(system_from_partition(p) for p in weakenings(closure))


def minimal_candidates(family: Family, jobs: int = 1) -> CandidateReport:
    """Classify the whole family and compute its minimal candidates."""
    systems = enumerate_family(family)
    classifications = _classify_batch(systems, jobs)
    num_ring = sum(1 for c in classifications if c.ring_verdict.satisfiable)
    num_fails_b = sum(1 for c in classifications if not c.holds_in_b.satisfiable)
    num_fails_a = sum(1 for c in classifications if not c.holds_in_a.satisfiable)
    candidates = tuple(c for c in classifications if c.is_candidate)
    universe = family.universe
    minimality = []
    for cand in candidates:
        records = []
        weaker = []
        for weak in candidate_weakenings(cand.system, universe):
            ring = reducts.solve_some_finite_ring(reducts.coefficient_system(weak))
            records.append(WeakeningRecord(weak, ring))
            if not ring.satisfiable:
                weaker.append(canonicalize(weak, family.signature)[0])
        dedup = []
        for w in weaker:
            if w not in dedup:
                dedup.append(w)
        minimality.append(
            MinimalityRecord(cand.system, tuple(records), tuple(dedup))
        )
    return CandidateReport(
        family,
        len(systems),
        num_ring,
        num_fails_b,
        num_fails_a,
        candidates,
        tuple(minimality),
    )


def _classify_batch(systems: Sequence[System], jobs: int) -> list[Classification]:
    if jobs <= 1 or len(systems) < 64:
        return [classify_system(s) for s in systems]
    import multiprocessing

    with multiprocessing.Pool(jobs) as pool:
        return pool.map(classify_system, systems, chunksize=64)


# ---------------------------------------------------------------------------
# Expected-results manifest and its verifier
# ---------------------------------------------------------------------------


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    line_no: int
    kind: str
    family: Optional[Family]
    system: Optional[System]
    modulus: Optional[int] = None
    witness: tuple[tuple[Symbol, str], ...] = ()
    expected_systems: tuple[System, ...] = ()
    table_terms: tuple[str, ...] = ()

    def describe(self) -> str:
        from .terms import format_system

        bits = [self.kind]
        if self.family is not None:
            bits.append(self.family.value)
        if self.system is not None:
            bits.append(format_system(self.system))
        if self.modulus is not None:
            bits.append(f"mod {self.modulus}")
        if self.witness:
            bits.append(", ".join(f"{s.value}={t}" for s, t in self.witness))
        return " | ".join(bits)


_ENTRY_KINDS = {
    "holds-mod",
    "projections",
    "projections-exist",
    "fails-in-b",
    "ring-unsat",
    "minimal",
    "minimal-candidates",
    "zero-candidates",
    "affine-table",
}


def _parse_witness_fields(fields: Sequence[str]) -> tuple[tuple[Symbol, str], ...]:
    out = []
    for field in fields:
        if "=" not in field:
            raise ValueError(f"expected sym=term, got {field!r}")
        name, term = field.split("=", 1)
        out.append((Symbol(name.strip()), term.strip()))
    return tuple(out)


def parse_manifest(text: str) -> tuple[ManifestEntry, ...]:
    from .terms import parse_system

    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split("|")]
        kind = fields[0]
        if kind not in _ENTRY_KINDS:
            raise ManifestError(f"line {line_no}: unknown entry kind {kind!r}")
        try:
            if kind == "affine-table":
                entries.append(
                    ManifestEntry(
                        line_no,
                        kind,
                        None,
                        None,
                        modulus=int(fields[1]),
                        table_terms=tuple(
                            t.strip() for t in fields[2].split(",") if t.strip()
                        ),
                    )
                )
            elif kind == "zero-candidates":
                entries.append(
                    ManifestEntry(line_no, kind, Family.parse(fields[1]), None)
                )
            elif kind == "minimal-candidates":
                fam = Family.parse(fields[1])
                expected = tuple(
                    parse_system(part.strip())
                    for part in fields[2].split("&&")
                    if part.strip()
                ) if len(fields) > 2 else ()
                entries.append(
                    ManifestEntry(line_no, kind, fam, None, expected_systems=expected)
                )
            elif kind == "holds-mod":
                entries.append(
                    ManifestEntry(
                        line_no,
                        kind,
                        Family.parse(fields[1]),
                        parse_system(fields[2]),
                        modulus=int(fields[3]),
                        witness=_parse_witness_fields(fields[4:]),
                    )
                )
            elif kind == "projections":
                entries.append(
                    ManifestEntry(
                        line_no,
                        kind,
                        Family.parse(fields[1]),
                        parse_system(fields[2]),
                        witness=_parse_witness_fields(fields[3:]),
                    )
                )
            else:
                entries.append(
                    ManifestEntry(
                        line_no, kind, Family.parse(fields[1]), parse_system(fields[2])
                    )
                )
        except ManifestError:
            raise
        except Exception as exc:
            raise ManifestError(f"line {line_no}: {exc}") from exc
    return tuple(entries)


def default_manifest_text() -> str:
    import importlib.resources

    return (
        importlib.resources.files("linid")
        .joinpath("data/expected_results.txt")
        .read_text(encoding="utf-8")
    )


@dataclass(frozen=True)
class Finding:
    entry: ManifestEntry
    ok: bool
    detail: str

    def to_json(self) -> dict:
        return {
            "line": self.entry.line_no,
            "entry": self.entry.describe(),
            "ok": self.ok,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerifyReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return all(f.ok for f in self.findings)

    @property
    def num_failed(self) -> int:
        return sum(1 for f in self.findings if not f.ok)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "total": len(self.findings),
            "failed": self.num_failed,
            "findings": [f.to_json() for f in self.findings],
        }


def _projection_witness_exists(s: System, arities: dict[Symbol, int]) -> bool:
    units = {2: ("x", "y"), 3: ("x", "y", "z")}
    symbols = sorted(s.signature, key=lambda sy: sy.order)
    for combo in itertools.product(*[units[sym.arity] for sym in symbols]):
        wit = {
            sym: reducts.parse_affine(term, 5, sym.arity)
            for sym, term in zip(symbols, combo)
        }
        if reducts.verify_witness(s, 5, wit):
            return True
    return False


def _check_entry(entry: ManifestEntry, reports: dict[Family, CandidateReport]) -> Finding:
    from .terms import format_system

    s = entry.system
    if entry.kind == "holds-mod":
        n = entry.modulus
        wit = {
            sym: reducts.parse_affine(text, n, sym.arity)
            for sym, text in entry.witness
        }
        ok = reducts.verify_witness(s, n, wit)
        solved = reducts.solve_mod(reducts.coefficient_system(s), n)
        detail = "witness verified by substitution" if ok else "witness fails substitution"
        if solved is None:
            ok = False
            detail += "; solver finds the system unsatisfiable at this modulus"
        return Finding(entry, ok, detail)
    if entry.kind == "projections":
        wit = {
            sym: reducts.parse_affine(text, 5, sym.arity)
            for sym, text in entry.witness
        }
        ok = reducts.verify_witness(s, 5, wit)
        return Finding(entry, ok, "projection pair verified" if ok else "projection pair fails")
    if entry.kind == "projections-exist":
        ok = _projection_witness_exists(s, {})
        return Finding(entry, ok, "some projection assignment works" if ok else "no projection assignment works")
    if entry.kind == "fails-in-b":
        verdict = alg.holds_in(s, alg.semilattice_b())
        ok = not verdict.satisfiable
        return Finding(entry, ok, "unsatisfiable in the two-element semilattice" if ok else "unexpectedly satisfiable in the semilattice")
    if entry.kind == "ring-unsat":
        linsys = reducts.coefficient_system(s)
        rv = reducts.solve_some_finite_ring(linsys)
        ok = not rv.satisfiable
        detail = "no finite ring admits the system" if ok else f"satisfiable mod {rv.prime}"
        if ok:
            spot = [n for n in range(2, 17) if reducts.solvable_mod(linsys, n)]
            if spot:
                ok = False
                detail = f"per-modulus solver finds solutions mod {spot}"
        return Finding(entry, ok, detail)
    if entry.kind == "minimal":
        cls = classify_system(s)
        if not cls.is_candidate:
            return Finding(entry, False, "system is not a candidate")
        universe = entry.family.universe
        bad = []
        for weak in candidate_weakenings(s, universe):
            rv = reducts.solve_some_finite_ring(reducts.coefficient_system(weak))
            if not rv.satisfiable:
                bad.append(format_system(weak))
        ok = not bad
        detail = (
            "candidate; every strict weakening is ring-satisfiable"
            if ok
            else f"weaker candidates exist: {bad}"
        )
        return Finding(entry, ok, detail)
    if entry.kind == "minimal-candidates":
        report = reports[entry.family]
        got = {s for s in report.minimal_candidates}
        want = {canonicalize(s, entry.family.signature)[0] for s in entry.expected_systems}
        ok = got == want
        if ok:
            detail = f"{len(got)} minimal candidates, exact match"
        else:
            extra = [format_system(s) for s in sorted(got - want, key=lambda s: str(s))]
            missing = [format_system(s) for s in sorted(want - got, key=lambda s: str(s))]
            detail = f"mismatch; unexpected={extra} missing={missing}"
        return Finding(entry, ok, detail)
    if entry.kind == "zero-candidates":
        report = reports[entry.family]
        ok = not report.candidates
        detail = (
            "no candidates in family"
            if ok
            else f"unexpected candidates: {[format_system(c.system) for c in report.candidates]}"
        )
        return Finding(entry, ok, detail)
    if entry.kind == "affine-table":
        n = entry.modulus
        generated = [str(t) for t in reducts.affine_terms(n, 3)]
        printed = list(entry.table_terms)
        missing = [t for t in generated if t not in printed]
        dupes = sorted({t for t in printed if printed.count(t) > 1})
        unknown = [t for t in printed if t not in generated]
        ok = len(generated) == n * n and not unknown
        detail = (
            f"{len(generated)} terms generated; printed list has duplicates {dupes}, "
            f"misses {missing}"
        )
        if unknown:
            detail += f"; printed terms not in inventory: {unknown}"
        return Finding(entry, ok, detail)
    raise AssertionError(f"unhandled kind {entry.kind}")


def verify_paper(
    manifest_text: Optional[str] = None, jobs: int = 1
) -> VerifyReport:
    """Machine-check every manifest entry; mismatches become findings."""
    if manifest_text is None:
        manifest_text = default_manifest_text()
    entries = parse_manifest(manifest_text)
    needed = {
        e.family
        for e in entries
        if e.kind in ("minimal-candidates", "zero-candidates")
    }
    reports = {fam: minimal_candidates(fam, jobs=jobs) for fam in sorted(needed, key=lambda f: f.value)}
    findings = tuple(_check_entry(e, reports) for e in entries)
    return VerifyReport(findings)


def brute_force_candidates(family: Family) -> tuple[System, ...]:
    """Oracle: classify every partition of the whole universe, no pruning.

    Only feasible for the binary families (Bell(4) and Bell(6) partitions);
    validates that witness-type pruning loses no candidates.
    """
    universe = family.universe
    out = []
    seen = set()
    for parts in set_partitions(range(len(universe))):
        blocks = [b for b in parts if len(b) > 1]
        s = _system_from_index_blocks(universe, blocks)
        canon = canonicalize(s, family.signature)[0]
        if canon in seen:
            continue
        seen.add(canon)
        if classify_system(canon).is_candidate:
            out.append(canon)
    return tuple(sorted(out, key=system_key))
