import json
import random

import pytest

from linid.classify import (
    Family,
    ManifestError,
    brute_force_candidates,
    classify_system,
    enumerate_family,
    master_partitions,
    minimal_candidates,
    parse_manifest,
    verify_paper,
)
from linid.algebra import holds_in, majority_a
from linid.terms import (
    Symbol,
    Var,
    apply_symmetry,
    canonicalize,
    format_system,
    parse_system,
    symmetry_group,
)

S4 = "p(x,x,y)=p(x,y,y); p(x,y,x)=q(x,x,y)=q(x,y,x)=q(y,x,x)"
S5 = "x=q(x,y,x); p(x,y,y)=p(x,y,x); p(x,x,y)=q(x,x,y)=q(y,x,x)"
S7 = "x=p(x,x,y); p(x,y,x)=p(y,x,x)=q(y,x,x)=q(x,y,x)=q(x,x,y)"
MASTER2 = "x=p(x,x,y)=p(x,y,y)=p(x,y,x)=q(x,x,y)=q(x,y,x)=q(y,x,x)"
MASTER6 = "x=p(x,x,y)=p(x,y,x)=p(y,x,x)=q(y,x,x)=q(x,y,x)=q(x,x,y)"


def canon(text, family=Family.TWO_TERNARY):
    return canonicalize(parse_system(text), family.signature)[0]


def test_family_parsing():
    assert Family.parse("twoternary") is Family.TWO_TERNARY
    assert Family.parse("SingleBinary") is Family.SINGLE_BINARY
    with pytest.raises(ValueError):
        Family.parse("nope")


def test_master_partitions_two_ternary():
    masters = dict(master_partitions(Family.TWO_TERNARY))
    assert len(masters) == 16
    u = Family.TWO_TERNARY.universe

    key = ((Symbol.P, "pi1"), (Symbol.Q, "maj"))
    part = masters[key]
    assert {str(t) for t in part.block_of(Var(0))} == {
        "x", "p(x,x,y)", "p(x,y,y)", "p(x,y,x)",
        "q(x,x,y)", "q(x,y,x)", "q(y,x,x)",
    }
    # every master splits the universe into the x side and the mirrored y side
    for part in masters.values():
        assert len(part.blocks) == 2
        assert all(len(b) == 7 for b in part.blocks)

    key = ((Symbol.P, "maj"), (Symbol.Q, "maj"))
    assert {str(t) for t in masters[key].block_of(Var(0))} == {
        "x", "p(x,x,y)", "p(x,y,x)", "p(y,x,x)",
        "q(x,x,y)", "q(x,y,x)", "q(y,x,x)",
    }


def test_master_partition_counts_other_families():
    assert len(master_partitions(Family.SINGLE_BINARY)) == 2
    assert len(master_partitions(Family.TWO_BINARY)) == 4
    assert len(master_partitions(Family.SINGLE_TERNARY)) == 4
    assert len(master_partitions(Family.BINARY_PLUS_TERNARY)) == 8


def test_enumerate_contains_the_three_candidates():
    stream = enumerate_family(Family.TWO_TERNARY)
    assert len(stream) == len(set(stream))
    for text in (S4, S5, S7):
        assert canon(text) in stream
    # the empty system appears exactly once
    empties = [s for s in stream if not s.identities]
    assert len(empties) == 1


def test_enumerate_single_binary_contents():
    stream = enumerate_family(Family.SINGLE_BINARY)
    rendered = sorted(format_system(s) for s in stream)
    assert rendered == ["", "x=t(x,y)"]


def test_enumerated_systems_hold_in_majority_by_construction():
    a = majority_a(3)
    for family in Family:
        for s in enumerate_family(family):
            assert holds_in(s, a).satisfiable, format_system(s)


def test_classify_examples():
    cls = classify_system(parse_system(S4))
    assert cls.is_candidate
    assert not cls.ring_verdict.satisfiable
    assert cls.holds_in_b.satisfiable and cls.holds_in_a.satisfiable

    cls = classify_system(parse_system(MASTER2))
    assert not cls.holds_in_b.satisfiable
    assert not cls.is_candidate

    weakened = parse_system("p(x,y,x)=q(x,x,y)=q(x,y,x)=q(y,x,x)")
    cls = classify_system(weakened)
    assert cls.ring_verdict.satisfiable
    assert not cls.is_candidate
    # the published witness works mod 5 even though the least prime is smaller
    from linid.reducts import AffineTerm, verify_witness

    both = {s: AffineTerm(5, (2, 2, 2)) for s in (Symbol.P, Symbol.Q)}
    assert verify_witness(weakened, 5, both)


def test_classification_symmetry_invariance_sample():
    rng = random.Random(41)
    grp = symmetry_group(Family.TWO_TERNARY.signature, 2)
    for text in (S4, S5, S7, MASTER2, MASTER6):
        s = parse_system(text)
        base = classify_system(s)
        for g in rng.sample(grp, 5):
            moved = classify_system(apply_symmetry(s, g))
            assert moved.is_candidate == base.is_candidate
            assert moved.ring_verdict.satisfiable == base.ring_verdict.satisfiable
            assert moved.holds_in_b.satisfiable == base.holds_in_b.satisfiable
            assert moved.holds_in_a.satisfiable == base.holds_in_a.satisfiable


@pytest.fixture(scope="module")
def two_ternary_report():
    return minimal_candidates(Family.TWO_TERNARY)


def test_minimal_two_ternary(two_ternary_report):
    report = two_ternary_report
    assert set(report.minimal_candidates) == {canon(S4), canon(S5), canon(S7)}
    assert set(report.minimal_candidates) <= {c.system for c in report.candidates}


def test_weakenings_of_candidates_counted(two_ternary_report):
    by_system = {r.candidate: r for r in two_ternary_report.minimality}
    s4 = by_system[canon(S4)]
    s7 = by_system[canon(S7)]
    # product of Bell numbers of block sizes, minus the partition itself
    assert len(s4.weakenings) == 2 * 15 - 1
    assert len(s7.weakenings) == 2 * 52 - 1
    for record in (s4, s7):
        assert record.is_minimal
        for weak in record.weakenings:
            assert weak.ring_verdict.satisfiable
            assert weak.ring_verdict.prime in (2, 3, 5)


def test_non_minimal_candidates_point_to_weaker_ones(two_ternary_report):
    minimal = two_ternary_report.minimal_candidates
    for record in two_ternary_report.minimality:
        if record.is_minimal:
            continue
        assert record.weaker_candidates
        for weaker in record.weaker_candidates:
            # a weaker candidate is itself a candidate of the family
            assert weaker in {c.system for c in two_ternary_report.candidates}
        # and some minimal candidate lies strictly below it
        assert record.minimal_below(minimal)


def test_candidate_weakenings_hold_in_both_algebras(two_ternary_report):
    from linid.algebra import semilattice_b

    b, a = semilattice_b(), majority_a(3)
    record = next(r for r in two_ternary_report.minimality if r.candidate == canon(S4))
    for weak in record.weakenings:
        assert holds_in(weak.system, b).satisfiable
        assert holds_in(weak.system, a).satisfiable


@pytest.mark.parametrize(
    "family",
    [Family.SINGLE_BINARY, Family.TWO_BINARY, Family.SINGLE_TERNARY, Family.BINARY_PLUS_TERNARY],
)
def test_zero_candidate_families(family):
    report = minimal_candidates(family)
    assert report.candidates == ()
    assert report.minimal_candidates == ()


@pytest.mark.parametrize("family", [Family.SINGLE_BINARY, Family.TWO_BINARY])
def test_brute_force_oracle_matches_pruned_enumeration(family):
    # classify every partition of the full universe, no witness-type pruning
    brute = set(brute_force_candidates(family))
    pruned = {
        c.system for c in minimal_candidates(family).candidates
    }
    assert brute == pruned == set()


def test_report_determinism():
    a = minimal_candidates(Family.SINGLE_TERNARY).to_json()
    b = minimal_candidates(Family.SINGLE_TERNARY).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_enumeration_determinism():
    first = [format_system(s) for s in enumerate_family(Family.BINARY_PLUS_TERNARY)]
    second = [format_system(s) for s in enumerate_family(Family.BINARY_PLUS_TERNARY)]
    assert first == second


def test_parallel_classification_preserves_order():
    from linid.classify import _classify_batch

    systems = enumerate_family(Family.TWO_TERNARY)[:80]
    serial = _classify_batch(systems, jobs=1)
    parallel = _classify_batch(systems, jobs=2)
    assert [c.to_json() for c in serial] == [c.to_json() for c in parallel]


def test_fast_canonical_path_agrees_with_canonicalize():
    from conftest import random_system
    from linid.classify import (
        _canonical_blocks,
        _index_perms,
        _system_from_index_blocks,
    )

    family = Family.TWO_TERNARY
    u = family.universe
    perms = _index_perms(u)
    rng = random.Random(9)
    for _ in range(50):
        s = random_system(rng)
        blocks = [tuple(u.index(t) for t in b) for b in s.blocks()]
        _, best = _canonical_blocks(blocks, perms)
        assert _system_from_index_blocks(u, best) == canonicalize(s, family.signature)[0]


def test_manifest_parser_errors():
    with pytest.raises(ManifestError):
        parse_manifest("bogus-kind | TwoTernary | x=t(x,y)")
    with pytest.raises(ManifestError):
        parse_manifest("holds-mod | TwoTernary | p(x | 5 | p=x | q=x")
    entries = parse_manifest(
        "# comment\n\nholds-mod | TwoTernary | p(x,x,y)=q(x,x,y) | 2 | p=x | q=x\n"
    )
    assert len(entries) == 1
    assert entries[0].modulus == 2


def test_verify_paper_reports_mismatch_instead_of_raising():
    bad = "ring-unsat | TwoTernary | p(x,x,y)=q(x,x,y)\n"
    report = verify_paper(bad)
    assert not report.ok
    assert report.num_failed == 1
    assert "mod" in report.findings[0].detail


def test_verify_paper_witness_mismatch_detected():
    bad = "holds-mod | TwoTernary | p(x,x,y)=p(x,y,y) | 5 | p=2x+2y+2z | q=x\n"
    report = verify_paper(bad)
    assert not report.ok
