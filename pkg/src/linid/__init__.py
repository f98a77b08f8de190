"""linid: classification of linear identity systems on two at-most-ternary
idempotent terms against the two test algebras and all finite-ring module
reducts."""

from .terms import (
    App,
    Identity,
    ParseError,
    Partition,
    Symbol,
    SymmetryElement,
    System,
    TermUniverse,
    Var,
    apply_symmetry,
    canonicalize,
    format_system,
    mirror,
    parse_system,
    partition_closure,
    substitute_variable,
    symmetry_group,
    system,
    term_universe,
    weakenings,
)
from .algebra import (
    CloneCapExceeded,
    CloneSlice,
    FiniteAlgebra,
    OperationTable,
    SatVerdict,
    check_wnu_bridge,
    clone_slice,
    holds_in,
    induced_partition,
    majority_a,
    reduct_algebra,
    semilattice_b,
)
from .reducts import (
    AffineTerm,
    LinearSystem,
    RingVerdict,
    affine_terms,
    coefficient_system,
    parse_affine,
    solve_mod,
    solve_some_finite_ring,
    substitution_lemma_check,
    verify_witness,
)
from .classify import (
    CandidateReport,
    Classification,
    Family,
    VerifyReport,
    classify_system,
    enumerate_family,
    master_partitions,
    minimal_candidates,
    verify_paper,
)

__version__ = "0.1.0"
