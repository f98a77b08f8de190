"""Command-line front end: classification checks, clone listings, family
sweeps, and the reproducible verify-paper entry point.

Exit codes: 0 success/agreement, 1 verification mismatch (findings emitted),
2 usage or parse errors.  Output is byte-identical across runs for a fixed
configuration; worker results are merged in canonical order.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import algebra as alg
from . import classify, reducts
from .terms import App, ParseError, Symbol, canonicalize, format_system, parse_system

OUTPUT_DIR_ENV = "LINID_OUTPUT_DIR"

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    command: str
    modulus_bound: int = 64
    algebra_sizes: tuple[int, ...] = (2, 3, 4)
    output_dir: Optional[Path] = None
    output_format: str = "json"
    jobs: int = 1
    manifest: Optional[Path] = None
    recheck: bool = False

    def __post_init__(self) -> None:
        if self.modulus_bound < 2:
            raise ValueError("modulus bound must be at least 2")
        if self.jobs < 1:
            raise ValueError("parallelism degree must be at least 1")
        if self.output_format not in ("json", "markdown", "both"):
            raise ValueError("format must be json, markdown or both")


def _certificate_name(canonical_dsl: str) -> str:
    return hashlib.sha256(canonical_dsl.encode("utf-8")).hexdigest()[:16] + ".json"


def _dump(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True)


def _write(cfg: RunConfig, name: str, text: str) -> Optional[Path]:
    if cfg.output_dir is None:
        return None
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def check_certificate(s, cfg: RunConfig) -> dict:
    canon, _ = canonicalize(s)
    cls = classify.classify_system(s)
    ring = cls.ring_verdict.to_json()
    cert: dict = {
        "system": format_system(s),
        "canonical_system": format_system(canon),
        **ring,
        "holds_in_b": cls.holds_in_b.to_json(),
        "holds_in_a": cls.holds_in_a.to_json(),
        "is_candidate": cls.is_candidate,
    }
    linsys = reducts.coefficient_system(s)
    if not cls.ring_verdict.satisfiable:
        unsat_swept = all(
            reducts.solve_mod(linsys, n) is None
            for n in range(2, cfg.modulus_bound + 1)
        )
        cert["modulus_sweep"] = {
            "bound": cfg.modulus_bound,
            "all_unsatisfiable": unsat_swept,
        }
    sizes = {}
    for m in cfg.algebra_sizes:
        sizes[str(m)] = alg.holds_in(s, alg.majority_a(m)).satisfiable
    cert["holds_in_majority_sizes"] = sizes
    return cert


def recheck_certificate(cert: dict) -> bool:
    """Re-verify a persisted certificate from its own data."""
    s = parse_system(cert["system"])
    if cert["status"] == "satisfiable":
        n = cert["prime"]
        witness = {
            Symbol(name): reducts.AffineTerm(n, tuple(coeffs))
            for name, coeffs in cert["witness"].items()
        }
        if not reducts.verify_witness(s, n, witness):
            return False
    for key, algebra in (("holds_in_b", alg.semilattice_b()), ("holds_in_a", alg.majority_a(3))):
        verdict = cert[key]
        if verdict["satisfiable"]:
            witness = {}
            for name, op in verdict["witness"].items():
                sym = Symbol(name)
                witness[sym] = alg.OperationTable(
                    op["name"], algebra.size, sym.arity, tuple(op["table"])
                )
            assignments = _all_assignments(algebra.size, s.num_vars)
            for ident in s.identities:
                if _eval(ident.left, assignments, witness) != _eval(
                    ident.right, assignments, witness
                ):
                    return False
    return True


def _all_assignments(size: int, num_vars: int):
    return list(itertools.product(range(size), repeat=num_vars))


def _eval(term, assignments, witness):
    if isinstance(term, App):
        op = witness[term.sym]
        return tuple(op.apply(tuple(a[v] for v in term.pattern)) for a in assignments)
    return tuple(a[term.index] for a in assignments)


def _cmd_check(args, cfg: RunConfig) -> int:
    text = args.system
    if os.path.exists(text):
        text = Path(text).read_text(encoding="utf-8")
    s = parse_system(text)
    for warning in s.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    cert = check_certificate(s, cfg)
    print(_dump(cert))
    path = _write(cfg, _certificate_name(cert["canonical_system"]), _dump(cert) + "\n")
    if path is not None:
        print(f"certificate written to {path}", file=sys.stderr)
    if cfg.recheck:
        loaded = json.loads(path.read_text()) if path else cert
        if not recheck_certificate(loaded):
            print("error: certificate failed re-verification", file=sys.stderr)
            return EXIT_MISMATCH
        print("recheck: certificate re-verified", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# clone / reduct-terms
# ---------------------------------------------------------------------------


def _parse_algebra(spec: str) -> alg.FiniteAlgebra:
    if spec == "b":
        return alg.semilattice_b()
    if spec == "a":
        return alg.majority_a(3)
    if spec.startswith("a:"):
        return alg.majority_a(int(spec[2:]))
    if spec.startswith("reduct:"):
        return alg.reduct_algebra(int(spec[7:]))
    raise ValueError(f"unknown algebra {spec!r} (use b, a, a:<m> or reduct:<n>)")


def _cmd_clone(args, cfg: RunConfig) -> int:
    algebra = _parse_algebra(args.algebra)
    sl = alg.clone_slice(algebra, args.arity, cap=args.cap)
    data = {"algebra": algebra.to_json(), "slice": sl.to_json()}
    print(_dump(data))
    _write(cfg, f"clone_{args.algebra.replace(':', '_')}_{args.arity}.json", _dump(data) + "\n")
    return EXIT_OK


def _cmd_reduct_terms(args, cfg: RunConfig) -> int:
    terms = reducts.affine_terms(args.modulus, args.arity)
    if cfg.output_format == "json":
        print(_dump({"modulus": args.modulus, "arity": args.arity,
                     "count": len(terms), "terms": [str(t) for t in terms]}))
    else:
        for t in terms:
            print(t)
    return EXIT_OK


# ---------------------------------------------------------------------------
# enumerate / minimal
# ---------------------------------------------------------------------------


def _cmd_enumerate(args, cfg: RunConfig) -> int:
    family = classify.Family.parse(args.family)
    systems = classify.enumerate_family(family)
    if cfg.output_format == "json":
        print(_dump({"family": family.value, "count": len(systems),
                     "systems": [format_system(s) for s in systems]}))
    else:
        for s in systems:
            print(format_system(s) or "(empty system)")
    return EXIT_OK


def render_candidate_report_markdown(report: classify.CandidateReport) -> str:
    lines = [f"## Family {report.family.value}", ""]
    lines.append(f"- systems enumerated (canonical): {report.total_enumerated}")
    lines.append(f"- satisfiable in some finite-ring reduct: {report.num_ring_satisfiable}")
    lines.append(f"- failing in the two-element semilattice: {report.num_fails_b}")
    lines.append(f"- failing in the majority algebra: {report.num_fails_a}")
    lines.append(f"- candidates: {len(report.candidates)}")
    lines.append("")
    if report.candidates:
        lines.append("### Candidates")
        lines.append("")
        for record in report.minimality:
            mark = "minimal" if record.is_minimal else "not minimal"
            lines.append(f"- `{format_system(record.candidate)}` ({mark})")
            if not record.is_minimal:
                for weaker in record.weaker_candidates:
                    lines.append(f"  - weaker candidate: `{format_system(weaker)}`")
        lines.append("")
        lines.append("### Minimal candidates")
        lines.append("")
        for s in report.minimal_candidates:
            lines.append(f"- `{format_system(s)}`")
        lines.append("")
    return "\n".join(lines)


def _cmd_minimal(args, cfg: RunConfig) -> int:
    family = classify.Family.parse(args.family)
    report = classify.minimal_candidates(family, jobs=cfg.jobs)
    if cfg.output_format in ("json", "both"):
        print(_dump(report.to_json()))
    if cfg.output_format in ("markdown", "both"):
        print(render_candidate_report_markdown(report))
    _write(cfg, f"minimal_{family.value}.json", _dump(report.to_json()) + "\n")
    _write(cfg, f"minimal_{family.value}.md", render_candidate_report_markdown(report) + "\n")
    if cfg.output_dir is not None:
        written = []
        for cls in report.candidates:
            canon_dsl = format_system(cls.system)
            cert = {
                "system": canon_dsl,
                "canonical_system": canon_dsl,
                **cls.ring_verdict.to_json(),
                "holds_in_b": cls.holds_in_b.to_json(),
                "holds_in_a": cls.holds_in_a.to_json(),
                "is_candidate": cls.is_candidate,
            }
            written.append(_write(cfg, _certificate_name(canon_dsl), _dump(cert) + "\n"))
        if cfg.recheck:
            for path in written:
                if not recheck_certificate(json.loads(path.read_text())):
                    print(f"error: {path} failed re-verification", file=sys.stderr)
                    return EXIT_MISMATCH
            print(f"recheck: {len(written)} certificates re-verified", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-paper
# ---------------------------------------------------------------------------


_FAMILY_SECTION_ORDER = (
    classify.Family.SINGLE_BINARY,
    classify.Family.TWO_BINARY,
    classify.Family.SINGLE_TERNARY,
    classify.Family.BINARY_PLUS_TERNARY,
    classify.Family.TWO_TERNARY,
)


def render_verify_report_markdown(report: classify.VerifyReport) -> str:
    lines = ["# Expected-results verification", ""]
    lines.append(f"- entries checked: {len(report.findings)}")
    lines.append(f"- failures: {report.num_failed}")
    lines.append("")

    def emit(title: str, findings) -> None:
        if not findings:
            return
        lines.append(f"## {title}")
        lines.append("")
        for f in findings:
            status = "ok" if f.ok else "MISMATCH"
            lines.append(f"- [{status}] line {f.entry.line_no}: {f.entry.describe()}")
            if not f.ok:
                lines.append(f"  - {f.detail}")
        lines.append("")

    emit(
        "Term inventories",
        [f for f in report.findings if f.entry.kind == "affine-table"],
    )
    for family in _FAMILY_SECTION_ORDER:
        emit(
            f"Systems on {family.value}",
            [f for f in report.findings if f.entry.family is family],
        )
    return "\n".join(lines)


def _cmd_verify_paper(args, cfg: RunConfig) -> int:
    manifest_text = None
    if cfg.manifest is not None:
        manifest_text = cfg.manifest.read_text(encoding="utf-8")
    try:
        report = classify.verify_paper(manifest_text, jobs=cfg.jobs)
    except classify.ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.output_format in ("json", "both"):
        print(_dump(report.to_json()))
    if cfg.output_format in ("markdown", "both"):
        print(render_verify_report_markdown(report))
    _write(cfg, "verify_report.json", _dump(report.to_json()) + "\n")
    _write(cfg, "verify_report.md", render_verify_report_markdown(report) + "\n")
    if not report.ok:
        for f in report.findings:
            if not f.ok:
                print(
                    f"mismatch: line {f.entry.line_no}: {f.entry.describe()}: {f.detail}",
                    file=sys.stderr,
                )
        return EXIT_MISMATCH
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", "-o", type=Path, default=None,
                        help=f"directory for reports and certificates (default ${OUTPUT_DIR_ENV})")
    common.add_argument("--format", choices=("json", "markdown", "both"), default="json")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for family sweeps")
    common.add_argument("--modulus-bound", type=int, default=64,
                        help="upper bound for the per-modulus unsatisfiability sweep")
    common.add_argument("--sizes-a", type=str, default="2,3,4",
                        help="majority-algebra sizes probed by check")
    common.add_argument("--recheck", action="store_true",
                        help="re-verify persisted certificates after writing them")

    parser = argparse.ArgumentParser(
        prog="linid",
        description="Classify systems of linear identities on at-most-ternary idempotent terms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common],
                       help="classify one system (DSL text or file)")
    p.add_argument("system")

    p = sub.add_parser("clone", parents=[common],
                       help="print a clone slice of a built-in algebra")
    p.add_argument("algebra", help="b | a | a:<m> | reduct:<n>")
    p.add_argument("arity", type=int)
    p.add_argument("--cap", type=int, default=4096)

    p = sub.add_parser("reduct-terms", parents=[common],
                       help="idempotent affine operations over Z_n")
    p.add_argument("modulus", type=int)
    p.add_argument("--arity", type=int, default=3)

    p = sub.add_parser("enumerate", parents=[common],
                       help="canonical systems of a family")
    p.add_argument("family")

    p = sub.add_parser("minimal", parents=[common],
                       help="candidates and minimal candidates of a family")
    p.add_argument("family")

    p = sub.add_parser("verify-paper", parents=[common],
                       help="check the bundled expected-results manifest")
    p.add_argument("--manifest", type=Path, default=None)

    return parser


def _config_from_args(args) -> RunConfig:
    output_dir = args.output_dir
    if output_dir is None and os.environ.get(OUTPUT_DIR_ENV):
        output_dir = Path(os.environ[OUTPUT_DIR_ENV])
    sizes = tuple(int(x) for x in args.sizes_a.split(",") if x)
    return RunConfig(
        command=args.command,
        modulus_bound=args.modulus_bound,
        algebra_sizes=sizes,
        output_dir=output_dir,
        output_format=args.format,
        jobs=args.jobs,
        manifest=getattr(args, "manifest", None),
        recheck=args.recheck,
    )


_COMMANDS = {
    "check": _cmd_check,
    "clone": _cmd_clone,
    "reduct-terms": _cmd_reduct_terms,
    "enumerate": _cmd_enumerate,
    "minimal": _cmd_minimal,
    "verify-paper": _cmd_verify_paper,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = _config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, cfg)
    except (ParseError, classify.ManifestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
