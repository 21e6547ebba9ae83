"""``pfc``: count definable sets and fit counting polynomials from the shell.

Exit status is 0 on success, 2 when an analysis runs but fails (no fit,
unstable classes, failed certification, invalid members) and 1 on usage
or input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    AnalysisError,
    fit_counting_polynomials,
    make_selector,
    ndim_certify,
    num_bound,
    zero_one_scan,
)
from .counting import (
    DEFAULT_BUDGET,
    AssignmentError,
    BudgetError,
    count_solutions,
    fiber_spectrum,
    verify_quotient_identity,
    verify_sum_identity,
)
from .logic import ParseError, VariablePartition, free_variables, is_sentence, to_text
from .reports import render
from .structures import (
    FamilyError,
    build_member,
    check_axioms,
    check_sizes_nondecreasing,
    load_family,
    validate_structure,
)

log = logging.getLogger("pfcount")

EXIT_OK, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2


class UsageError(Exception):
    pass


DATA_DIR = Path(__file__).with_name("data")


def resolve_family_path(path: str) -> Path:
    """Use ``path`` if it exists, else a shipped family of the same file name."""
    p = Path(path)
    if p.exists() or p.parent != Path("."):
        return p
    shipped = DATA_DIR / p.name
    return shipped if shipped.exists() else p


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _vars(text: str | None) -> tuple[str, ...] | None:
    if text is None:
        return None
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _read_arg(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text()
    return value


def _sentences_arg(values: list[str]) -> list[str]:
    out = []
    for value in values:
        if value.startswith("@"):
            for line in Path(value[1:]).read_text().splitlines():
                line = line.strip()
                if line and not line.startswith("#"):
                    out.append(line)
        else:
            out.append(value)
    return out


def _indices(text: str | None, family):
    if text is None:
        return None
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"--indices must look like LO..HI, got {text!r}") from None
    if hi < lo:
        raise UsageError(f"empty index range {text}")
    dlo, dhi = family.index_domain
    if lo < dlo or hi > dhi:
        raise UsageError(f"index range {lo}..{hi} is outside the family's domain {dlo}..{dhi}")
    return range(lo, hi + 1)


def _assignment(text: str | None) -> dict[str, int]:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, val = item.partition("=")
        try:
            out[name.strip()] = int(val)
        except ValueError:
            raise UsageError(f"--at entries must look like var=element, got {item!r}") from None
    return out


def _partition(formula, args, fixed=()) -> VariablePartition:
    params = _vars(args.param) or ()
    objects = _vars(args.object)
    if objects is None:
        objects = tuple(v for v in free_variables(formula) if v not in params and v not in fixed)
    return VariablePartition(objects, params)


def _selector(family, args):
    if not args.q:
        return None
    theta_text, _, kappa_text = args.q.partition(";")
    theta = family.parse(theta_text)
    kappa = family.parse(kappa_text) if kappa_text.strip() else None
    return make_selector(theta, kappa)


def _formula(family, args):
    if not args.formula:
        raise UsageError("--formula is required")
    if len(args.formula) != 1:
        raise UsageError("this command takes exactly one --formula")
    return family.parse(_read_arg(args.formula[0]).strip())


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_count(family, args):
    f = _formula(family, args)
    at = _assignment(args.at)
    part = _partition(f, args, fixed=tuple(at))
    member = build_member(family, args.index)
    n = count_solutions(member, f, part, at, args.budget)
    return {
        "command": "count",
        "formula": to_text(f),
        "index": args.index,
        "object_vars": list(part.object_vars),
        "parameter_vars": list(part.parameter_vars),
        "assignment": at,
        "count": n,
    }, True


def cmd_spectrum(family, args):
    f = _formula(family, args)
    outer = _assignment(args.at)
    part = _partition(f, args, fixed=tuple(outer))
    member = build_member(family, args.index)
    spec = fiber_spectrum(member, f, part, outer, args.budget)
    sums = verify_sum_identity(spec, member, f, part, outer, args.budget)
    quotient = verify_quotient_identity(member, f, part, outer, args.budget)
    report = {
        "command": "spectrum",
        "formula": to_text(f),
        "index": args.index,
        "assignment": outer,
        "spectrum": spec.to_dict(members=True),
        "sum_identity": {"holds": sums.holds, "direct_total": sums.direct_total,
                         "weighted_sum": sums.weighted_sum},
        "quotient_identity": quotient.to_dict(),
    }
    return report, sums.holds and (quotient.holds or not quotient.applicable)


def cmd_fit(family, args, full=False):
    f = _formula(family, args)
    part = _partition(f, args)
    report = fit_counting_polynomials(family, f, part, _selector(family, args),
                                      _indices(args.indices, family), args.budget, args.jobs)
    return report.to_dict(full=full), report.ok


def cmd_mec(family, args):
    return cmd_fit(family, args, full=True)


def cmd_ndim(family, args):
    if args.N is None:
        raise UsageError("ndim needs --N")
    f = _formula(family, args)
    part = _partition(f, args)
    report = ndim_certify(family, f, part, _selector(family, args), _indices(args.indices, family),
                          args.N, args.rel_tol, args.budget, args.jobs)
    return report.to_dict(), report.passed


def cmd_zero_one(family, args):
    if not args.formula:
        raise UsageError("zero-one needs at least one --formula")
    sentences = [family.parse(t) for t in _sentences_arg(args.formula)]
    indices = _indices(args.indices, family)
    results = zero_one_scan(family, sentences, indices)
    sampled = list(indices) if indices is not None else list(
        range(family.index_domain[0], min(family.index_domain[1], family.index_domain[0] + 11) + 1))
    report = {
        "command": "zero-one",
        "sampled_indices": sampled,
        "sentences": [r.to_dict() for r in results],
    }
    return report, all(r.stabilized for r in results)


def cmd_num_bound(family, args):
    f = _formula(family, args)
    part = _partition(f, args)
    nb = num_bound(family, f, part, _indices(args.indices, family), _selector(family, args),
                   args.budget, args.jobs)
    report = {"command": "num-bound", "formula": to_text(f), **nb.to_dict()}
    return report, nb.bound is not None


def cmd_validate(family, args):
    indices = _indices(args.indices, family) or family.indices
    sentences = [family.parse(t) for t in _sentences_arg(args.formula or [])]
    for s in sentences:
        if not is_sentence(s):
            raise UsageError(f"validate only checks sentences; {to_text(s)} has free variables")
    members = []
    valid = True
    for i in indices:
        m = build_member(family, i)
        problems = validate_structure(m, family.signature)
        entry = {"index": i, "size": m.size, "violations": problems}
        if sentences:
            entry["sentences"] = check_axioms(m, sentences)
            valid = valid and all(entry["sentences"])
        valid = valid and not problems
        members.append(entry)
    order = check_sizes_nondecreasing(family, indices)
    report = {
        "command": "validate",
        "family_kind": family.kind,
        "valid": valid and not order,
        "size_order_violations": order,
        "sentences": [to_text(s) for s in sentences],
        "members": members,
    }
    return report, report["valid"]


COMMANDS = {
    "count": cmd_count,
    "spectrum": cmd_spectrum,
    "fit": cmd_fit,
    "mec": cmd_mec,
    "ndim": cmd_ndim,
    "zero-one": cmd_zero_one,
    "num-bound": cmd_num_bound,
    "validate": cmd_validate,
}

_HELP = {
    "count": "count the solutions of a formula in one member",
    "spectrum": "group parameter tuples of one member by fiber size",
    "fit": "fit counting polynomials in q across members",
    "mec": "fit, with every class listed in full",
    "ndim": "certify (mu, d) pairs against |M|^(d/N)",
    "zero-one": "check whether sentences stabilize along the family",
    "num-bound": "empirical bound on sizes of finite fibers",
    "validate": "check members against the signature (and optional sentences)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pfc", description="Definable-set counting over families of finite structures.")
    parser.add_argument("--version", action="version", version=f"pfc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--family", required=True, metavar="PATH", help="family spec JSON file")
        p.add_argument("--formula", action="append", metavar="STR|@FILE",
                       help="formula text, or @FILE to read it (zero-one/validate: one sentence per line)")
        p.add_argument("--object", metavar="VARS", help="comma-separated object variables")
        p.add_argument("--param", metavar="VARS", help="comma-separated parameter variables")
        p.add_argument("--q", metavar="THETA[;KAPPA]", help="formula whose size is q, optional parameter filter")
        p.add_argument("--indices", metavar="LO..HI", help="sampled member indices")
        p.add_argument("--index", type=int, metavar="INT", help="member index (count, spectrum)")
        p.add_argument("--at", metavar="VAR=ELEM,...", help="fixed values for parameters / other free variables")
        p.add_argument("--N", type=int, metavar="INT", help="claimed dimension for ndim")
        p.add_argument("--rel-tol", type=float, default=1e-3, metavar="FLOAT")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, metavar="INT",
                       help="maximum tuples to enumerate")
        p.add_argument("--format", choices=("json", "table", "csv"), default="table")
        p.add_argument("--jobs", type=int, default=1, metavar="INT", help="worker processes for member-level work")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=stderr)

    try:
        if args.rel_tol <= 0:
            raise UsageError("--rel-tol must be positive")
        if args.budget <= 0:
            raise UsageError("--budget must be positive")
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if args.command in ("count", "spectrum") and args.index is None:
            raise UsageError(f"{args.command} needs --index")
        family = load_family(resolve_family_path(args.family))
        report, ok = COMMANDS[args.command](family, args)
    except (UsageError, ParseError, FamilyError, BudgetError, AnalysisError, AssignmentError, OSError) as exc:
        print(f"pfc {args.command}: error: {exc}", file=stderr)
        return EXIT_INPUT

    stdout.write(render(report, args.format))
    if not ok:
        print(f"pfc {args.command}: analysis failed; see diagnostics", file=stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
