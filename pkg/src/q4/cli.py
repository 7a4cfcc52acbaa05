"""Command-line front end.

Exit codes: 0 success, 2 malformed input or usage error, 3 verification
failure (an exact count or structure law failed to check out -- never
expected on healthy code, and kept distinct so CI can treat it as a
falsified claim rather than a broken invocation).
"""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
import time

from .space import CellSet, FormatError, InvariantViolation, complement, layer
from . import dcodes
from . import quasigroups as qg
from . import census


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def _read_file(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None


# -- dcode ---------------------------------------------------------------------


def _cmd_dcode_analyze(args) -> int:
    s = CellSet.parse(_read_file(args.file))
    out = [f"n={s.n}", f"cardinality={len(s)}"]
    mds = dcodes.is_mds_code(s)
    dcode = dcodes.is_double_code(s)
    dmds = dcodes.is_double_mds_code(s)
    out.append(f"mds_code={_fmt_bool(mds)}")
    out.append(f"double_code={_fmt_bool(dcode)}")
    out.append(f"double_mds_code={_fmt_bool(dmds)}")
    if dcode and s:
        gamma = len(dcodes.prime_components(s))
        out.append(f"gamma={gamma}")
    else:
        out.append("gamma=na")
    if dmds:
        splittable = dcodes.is_splittable(s)
        out.append(f"splittable={_fmt_bool(splittable)}")
        out.append(
            f"split_count={len(dcodes.enumerate_mds_splits(s)) if splittable else 0}"
        )
        out.append(f"k={dcodes.xor_factorize(s).k}")
    else:
        out.append("splittable=na")
        out.append("split_count=na")
        out.append("k=na")
    form = dcodes.is_linear_double_code(s)
    out.append(f"linear={_fmt_bool(form is not None)}")
    if form is not None:
        subs = ";".join("".join(map(str, sorted(sub))) for sub in form.chi)
        out.append(f"linear_form={form.chi0};{subs}")
    else:
        out.append("linear_form=na")
    print("\n".join(out))
    return 0


# -- quasi ---------------------------------------------------------------------


def _cmd_quasi_classify(args) -> int:
    f = qg.Quasigroup.parse(_read_file(args.file))
    flags = [f"n={f.n}"]
    flags.append(f"reduced={_fmt_bool(qg.is_reduced(f))}")
    flags.append(f"linear={_fmt_bool(qg.is_linear(f))}")
    pair = qg.is_semilinear(f)
    flags.append(f"semilinear={'(%d,%d)' % pair if pair else 'none'}")
    if f.n < 3:
        flags.append("decomposable=na")
    else:
        dec = qg.find_decomposition(f)
        if dec is None:
            flags.append("decomposable=none")
        else:
            flags.append("decomposable=(%s)" % ",".join(map(str, dec.inner_coords)))
    print(" ".join(flags))
    return 0


def _cmd_quasi_reduce(args) -> int:
    f = qg.Quasigroup.parse(_read_file(args.file))
    red = qg.reduce(f)
    for i, tau in enumerate(red.equivalence.taus):
        print(f"tau{i}={''.join(map(str, tau))}")
    text = red.reduced.to_text()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0


# -- census --------------------------------------------------------------------


def _report_lines(report: census.CensusReport) -> list[str]:
    d = report.to_json_dict()
    out = []
    for key in ("n", "v_star", "k_star", "formula_k_star", "r_star",
                "t_star", "w_star"):
        v = d[key]
        out.append(f"{key}={'na' if v is None else v}")
    for b in report.bounds:
        out.append(
            f"bound[{b.name}]: {b.lhs} {b.relation} {b.rhs} "
            f"holds={_fmt_bool(b.holds)}"
        )
    out.append(f"node_count={d['node_count']}")
    out.append(f"runtime_ms={d['runtime_ms']}")
    return out


def _cmd_census_run(args) -> int:
    n = args.n
    if n >= census.LONG_RUN_MIN_ARITY and not args.long_run:
        raise FormatError(
            f"arity {n} census is a long run; pass --long-run to confirm"
        )
    if n >= census.LONG_RUN_MIN_ARITY and (args.checkpoint or args.max_prefixes):
        count, nodes, complete = census.long_census(
            n, jobs=args.jobs, checkpoint=args.checkpoint,
            max_prefixes=args.max_prefixes,
        )
        payload = {"n": n, "v_star": count, "node_count": nodes,
                   "complete": complete}
        print(json.dumps(payload, indent=2))
        return 0
    if args.classify or n >= census.LONG_RUN_MIN_ARITY:
        report = census.classify_census(n, jobs=args.jobs, long_run=args.long_run)
    else:
        start = time.monotonic()
        count, nodes = (census._parallel_count(n, args.jobs) if args.jobs > 1
                        else census._search_reduced(n, None))
        report = census.CensusReport(
            n=n, v_star=count, k_star=None,
            formula_k_star=census.formula_k_star(n),
            r_star=None, t_star=None, w_star=None,
            node_count=nodes,
            runtime_ms=int((time.monotonic() - start) * 1000),
        )
    if args.format == "json":
        print(json.dumps(report.to_json_dict(), indent=2))
    else:
        print("\n".join(_report_lines(report)))
    return 0


# -- verify --------------------------------------------------------------------


def _cmd_verify(args) -> int:
    target = args.target
    if target == "theorem1":
        return _verify_theorem1(args)
    if target == "theorem2":
        return _verify_theorem2(args)
    if target == "inequalities":
        return _verify_inequalities(args)
    if target == "props":
        return _verify_props(args)
    raise FormatError(f"unknown verification target: {target}")


def _verify_theorem1(args) -> int:
    n = args.n
    if not 1 <= n <= 4:
        raise FormatError("theorem1 verification needs a classified census (n <= 4)")
    report = census.classify_census(n)
    holds = report.k_star == report.formula_k_star
    print(f"theorem1 n={n} k_star={report.k_star} "
          f"formula={report.formula_k_star} holds={_fmt_bool(holds)}")
    return 0 if holds else 3


def _verify_theorem2(args) -> int:
    n = args.n
    if n <= 4:
        table = {n: census.classify_census(n).v_star}
    else:
        table = census.KNOWN_REDUCED_COUNTS
    verdict = census.verify_theorem2(n, table)
    parts = [f"theorem2 n={n}", f"applicable={_fmt_bool(verdict.applicable)}"]
    if verdict.applicable:
        parts.append(f"holds={_fmt_bool(bool(verdict.sandwich_holds))}")
    parts.append(f"lower={verdict.lower}")
    parts.append(f"v={verdict.v}")
    parts.append(f"upper={verdict.upper}")
    if verdict.lower_holds is not None:
        parts.append(f"lower_bound_holds={_fmt_bool(verdict.lower_holds)}")
    print(" ".join(parts))
    failed = (verdict.applicable and not verdict.sandwich_holds) or (
        verdict.lower_holds is False
    )
    return 3 if failed else 0


def _verify_inequalities(args) -> int:
    checks = census.verify_inequalities(args.n)
    ok = True
    for b in checks:
        print(f"{b.name}: {b.lhs} {b.relation} {b.rhs} holds={_fmt_bool(b.holds)}")
        ok = ok and b.holds
    print(f"inequalities n={args.n} checked={len(checks)} holds={_fmt_bool(ok)}")
    return 0 if ok else 3


def _verify_props(args) -> int:
    """Sampled structure-law sweep over generated double-MDS-codes."""
    n = args.n
    if n not in (2, 3):
        raise FormatError("property sweep supports n in {2, 3}")
    rng = random.Random(args.seed)
    limit = args.samples if n == 3 else None
    corpus = [s for s in dcodes.enumerate_double_mds_codes(n, limit=limit)]
    mds_codes = _all_mds_bits(n)
    failures = 0
    split_count = 0
    for s in corpus:
        parts = dcodes.split_parts(s)
        if parts is None:
            continue
        split_count += 1
        gamma = len(dcodes.prime_components(s))
        direct = sum(1 for c in mds_codes if c & ~s.bits == 0)
        if direct != 2 ** gamma or len(dcodes.mds_subcodes(s)) != 2 ** gamma:
            failures += 1
    print(f"prop_mds_split_count checked={split_count} failures={failures}")

    pair_failures = 0
    pairs_checked = 0
    for _ in range(min(args.samples, len(corpus) ** 2)):
        s1 = rng.choice(corpus)
        s2 = rng.choice(corpus)
        core = dcodes.double_code_core(s1 & s2)
        if core and s1 != s2:
            pair_failures += 1
        core_diff = dcodes.double_code_core(s1 - s2)
        if core_diff and s1 != complement(s2):
            pair_failures += 1
        pairs_checked += 1
    print(f"prop_unique_extension checked={pairs_checked} failures={pair_failures}")

    anti_failures = 0
    anti_checked = 0
    if n >= 2:
        for s in corpus:
            if not dcodes.is_splittable(s):
                continue
            for k in range(1, n + 1):
                for a in range(4):
                    lay = layer(s, k, a)
                    if dcodes.is_linear_double_code(lay) is None:
                        continue
                    anti_checked += 1
                    try:
                        dcodes.find_linear_antilayer(s, k, a)
                    except InvariantViolation:
                        anti_failures += 1
    print(f"prop_linear_antilayer checked={anti_checked} failures={anti_failures}")
    total = failures + pair_failures + anti_failures
    print(f"props n={n} seed={args.seed} failures={total}")
    return 0 if total == 0 else 3


def _all_mds_bits(n: int) -> list[int]:
    """All MDS codes of dimension n as bit vectors (graphs of (n-1)-ary
    quasigroups), for the independent inclusion count."""
    if n == 1:
        return [1 << a for a in range(4)]
    tables: list[tuple[int, ...]] = []
    census.enumerate_reduced(n - 1, tables.append)
    out = []
    reduced_perms = [p for p in itertools.permutations(range(4)) if p[0] == 0]
    for t in tables:
        g = qg.Quasigroup._trusted(n - 1, t)
        for tau0c in range(4):
            tau0 = [0, 1, 2, 3]
            tau0[0], tau0[tau0c] = tau0[tau0c], tau0[0]
            for combo in itertools.product(reduced_perms, repeat=n - 1):
                e = qg.QEquivalence(
                    tuple(range(1, n)), (tuple(tau0),) + tuple(combo)
                )
                out.append(qg.graph_code(e.apply(g)).bits)
    return out


# -- driver ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="q4",
        description="structure and exact census of order-4 quasigroups, "
                    "MDS codes and double-codes",
    )
    sub = p.add_subparsers(dest="command", required=True)

    dcode = sub.add_parser("dcode", help="double-code analysis")
    dsub = dcode.add_subparsers(dest="subcommand", required=True)
    an = dsub.add_parser("analyze", help="analyse a cell-set file")
    an.add_argument("file")
    an.set_defaults(func=_cmd_dcode_analyze)

    quasi = sub.add_parser("quasi", help="quasigroup operations")
    qsub = quasi.add_subparsers(dest="subcommand", required=True)
    qc = qsub.add_parser("classify", help="classify a value-table file")
    qc.add_argument("file")
    qc.set_defaults(func=_cmd_quasi_classify)
    qr = qsub.add_parser("reduce", help="canonical reduced form")
    qr.add_argument("file")
    qr.add_argument("-o", "--output", help="write the reduced table here")
    qr.set_defaults(func=_cmd_quasi_reduce)

    cen = sub.add_parser("census", help="exhaustive census")
    csub = cen.add_subparsers(dest="subcommand", required=True)
    cr = csub.add_parser("run", help="count (and classify) reduced tables")
    cr.add_argument("--n", type=int, required=True)
    cr.add_argument("--classify", action="store_true")
    cr.add_argument("--jobs", type=int, default=1)
    cr.add_argument("--long-run", action="store_true")
    cr.add_argument("--checkpoint", help="checkpoint file for long runs")
    cr.add_argument("--max-prefixes", type=int,
                    help="process at most this many search prefixes")
    cr.add_argument("--format", choices=("text", "json"), default="json")
    cr.set_defaults(func=_cmd_census_run)

    ver = sub.add_parser("verify", help="verify counting laws")
    ver.add_argument("target",
                     choices=("theorem1", "theorem2", "inequalities", "props"))
    ver.add_argument("--n", type=int, required=True)
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--samples", type=int, default=1000)
    ver.set_defaults(func=_cmd_verify)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
