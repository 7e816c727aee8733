"""Command-line front end.

Exit codes for the membership subcommand: 0 means the feature occurs
in some explanation, 1 means it does not, 2 means any error. All other
subcommands use 0/2. Result lines go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import encode as enc
from . import sdd as sdd_mod
from . import xpg as xpg_mod
from .errors import FmpsatError
from .explain import (
    DtClassifier,
    Instance,
    ObddClassifier,
    SddClassifier,
    XpgClassifier,
    enumerate_axps_bruteforce,
    enumerate_cxps_bruteforce,
    find_axp,
    find_cxp,
    parse_instance,
)
from .fmp import (
    BatchQuery,
    FmpQuery,
    batch_run,
    decide_membership,
    generate_random_classifier,
    random_instance,
)

EXIT_YES = 0
EXIT_NO = 1
EXIT_ERROR = 2


def _add_classifier_args(parser: argparse.ArgumentParser, instance_required: bool) -> None:
    parser.add_argument("--sdd", metavar="FILE", help="SDD classifier (needs --vtree)")
    parser.add_argument("--vtree", metavar="FILE", help="vtree for --sdd")
    parser.add_argument("--obdd", metavar="FILE", help="OBDD classifier")
    parser.add_argument("--dt", metavar="FILE", help="decision tree classifier")
    parser.add_argument("--xpg", metavar="FILE", help="prebuilt explanation graph")
    parser.add_argument(
        "--instance",
        metavar="FILE",
        required=False,
        help="instance file (required unless --xpg is used)",
    )
    parser.add_argument(
        "--names", metavar="FILE", help="optional feature names, one per line (display only)"
    )
    parser.set_defaults(_instance_required=instance_required)


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--method",
        choices=["one-step", "two-step"],
        default="two-step",
        help="encoding shape (default: two-step)",
    )
    parser.add_argument(
        "--backend",
        default="internal",
        help="'internal' or 'external:<command>' (default: internal)",
    )
    parser.add_argument("--time-limit-s", type=float, default=None)


def _load_classifier(args):
    chosen = [name for name in ("sdd", "obdd", "dt", "xpg") if getattr(args, name)]
    if len(chosen) != 1:
        raise FmpsatError(
            "exactly one classifier input is required: --sdd/--vtree, --obdd, --dt or --xpg"
        )
    kind = chosen[0]
    if kind == "sdd":
        if not args.vtree:
            raise FmpsatError("--sdd needs --vtree")
        vtree = sdd_mod.parse_vtree(Path(args.vtree).read_text())
        diagram = sdd_mod.parse_sdd(Path(args.sdd).read_text(), vtree)
        clf = SddClassifier(diagram)
        if not (
            sdd_mod.is_consistent(diagram) and sdd_mod.is_consistent(clf.negated_sdd())
        ):
            raise FmpsatError("classifier is constant; explanation queries are undefined")
    elif kind == "obdd":
        obdd = xpg_mod.parse_obdd(Path(args.obdd).read_text())
        if len(obdd.reachable_labels()) < 2:
            raise FmpsatError("classifier is constant; explanation queries are undefined")
        clf = ObddClassifier(obdd)
    elif kind == "dt":
        dt = xpg_mod.parse_dt(Path(args.dt).read_text())
        if len(dt.leaf_labels()) < 2:
            raise FmpsatError("classifier is constant; explanation queries are undefined")
        clf = DtClassifier(dt)
    else:
        graph = xpg_mod.parse_xpg(Path(args.xpg).read_text())
        if not graph.zero_terminals():
            raise FmpsatError("classifier is constant; explanation queries are undefined")
        clf = XpgClassifier(graph)

    instance = None
    if args.instance:
        instance = parse_instance(Path(args.instance).read_text())
        if kind != "xpg":
            predicted = clf.predict(instance.values)
            if predicted != instance.label:
                raise FmpsatError(
                    f"instance declares class {instance.label} "
                    f"but the classifier predicts {predicted}"
                )
        elif instance.num_features != clf.num_features:
            raise FmpsatError(
                f"instance has {instance.num_features} features, graph has {clf.num_features}"
            )
    elif kind != "xpg" and args._instance_required:
        raise FmpsatError(f"--{kind} needs --instance")
    return clf, instance


def _load_names(args, num_features: int) -> list[str] | None:
    if not args.names:
        return None
    names = [line.strip() for line in Path(args.names).read_text().splitlines() if line.strip()]
    if len(names) != num_features:
        raise FmpsatError(f"names file has {len(names)} entries, expected {num_features}")
    return names


def _describe(features, names) -> str:
    if names is None:
        return ""
    return ", ".join(names[i - 1] for i in sorted(features))


def _solver_command(backend: str) -> str | None:
    if backend == "internal":
        return None
    if backend.startswith("external:"):
        command = backend[len("external:"):].strip()
        if not command:
            raise FmpsatError("external backend needs a command: --backend external:<cmd>")
        return command
    raise FmpsatError(f"unknown backend {backend!r}")


def _check_target(args, clf) -> None:
    if not 1 <= args.target <= clf.num_features:
        raise FmpsatError(f"target feature {args.target} outside 1..{clf.num_features}")


def _fmt_features(features) -> str:
    return ",".join(str(i) for i in sorted(features))


def cmd_fmp(args) -> int:
    clf, instance = _load_classifier(args)
    _check_target(args, clf)
    names = _load_names(args, clf.num_features)
    query = FmpQuery(
        classifier=clf,
        instance=instance,
        target=args.target,
        method=args.method,
        solver_command=_solver_command(args.backend),
        time_limit_s=args.time_limit_s,
    )
    outcome = decide_membership(query)
    print(
        f"stats: vars={outcome.num_vars} clauses={outcome.num_clauses} "
        f"solve_s={outcome.solve_s:.4f} total_s={outcome.total_s:.4f}",
        file=sys.stderr,
    )
    if outcome.pre_negated:
        print("note: instance predicted 1, query ran on the negated diagram", file=sys.stderr)
    if outcome.membership:
        print(f"YES witness={_fmt_features(outcome.witness)}")
        if names:
            print(f"witness names: {_describe(outcome.witness, names)}", file=sys.stderr)
        return EXIT_YES
    print("NO")
    return EXIT_NO


def cmd_axp(args) -> int:
    clf, instance = _load_classifier(args)
    names = _load_names(args, clf.num_features)
    explanation = find_axp(clf, instance, range(1, clf.num_features + 1))
    print(f"AXP {_fmt_features(explanation)}")
    if names:
        print(f"names: {_describe(explanation, names)}", file=sys.stderr)
    return EXIT_YES


def cmd_cxp(args) -> int:
    clf, instance = _load_classifier(args)
    names = _load_names(args, clf.num_features)
    explanation = find_cxp(clf, instance, range(1, clf.num_features + 1))
    print(f"CXP {_fmt_features(explanation)}")
    if names:
        print(f"names: {_describe(explanation, names)}", file=sys.stderr)
    return EXIT_YES


def cmd_enum(args) -> int:
    clf, instance = _load_classifier(args)
    axps = enumerate_axps_bruteforce(clf, instance)
    cxps = enumerate_cxps_bruteforce(clf, instance)

    def fmt(collection) -> str:
        return " ".join(
            "{" + _fmt_features(s) + "}" for s in sorted(collection, key=sorted)
        )

    print(f"AXPS: {fmt(axps)}")
    print(f"CXPS: {fmt(cxps)}")
    return EXIT_YES


def cmd_encode(args) -> int:
    clf, instance = _load_classifier(args)
    _check_target(args, clf)
    one_step = args.method == "one-step"
    if isinstance(clf, SddClassifier):
        diagram = clf.diagram_for(instance)
        inst = Instance(instance.values, 0)
        encoder = enc.encode_sdd_onestep if one_step else enc.encode_sdd_twostep
        cnf, vm = encoder(diagram, inst, args.target)
    else:
        graph = clf.xpg_for(instance)
        encoder = enc.encode_xpg_onestep if one_step else enc.encode_xpg_twostep
        cnf, vm = encoder(graph, args.target)
    text = enc.write_dimacs(cnf, vm)
    if args.out:
        Path(args.out).write_text(text)
        print(
            f"wrote {cnf.num_vars} vars, {cnf.num_clauses} clauses to {args.out}",
            file=sys.stderr,
        )
    else:
        sys.stdout.write(text)
    return EXIT_YES


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    kind = {"obdd": "obdd", "sdd": "shannon-sdd"}[args.kind]
    methods = ["one-step", "two-step"] if args.method_bench == "both" else [args.method_bench]
    solver_command = _solver_command(args.backend)
    queries: list[BatchQuery] = []
    for c in range(args.count):
        clf = generate_random_classifier(kind, args.m, args.nodes, seed=args.seed + c)
        name = f"{args.kind}-m{args.m}-s{args.seed + c}"
        picks = [
            (random_instance(clf, rng), int(rng.integers(1, args.m + 1)))
            for _ in range(args.queries)
        ]
        for method in methods:
            for instance, target in picks:
                queries.append(
                    BatchQuery(
                        name,
                        FmpQuery(
                            classifier=clf,
                            instance=instance,
                            target=target,
                            method=method,
                            solver_command=solver_command,
                        ),
                    )
                )
    if args.out:
        with open(args.out, "w") as sink:
            batch_run(queries, args.time_limit_s, sink, workers=args.workers)
        print(f"wrote report to {args.out}", file=sys.stderr)
    else:
        batch_run(queries, args.time_limit_s, sys.stdout, workers=args.workers)
    return EXIT_YES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmpsat",
        description="Feature membership queries on decision-diagram classifiers via SAT",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fmp", help="decide whether the target occurs in some explanation")
    _add_classifier_args(p, instance_required=True)
    _add_solver_args(p)
    p.add_argument("--target", type=int, required=True, help="feature index, 1-based")
    p.set_defaults(func=cmd_fmp)

    p = sub.add_parser("axp", help="one abductive explanation by deletion")
    _add_classifier_args(p, instance_required=True)
    p.set_defaults(func=cmd_axp)

    p = sub.add_parser("cxp", help="one contrastive explanation by deletion")
    _add_classifier_args(p, instance_required=True)
    p.set_defaults(func=cmd_cxp)

    p = sub.add_parser("enum", help="brute-force enumeration of all explanations (small m)")
    _add_classifier_args(p, instance_required=True)
    p.set_defaults(func=cmd_enum)

    p = sub.add_parser("encode", help="write the CNF encoding without solving")
    _add_classifier_args(p, instance_required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument(
        "--method", choices=["one-step", "two-step"], default="two-step"
    )
    p.add_argument("--out", metavar="FILE", help="output path (default: stdout)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("bench", help="batch membership queries on random classifiers")
    p.add_argument("--kind", choices=["obdd", "sdd"], default="obdd")
    p.add_argument("--count", type=int, default=2, help="number of classifiers")
    p.add_argument("--m", type=int, default=10, help="features per classifier")
    p.add_argument("--nodes", type=int, default=50, help="node budget per classifier")
    p.add_argument("--queries", type=int, default=100, help="queries per classifier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--method",
        dest="method_bench",
        choices=["one-step", "two-step", "both"],
        default="both",
    )
    p.add_argument("--backend", default="internal")
    p.add_argument("--time-limit-s", type=float, default=None)
    p.add_argument("--out", metavar="FILE", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FmpsatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
