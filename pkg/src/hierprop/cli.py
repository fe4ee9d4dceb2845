"""
Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
Any flag may also come from a ``--config`` file of ``key = value`` lines
(keys use the long flag name without dashes, e.g. ``top-k = 50``); flags on
the command line win.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .errors import ConvergenceError, HierPropError, InvalidInputError
from .evaluation import DEFAULT_BUCKETS, cross_validate, novel_eval, parse_buckets
from .grf import DiscriminantMatrix, SolverSettings
from .hlprop import HLPropSettings, assemble_kron, solve_dense_oracle
from .netbuild import align_genes, combine, normalize, pearson_network
from .ontology import filter_categories, induced_hierarchy, true_path_closure
from .pipelines import METHODS, run_method
from .reconcile import reconcile_matrix
from .synth import SynthParams, generate

log = logging.getLogger("hierprop")

EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _need(args, *names):
    for name in names:
        if getattr(args, name) in (None, []):
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _fmt_buckets(buckets):
    return ",".join(f"{lo}-{hi}" for lo, hi in buckets)


# ---------------------------------------------------------------- handlers

def cmd_build_network(args):
    _need(args, "out")
    if (args.features is None) == (args.edges is None):
        raise UsageError("give exactly one of --features or --edges")
    if args.features is not None:
        net = pearson_network(io.read_features(args.features), k=args.top_k)
    else:
        net = io.read_network(args.edges)
    if not args.no_normalize:
        net = normalize(net)
    io.write_network(args.out, net)
    log.info("wrote %d genes, %d edges to %s", net.n_genes, net.matrix.nnz // 2, args.out)


def cmd_combine(args):
    _need(args, "net", "out")
    nets = [io.read_network(p) for p in args.net]
    universe = list(nets[0].gene_ids)
    seen = set(universe)
    for other in nets[1:]:
        for g in other.gene_ids:
            if g not in seen:
                seen.add(g)
                universe.append(g)
    net = combine([align_genes(n, universe) for n in nets])
    io.write_network(args.out, net)


def _load_problem(args, ann_path):
    net = io.read_network(args.net)
    h = io.read_hierarchy(args.hierarchy)
    ann = true_path_closure(io.read_annotations(ann_path, drop_iea=args.drop_iea), h)
    ann = ann.without_genes(ann.genes() - set(net.gene_ids))
    h_f, ann_f = filter_categories(h, ann, args.min_annotations, args.max_annotations)
    if not len(h_f):
        raise InvalidInputError("no categories left after annotation-count filtering")
    log.info("%d of %d categories retained", len(h_f), len(h))
    return net, h, h_f, ann_f


def _settings(args):
    solver = SolverSettings(tolerance=args.cg_tol)
    hl = HLPropSettings(lam=args.lam, max_sweeps=args.sweeps, inner=solver)
    return solver, hl


def cmd_propagate(args):
    _need(args, "net", "ann", "hierarchy", "out")
    net, _, h, ann = _load_problem(args, args.ann)
    solver, hl = _settings(args)
    F = run_method(args.method, net, ann, h, setting=args.setting, solver=solver, hlprop=hl)
    if args.oracle:
        _oracle_check(args, net, ann, h, F)
    io.write_scores(args.out, F)


def _oracle_check(args, net, ann, h, F):
    from .bias import bias_matrix

    if args.method not in ("grf", "hlprop"):
        log.warning("--oracle only applies to grf and hlprop; skipped")
        return
    lam = args.lam if args.method == "hlprop" else 0.0
    Y = bias_matrix("baseline", ann, h, net.gene_ids)
    A = assemble_kron(net, h, lam)
    dense = solve_dense_oracle(A, Y.values.ravel(order="F")).reshape(F.scores.shape, order="F")
    diff = float(np.max(np.abs(dense - F.scores))) if F.scores.size else 0.0
    level = logging.INFO if diff <= 1e-5 else logging.WARNING
    log.log(level, "oracle agreement: max |iterative - dense| = %.3e", diff)
    print(f"oracle max abs difference: {diff:.3e}", file=sys.stderr)


def cmd_reconcile(args):
    _need(args, "scores", "hierarchy", "out")
    F = io.read_scores(args.scores)
    h = io.read_hierarchy(args.hierarchy)
    unknown = [c for c in F.category_ids if c not in h]
    if unknown:
        raise InvalidInputError(f"score category {unknown[0]!r} is not in the hierarchy")
    sub = induced_hierarchy(h, F.category_ids)
    cols = [F.category_ids.index(c) for c in sub.category_ids]
    G = reconcile_matrix(DiscriminantMatrix(F.gene_ids, sub.category_ids, F.scores[:, cols]), sub)
    back = [sub.category_ids.index(c) for c in F.category_ids]
    io.write_scores(args.out, DiscriminantMatrix(F.gene_ids, F.category_ids, G.scores[:, back]))


def _diagnostic_pipeline(name, truth):
    """Sanity-check scorers: true labels, or a constant."""

    def run(net, ann_train, h, setting):
        S = np.zeros((net.n_genes, len(h)))
        if name == "oracle":
            genes = set(net.gene_ids)
            for j, c in enumerate(h.category_ids):
                for g in truth.genes_in(c) & genes:
                    S[net.index_of(g), j] = 1.0
        return DiscriminantMatrix(net.gene_ids, h.category_ids, S)

    return run


def cmd_evaluate(args):
    _need(args, "net", "hierarchy", "report")
    buckets = parse_buckets(args.buckets)
    solver, hl = _settings(args)

    def method_for(truth):
        if args.method in ("oracle", "constant"):
            return _diagnostic_pipeline(args.method, truth)
        return lambda net, ann, h, setting: run_method(
            args.method, net, ann, h, setting=setting, solver=solver, hlprop=hl)

    if args.mode == "cv":
        _need(args, "ann")
        net, _, h, ann = _load_problem(args, args.ann)
        report = cross_validate(method_for(ann), net, ann, h, folds=args.folds, seed=args.seed,
                                buckets=buckets)
    else:
        _need(args, "ann_old", "ann_new")
        net, h_full, h, ann_old = _load_problem(args, args.ann_old)
        ann_new = true_path_closure(io.read_annotations(args.ann_new, drop_iea=args.drop_iea), h_full)
        ann_new = ann_new.restrict(h.category_ids)
        report = novel_eval(method_for(ann_new), net, ann_old, ann_new, h, min_new=args.min_new,
                            buckets=buckets)
    if not report.records:
        raise InvalidInputError("no evaluable categories")
    io.write_report_json(args.report, report)
    if args.records_tsv:
        io.write_report_tsv(args.records_tsv, report)
    if args.cumulative_tsv:
        io.write_cumulative_tsv(args.cumulative_tsv, report)
    print(f"{len(report.records)} categories  mean error {report.mean:.4f}  "
          f"median {report.median:.4f}  SE {report.se:.4f}")


def cmd_synth(args):
    _need(args, "out_dir")
    params = SynthParams(
        n_genes=args.genes, depth=args.depth, branching=args.branching, p_in=args.p_in,
        p_mid=args.p_mid, p_out=args.p_out, hide_fraction=args.hide_fraction,
        extra_parent_prob=args.extra_parent_prob,
    )
    inst = generate(args.seed, params)
    os.makedirs(args.out_dir, exist_ok=True)
    io.write_network(os.path.join(args.out_dir, "network.tsv"), inst.network)
    io.write_hierarchy(os.path.join(args.out_dir, "hierarchy.tsv"), inst.hierarchy)
    io.write_annotations(os.path.join(args.out_dir, "annotations.tsv"), inst.ann_observed)
    io.write_annotations(os.path.join(args.out_dir, "annotations_full.tsv"), inst.ann_full)


# ------------------------------------------------------------------ parser

def _add_problem_flags(p):
    p.add_argument("--net", help="network TSV")
    p.add_argument("--hierarchy", help="hierarchy TSV (parent<TAB>child)")
    p.add_argument("--min-annotations", type=int, default=3)
    p.add_argument("--max-annotations", type=int, default=300)
    p.add_argument("--drop-iea", action="store_true", help="ignore IEA-evidence annotations")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="hierarchy coupling")
    p.add_argument("--cg-tol", type=float, default=1e-8, help="relative CG residual")
    p.add_argument("--sweeps", type=int, default=100, help="maximum HLProp sweeps")


def build_parser():
    parser = _Parser(prog="hierprop", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", help="key = value file supplying default flags")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("build-network", help="Pearson top-k network from features or an edge list")
    p.add_argument("--features")
    p.add_argument("--edges")
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--no-normalize", action="store_true", help="write raw weights")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_network)

    p = sub.add_parser("combine", help="sum networks and renormalize")
    p.add_argument("--net", nargs="+", default=[])
    p.add_argument("--out")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("propagate", help="score every gene in every category")
    _add_problem_flags(p)
    p.add_argument("--ann", help="annotation TSV")
    p.add_argument("--method", choices=METHODS[:-1], default="grf")
    p.add_argument("--setting", choices=("test", "novel"), default="novel",
                   help="HLBias default for unannotated genes: k (test) or -1 (novel)")
    p.add_argument("--oracle", action="store_true", help="check against a dense direct solve")
    p.add_argument("--out")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("reconcile", help="isotonic reconciliation of a score file")
    p.add_argument("--scores")
    p.add_argument("--hierarchy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconcile)

    p = sub.add_parser("evaluate", help="cross-validation or novel-annotation evaluation")
    _add_problem_flags(p)
    p.add_argument("--mode", choices=("cv", "novel"), default="cv")
    p.add_argument("--method", choices=METHODS + ("oracle", "constant"), default="grf")
    p.add_argument("--ann", help="annotations (cv mode)")
    p.add_argument("--ann-old", help="older annotation snapshot (novel mode)")
    p.add_argument("--ann-new", help="newer annotation snapshot (novel mode)")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-new", type=int, default=3)
    p.add_argument("--buckets", default=_fmt_buckets(DEFAULT_BUCKETS))
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--records-tsv")
    p.add_argument("--cumulative-tsv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="write a synthetic benchmark instance")
    defaults = SynthParams()
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--genes", type=int, default=defaults.n_genes)
    p.add_argument("--depth", type=int, default=defaults.depth)
    p.add_argument("--branching", type=int, default=defaults.branching)
    p.add_argument("--p-in", type=float, default=defaults.p_in)
    p.add_argument("--p-mid", type=float, default=defaults.p_mid)
    p.add_argument("--p-out", type=float, default=defaults.p_out)
    p.add_argument("--hide-fraction", type=float, default=defaults.hide_fraction)
    p.add_argument("--extra-parent-prob", type=float, default=defaults.extra_parent_prob)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_synth)
    return parser


def read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(parser, argv, config):
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in subparsers.choices), None)
    if command is None:
        return
    sp = subparsers.choices[command]
    by_dest = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in config.items():
        if key == "lambda":
            key = "lam"
        action = by_dest.get(key)
        if action is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*"):
            defaults[key] = value.split()
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except ValueError:
                raise UsageError(f"config value for {key!r} is invalid: {value!r}") from None
        else:
            defaults[key] = value
    sp.set_defaults(**defaults)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = parser.parse_known_args(argv)
        if pre.config:
            _apply_config(parser, argv, read_config(pre.config))
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(message)s")
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        args.func(args)
    except SystemExit as exc:
        # argparse reports usage problems (and --help) by exiting
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"hierprop: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"hierprop: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (HierPropError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"hierprop: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
