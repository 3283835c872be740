"""Command-line interface: analyze, expand, sample, verify, decompose, permuton-sample."""

from __future__ import annotations

import argparse
import json
import secrets
import sys

from . import descriptors as dsc
from .perms import Permutation
from .trees import serialize_tree, decompose


def _emit(doc):
    sys.stdout.write(json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n")


def _seed(args, parser):
    if args.seed is None:
        if args.format == "structured":
            parser.error("--seed is required with --format structured")
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def cmd_analyze(args, parser):
    from .analysis import analyze, asymptotic_check
    from .specs import load_spec

    spec = load_spec(args.spec)
    rep = analyze(spec, args.family if args.family is not None else 0, tol=args.tol)
    doc = rep.to_dict()
    if args.check_asymptotics:
        doc["asymptotic_ratios"] = {f: {str(n): r for n, r in v.items()} for f, v in asymptotic_check(rep).items()}
    if args.format == "structured":
        _emit(doc)
        return 0
    names = rep.spec.names
    print(f"family          {doc['family']}")
    print(f"rho             {rep.rho:.15g}")
    print(f"critical        {', '.join(doc['critical'])}")
    print(f"classification  {'essentially ' + rep.structure.classification}")
    print(f"strongly conn.  {rep.structure.sc}")
    for c in rep.components:
        extra = ""
        if c.p is not None:
            extra = "  p = (" + ", ".join(f"{x:.15g}" for x in c.p) + ")"
        if c.constants is not None:
            extra = f"  p+ = {c.constants.p_plus:.15g}"
        print(f"component {{{', '.join(names[i] for i in c.members)}}}: {c.kind}, limit {c.descriptor}{extra}")
    print(f"limit           {rep.limit}")
    for w in doc["diagnostics"]["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_expand(args, parser):
    from .series import expand
    from .specs import load_spec

    spec = load_spec(args.spec)
    fams = [spec.index(args.family)] if args.family is not None else range(spec.size)
    coeffs = expand(spec, args.terms)
    if args.format == "structured":
        _emit({spec.names[i]: [str(c) for c in coeffs[i].coefficients[1:]] for i in fams})
        return 0
    print("n,family,coefficient")
    for i in fams:
        for n in range(1, args.terms + 1):
            print(f"{n},{spec.names[i]},{coeffs[i][n]}")
    return 0


def cmd_sample(args, parser):
    from .samplers import BoltzmannSampler, spawn, tune_control
    from .specs import load_spec

    seed = _seed(args, parser)
    spec = load_spec(args.spec)
    fam = spec.index(args.family if args.family is not None else 0)
    x = args.x if args.x is not None else tune_control(spec, fam, args.n)
    sampler = BoltzmannSampler(spec, x, family=fam)
    perms = [sampler.sample(fam, args.n, args.delta, args.max_rejections, rng=r).perm for r in spawn(seed, args.count)]
    if args.points:
        print("sample,x,y")
        for s, p in enumerate(perms):
            n = len(p)
            for i, v in enumerate(p, 1):
                print(f"{s},{i / n:.6f},{v / n:.6f}")
    elif args.format == "structured":
        _emit({"family": spec.names[fam], "x": x, "seed": seed, "permutations": [" ".join(map(str, p)) for p in perms]})
    else:
        for p in perms:
            print(" ".join(map(str, p)) if len(p) > 9 else str(p))
    return 0


def cmd_verify(args, parser):
    from .specs import load_spec
    from .verify import run_verification

    seed = _seed(args, parser)
    spec = load_spec(args.spec)
    fam = args.family if args.family is not None else 0
    rep = run_verification(spec, fam, args.n, args.count, args.k, args.draws, seed, delta=args.delta,
                           threshold=args.tv_threshold, threads=args.threads)
    if args.format == "structured":
        doc = rep.to_dict()
        doc["seed"] = seed
        _emit(doc)
    else:
        print(f"limit      {rep.descriptor}")
        print(f"k          {rep.k}")
        print(f"samples    {len(rep.sizes)} (sizes {min(rep.sizes)}..{max(rep.sizes)}), {rep.draws} draws each")
        print(f"TV         {rep.tv:.6f}")
        if rep.threshold is not None:
            print(f"result     {'PASS' if rep.passed else 'FAIL'} (threshold {rep.threshold})")
    return 0 if rep.passed else 1


def cmd_decompose(args, parser):
    t = decompose(Permutation.parse(args.perm))
    if args.format == "structured":
        _emit({"permutation": args.perm, "tree": serialize_tree(t)})
    else:
        print(serialize_tree(t))
    return 0


def cmd_permuton_sample(args, parser):
    from .samplers import sample_brownian_marginal, sample_x_permuton, spawn

    seed = _seed(args, parser)
    rngs = spawn(seed, args.count)
    if args.x_params is not None:
        d = dsc.XPermuton(tuple(args.x_params))
        draws = [sample_x_permuton(d.p, args.k, r) for r in rngs]
        if args.points:
            print("sample,x,y")
            for s, (pts, _) in enumerate(draws):
                for x, y in pts:
                    print(f"{s},{x:.6f},{y:.6f}")
            return 0
        perms = [p for _, p in draws]
    else:
        if args.points:
            parser.error("--points needs an X-permuton (--x); Brownian marginals only give permutations")
        perms = [sample_brownian_marginal(args.brownian, args.k, r) for r in rngs]
    if args.format == "structured":
        _emit({"seed": seed, "permutations": [" ".join(map(str, p)) for p in perms]})
    else:
        for p in perms:
            print(" ".join(map(str, p)) if len(p) > 9 else str(p))
    return 0


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _unit(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permlimit", description="Limit shapes of permutation classes given by tree-specifications.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats=("human", "structured")):
        sp.add_argument("--format", choices=formats, default=formats[0])
        return sp

    a = common(sub.add_parser("analyze", help="radius, criticality and limiting permuton"))
    a.add_argument("spec", help="specification file or fixture name (e.g. fixtures/av132)")
    a.add_argument("--family", default=None)
    a.add_argument("--tol", type=float, default=1e-12)
    a.add_argument("--check-asymptotics", action="store_true", help="add exact/predicted coefficient ratios")
    a.set_defaults(func=cmd_analyze)

    e = common(sub.add_parser("expand", help="exact counting coefficients as CSV"), ("csv", "structured"))
    e.add_argument("spec")
    e.add_argument("--family", default=None)
    e.add_argument("--terms", type=_positive_int, default=10)
    e.set_defaults(func=cmd_expand)

    s = common(sub.add_parser("sample", help="Boltzmann samples of a family"))
    s.add_argument("spec")
    s.add_argument("--family", default=None)
    s.add_argument("--n", type=_positive_int, default=100)
    s.add_argument("--count", type=_positive_int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--x", type=float, default=None, help="control parameter (tuned automatically if omitted)")
    s.add_argument("--max-rejections", type=_positive_int, default=10**6)
    s.add_argument("--points", action="store_true", help="emit permutation diagrams as CSV points")
    s.set_defaults(func=cmd_sample)

    v = common(sub.add_parser("verify", help="pattern statistics of samples against the predicted limit"))
    v.add_argument("spec")
    v.add_argument("--family", default=None)
    v.add_argument("--n", type=_positive_int, default=1000)
    v.add_argument("--count", type=_positive_int, default=300)
    v.add_argument("--k", type=_positive_int, default=3)
    v.add_argument("--draws", type=_positive_int, default=200)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--delta", type=float, default=0.1)
    v.add_argument("--tv-threshold", type=float, default=None)
    v.add_argument("--threads", type=_positive_int, default=1)
    v.set_defaults(func=cmd_verify)

    d = common(sub.add_parser("decompose", help="standard tree of a permutation"))
    d.add_argument("perm", help="one-line notation, e.g. 2413 or '10 2 ...'")
    d.set_defaults(func=cmd_decompose)

    ps = common(sub.add_parser("permuton-sample", help="sample from an X-permuton or Brownian marginals"))
    g = ps.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", dest="x_params", nargs=4, type=_unit, metavar=("LEFT_PLUS", "RIGHT_PLUS", "LEFT_MINUS", "RIGHT_MINUS"))
    g.add_argument("--brownian", type=_unit, metavar="P_PLUS")
    ps.add_argument("--k", type=_positive_int, default=100)
    ps.add_argument("--count", type=_positive_int, default=1)
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--points", action="store_true")
    ps.set_defaults(func=cmd_permuton_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except FileNotFoundError as exc:
        print(json.dumps({"error": "not_found", "message": str(exc)}), file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
