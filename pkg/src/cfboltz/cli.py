"""Command line: cfboltz {parse|critical|count|sample|verify|bench}."""
import argparse
import json
import math
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from math import comb

from .errors import (CapExceeded, EmptySizeClass, NoExcursion, NumericFailure, SpecError,
                     SpecSyntaxError, ValidationError)
from .models import BUILTIN
from .parser import parse_spec, render_spec
from .randomness import BitSource, split_seed
from .spec import compute_catalog, validate_spec
from .validation import check_spec

EXIT_PARSE, EXIT_VALIDATION, EXIT_EMPTY, EXIT_NUMERIC = 2, 3, 4, 5
ALPHA = 0.001


def _load(args):
    """Spec text source: builtin name, file, or the toy model (returns None)."""
    if args.model == "toy":
        return None
    if args.spec:
        with open(args.spec) as fh:
            return parse_spec(fh.read())
    return parse_spec(BUILTIN[args.model or "binary"])


def _is_toy(args):
    return args.model == "toy"


# ---------------------------------------------------------------- toy

def _toy_line(bridge, fmt):
    if fmt == "jsonl":
        return json.dumps({"steps": list(bridge.steps)}, separators=(",", ":"))
    return "".join({1: "+", 0: "0", -1: "-"}[s] for s in bridge.steps)


def _toy_stream(n, count, seed, method):
    from .toy import ToyBridge, ToySampler, toy_naive, toy_probabilities

    bits = BitSource(seed)
    if method == "oracle":
        if n > 12:
            raise CapExceeded("toy enumeration is limited to n <= 12")
        probs = toy_probabilities(n)
        keys = list(probs)
        return [ToyBridge(n, keys[bits.discrete([probs[k] for k in keys])])
                for _ in range(count)], None
    if method == "naive-toy":
        return [toy_naive(n, bits) for _ in range(count)], None
    sampler = ToySampler(n)
    out = [sampler.sample(bits) for _ in range(count)]
    return out, sampler.stats


# ------------------------------------------------------------- sample

def _stream(spec_text, n, count, seed, method, mode, fmt):
    """Lines of one seeded stream (runs in a worker under -j)."""
    from .estimator import BoltzmannSampler

    spec = parse_spec(spec_text)
    est = BoltzmannSampler(method=method, mode=mode, seed=seed).fit(spec)
    from .serialize import format_structure
    return [format_structure(spec, s, fmt) for s in est.sample(n, count)]


def _counts(count, jobs):
    return [count // jobs + (1 if i < count % jobs else 0) for i in range(jobs)]


def cmd_sample(args):
    if args.n is None:
        raise SystemExit("sample needs -n")
    jobs = max(1, args.jobs)
    args.count = args.count or 1
    seeds = [args.seed] if jobs == 1 else [split_seed(args.seed, i) for i in range(jobs)]
    counts = _counts(args.count, jobs)
    if _is_toy(args):
        for s, c in zip(seeds, counts):
            out, _ = _toy_stream(args.n, c, s, args.method)
            for b in out:
                print(_toy_line(b, args.format))
        return 0
    spec = _load(args)
    check_spec(spec)
    text = render_spec(spec)
    if args.method not in ("accelerated", "oracle"):
        raise SystemExit(f"method {args.method} applies to the toy model only")
    jobs_args = [(text, args.n, c, s, args.method, args.mode, args.format)
                 for s, c in zip(seeds, counts)]
    if jobs == 1:
        results = [_stream(*jobs_args[0])]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_stream, *zip(*jobs_args)))
    for lines in results:
        for line in lines:
            print(line)
    if args.svg:
        from .serialize import from_paren, rhv_svg
        if args.format != "tree-paren" or args.mode != "excursion":
            raise SystemExit("--svg needs tree-paren excursion output")
        first = results[0][0]
        with open(args.svg, "w") as fh:
            fh.write(rhv_svg(spec, from_paren(spec, first)))
    return 0


# ------------------------------------------------------------- others

def cmd_parse(args):
    if _is_toy(args):
        print("toy: (1/4, 1/2, 1/4) bridges, weight 2^(zero steps)")
        return 0
    spec = _load(args)
    print(render_spec(spec))
    report = validate_spec(spec)
    if report:
        raise ValidationError(report)
    cat = compute_catalog(spec)
    print(f"symbols {len(spec.symbols)}  monomials {spec.n_monomials}  v0 {cat.v0}  "
          f"T0 {cat.T0}")
    return 0


def cmd_critical(args):
    if _is_toy(args):
        print("z* 0.25")
        return 0
    from .critical import CriticalSolver, derived_constants

    spec = check_spec(_load(args))
    solver = CriticalSolver(spec)
    crit = solver.solve_characteristic()
    print(f"z* {crit.zeta:.15g}")
    for name, t in zip(spec.symbols, crit.tau):
        print(f"{name}* {t:.15g}")
    print(f"eigenvalue {crit.eigenvalue:.15g}")
    print(f"residual {crit.residual:.3g}")
    if args.verbose:
        d = derived_constants(solver, crit, compute_catalog(spec))
        for key in ("A0", "Aneq", "vbar", "eps", "kappa", "mu", "reach_prob"):
            print(f"{key} {getattr(d, key):.15g}")
    return 0


def cmd_count(args):
    n = args.n if args.n is not None else 10
    if _is_toy(args):
        for k in range(1, n + 1):
            print(k, comb(2 * k, k))
        return 0
    from .oracle import count_coefficients

    spec = check_spec(_load(args))
    A = count_coefficients(spec, n).A
    for k in range(1, n + 1):
        print(k, A[k])
    return 0


def _chi2(freq, probs):
    from scipy.stats import chisquare

    keys = list(probs)
    total = sum(freq.values())
    if len(keys) < 2:
        return 0.0, 0, 1.0
    obs = [freq.get(k, 0) for k in keys]
    exp = [float(probs[k]) * total for k in keys]
    stat, p = chisquare(obs, exp)
    return float(stat), len(keys) - 1, float(p)


def cmd_verify(args):
    n = args.n
    if n is None:
        raise SystemExit("verify needs -n")
    if _is_toy(args):
        from .toy import toy_probabilities
        if n > 10:
            raise CapExceeded("toy enumeration is limited to n <= 10")
        probs = toy_probabilities(n)
        count = args.count or 1000 * len(probs)
        out, _ = _toy_stream(n, count, args.seed, args.method)
        freq = Counter(b.steps for b in out)
    else:
        from .estimator import BoltzmannSampler
        from .oracle import class_probabilities

        spec = check_spec(_load(args))
        probs = class_probabilities(spec, n, cap=args.cap)
        count = args.count or 1000 * len(probs)
        est = BoltzmannSampler(method=args.method, seed=args.seed).fit(spec)
        freq = Counter(t.nodes for t in est.sample(n, count))
    stat, dof, p = _chi2(freq, probs)
    ok = p >= ALPHA
    print(f"classes {len(probs)}  samples {count}  chi2 {stat:.4f}  dof {dof}  "
          f"p {p:.4g}  {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def bench_size(args, n, reps):
    """(time_ns, restarts, bits, reach, racc) means over ``reps`` samples."""
    bits = BitSource(args.seed)
    if _is_toy(args):
        from .toy import ToySampler
        sampler = ToySampler(n)
        sampler.sample(bits)
        sampler.stat_arr[:] = 0
        b0 = bits.bits_consumed
        t0 = time.perf_counter_ns()
        for _ in range(reps):
            sampler.sample(bits)
        dt = time.perf_counter_ns() - t0
        st = sampler.stats
        return (dt / reps, st.attempts / reps, (bits.bits_consumed - b0) / reps, st.reach,
                st.mean_r)
    from .estimator import BoltzmannSampler

    spec = _load(args)
    est = BoltzmannSampler(method=args.method, seed=args.seed).fit(spec)
    est.sample(n, 1, bits)
    st = est.stats(n)
    if st is not None:
        st.__init__()
    b0 = bits.bits_consumed
    t0 = time.perf_counter_ns()
    est.sample(n, reps, bits)
    dt = time.perf_counter_ns() - t0
    if st is None:
        return dt / reps, 1.0, (bits.bits_consumed - b0) / reps, math.nan, math.nan
    return (dt / reps, st.attempts / reps, (bits.bits_consumed - b0) / reps, st.reach,
            st.mean_r)


def cmd_bench(args):
    sizes = [int(s) for s in (args.sizes or "1000,10000").split(",")]
    if sizes != sorted(sizes):
        raise SystemExit("--sizes must be ascending")
    reps = args.count or 20
    print("size,time_ns,restarts,bits,reach,racc")
    rows = []
    for n in sizes:
        row = bench_size(args, n, reps)
        rows.append((n, row))
        t, r, b, reach, racc = row
        print(f"{n},{t:.0f},{r:.4f},{b:.1f},{reach:.4f},{racc:.4f}")
        sys.stdout.flush()
    for (n1, a), (n2, b) in zip(rows, rows[1:]):
        decades = math.log10(n2 / n1)
        print(f"# time ratio per decade {n1}->{n2}: {(b[0] / a[0]) ** (1 / decades):.2f}",
              file=sys.stderr)
    return 0


COMMANDS = {"parse": cmd_parse, "critical": cmd_critical, "count": cmd_count,
            "sample": cmd_sample, "verify": cmd_verify, "bench": cmd_bench}


def build_parser():
    p = argparse.ArgumentParser(prog="cfboltz", description="Exact samplers for weighted "
                                "context-free tree classes.")
    p.add_argument("command", choices=sorted(COMMANDS))
    src = p.add_mutually_exclusive_group()
    src.add_argument("--spec", metavar="FILE", help="specification file")
    src.add_argument("--model", choices=sorted(BUILTIN) + ["toy"], help="builtin model")
    p.add_argument("-n", type=int, help="size")
    p.add_argument("-c", "--count", type=int, help="number of samples (bench: repetitions)")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed")
    p.add_argument("--mode", choices=["excursion", "bridge"], default="excursion")
    p.add_argument("--method", choices=["accelerated", "oracle", "naive-toy"],
                   default="accelerated")
    p.add_argument("--format", choices=["tree-paren", "jsonl"], default="tree-paren")
    p.add_argument("--sizes", help="comma separated sizes for bench")
    p.add_argument("-j", "--jobs", type=int, default=1, help="independent seeded streams")
    p.add_argument("--svg", metavar="FILE", help="draw the first rhv sample")
    p.add_argument("--cap", type=int, default=10 ** 6, help="enumeration cap for verify")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.n is not None and args.n < 1:
        print("error: n must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    if args.count is not None and args.count < 1:
        print("error: count must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed < 0 or args.seed >= 1 << 64:
        print("error: seed must fit in 64 bits", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return COMMANDS[args.command](args)
    except (SpecSyntaxError, SpecError) as e:
        code = EXIT_VALIDATION if isinstance(e, (ValidationError, NoExcursion)) else EXIT_PARSE
        print(f"error: {e}", file=sys.stderr)
        return code
    except EmptySizeClass as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_EMPTY
    except NumericFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
