"""Command-line experiment runner.

Every subcommand builds a JSON-serialisable report (deterministic for a given
config and seed) and a separate manifest holding the toolkit version, RNG
algorithm, timings and the pass/fail summary.  Exit codes: 0 all asserted
inequalities hold, 1 an assertion failed, 2 bad configuration, 3 a resource
cap was hit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cayley import (
    babai_csv,
    babai_curve,
    diameter,
    np_threshold_check,
    primes_between,
    rastropor_check,
    spectral_gap,
    standard_generators,
)
from .elementset import CapExceeded, ElementSet, default_cap
from .families import FAMILIES, FamilyError, FamilySpec, build, expected_size, regression
from .field import (
    RNG_ALGORITHM,
    FieldParams,
    GroupElement,
    all_matrices,
    is_prime,
    make_rng,
    random_matrices,
)
from .growth import ball, borel_subgroup, subgroup_inequality_checks, triple_stats
from .structure import (
    BETSON_LABELS,
    betson_canonical,
    betson_classify,
    classify,
    parabolic_decompose,
    random_generating_set,
    random_parabolic,
    u1u2_factorize,
)
from .sumprod import (
    RingSet,
    forgli_check,
    gk_check,
    ogrodo_check,
    random_forgli_instance,
    random_ringset,
    sumprod_stats,
)
from .torus import conj_class_count, ostrogoth_check, torus_clusters, worot_fibers
from .varieties import escape_regss

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3

FAMILY_ALIASES = {"heisenberg": "heisenberg_box", "borel": "borel_eps", "torus": "torus_powers"}


class ConfigError(ValueError):
    pass


@dataclass
class Run:
    """Accumulates the report, asserted inequalities and phase timings."""

    report: dict = field(default_factory=dict)
    assertions: list[dict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    table: list[dict] | None = None

    def check(self, name: str, anchor: str, passed: bool, **details) -> bool:
        self.assertions.append({"name": name, "anchor": anchor, "passed": bool(passed), **details})
        return passed

    @property
    def failures(self) -> int:
        return sum(not a["passed"] for a in self.assertions)


# ---------------------------------------------------------------------------
# config helpers


def _params(args) -> FieldParams:
    if args.p is None:
        raise ConfigError("--p is required")
    if not is_prime(args.p):
        raise ConfigError(f"p = {args.p} is not prime")
    try:
        return FieldParams(p=args.p, n=args.n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _family_name(name: str) -> str:
    name = FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}")
    return name


def _family_spec(args, N: int | None = None, p: int | None = None) -> FamilySpec:
    N = _first_int(args.N) if N is None else N
    if N is None:
        raise ConfigError("--N is required with --family")
    try:
        return FamilySpec(_family_name(args.family), args.p if p is None else p, N, args.x, args.eps)
    except FamilyError as exc:
        raise ConfigError(str(exc)) from exc


def _first_int(spec: str | None) -> int | None:
    vals = _int_grid(spec)
    return vals[0] if vals else None


def _int_grid(spec: str | None) -> list[int]:
    """``"1,3,5-7"`` -> ``[1, 3, 5, 6, 7]``; empty string -> ``[]``."""
    if spec is None:
        return []
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError as exc:
            raise ConfigError(f"bad integer grid {spec!r}") from exc
    return out


def _element_set(args, params: FieldParams, rng) -> ElementSet:
    """The set ``A`` named by --set-file, --family or --gens."""
    if args.set_file:
        try:
            A = ElementSet.load(args.set_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read set file: {exc}") from exc
        if A.params != params:
            raise ConfigError(f"set file holds {A.params}, expected n={params.n} p={params.p}")
        return A
    if getattr(args, "family", None):
        spec = _family_spec(args)
        if spec.n != params.n:
            raise ConfigError(f"family {spec.family} lives in SL_{spec.n}")
        try:
            return build(spec)
        except FamilyError as exc:
            raise ConfigError(str(exc)) from exc
    gens = args.gens or "standard"
    if gens == "standard":
        return standard_generators(params)
    if gens == "random":
        return ElementSet(params, random_matrices(params, args.size or 2, rng))
    raise ConfigError(f"unknown generator recipe {gens!r} (standard, random)")


def _subset(params: FieldParams, size: int, rng) -> ElementSet:
    every = all_matrices(params)
    if size > len(every):
        raise ConfigError(f"size {size} exceeds |G| = {len(every)}")
    idx = np.sort(rng.choice(len(every), size=size, replace=False))
    return ElementSet(params, every[idx], _canonical=True)


def _el(g: GroupElement) -> list:
    return g.rows()


# ---------------------------------------------------------------------------
# subcommands


def cmd_growth(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    rep = triple_stats(A, profile_k=args.k, cap=args.cap, ambient_order=params.group_order)
    if rep.lower_bound:
        raise CapExceeded(f"product exceeded cap; |AAA| >= {rep.size_aaa}")
    d = rep.to_dict()
    d.pop("wall_time")
    d["seed"] = args.seed
    run.report.update(d)
    if args.family:
        spec = _family_spec(args)
        run.report["family"] = json.loads(spec.to_json())
        run.check("closed_form_size", "|A| = closed form", len(A) == expected_size(spec), size_a=len(A))
        res = regression(spec)
        run.check(spec.family, res.anchor, res.passed, lhs=res.report.size_aaa, bound=res.bound)
    if rep.profile is not None:
        sizes = [s for _, s in rep.profile]
        ok = all(b >= a for a, b in zip(sizes, sizes[1:]))
        run.check("ball_monotone", "|A_r| <= |A_(r+1)|", ok)


def cmd_ball(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    prof = ball(A, args.k if args.k is not None else 3, cap=args.cap)
    run.report.update(radii=prof.radii, saturated=prof.saturated)
    run.check("strict_growth", "|A_r| < |A_(r+1)| until saturation", prof.strictly_growing_until_saturation())


def cmd_diameter(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    res = diameter(A, symmetric=args.symmetric, cap=args.cap)
    run.report.update(
        diameter=res.diameter,
        layer_sizes=res.layer_sizes,
        generating=res.generating,
        reached=res.reached,
        symmetric=res.symmetric,
    )


def cmd_babai(args, run: Run):
    if args.primes:
        primes = [q for q in _int_grid(args.primes) if is_prime(q)]
    else:
        primes = primes_between(args.p_min, args.p if args.p is not None else 101)
    rows = babai_curve(primes, n=args.n, symmetric=args.symmetric, cap=args.cap or 2 * 10**7)
    run.table = [
        dict(zip(("p", "n", "group_order", "diameter", "log_order", "ratio1", "ratio2"), r.as_tuple())) for r in rows
    ]
    run.report["csv"] = babai_csv(rows)
    for r in rows:
        if not r.skipped:
            sizes = r.ball_sizes
            ok = all(b > a for a, b in zip(sizes, sizes[1:]))
            run.check(f"strict_growth_p{r.p}", "|A_r| < |A_(r+1)| until saturation", ok)


def _trials(args, default: int) -> int:
    t = default if args.trials is None else args.trials
    if t < 0:
        raise ConfigError("--trials must be non-negative")
    return t


def cmd_rastropor(args, run: Run):
    params = _params(args)
    rng = make_rng(args.seed)
    size = args.size or params.group_order // 2 + 1
    counts = {"pass": 0, "fail": 0, "not-applicable": 0}
    anchor = ""
    for _ in range(_trials(args, 100)):
        res = rastropor_check(_subset(params, size, rng))
        counts[res.status] += 1
        anchor = res.anchor
    run.report.update(size=size, **counts)
    run.check("rastropor", anchor, counts["fail"] == 0, **counts)


def cmd_np_threshold(args, run: Run):
    params = _params(args)
    rng = make_rng(args.seed)
    from .cayley import np_threshold

    thr = np_threshold(params)
    size = args.size or min(params.group_order, int(thr) + 1)
    counts = {"pass": 0, "fail": 0, "not-applicable": 0}
    anchor = ""
    for _ in range(_trials(args, 5)):
        res = np_threshold_check(_subset(params, size, rng))
        counts[res.status] += 1
        anchor = res.anchor
    run.report.update(size=size, threshold=thr, **counts)
    run.check("np_threshold", anchor, counts["fail"] == 0, **counts)


def cmd_spectral(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    est = spectral_gap(A, seed=args.seed or 0)
    run.report.update(
        lambda2=round(est.lambda2, 10),
        gap=round(est.gap, 10),
        vertices=est.vertices,
        converged=est.converged,
        tolerance=est.tolerance,
    )


def cmd_torus_stats(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    k = args.k if args.k is not None else 2
    clusters = torus_clusters(A, k)
    run.report.update(k=k, clusters=len(clusters), sizes=sorted(c.size for c in clusters))
    # commutation is symmetric: h in C(g) iff g in C(h)
    sym = all(c.members.contains_mask(c.representative.array[None])[0] for c in clusters)
    run.check("symmetric_commutation", "hg = gh  <=>  gh = hg", sym)


def cmd_conjclass(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    k = args.k if args.k is not None else 4
    res = conj_class_count(A, k)
    run.report.update(count=res.count, curve=res.curve)
    vals = [c for _, c in res.curve]
    run.check("monotone_in_k", "Cl(A_k) <= Cl(A_(k+1))", all(b >= a for a, b in zip(vals, vals[1:])))


def cmd_ostrogoth(args, run: Run):
    params = _params(args)
    rng = make_rng(args.seed)
    size = args.size or 6
    fails = 0
    n = _trials(args, 100)
    anchor = None
    for _ in range(n):
        A = ElementSet(params, random_matrices(params, size, rng))
        Ap = ElementSet(params, random_matrices(params, size, rng))
        res = ostrogoth_check(A, Ap)
        anchor = res.anchor
        fails += not res.passed
    run.report.update(trials=n, failures=fails)
    run.check("ostrogoth", anchor or "", fails == 0, trials=n)


def cmd_worot(args, run: Run):
    args.n = 3
    params = _params(args)
    rep = worot_fibers(params)
    run.report.update(p=rep.p, regular=rep.regular, max_fiber=rep.max_fiber, identity_ok=rep.identity_ok)
    run.check("fiber_bound", "|fiber of t -> (c(t), c(t^-1))| <= 6", rep.max_fiber <= 6)
    run.check("trace_identity", "t^2 - c(t^-1) t + c(t) I - t^-1 = 0", rep.identity_ok)


def cmd_escape(args, run: Run):
    params = _params(args)
    rng = make_rng(args.seed)
    m_max = args.k if args.k is not None else 10
    n = _trials(args, 1)
    radii = []
    witnesses = []
    for _ in range(n):
        A = random_generating_set(params, args.size or 2, rng) if args.gens == "random" or n > 1 else _element_set(args, params, rng)
        res = escape_regss(A, params.identity, m_max)
        radii.append(res.m)
        witnesses.append(_el(res.g))
    run.report.update(radii=radii, witnesses=witnesses)
    run.check("escape_radius", "h g0 regular semisimple for some h in A_m", max(radii, default=0) <= m_max)


def cmd_gk(args, run: Run):
    p = args.p
    if p is None or not is_prime(p) or p < 3:
        raise ConfigError("--p must be an odd prime")
    rng = make_rng(args.seed)
    n = _trials(args, 200)
    passed = 0
    anchor = ""
    for _ in range(n):
        sa = int(rng.integers(1, min(p, 40) + 1))
        sy = int(rng.integers(1, min(p - 1, 40) + 1))
        res = gk_check(random_ringset(p, sa, rng), random_ringset(p, sy, rng, units=True))
        passed += res.passed
        anchor = res.anchor
    run.report.update(p=p, trials=n, passed=passed, summary=f"{passed}/{n}")
    run.check("gk", anchor, passed == n, count=passed, trials=n)


def cmd_sumprod(args, run: Run):
    if args.gk:
        return cmd_gk(args, run)
    p = args.p
    if p is None or not is_prime(p):
        raise ConfigError("--p must be prime")
    if args.set_file:
        try:
            A = RingSet.from_text(Path(args.set_file).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read ring set: {exc}") from exc
    else:
        A = random_ringset(p, args.size or 32, make_rng(args.seed))
    st = sumprod_stats(A)
    run.report.update(size=st.size, sumset=st.sumset, productset=st.productset, exponent=round(st.exponent, 10))


def cmd_forgli(args, run: Run):
    args.n = 3
    params = _params(args)
    rng = make_rng(args.seed)
    n = _trials(args, 50)
    fails = 0
    anchor = ""
    for _ in range(n):
        A, D = random_forgli_instance(params, rng, max_a=args.size or 3)
        try:
            res = forgli_check(A, D, cap=args.cap)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        fails += not res.passed
        anchor = res.anchor
    run.report.update(trials=n, failures=fails)
    run.check("forgli", anchor, fails == 0, trials=n)


def cmd_ogrodo(args, run: Run):
    p = args.p
    if p is None or not is_prime(p):
        raise ConfigError("--p must be prime")
    rng = make_rng(args.seed)
    n = _trials(args, 50)
    fails = 0
    anchor = ""
    for _ in range(n):
        A = random_ringset(p, args.size or 6, rng)
        Y = random_ringset(p, 3, rng, units=True)
        res = ogrodo_check(A, Y)
        if res.status == "fail":
            fails += 1
        anchor = res.anchor
    run.report.update(trials=n, failures=fails)
    run.check("ogrodo", anchor, fails == 0, trials=n)


def cmd_subgroup(args, run: Run):
    params = _params(args)
    if params.n != 2:
        raise ConfigError("subgroup checks use the Borel subgroup of SL_2")
    rng = make_rng(args.seed)
    H = borel_subgroup(params)
    fails = 0
    n = _trials(args, 10)
    for _ in range(n):
        A = ElementSet(params, random_matrices(params, args.size or 8, rng))
        res = subgroup_inequality_checks(A, H, trusted=True)
        fails += not res.passed
    run.report.update(trials=n, failures=fails)
    run.check("subgroup_inequalities", "coset counting", fails == 0, trials=n)


def cmd_classify(args, run: Run):
    params = _params(args)
    A = _element_set(args, params, make_rng(args.seed))
    flags = classify(A, cap=args.cap or 10**6)
    run.report.update(json.loads(flags.to_json()))


def cmd_betson(args, run: Run):
    args.n = 3
    params = _params(args)
    if args.set_file:
        A = _element_set(args, params, None)
        run.report["label"] = betson_classify(A)
        return
    labels = {}
    for label in BETSON_LABELS:
        got = betson_classify(betson_canonical(label, params))
        labels[label] = got
        run.check(f"canonical_{label}", "classify(canonical(t)) = t", got == label)
    run.report["labels"] = labels


def cmd_parabolic(args, run: Run):
    args.n = 3
    params = _params(args)
    rng = make_rng(args.seed)
    n = _trials(args, 100)
    ok = 0
    for _ in range(n):
        g = random_parabolic(params, rng)
        ok += parabolic_decompose(g).reassemble(params) == g
    run.report.update(trials=n, reassembled=ok)
    run.check("reassembly", "pi_plus a0 = g", ok == n)


def cmd_factorize(args, run: Run):
    args.n = 3
    params = _params(args)
    if args.trials is None and params.group_order <= 6000:
        mats = all_matrices(params)
        mode = "exhaustive"
    else:
        mats = random_matrices(params, _trials(args, 100), make_rng(args.seed))
        mode = "sampled"
    ok = 0
    for m in mats:
        g = GroupElement(tuple(int(v) for v in m.ravel()), params)
        ok += u1u2_factorize(g).product() == g
    run.report.update(mode=mode, count=len(mats), ok=ok)
    run.check("factorization", "g = u1 u2 u1' u2'", ok == len(mats))


def cmd_family(args, run: Run):
    if not args.family:
        raise ConfigError("--family is required")
    spec = _family_spec(args)
    if not is_prime(spec.p):
        raise ConfigError(f"p = {spec.p} is not prime")
    try:
        res = regression(spec)
    except FamilyError as exc:
        raise ConfigError(str(exc)) from exc
    run.report.update(
        family=json.loads(spec.to_json()),
        size_a=res.report.size_a,
        size_aaa=res.report.size_aaa,
        bound=res.bound,
    )
    run.check(spec.family, res.anchor, res.passed, lhs=res.report.size_aaa, bound=res.bound)


def cmd_sweep(args, run: Run):
    """Family regressions over an ``N`` grid, or diameters over a ``p`` grid."""
    rows = []
    if args.family:
        ps = [q for q in _int_grid(args.primes) if is_prime(q)] or ([args.p] if args.p is not None else [])
        for p in ps:
            for N in _int_grid(args.N):
                spec = _family_spec(args, N=N, p=p)
                try:
                    res = regression(spec)
                except FamilyError as exc:
                    rows.append(dict(family=spec.family, p=p, N=N, size_a="", expected="", size_aaa="", bound="", status=f"error: {exc}"))
                    run.check(f"{spec.family}_p{p}_N{N}", "build", False)
                    continue
                status = "pass" if res.passed else "FAIL"
                rows.append(
                    dict(
                        family=spec.family,
                        p=p,
                        N=N,
                        size_a=res.report.size_a,
                        expected=expected_size(spec),
                        size_aaa=res.report.size_aaa,
                        bound=res.bound,
                        status=status,
                    )
                )
                run.check(f"{spec.family}_p{p}_N{N}", res.anchor, res.passed)
    else:
        for p in [q for q in _int_grid(args.primes) if is_prime(q)]:
            params = FieldParams(p=p, n=args.n)
            res = diameter(standard_generators(params), cap=args.cap)
            rows.append(dict(p=p, n=args.n, group_order=params.group_order, diameter=res.diameter))
    run.table = rows


COMMANDS = {
    "growth": cmd_growth,
    "ball": cmd_ball,
    "diameter": cmd_diameter,
    "babai-curve": cmd_babai,
    "rastropor": cmd_rastropor,
    "np-threshold": cmd_np_threshold,
    "spectral": cmd_spectral,
    "torus-stats": cmd_torus_stats,
    "conjclass": cmd_conjclass,
    "ostrogoth": cmd_ostrogoth,
    "worot": cmd_worot,
    "escape": cmd_escape,
    "sumprod": cmd_sumprod,
    "gk": cmd_gk,
    "forgli": cmd_forgli,
    "ogrodo": cmd_ogrodo,
    "subgroup": cmd_subgroup,
    "classify": cmd_classify,
    "betson": cmd_betson,
    "parabolic": cmd_parabolic,
    "factorize": cmd_factorize,
    "family": cmd_family,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, choices=(2, 3))
    common.add_argument("--p", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--k", type=int)
    common.add_argument("--cap", type=int, help="maximum number of stored codes")
    common.add_argument("--out", help="report path; the manifest goes next to it")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--gens", default=None, help="generator recipe: standard or random")
    common.add_argument("--set-file")
    common.add_argument("--family")
    common.add_argument("--N", help="integer or grid such as 1-5 or 2,4")
    common.add_argument("--x", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--size", type=int, help="size of sampled sets")
    common.add_argument("--symmetric", action="store_true")
    common.add_argument("--gk", action="store_true", help="sumprod: run the sum-product inequality trials")
    common.add_argument("--p-min", type=int, default=5)
    common.add_argument("--primes", help="sweep and babai-curve: grid of primes such as 5-31")

    parser = argparse.ArgumentParser(prog="growthlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def render(run: Run, fmt: str) -> str:
    if fmt == "csv":
        if run.table is not None:
            return _to_csv(run.table)
        return _to_csv([{k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in run.report.items()}])
    body = dict(run.report)
    if run.table is not None:
        body["rows"] = run.table
    body["assertions"] = run.assertions
    return json.dumps(body, sort_keys=True, indent=2, default=str) + "\n"


def manifest(args, run: Run, status: str) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "config": config,
        "version": __version__,
        "rng": {"algorithm": RNG_ALGORITHM, "numpy": np.__version__},
        "cap_codes": args.cap or default_cap(),
        "timings": run.timings,
        "status": status,
        "assertions": {"total": len(run.assertions), "failed": run.failures},
    }


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cap is not None and args.cap <= 0:
        print("error: --cap must be positive", file=sys.stderr)
        return EXIT_CONFIG
    run = Run()
    t0 = time.perf_counter()
    code = EXIT_OK
    status = "pass"
    try:
        COMMANDS[args.command](args, run)
        if run.failures:
            code, status = EXIT_FAIL, "fail"
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceeded as exc:
        code, status = EXIT_CAP, "cap"
        run.report["error"] = str(exc)
    run.timings[args.command] = round(time.perf_counter() - t0, 6)
    text = render(run, args.format)
    man = json.dumps(manifest(args, run, status), sort_keys=True, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        out.with_name(out.name + ".manifest.json").write_text(man)
    else:
        sys.stdout.write(text)
    for a in run.assertions:
        if not a["passed"]:
            print(f"FAIL {a['name']}: {a['anchor']}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
