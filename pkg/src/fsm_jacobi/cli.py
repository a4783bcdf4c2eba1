"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 classification abort (not Fredholm, or an index the method cannot handle).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import itertools
import json
import logging
import math
import sys
import time
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import _core
from .errors import (ClassificationAbort, ConfigError, FsmJacobiError, NumericalFailure,
                     NotSelfadjoint)
from .fileio import atomic_write_text, fmt
from .fredholm import B, classify_sets, delta_certificate, dominance_certificate
from .fsm import (full_fsm, load_rhs, plan_windows_bi, plan_windows_semi,
                  solve_adaptive_bi, solve_adaptive_semi, stability_cap)
from .operator import materialize
from .pseudoergodic import BI, SEMI, dump_field, load_field, sample_iid, word_field
from .spectra import (EIGENVALUES, PSEUDOSPECTRUM, SINGULAR_VALUES, GridSpec, eigenvalues,
                      pseudospectrum_grid, singular_values)
from .symbol_sets import (SymbolSet, TriSymbolSet, load_sets, lower_spectral_bound,
                          parse_complex, selfadjoint_spectrum)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ABORT = 0, 1, 2, 3, 4
BLOCK_HINT = 4096  # initial half-width of sampled fields; planning extends on demand

log = logging.getLogger("fsm_jacobi")


# helpers ---------------------------------------------------------------------


def _num(x):
    """JSON-safe float with 17 significant digits; ``inf``/``nan`` as strings."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(fmt(x))


def _pair(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj, out: Optional[str]) -> None:
    text = _dumps(obj)
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _cloud_csv(points, real_only: bool = False) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    if real_only:
        wr.writerow(["value"])
        for z in points:
            wr.writerow([fmt(np.real(z))])
    else:
        wr.writerow(["re", "im"])
        for z in points:
            wr.writerow([fmt(np.real(z)), fmt(np.imag(z))])
    return buf.getvalue()


def parse_target(text: Optional[str]):
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"target must be 'u,v,w', got {text!r}")
    try:
        return tuple(parse_complex(p) for p in parts)
    except (ValueError, FsmJacobiError):
        raise ConfigError(f"cannot parse target {text!r}") from None


def parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(p) for p in text.split(".."))
    except ValueError:
        raise ConfigError(f"range must be LO..HI, got {text!r}") from None
    if lo > hi:
        raise ConfigError(f"empty range {text!r}")
    return lo, hi


def hatano_nelson_sets(g: float, a: float) -> TriSymbolSet:
    """``U = {e^g}``, ``V = [-a, a]`` (arcsine law), ``W = {e^-g}``."""
    return TriSymbolSet(SymbolSet.points([math.exp(g)]),
                        SymbolSet.interval(-a, a, distribution="arcsine"),
                        SymbolSet.points([math.exp(-g)]))


def hatano_nelson_constants(g: float, a: float) -> dict:
    c, s = 2 * math.cosh(g), 2 * math.sinh(g)
    return {"c": c, "s": s,
            "toeplitz_floor": 1 / (c - a) if c > a else math.inf,
            "cap": 1 / (s - a) if s > a else math.inf}


# bounds / classify -------------------------------------------------------------


def _chebyshev_centre(V: SymbolSet):
    """Minimiser of ``lambda -> max_{v in V} |v - lambda|`` (convex)."""
    pts = V.sample()
    x0 = np.array([pts.real.mean(), pts.imag.mean()])
    res = minimize(lambda p: V.max_distance(complex(p[0], p[1])), x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    centre = complex(res.x[0], res.x[1])
    return centre, V.max_distance(centre)


def bounds_report(T: TriSymbolSet, n_angles: int):
    cloud = lower_spectral_bound(T, n_angles)
    rep = {
        "sets": T.to_json(),
        "lower_bound": {"description": "V + E(U, W)", "points": int(cloud.size)},
        "upper_bound": {"description": "V + r * closed unit disk",
                        "radius": _num(T.u_max + T.w_max)},
        "delta": _num(T.delta),
    }
    hole = None
    for dominant, radius in (("sub", T.u_min - T.w_max), ("super", T.w_min - T.u_max)):
        if radius > 0:
            centre, spread = _chebyshev_centre(T.V)
            hole = {"dominant": dominant, "radius": _num(radius),
                    "description": "{lambda : max_v |v - lambda| < radius}",
                    "chebyshev_centre": _pair(centre), "chebyshev_radius": _num(spread),
                    "nonempty": bool(spread < radius)}
    rep["hole"] = hole
    rep["selfadjoint"] = None
    if T.V.is_real and T.U.kind == T.W.kind == "points":
        us = np.sort_complex(T.U.sample())
        ws = np.sort_complex(np.conj(T.W.sample()))
        if us.shape == ws.shape and np.allclose(us, ws, rtol=0, atol=0):
            try:
                rep["selfadjoint"] = [[_num(a), _num(b)]
                                      for a, b in selfadjoint_spectrum(T.U, T.V)]
            except NotSelfadjoint:
                pass
    return rep, cloud


def classify_report(T: TriSymbolSet, tol: float) -> dict:
    cls = classify_sets(T, tol=tol)
    rep = cls.to_json()
    rep["label"] = "classification (sampled triples)"
    inv = delta_certificate(T)
    cert = dominance_certificate(T)
    rep["delta"] = _num(T.delta)
    rep["certificates"] = {
        "label": "certificate (rigorous)",
        "delta": None if inv is None else {"inverse_bound": _num(inv)},
        "dominance": None if cert is None else {"diagonal": cert.diagonal,
                                                "gap": _num(cert.gap),
                                                "inverse_bound": _num(cert.inverse_bound)},
    }
    return rep


# commands ------------------------------------------------------------------------


def cmd_bounds(args) -> int:
    T = load_sets(args.sets)
    rep, cloud = bounds_report(T, args.angles)
    if args.cloud:
        atomic_write_text(args.cloud, _cloud_csv(cloud))
    _emit(rep, args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    T = load_sets(args.sets)
    _emit(classify_report(T, args.tol), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    T = load_sets(args.sets)
    lo, hi = parse_range(args.range)
    orientation = SEMI if args.semi else BI
    if args.generator == "iid":
        fld = sample_iid(T, args.seed, lo, hi, orientation)
    else:
        if not all(s.kind == "points" for s in (T.U, T.V, T.W)):
            raise ConfigError("the word enumeration needs finite ('points') sets")
        alphabet = list(itertools.product(T.U.sample(), T.V.sample(), T.W.sample()))
        fld = word_field(alphabet, lo, hi, orientation, T)
    dump_field(fld, args.out)
    return EXIT_OK


def cmd_plan(args) -> int:
    fld = load_field(args.field)
    target = parse_target(args.target)
    if fld.orientation == SEMI:
        plan = plan_windows_semi(fld, target, args.nmax, horizon=args.horizon)
    else:
        plan = plan_windows_bi(fld, target, args.nmax, horizon=args.horizon)
    _emit(plan.to_json(), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    fld = load_field(args.field)
    rhs = load_rhs(args.rhs)
    target = parse_target(args.target)
    kw = dict(inverse_norm_cap=args.inverse_norm_cap)
    if args.mode == "full":
        report = full_fsm(fld, rhs, args.nmax, **kw)
    elif args.mode == "semi":
        report = solve_adaptive_semi(fld, rhs, args.nmax, target, tol=args.tol,
                                     horizon=args.horizon, **kw)
    else:
        report = solve_adaptive_bi(fld, rhs, args.nmax, target, tol=args.tol,
                                   horizon=args.horizon, **kw)
    if args.csv:
        atomic_write_text(args.csv, report.to_csv())
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    fld = load_field(args.field)
    l, r = (-args.n, args.n) if fld.orientation == BI else (1, args.n)
    sys_ = materialize(fld, l, r, 0)
    if args.mode == EIGENVALUES:
        atomic_write_text(args.out, _cloud_csv(eigenvalues(sys_).points))
    elif args.mode == SINGULAR_VALUES:
        atomic_write_text(args.out, _cloud_csv(singular_values(sys_).points, real_only=True))
    else:
        eps = [float(e) for e in args.eps.split(",")] if args.eps else []
        grid = GridSpec.parse(args.grid) if args.grid else None
        res = pseudospectrum_grid(sys_, grid, eps)
        g = res.grid
        header = {"l": l, "r": r, "shift_k": 0, "x0": _num(g.x0), "x1": _num(g.x1),
                  "y0": _num(g.y0), "y1": _num(g.y1), "nx": g.nx, "ny": g.ny,
                  "quantity": "sigma_min(A_n - lambda I)", "rows": "y ascending",
                  "eps": eps}
        lines = ["# " + json.dumps(header, sort_keys=True)]
        lines += [",".join(fmt(x) for x in row) for row in res.sigma_min]
        atomic_write_text(args.out, "\n".join(lines) + "\n")
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        for k, e in enumerate(sorted(res.levels)):
            atomic_write_text(f"{stem}.eps{k}.csv", _cloud_csv(res.levels[e].points))
    return EXIT_OK


def _format_table(rows) -> str:
    out = [f"{'n':>3} {'l_n':>10} {'r_n':>10} {'size':>10} {'||A_n^-1||':>12}"]
    for row in rows:
        inv = row["inv_norm"]
        inv_s = "skipped" if inv is None else f"{inv:.4f}"
        out.append(f"{row['n']:>3} {row['l_n']:>10} {row['r_n']:>10} {row['size']:>10} {inv_s:>12}")
    return "\n".join(out)


def cmd_reproduce(args) -> int:
    if not (args.g > 0 and args.a > 0):
        raise ConfigError("need g > 0 and a > 0")
    consts = hatano_nelson_constants(args.g, args.a)
    print(f"c = 2cosh(g) = {consts['c']:.4f}")
    print(f"s = 2sinh(g) = {consts['s']:.4f}")
    print(f"(c-a)^-1 = {consts['toeplitz_floor']:.4f}  (triangular Toeplitz limit)")
    print(f"(s-a)^-1 = {consts['cap']:.4f}  (stability cap)")
    sys.stdout.flush()
    T = hatano_nelson_sets(args.g, args.a)
    cls = classify_sets(T)
    print(f"case ({cls.case.lower()}), plus-index {cls.plus_index}, "
          f"consistent = {str(cls.consistent).lower()}")
    bundle = {"g": args.g, "a": args.a, "seed": args.seed,
              "constants": {k: _num(v) for k, v in consts.items()},
              "classification": cls.to_json(), "report": None}
    status = EXIT_OK
    if args.constants_only:
        pass
    elif cls.case != B or stability_cap(T, cls.case, T.default_target()) is None:
        print("no solve: the sets do not certify case (b) with a finite stability cap")
        status = EXIT_ABORT if cls.plus_index is None else EXIT_OK
    else:
        fld = sample_iid(T, args.seed, -BLOCK_HINT, BLOCK_HINT)
        report = solve_adaptive_bi(fld, {0: 1.0}, args.nmax,
                                   inverse_norm_cap=args.inverse_norm_cap)
        print(_format_table(report.table()))
        bundle["report"] = report.to_json()
        if args.csv:
            atomic_write_text(args.csv, report.to_csv())
    if args.out:
        atomic_write_text(args.out, _dumps(bundle))
    return status


# selftest ------------------------------------------------------------------------


def _faulty_thomas(sub, diag, sup, rhs, out, pivot_tol):
    """Thomas elimination that forgets to update the pivot."""
    n = len(diag)
    c = np.zeros(n, dtype=np.complex128)
    d = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        piv = diag[i]  # should be diag[i] - sub[i] * c[i-1]
        c[i] = sup[i] / piv
        d[i] = (rhs[i] - (sub[i] * d[i - 1] if i else 0)) / piv
    out[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        out[i] = d[i] - c[i] * out[i + 1]
    return -1


@contextlib.contextmanager
def _inject(fault: Optional[str]):
    if fault is None:
        yield
        return
    if fault != "thomas-pivot":
        raise ConfigError(f"unknown fault {fault!r}")
    saved = _core.thomas
    _core.thomas = _faulty_thomas
    try:
        yield
    finally:
        _core.thomas = saved


def _suite_solver(rng) -> None:
    from .fsm import solve_window
    from .operator import apply, from_bands
    for _ in range(20):
        n = int(rng.integers(2, 200))
        k = int(rng.choice([-1, 0, 1]))
        sub, main, sup = (rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(3))
        dom = {-1: sub, 0: main, 1: sup}[k]  # the band on the diagonal
        dom += 8 * np.sign(dom.real + 1e-300)
        sys_ = from_bands(0, k, sub, main, sup)
        b = rng.normal(size=n) + 0j
        x = solve_window(sys_, b)
        res = np.abs(apply(sys_, x) - b).max()
        assert res <= 1e-9 * (1 + np.abs(b).max()), f"residual {res:.3e} (n={n}, k={k})"


def _suite_classification(rng) -> None:
    from .fredholm import classify_triple
    T = hatano_nelson_sets(1.0, 2.0)
    cls = classify_sets(T)
    assert cls.case == B and cls.plus_index == -1 and cls.consistent
    assert classify_triple(1, 2, 1) == "NotFredholm"
    for _ in range(50):
        u, w = rng.uniform(0.1, 2, size=2)
        assert classify_triple(u, 3 * (u + w), w) == "A"


def _suite_delta(rng) -> None:
    from .fsm import inverse_norm
    from .pseudoergodic import explicit_field
    for _ in range(10):
        n = int(rng.integers(5, 120))
        u = rng.uniform(0.1, 1, n)
        w = rng.uniform(0.1, 1, n)
        v = rng.uniform(2.5, 4, n) * np.exp(1j * rng.uniform(-0.3, 0.3, n))
        delta = np.abs(v).min() - (u.max() + w.max())
        if delta <= 0:
            continue
        nrm = inverse_norm(materialize(explicit_field(u, v, w), 0, n - 1))
        assert nrm <= 1 / delta + 1e-8, f"{nrm} > 1/delta = {1 / delta}"


def _suite_spectra(rng) -> None:
    from .operator import circulant_spectrum, laurent_spectrum
    from .spectra import hausdorff
    assert hausdorff([0], [3, 4]) == 4.0
    for _ in range(5):
        u, v, w = np.sqrt(rng.uniform(0, 1, 3)) * np.exp(2j * np.pi * rng.uniform(0, 1, 3))
        d = hausdorff(circulant_spectrum(u, v, w, 64), laurent_spectrum(u, v, w, 8192))
        assert d <= 10 / 64, d


def _suite_pseudoergodic(rng) -> None:
    from .pseudoergodic import verify_pseudoergodic
    fld = word_field([(1, 0, 1), (1, 2, 1)], 1, 100, SEMI)
    rep = verify_pseudoergodic(fld, 3, 0.5)
    assert rep.all_found, rep.missing


def _suite_adaptive(rng) -> None:
    T = hatano_nelson_sets(1.0, 2.0)
    fld = sample_iid(T, int(rng.integers(0, 2**31)), -BLOCK_HINT, BLOCK_HINT)
    rep = solve_adaptive_bi(fld, {0: 1.0}, 3)
    for rec in rep.records:
        assert rec.residual_ok(), f"residual {rec.residual_inf}"
        assert 0.5 <= rec.inverse_norm <= rep.cap + 0.01, rec.inverse_norm


def _suite_thomas(rng) -> None:
    from .fsm import solve_window
    from .operator import apply
    from .pseudoergodic import explicit_field
    n = 300
    fld = explicit_field(rng.uniform(0.5, 1, n), rng.uniform(3, 4, n), rng.uniform(0.5, 1, n))
    sys_ = materialize(fld, 0, n - 1)
    b = rng.normal(size=n) + 0j
    res = np.abs(apply(sys_, solve_window(sys_, b)) - b).max()
    assert res <= 1e-9 * (1 + np.abs(b).max()), f"Thomas residual {res:.3e}"


SUITES: list[tuple[str, Callable]] = [
    ("solver residuals", _suite_solver),
    ("thomas residual", _suite_thomas),
    ("classification", _suite_classification),
    ("delta certificate", _suite_delta),
    ("laurent/circulant", _suite_spectra),
    ("pseudoergodicity", _suite_pseudoergodic),
    ("adaptive hatano-nelson", _suite_adaptive),
]


def run_selftest(seed: int = 0, fault: Optional[str] = None, stream=None) -> bool:
    stream = stream or sys.stdout
    ok = True
    with _inject(fault):
        for name, fn in SUITES:
            rng = np.random.default_rng(seed)
            t0 = time.perf_counter()
            try:
                fn(rng)
                status, msg = "PASS", ""
            except AssertionError as exc:
                status, msg, ok = "FAIL", f"  {exc}", False
            except FsmJacobiError as exc:
                status, msg, ok = "FAIL", f"  {type(exc).__name__}: {exc}", False
            stream.write(f"{status} {name} ({time.perf_counter() - t0:.2f} s){msg}\n")
    stream.write(f"backend: {_core.BACKEND}\n")
    return ok


def cmd_selftest(args) -> int:
    return EXIT_OK if run_selftest(args.seed, args.fault) else EXIT_FAIL


# parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fsm-jacobi",
        description="Adaptive finite sections for pseudoergodic tridiagonal operators.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("bounds", help="spectral inclusion sets of a set triple")
    q.add_argument("--sets", required=True)
    q.add_argument("--angles", type=int, default=257)
    q.add_argument("--cloud", help="CSV of lower-bound points")
    q.add_argument("--out")
    q.set_defaults(func=cmd_bounds)

    q = sub.add_parser("classify", help="Fredholm case and certificates")
    q.add_argument("--sets", required=True)
    q.add_argument("--tol", type=float, default=1e-9)
    q.add_argument("--out")
    q.set_defaults(func=cmd_classify)

    q = sub.add_parser("generate", help="sample a coefficient field")
    q.add_argument("--sets", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--range", required=True, help="LO..HI (write --range=-50..50 for negative LO)")
    q.add_argument("--generator", choices=("iid", "words"), default="iid")
    q.add_argument("--semi", action="store_true", help="semi-infinite field (LO must be 1)")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_generate)

    for name in ("plan", "solve"):
        q = sub.add_parser(name, help="plan cut-off windows" if name == "plan"
                           else "run the finite section method")
        q.add_argument("--field", required=True)
        q.add_argument("--target", help="'u,v,w'; default: most probable triple")
        q.add_argument("--nmax", type=int, required=True)
        q.add_argument("--horizon", type=int, default=10_000_000)
        q.add_argument("--out")
        if name == "plan":
            q.set_defaults(func=cmd_plan)
        else:
            q.add_argument("--rhs", required=True)
            q.add_argument("--mode", choices=("adaptive", "full", "semi"), default="adaptive")
            q.add_argument("--tol", type=float, default=1e-9)
            q.add_argument("--inverse-norm-cap", type=int, default=5000)
            q.add_argument("--csv")
            q.set_defaults(func=cmd_solve)

    q = sub.add_parser("spectrum", help="finite-section spectra and pseudospectra")
    q.add_argument("--field", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--mode", choices=(EIGENVALUES, SINGULAR_VALUES, PSEUDOSPECTRUM),
                   default=EIGENVALUES)
    q.add_argument("--eps", help="comma-separated levels")
    q.add_argument("--grid", help="x0,x1,y0,y1,res (write --grid=-4,... for a negative x0)")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("reproduce", help="Hatano-Nelson experiment")
    q.add_argument("--g", type=float, default=1.0)
    q.add_argument("--a", type=float, default=2.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--nmax", type=int, default=6)
    q.add_argument("--inverse-norm-cap", type=int, default=5000)
    q.add_argument("--constants-only", action="store_true")
    q.add_argument("--csv")
    q.add_argument("--out")
    q.set_defaults(func=cmd_reproduce)

    q = sub.add_parser("selftest", help="invariant suites at reduced budgets")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--fault", choices=("thomas-pivot",))
    q.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ClassificationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.classification is not None:
            print(_dumps(exc.classification.to_json()), file=sys.stderr, end="")
        return EXIT_ABORT
    except NumericalFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FsmJacobiError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
