"""Command line entry point.

    kinval intrinsic --shape square
    kinval euler --method morse --shape L --direction -1,-0.3
    kinval dump-cycle --shape holed --out cycle
    kinval kinematic --mode forms --scene scenes/squares.json
    kinval check pkf --scene scenes/squares.json --mc-samples 1000000

Exit codes: 0 every check passed, 1 a check failed, 2 the scene or the
arguments are invalid, 3 a quadrature did not converge.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time

import numpy as np
import shapely

from . import fixtures
from .errors import InvalidRegion, KinvalError, NonTransverse, NotMorse, QuadratureFailure, SceneError
from .forms import (AffineField, closedness_check, eval_valuation, lk0, lk1, lk2, variation_probe,
                    verticality_check)
from .geometry import PointSet, PolygonalRegion, RigidMotion, apply_motion, area_perimeter, \
    euler_combinatorial, intersect_regions, transversality_check, diameter_radius
from .kinematic import (MotionFamily, SmoothedForm, kinematic_direct, kinematic_mc, pairing_check,
                        point_function_f)
from .morse import MorseFunction, euler_via_morse
from .normal_cycle import (boundary_residual, build_normal_cycle, decompose_intersection, integrate_form,
                           joint_sign_constant, legendrian_residual)
from .scene import Scene, load_scene, parse_scene
from .seeding import rng_for
from .sigma import kinematic_forms, kinematic_unfolded, point_function_via_omega, sigma_orientation

TWO_PI = 2.0 * math.pi

DEFAULT_SCENE = """{
  "seed": 0,
  "shapes": {"square": [[[0, 0], [1, 0], [1, 1], [0, 1]]]},
  "forms": {"chi": {"name": "lk0", "params": []}},
  "families": {"plateau": {"plateau": {"R0": 3.0, "R1": 3.5, "c": 1.0}, "grid": [64, 64, 64]}},
  "setup": {"A": "square", "X": "square", "form": "chi", "family": "plateau"}
}"""

DEFAULT_TOL = {
    "intrinsic": 1e-9, "euler": 0.0, "dump-cycle": 1e-12, "kinematic": 0.0,
    "pkf": 1e-3, "forms-vs-direct": 1e-3, "decomposition": 1e-8, "additivity": 1e-9,
    "verticality": 1e-6, "closedness": 1e-4, "pairing": 1e-3, "variation": 1e-3,
    "product": 1e-3, "pointfn": 1e-3,
}

CHECKS = ("pkf", "forms-vs-direct", "decomposition", "additivity", "omega", "variation", "product", "pointfn")


# --------------------------------------------------------------------------
# reports


def record(name: str, lhs, rhs=None, tol: float = 0.0, **extra) -> dict:
    """One comparison; the relative error is taken against rhs (absolute when rhs is 0)."""
    rec = {"name": name, "lhs": float(lhs)}
    if rhs is None:
        rec.update(rhs=None, abs_err=None, rel_err=None, tol=None, passed=True)
    else:
        err = abs(float(lhs) - float(rhs))
        rel = err / abs(float(rhs)) if rhs != 0 else err
        rec.update(rhs=float(rhs), abs_err=err, rel_err=rel, tol=float(tol), passed=bool(rel <= tol))
    rec.update(extra)
    return rec


class Report:
    def __init__(self, subcommand: str, scene: Scene | None, settings: dict):
        self.body = {
            "subcommand": subcommand,
            "scene_hash": scene.digest if scene is not None else None,
            "seed": scene.seed if scene is not None else None,
            "settings": settings,
            "calibration": {"joint_arc_sign": joint_sign_constant(),
                            "interpolation_orientation": sigma_orientation()},
            "records": [],
            "perturbations": [],
        }
        self.t0 = time.perf_counter()

    def add(self, rec: dict):
        self.body["records"].append(rec)
        status = "PASS" if rec["passed"] else "FAIL"
        if rec["rhs"] is None:
            print(f"{rec['name']}: {rec['lhs']:.12g}")
        else:
            print(f"{status} {rec['name']}: lhs={rec['lhs']:.12g} rhs={rec['rhs']:.12g} "
                  f"rel={rec['rel_err']:.3g} tol={rec['tol']:.3g}")

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.body["records"])

    def finish(self, out: str | None) -> dict:
        body = dict(self.body, passed=self.passed)
        full = dict(body, wall_time=time.perf_counter() - self.t0)
        if out:
            stem = out[:-5] if out.endswith(".json") else out
            with open(stem + ".json", "w", encoding="utf-8") as fh:
                json.dump(full, fh, indent=2, sort_keys=True)
                fh.write("\n")
            cols = ["name", "lhs", "rhs", "abs_err", "rel_err", "tol", "passed"]
            with open(stem + ".csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.DictWriter(fh, cols, extrasaction="ignore")
                w.writeheader()
                for r in body["records"]:
                    w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})
        return full


def report_body(full: dict) -> str:
    """The deterministic part of a report (everything except the wall time)."""
    return json.dumps({k: v for k, v in full.items() if k != "wall_time"}, sort_keys=True)


# --------------------------------------------------------------------------
# inputs


def _scene(args) -> Scene:
    sc = load_scene(args.scene) if args.scene else parse_scene(DEFAULT_SCENE)
    if args.seed is not None:
        sc.seed = args.seed
    return sc


def _family(sc: Scene, args) -> MotionFamily:
    F = sc.family
    if args.grid:
        F = dataclasses.replace(F, grid=args.grid)
    if args.seed is not None:
        F = dataclasses.replace(F, seed=args.seed)
    return F


def _shape(sc: Scene | None, name: str):
    if sc is not None and name in sc.shapes:
        return sc.shapes[name]
    try:
        return fixtures.named_shape(name)
    except KeyError as exc:
        raise SceneError([str(exc.args[0])]) from None


def _tol(args, key: str) -> float:
    return args.tol if args.tol is not None else DEFAULT_TOL[key]


def _grid(text: str) -> tuple:
    try:
        g = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be three integers n_alpha,n_x,n_y") from None
    if len(g) != 3 or min(g) < 2:
        raise argparse.ArgumentTypeError("grid must be three integers >= 2")
    return g


def _direction(text: str) -> tuple:
    try:
        u = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("direction must be two numbers dx,dy") from None
    if len(u) != 2:
        raise argparse.ArgumentTypeError("direction must be two numbers dx,dy")
    return u


def _moved_partners(A: PolygonalRegion, X: PolygonalRegion, rng, count: int) -> list:
    """Seeded rigid copies of X overlapping A transversely."""
    ca = np.asarray(A.to_shapely().centroid.coords[0])
    cx = np.asarray(X.to_shapely().centroid.coords[0])
    scale = 0.5 * max(diameter_radius(A), 1e-3)
    out = []
    while len(out) < count:
        alpha = rng.uniform(0, TWO_PI)
        R = np.array([[math.cos(alpha), -math.sin(alpha)], [math.sin(alpha), math.cos(alpha)]])
        t = ca - R @ cx + rng.uniform(-scale, scale, 2)
        B = apply_motion(RigidMotion(alpha, tuple(t)), X)
        if transversality_check(A, B) and not intersect_regions(A, B).is_empty:
            out.append(B)
    return out


def _default_window(A: PolygonalRegion) -> PolygonalRegion:
    """Left half of a box around A, used as the localizing region."""
    x0, y0, x1, y1 = A.to_shapely().bounds
    xm = 0.5 * (x0 + x1) + 0.0137 * (x1 - x0)
    pad = 0.25 * max(x1 - x0, y1 - y0)
    return PolygonalRegion.from_loops([[(x0 - pad, y0 - pad), (xm, y0 - pad), (xm, y1 + pad), (x0 - pad, y1 + pad)]])


def _terms(res) -> dict:
    return {k: float(v) for k, v in res.as_dict().items() if k != "info"}


# --------------------------------------------------------------------------
# subcommands


def cmd_intrinsic(args, rep: Report, sc):
    A = _shape(sc, args.shape)
    tol = _tol(args, "intrinsic")
    area, per = (0.0, 0.0) if isinstance(A, PointSet) else area_perimeter(A)
    rep.add(record("V0", eval_valuation(lk0(), A), euler_combinatorial(A), tol))
    rep.add(record("V1", eval_valuation(lk1(), A), per / 2, tol))
    rep.add(record("V2", eval_valuation(lk2(), A), area, tol))


def cmd_euler(args, rep: Report, sc):
    A = _shape(sc, args.shape)
    ref = euler_combinatorial(A)
    if args.method == "combinatorial":
        val = ref
    elif args.method == "cycle":
        val = build_normal_cycle(A).turning() / TWO_PI
    else:
        val = euler_via_morse(MorseFunction.affine(args.direction), A)
    rep.add(record(f"euler_{args.method}", val, ref, _tol(args, "euler")))
    print(f"euler ({args.method}) = {val:.12g}")


def cmd_dump_cycle(args, rep: Report, sc):
    A = _shape(sc, args.shape)
    N = build_normal_cycle(A)
    rep.body["cycle"] = N.to_records()
    rep.add(record("boundary_residual", boundary_residual(N), 0.0, 0.0))
    rep.add(record("legendrian_residual", legendrian_residual(N), 0.0, _tol(args, "dump-cycle")))
    if not args.out:
        for r in rep.body["cycle"]:
            print(json.dumps(r))


def cmd_kinematic(args, rep: Report, sc):
    F = _family(sc, args)
    A, X, mu = sc.shape("A"), sc.shape("X"), sc.form
    if args.mode == "direct":
        res = kinematic_direct(F, X, mu, A)
        rep.body["perturbations"] = res.perturbations
        rep.add(record("kinematic_direct", res["mu"], n_nodes=res.n_nodes, n_perturbed=res.n_perturbed))
    elif args.mode == "unfolded":
        res = kinematic_unfolded(F, X, mu, A)
        rep.add(record("kinematic_unfolded", res["mu"], n_nodes=res.n_nodes, n_perturbed=res.n_perturbed))
    else:
        res = kinematic_forms(F, X, mu, A)
        rep.add(record("kinematic_forms", res.total, terms=_terms(res)))


def check_pkf(args, rep: Report, sc):
    F = _family(sc, args)
    A, X = sc.shape("A"), sc.shape("X")
    res = kinematic_direct(F, X, lk0(), A)
    rep.body["perturbations"] = res.perturbations
    aA, pA = area_perimeter(A)
    aX, pX = area_perimeter(X)
    classical = F.c * (TWO_PI * (aA * euler_combinatorial(X) + aX * euler_combinatorial(A)) + pA * pX)
    covered = diameter_radius(A) + diameter_radius(X) <= F.R0
    rep.add(record("pkf_direct_vs_classical", res["mu"], classical, _tol(args, "pkf"),
                   n_nodes=res.n_nodes, n_perturbed=res.n_perturbed, plateau_covers_contacts=covered))
    if args.mc_samples:
        est, sigma = kinematic_mc(F, X, A, n_samples=args.mc_samples, seed=rng_for(sc.seed, "cli-mc").integers(2**63))
        rep.add(record("pkf_direct_vs_monte_carlo", res["mu"], est, 3 * sigma / abs(est), mc_sigma=sigma))


def check_forms_vs_direct(args, rep: Report, sc):
    F = _family(sc, args)
    A, X = sc.shape("A"), sc.shape("X")
    tol = _tol(args, "forms-vs-direct")
    om = SmoothedForm(F, X)
    direct = kinematic_direct(F, X, sc.forms, A)
    rep.body["perturbations"] = direct.perturbations
    for name, mu in sc.forms.items():
        res = kinematic_forms(F, X, mu, A, omega=om)
        rep.add(record(f"forms_vs_direct[{name}]", res.total, direct[name], tol, terms=_terms(res)))


def check_decomposition(args, rep: Report, sc):
    A, X = sc.shape("A"), sc.shape("X")
    tol = _tol(args, "decomposition")
    rng = rng_for(sc.seed, "cli-decomposition")
    for k, B in enumerate(_moved_partners(A, X, rng, args.count)):
        dec = decompose_intersection(A, B)
        Nref = build_normal_cycle(intersect_regions(A, B))
        for name, mu in sc.forms.items():
            if mu.beta_is_zero:
                continue
            parts = [integrate_form(p, mu.beta, rule="adaptive") for p in (dec.piece_A, dec.piece_B, dec.joint_arcs)]
            ref = integrate_form(Nref, mu.beta, rule="adaptive")
            rep.add(record(f"decomposition[{k}][{name}]", math.fsum(parts), ref, tol,
                           terms={"piece_A": parts[0], "piece_B": parts[1], "joint_arcs": parts[2]}))


def check_additivity(args, rep: Report, sc):
    A, X = sc.shape("A"), sc.shape("X")
    tol = _tol(args, "additivity")
    rng = rng_for(sc.seed, "cli-additivity")
    for k, B in enumerate(_moved_partners(A, X, rng, args.count)):
        union = PolygonalRegion.from_shapely(shapely.union(A.to_shapely(), B.to_shapely()))
        inter = intersect_regions(A, B)
        for name, mu in sc.forms.items():
            lhs = eval_valuation(mu, union) + eval_valuation(mu, inter)
            rhs = eval_valuation(mu, A) + eval_valuation(mu, B)
            rep.add(record(f"additivity[{k}][{name}]", lhs, rhs, tol))


def check_omega(args, rep: Report, sc):
    F = _family(sc, args)
    X = sc.shape("X")
    om = SmoothedForm(F, X)
    rng = rng_for(sc.seed, "cli-omega")
    r = om.reach * np.sqrt(rng.random(100))
    phi = rng.uniform(0, TWO_PI, 100)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), rng.uniform(0, TWO_PI, 100)])
    rep.add(record("omega_verticality", verticality_check(om, pts), 0.0, _tol(args, "verticality")))
    rep.add(record("omega_closedness", closedness_check(om, pts), 0.0, _tol(args, "closedness")))
    for name, mu in sc.forms.items():
        if mu.beta_is_zero:
            continue
        lhs, rhs = pairing_check(F, X, mu.beta, omega=om)
        rep.add(record(f"omega_pairing[{name}]", lhs, rhs, _tol(args, "pairing")))


def check_variation(args, rep: Report, sc):
    F = _family(sc, args)
    A, X = sc.shape("A"), sc.shape("X")
    om = SmoothedForm(F, X)
    h = float(sc.quadrature.get("fd_step", 1e-2))

    def nu(R):
        return kinematic_direct(F, X, lk0(), R)["mu"]

    c = np.asarray(A.to_shapely().centroid.coords[0])
    fields = {"translation": AffineField.translation((1.0, 0.0)), "dilation": AffineField.dilation(tuple(c))}
    for name, v in fields.items():
        lhs, rhs = variation_probe(nu, A, v, om.antipodal(), h=h)
        rep.add(record(f"variation[{name}]", lhs, rhs, _tol(args, "variation")))


def check_product(args, rep: Report, sc):
    F = _family(sc, args)
    A, X = sc.shape("A"), sc.shape("X")
    E = sc.shapes[sc.setup["E"]] if sc.setup.get("E") else _default_window(A)
    om = SmoothedForm(F, X)
    ref = kinematic_unfolded(F, X, sc.forms, A, E=E)
    for name, mu in sc.forms.items():
        res = kinematic_forms(F, X, mu, A, omega=om, E=E)
        rep.add(record(f"product[{name}]", res.total, ref[name], _tol(args, "product"), terms=_terms(res)))


def check_pointfn(args, rep: Report, sc):
    F = _family(sc, args)
    X = sc.shape("X")
    om = SmoothedForm(F, X)
    tol = _tol(args, "pointfn")
    rng = rng_for(sc.seed, "cli-pointfn")
    r = (0.5 * (F.R0 + F.R1)) * np.sqrt(rng.random(args.count))
    phi = rng.uniform(0, TWO_PI, args.count)
    for k, x in enumerate(np.column_stack([r * np.cos(phi), r * np.sin(phi)])):
        f = point_function_f(F, X, x)
        res = kinematic_forms(F, X, lk0(), PointSet(x.reshape(1, 2)), omega=om)
        rep.add(record(f"pointfn[{k}]", res.total, f, tol, point=x.tolist(), terms=_terms(res)))
        rep.add(record(f"pointfn_via_omega[{k}]", point_function_via_omega(F, X, x, omega=om), f, tol))


CHECK_FUNCS = {
    "pkf": check_pkf, "forms-vs-direct": check_forms_vs_direct, "decomposition": check_decomposition,
    "additivity": check_additivity, "omega": check_omega, "variation": check_variation,
    "product": check_product, "pointfn": check_pointfn,
}


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", help="scene file (JSON)")
    common.add_argument("--out", help="report path stem; writes STEM.json and STEM.csv")
    common.add_argument("--seed", type=int, help="override the scene seed")
    common.add_argument("--grid", type=_grid, help="motion grid n_alpha,n_x,n_y")
    common.add_argument("--tol", type=float, help="override the check tolerance")
    common.add_argument("--mc-samples", type=int, default=0, help="Monte Carlo samples for check pkf")

    p = argparse.ArgumentParser(prog="kinval", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("intrinsic", parents=[common], help="intrinsic volumes of a shape")
    s.add_argument("--shape", default="square")
    s = sub.add_parser("euler", parents=[common], help="Euler characteristic by one method")
    s.add_argument("--shape", default="square")
    s.add_argument("--method", choices=("combinatorial", "cycle", "morse"), default="combinatorial")
    s.add_argument("--direction", type=_direction, default=(0.3, 1.0), help="covector dx,dy for --method morse")
    s = sub.add_parser("dump-cycle", parents=[common], help="pieces of the normal cycle")
    s.add_argument("--shape", default="square")
    s = sub.add_parser("kinematic", parents=[common], help="kinematic valuation of the scene setup")
    s.add_argument("--mode", choices=("direct", "unfolded", "forms"), default="direct")
    s = sub.add_parser("check", parents=[common], help="run one verification")
    s.add_argument("which", choices=CHECKS)
    s.add_argument("--count", type=int, default=10, help="number of seeded fixtures or points")
    return p


def run(argv=None) -> tuple[int, dict | None]:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # a negative covector such as "-1,-0.3" would otherwise look like an option
    for i in range(len(argv) - 1):
        if argv[i] == "--direction" and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"--direction={argv[i + 1]}", ""]
    argv = [a for a in argv if a != ""]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (0 if exc.code == 0 else 2), None
    try:
        needs_scene = args.command in ("kinematic", "check") or args.scene
        sc = _scene(args) if needs_scene else None
        settings = {k: v for k, v in sorted(vars(args).items()) if k not in ("out",)}
        if settings.get("grid") is not None:
            settings["grid"] = list(settings["grid"])
        if settings.get("direction") is not None:
            settings["direction"] = list(settings["direction"])
        if sc is not None:
            settings["quadrature"] = sc.quadrature
            settings["family"] = dataclasses.asdict(_family(sc, args))
            settings["family"]["grid"] = list(settings["family"]["grid"])
        name = args.command if args.command != "check" else f"check {args.which}"
        rep = Report(name, sc, settings)
        if args.command == "intrinsic":
            cmd_intrinsic(args, rep, sc)
        elif args.command == "euler":
            cmd_euler(args, rep, sc)
        elif args.command == "dump-cycle":
            cmd_dump_cycle(args, rep, sc)
        elif args.command == "kinematic":
            cmd_kinematic(args, rep, sc)
        else:
            CHECK_FUNCS[args.which](args, rep, sc)
        full = rep.finish(args.out)
    except QuadratureFailure as exc:
        print(f"error: quadrature did not converge: {exc}", file=sys.stderr)
        return 3, None
    except SceneError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return 2, None
    except (InvalidRegion, NonTransverse, NotMorse, OSError, ValueError, KinvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None
    print("PASS" if full["passed"] else "FAIL")
    return (0 if full["passed"] else 1), full


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
