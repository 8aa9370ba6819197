"""Scene files: named shapes, forms and motion families in JSON.

    {
      "seed": 7,
      "shapes": {"A": [[[0, 0], [1, 0], [1, 1], [0, 1]]],
                 "P": {"points": [[0.2, 0.3]]},
                 "two": {"polygons": [[[...]], [[...]]]}},
      "forms": {"chi": {"name": "lk0", "params": []}},
      "families": {"F": {"plateau": {"R0": 3, "R1": 3.5, "c": 1},
                         "grid": [64, 64, 64], "seed": 1}},
      "setup": {"A": "A", "X": "A", "form": "chi", "family": "F"},
      "quadrature": {"tol": 1e-3}
    }

A polygon literal is a list of loops: the first is the outer boundary
(counterclockwise), the rest are holes (clockwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import json
import re

from .errors import InvalidRegion, SceneError
from .forms import REGISTRY, ValuationPair, make_form
from .geometry import PointSet, PolygonalRegion, _ring_area2
from .kinematic import MotionFamily

import numpy as np


@dataclass
class Scene:
    seed: int
    shapes: dict = field(default_factory=dict)
    forms: dict = field(default_factory=dict)
    form_specs: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    setup: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    digest: str = ""

    def shape(self, key: str):
        return self.shapes[self.setup[key]]

    @property
    def form(self) -> ValuationPair:
        return self.forms[self.setup["form"]]

    @property
    def family(self) -> MotionFamily:
        return self.families[self.setup["family"]]


class _Duplicate(Exception):
    pass


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise _Duplicate(k)
        seen[k] = v
    return seen


def _line_of(text: str, key: str, section: str | None = None) -> int:
    """Line of the first occurrence of the quoted key (after ``section`` if given)."""
    start = 0
    if section is not None:
        m = re.search(r'"%s"\s*:' % re.escape(section), text)
        start = m.end() if m else 0
    m = re.search(r'"%s"\s*:' % re.escape(key), text[start:])
    if not m:
        return 0
    return text.count("\n", 0, start + m.start()) + 1


def _line_of_second(text: str, key: str) -> int:
    hits = [m.start() for m in re.finditer(r'"%s"\s*:' % re.escape(key), text)]
    pos = hits[1] if len(hits) > 1 else (hits[0] if hits else 0)
    return text.count("\n", 0, pos) + 1


def _polygon(name: str, literal, errors: list, line: int):
    if not isinstance(literal, list) or not literal:
        errors.append(f"line {line}: shape {name!r} must be a non-empty list of loops")
        return None
    loops = []
    for i, loop in enumerate(literal):
        try:
            pts = np.asarray(loop, dtype=float)
        except (TypeError, ValueError):
            errors.append(f"line {line}: shape {name!r} loop {i} is not a list of [x, y] pairs")
            return None
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            errors.append(f"line {line}: shape {name!r} loop {i} needs at least 3 [x, y] pairs")
            return None
        area2 = _ring_area2(pts)
        if i == 0 and area2 <= 0:
            errors.append(f"line {line}: shape {name!r} loop 0 is the outer boundary and must be counterclockwise")
            return None
        if i > 0 and area2 >= 0:
            errors.append(f"line {line}: shape {name!r} loop {i} is a hole and must be clockwise")
            return None
        loops.append(pts)
    return loops


def _shape(name: str, spec, errors: list, line: int):
    if isinstance(spec, dict) and "points" in spec:
        try:
            return PointSet(np.asarray(spec["points"], dtype=float).reshape(-1, 2))
        except (ValueError, InvalidRegion) as exc:
            errors.append(f"line {line}: shape {name!r}: {exc}")
            return None
    if isinstance(spec, dict) and "polygons" in spec:
        loops = []
        for lit in spec["polygons"]:
            part = _polygon(name, lit, errors, line)
            if part is None:
                return None
            loops.extend(part)
    else:
        loops = _polygon(name, spec, errors, line)
        if loops is None:
            return None
    try:
        return PolygonalRegion.from_loops(loops)
    except InvalidRegion as exc:
        errors.append(f"line {line}: shape {name!r}: {exc}")
        return None


def _family(name: str, spec, seed: int, errors: list, line: int):
    try:
        pl = spec["plateau"]
        grid = tuple(int(g) for g in spec.get("grid", (64, 64, 64)))
        if len(grid) != 3 or min(grid) < 2:
            raise ValueError("grid must be three integers >= 2")
        return MotionFamily(float(pl["R0"]), float(pl["R1"]), float(pl.get("c", 1.0)),
                            profile=str(pl.get("profile", "bump")), grid=grid,
                            seed=int(spec.get("seed", seed)))
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"line {line}: family {name!r}: {exc}")
        return None


def parse_scene(text: str) -> Scene:
    """Parse and validate a scene; raises SceneError listing every problem."""
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicates)
    except _Duplicate as dup:
        raise SceneError([f"line {_line_of_second(text, str(dup))}: duplicate name {str(dup)!r}"]) from None
    except json.JSONDecodeError as exc:
        raise SceneError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(raw, dict):
        raise SceneError(["line 1: a scene must be a JSON object"])
    errors: list = []
    if "seed" not in raw:
        errors.append("line 1: the scene seed is mandatory")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
        errors.append(f"line {_line_of(text, 'seed')}: seed must be an integer in [0, 2^64)")
        seed = 0
    sc = Scene(seed=seed)
    all_names: dict = {}
    for section in ("shapes", "forms", "families"):
        for name in raw.get(section, {}) or {}:
            if name in all_names:
                errors.append(f"line {_line_of(text, name, section)}: name {name!r} is used for both "
                              f"{all_names[name]} and {section}")
            all_names[name] = section
    for name, spec in (raw.get("shapes") or {}).items():
        obj = _shape(name, spec, errors, _line_of(text, name, "shapes"))
        if obj is not None:
            sc.shapes[name] = obj
    for name, spec in (raw.get("forms") or {}).items():
        line = _line_of(text, name, "forms")
        if not isinstance(spec, dict) or "name" not in spec:
            errors.append(f"line {line}: form {name!r} needs a registry name")
            continue
        if spec["name"] not in REGISTRY:
            errors.append(f"line {line}: unknown form {spec['name']!r} (known: {', '.join(sorted(REGISTRY))})")
            continue
        try:
            sc.forms[name] = make_form(spec["name"], spec.get("params", []))
            sc.form_specs[name] = {"name": spec["name"], "params": list(spec.get("params", []))}
        except (TypeError, ValueError, SceneError) as exc:
            errors.append(f"line {line}: form {name!r}: {exc}")
    for name, spec in (raw.get("families") or {}).items():
        fam = _family(name, spec, seed, errors, _line_of(text, name, "families"))
        if fam is not None:
            sc.families[name] = fam
    setup = dict(raw.get("setup") or {})
    shape_names = list((raw.get("shapes") or {}).keys())
    defaults = {
        "A": shape_names[0] if shape_names else None,
        "X": shape_names[1] if len(shape_names) > 1 else (shape_names[0] if shape_names else None),
        "form": next(iter(raw.get("forms") or {}), None),
        "family": next(iter(raw.get("families") or {}), None),
    }
    for key, default in defaults.items():
        setup.setdefault(key, default)
    pools = {"A": sc.shapes, "X": sc.shapes, "E": sc.shapes, "form": sc.forms, "family": sc.families}
    declared = {"A": "shapes", "X": "shapes", "E": "shapes", "form": "forms", "family": "families"}
    for key, value in setup.items():
        if key not in pools:
            errors.append(f"line {_line_of(text, key, 'setup')}: unknown setup key {key!r}")
        elif value is not None and value not in (raw.get(declared[key]) or {}):
            errors.append(f"line {_line_of(text, key, 'setup')}: setup {key!r} refers to unknown name {value!r}")
    sc.setup = setup
    sc.quadrature = dict(raw.get("quadrature") or {})
    if errors:
        raise SceneError(errors)
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    sc.digest = hashlib.sha256(canonical.encode()).hexdigest()
    return sc


def load_scene(path: str) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return parse_scene(fh.read())
