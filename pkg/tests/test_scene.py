import json

import pytest

from kinval.errors import SceneError
from kinval.geometry import PointSet, PolygonalRegion
from kinval.scene import load_scene, parse_scene

MINIMAL = """{
  "seed": 1,
  "shapes": {"sq": [[[0, 0], [1, 0], [1, 1], [0, 1]]]},
  "forms": {"chi": {"name": "lk0", "params": []}},
  "families": {"F": {"plateau": {"R0": 3, "R1": 3.5, "c": 1}}}
}"""


def errors_of(text):
    with pytest.raises(SceneError) as exc:
        parse_scene(text)
    return exc.value.errors


def test_minimal_scene():
    sc = parse_scene(MINIMAL)
    assert isinstance(sc.shapes["sq"], PolygonalRegion)
    assert sc.setup == {"A": "sq", "X": "sq", "form": "chi", "family": "F"}
    assert sc.family.grid == (64, 64, 64) and sc.family.seed == 1
    assert len(sc.digest) == 64


def test_digest_ignores_formatting_but_not_content():
    compact = json.dumps(json.loads(MINIMAL))
    assert parse_scene(compact).digest == parse_scene(MINIMAL).digest
    assert parse_scene(MINIMAL.replace('"seed": 1', '"seed": 2')).digest != parse_scene(MINIMAL).digest


def test_duplicate_shape_name():
    text = MINIMAL.replace('"sq": [[[0, 0], [1, 0], [1, 1], [0, 1]]]',
                           '"sq": [[[0, 0], [1, 0], [1, 1], [0, 1]]],\n  "sq": [[[0, 0], [2, 0], [0, 2]]]')
    errs = errors_of(text)
    assert len(errs) == 1 and "'sq'" in errs[0] and "duplicate" in errs[0]
    assert errs[0].startswith("line 4")  # the second occurrence


def test_hole_with_wrong_orientation():
    text = MINIMAL.replace('[[[0, 0], [1, 0], [1, 1], [0, 1]]]',
                           '[[[0, 0], [3, 0], [3, 3], [0, 3]], [[1, 1], [2, 1], [2, 2], [1, 2]]]')
    errs = errors_of(text)
    assert "loop 1" in errs[0] and "clockwise" in errs[0]


def test_outer_loop_clockwise():
    errs = errors_of(MINIMAL.replace('[[[0, 0], [1, 0], [1, 1], [0, 1]]]', '[[[0, 0], [0, 1], [1, 1], [1, 0]]]'))
    assert "loop 0" in errs[0]


def test_unknown_form_and_missing_seed_are_both_reported():
    text = MINIMAL.replace('"seed": 1,', "").replace('"lk0"', '"lk9"')
    errs = errors_of(text)
    assert any("seed" in e for e in errs)
    assert any("unknown form 'lk9'" in e for e in errs)


def test_malformed_json_has_position():
    errs = errors_of(MINIMAL.replace('"forms"', '"forms" ['))
    assert errs[0].startswith("line 4, column")


def test_unresolvable_setup_reference():
    text = MINIMAL.replace('"families"', '"setup": {"A": "nope"},\n  "families"')
    errs = errors_of(text)
    assert "unknown name 'nope'" in errs[0]


def test_name_reused_across_sections():
    errs = errors_of(MINIMAL.replace('"chi":', '"sq":'))
    assert "'sq'" in errs[0]


def test_bad_family_and_shape_values():
    errs = errors_of(MINIMAL.replace('"R0": 3', '"R0": 4'))
    assert "family 'F'" in errs[0]
    errs = errors_of(MINIMAL.replace('[[[0, 0], [1, 0], [1, 1], [0, 1]]]', '[[[0, 0], [1, 1], [1, 0], [0, 1]]]'))
    assert "shape 'sq'" in errs[0]


def test_point_sets_and_multi_polygons(tmp_path):
    text = MINIMAL.replace('"sq": [[[0, 0], [1, 0], [1, 1], [0, 1]]]',
                           '"sq": [[[0, 0], [1, 0], [1, 1], [0, 1]]], "pts": {"points": [[0, 0], [1, 2]]},'
                           ' "two": {"polygons": [[[[0, 0], [1, 0], [0, 1]]], [[[3, 0], [4, 0], [3, 1]]]]}')
    path = tmp_path / "s.json"
    path.write_text(text)
    sc = load_scene(str(path))
    assert isinstance(sc.shapes["pts"], PointSet)
    assert len(sc.shapes["two"].loops) == 2
