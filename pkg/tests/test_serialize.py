import json
import xml.etree.ElementTree as ET

import pytest

from cfboltz.errors import MalformedExcursion
from cfboltz.models import builtin_spec
from cfboltz.oracle import enumerate_structures
from cfboltz.serialize import format_structure, from_paren, rhv_svg, to_json, to_paren
from cfboltz.shuffle import decompose
from cfboltz.spec import ColoredTree


def test_binary_paren():
    spec = builtin_spec("binary")
    assert to_paren(spec, (0,)) == "A(z)"
    trees = {to_paren(spec, t.nodes) for t, _ in enumerate_structures(spec, 2)}
    assert trees == {"A(A(z) A(z))"}


@pytest.mark.parametrize("name, n", [("binary", 6), ("rhv", 5)])
def test_round_trip(name, n):
    spec = builtin_spec(name)
    for t, _ in enumerate_structures(spec, n):
        text = to_paren(spec, t.nodes)
        assert text.count("z") == n
        assert from_paren(spec, text) == t.nodes


def test_json_leaves():
    spec = builtin_spec("rhv")
    for t, _ in enumerate_structures(spec, 4):
        doc = json.loads(format_structure(spec, t, "jsonl"))

        def leaves(d):
            if "leaf" in d:
                return 1
            return sum(leaves(c) for c in d["children"])

        assert doc["color"] == 0 and leaves(doc) == 4


def test_subtree_rendering():
    spec = builtin_spec("rhv")
    t, _ = enumerate_structures(spec, 4)[0]
    parts = decompose(spec, t.nodes)
    line = format_structure(spec, parts)
    assert len(line.split(" R(")) == len(parts)
    doc = json.loads(format_structure(spec, parts, "jsonl"))
    assert len(doc["bridge"]) == len(parts)
    assert to_json(spec, parts[0].nodes, True)["color"] == 0


def test_from_paren_errors():
    spec = builtin_spec("binary")
    with pytest.raises(MalformedExcursion):
        from_paren(spec, "A(z z z)")
    with pytest.raises(MalformedExcursion):
        from_paren(spec, "A(z) A(z)")


def test_svg():
    spec = builtin_spec("rhv")
    for t, _ in enumerate_structures(spec, 4):
        root = ET.fromstring(rhv_svg(spec, t.nodes))
        rects = [e for e in root.iter() if e.tag.endswith("rect")]
        assert len(rects) == 4
        area = sum(float(r.get("width")) * float(r.get("height")) for r in rects)
        assert area == pytest.approx(512 * 512)
    with pytest.raises(ValueError):
        rhv_svg(builtin_spec("binary"), (0,))
