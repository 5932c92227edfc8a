from fractions import Fraction

import pytest

from cfboltz.errors import NoExcursion
from cfboltz.models import builtin_spec
from cfboltz.parser import parse_spec
from cfboltz.spec import compute_catalog, validate_spec


def test_valid_systems_have_empty_reports():
    assert validate_spec(parse_spec("A = z + A^2;")) == []
    assert validate_spec(builtin_spec("rhv")) == []


def test_linear_cycle_is_not_nilpotent():
    report = validate_spec(parse_spec("A = B; B = A;"))
    assert any("nilpotent" in r for r in report)


def test_not_strongly_connected():
    report = validate_spec(parse_spec("A = z + A^2 + B; B = z + B^2;"))
    assert any("strongly connected" in r for r in report)


def test_binary_catalog():
    cat = compute_catalog(parse_spec("A = z + A^2;"))
    assert cat.v0 == 1 and cat.T0 == 1
    assert len(cat.base_trees) == 1 and cat.base_trees[0].step == (1, -1)


def test_rhv_catalog():
    spec = builtin_spec("rhv")
    cat = compute_catalog(spec)
    assert cat.v0 == 1 and cat.T0 == 1
    (t,) = cat.base_trees
    (g,) = t.nodes
    assert spec.color[g] == 0 and spec.h[g] == 1


def test_two_leaf_minimum():
    cat = compute_catalog(parse_spec("A = z^2 + A^2;"))
    assert cat.v0 == 2 and cat.T0 == 1


def test_weighted_base_class():
    # size-1 subtrees without A-leaves: z (weight 2) and B -> z (weight 1)
    cat = compute_catalog(parse_spec("A = 2 z + B + A^2; B = z + A B;"))
    assert cat.v0 == 1
    assert sorted(cat.base_weights) == [1, 2] and cat.T0 == 3


def test_no_excursion():
    with pytest.raises(NoExcursion):
        compute_catalog(parse_spec("A = z A + A^2;"))


def test_subtree_steps_and_sizes():
    spec = builtin_spec("rhv")
    # the monomial R -> R^4 as a subtree: four A-leaves, no z
    g = next(g for g in spec.monomial_ids(0) if spec.k0[g] == 4)
    t = spec.make_subtree([g])
    assert (t.v, t.ell) == (0, 4) and t.step == (0, 3)
    assert spec.check_tree([g], subtree=True)
    assert not spec.check_tree([g])
    assert spec.weight([g]) == Fraction(1)
