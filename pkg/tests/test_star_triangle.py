"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for the star-triangle coupling and interface steps
"""

import pytest
import os
import sys
from fractions import Fraction

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from lattice_core import MixedLayout, build_lattice_patch, build_mixed_patch
from percolation import BondConfig, label_clusters
from star_triangle import (
    DOWN, UP, EdgeTriple, branches_S, branches_T, estimate_universality,
    exact_step_law, mixed_lattice_step, plan_step, reflect_layout,
    solve_triangle_triple, star_partition, star_triangle_law,
    star_triangle_map_S, star_triangle_map_T, transport_crossing,
    triangle_partition, verify_coupling,
)
from validators import ValidationError

# === FIXTURES ===

@pytest.fixture
def critical():
    """Exact triple on the critical surface: (1/2, 1/3, 1/5)"""
    return EdgeTriple(Fraction(1, 2), Fraction(1, 3), Fraction(1, 5))

@pytest.fixture
def off_surface():
    return EdgeTriple(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2))

# === TRIPLE TESTS ===

def test_solve_triangle_triple(critical):
    """Test the third parameter on the surface"""
    solved = solve_triangle_triple(Fraction(1, 2), Fraction(1, 3))
    assert solved == critical
    assert solved.kappa == 0
    assert solved.on_surface()

    with pytest.raises(ValidationError, match="No critical triple"):
        solve_triangle_triple(1, 1)
    with pytest.raises(ValidationError, match="out of range"):
        solve_triangle_triple(0.9, 0.9)

def test_triple_validation():
    """Test probabilities must stay below 1"""
    with pytest.raises(ValidationError, match="must be < 1"):
        EdgeTriple(1, 0, 0)

def test_float_triple_on_surface():
    """Test the tolerance path for floats"""
    triple = solve_triangle_triple(0.3, 0.4)
    assert not triple.exact
    assert triple.on_surface()
    assert triple.swapped().as_tuple() == (0.3, triple.p2, 0.4)

def test_mixed_class_probs(critical):
    """Test horizontal, vertical, right, left"""
    assert critical.mixed_class_probs() == (Fraction(1, 2), Fraction(1, 2), Fraction(1, 3), Fraction(1, 5))

# === LAW TESTS ===

def test_partitions():
    """Test triangle and star connectivity"""
    assert triangle_partition((False, False, False)) == 'A|B|C'
    assert triangle_partition((True, False, False)) == 'BC|A'
    assert triangle_partition((False, True, True)) == 'ABC'
    assert star_partition((True, True, False)) == 'AB|C'
    assert star_partition((True, False, False)) == 'A|B|C'
    assert star_partition((True, True, True)) == 'ABC'

def test_law_on_surface(critical):
    """Test the partition laws agree exactly on the surface"""
    law = star_triangle_law(critical)
    assert law.tv_distance == 0
    assert sum(law.triangle.values()) == 1

    floats = star_triangle_law(solve_triangle_triple(0.25, 0.6))
    assert floats.tv_distance < 1e-12

def test_law_off_surface(off_surface):
    """Test the laws differ when kappa is not zero"""
    law = star_triangle_law(off_surface)
    assert law.kappa == Fraction(3, 8)
    assert law.tv_distance > 0

# === COUPLING TESTS ===

def test_branch_weights_sum_to_one(critical):
    """Test the random branches form a distribution"""
    assert sum(w for w, _ in branches_T((False, False, False), critical)) == 1
    assert sum(w for w, _ in branches_S((True, True, True), critical)) == 1
    assert branches_T((True, False, False), critical) == [(1, (False, True, True))]
    assert branches_S((True, True, False), critical) == [(1, (False, False, True))]

def test_coupling_exact(critical):
    """Test both maps push the product law forward and keep partitions"""
    check = verify_coupling(critical)
    assert check.tv_T == 0
    assert check.tv_S == 0
    assert check.partitions_preserved

RATIONAL_PAIRS = [
    (Fraction(a, 7), Fraction(b, 9))
    for a in (1, 2, 3, 4, 5) for b in (1, 2, 3, 4, 5)
    if Fraction(a, 7) + Fraction(b, 9) < 1
]

@pytest.mark.parametrize("p0,p1", RATIONAL_PAIRS)
def test_coupling_on_rational_triples(p0, p1):
    """Test exact laws and couplings across rational critical triples"""
    triple = solve_triangle_triple(p0, p1)
    assert star_triangle_law(triple).tv_distance == 0
    check = verify_coupling(triple)
    assert (check.tv_T, check.tv_S, check.partitions_preserved) == (0, 0, True)

def test_coupling_off_surface(off_surface):
    """Test renormalised maps keep partitions but not the law"""
    with pytest.raises(ValidationError, match="allow_off_surface"):
        verify_coupling(off_surface)
    check = verify_coupling(off_surface, allow_off_surface=True)
    assert check.partitions_preserved
    assert check.tv_T > 0

def test_maps_deterministic_outside_special_case(critical):
    """Test the uniform only matters for all-closed or all-open inputs"""
    for u in (0.0, 0.5, 0.999):
        assert star_triangle_map_T((True, True, False), critical, u) == (True, True, True)
        assert star_triangle_map_S((False, False, True), critical, u) == (False, False, False)
    outcomes = {star_triangle_map_T((False, False, False), critical, u) for u in np.linspace(0, 0.999, 200)}
    assert len(outcomes) == 4

# === INTERFACE STEP TESTS ===

def test_plan_step_shapes():
    """Test a down step lowers the interface by one layer"""
    layout = MixedLayout('STS', 3)
    plan = plan_step(layout, DOWN)
    assert plan.new_patch.layout.word == 'TSS'
    assert len(plan.triangles) == 3
    assert len(plan.stars) == 3
    assert len(plan.influencing) == 12
    assert len(plan.produced) == 12
    assert not plan.mirrored

    up = plan_step(layout, UP)
    assert up.mirrored
    assert up.new_patch.layout.word == 'SST'

def test_plan_step_errors():
    """Test boundary interfaces and unknown directions"""
    with pytest.raises(ValidationError, match="bottom"):
        plan_step(MixedLayout('TS', 3), DOWN)
    with pytest.raises(ValidationError, match="Unknown step direction"):
        plan_step(MixedLayout('STS', 3), 'sideways')
    with pytest.raises(ValidationError, match="periodic"):
        plan_step(MixedLayout('STS', 3, periodic=False), DOWN)

def test_reflect_layout():
    """Test reflection reverses the word and is an involution on the word"""
    layout = MixedLayout('SSTS', 4)
    mirror = reflect_layout(layout)
    assert mirror.word == 'STSS'
    assert reflect_layout(mirror).word == layout.word

@pytest.mark.parametrize("direction", [DOWN, UP])
def test_exact_step_law(critical, direction):
    """Test one interface step preserves the product law exactly"""
    law = exact_step_law(MixedLayout('STS', 3), critical, direction)
    assert law.tv_distance == 0
    assert sum(law.pushforward.values()) == 1

def test_exact_step_law_off_surface(off_surface):
    """Test the exact law needs a critical triple"""
    with pytest.raises(ValidationError):
        exact_step_law(MixedLayout('STS', 3), off_surface)

def test_mixed_step_keeps_open_strip_connected(critical):
    """Test the fully open strip stays connected"""
    patch = build_mixed_patch(MixedLayout('SSTS', 4))
    bond_config = BondConfig(patch, np.ones(patch.n_edges, dtype=np.bool_))
    stepped = mixed_lattice_step(bond_config, critical, DOWN, seed=3)
    assert stepped.patch.layout.word == 'STSS'
    assert label_clusters(stepped).n_clusters == 1

def test_mixed_step_needs_layout(critical):
    """Test plain patches are refused"""
    patch = build_lattice_patch('square', 2, 2)
    with pytest.raises(ValidationError, match="mixed strip"):
        mixed_lattice_step(BondConfig(patch, np.ones(patch.n_edges, dtype=np.bool_)), critical)

# === TRANSPORT TESTS ===

def test_transport_open_strip(critical):
    """Test tracked sets stay connected and move at most one per step"""
    layout = MixedLayout('SSSTTS', 4)
    patch = build_mixed_patch(layout)
    bond_config = BondConfig(patch, np.ones(patch.n_edges, dtype=np.bool_))
    left = [patch.index[(0, r)] for r in range(3)]
    right = [patch.index[(4, r)] for r in range(3)]
    result = transport_crossing(bond_config, critical, 2, left, right, seed=1)
    assert result.connected_before
    assert result.connected_after
    assert result.max_displacement <= 2 + 1e-9
    assert result.final.patch.layout.word == 'STTSSS'

def test_universality_transport(critical):
    """Test every crossing survives the steps"""
    report = estimate_universality(critical, width=4, steps=2, samples=30, seed=5)
    assert report.experiment == 'perc.universality'
    assert report.values['crossed_after'] >= report.values['crossed_before']
    assert report.values['max_displacement'] <= 2 + 1e-9
    assert 0 <= report.estimate <= 1

@pytest.mark.slow
def test_universality_transport_full_scale(critical):
    """Test eight steps over 1000 samples lose no crossing and move no endpoint more than 8"""
    report = estimate_universality(critical, width=8, steps=8, samples=1000, seed=5)
    assert report.samples == 1000
    assert report.values['crossed_before'] > 0
    assert report.values['crossed_after'] >= report.values['crossed_before']
    assert report.values['max_displacement'] <= 8 + 1e-9

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
