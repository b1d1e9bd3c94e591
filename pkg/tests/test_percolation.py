"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for bond percolation: sampling, crossings, duality, Russo,
arm events and cluster radii
"""

import pytest
import math
import os
import sys
from fractions import Fraction

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from lattice_core import build_lattice_patch, build_torus
from percolation import (
    ArmSpec, BondConfig, arm_class, arm_event_occurs, box_crossing_scale,
    check_crossing_duality, count_pivotal, critical_surface, crossing_geometry,
    crossing_holds, crossing_pair, estimate_arm_prob, estimate_crossing_prob,
    estimate_russo_derivative, estimate_russo_finite_difference, has_crossing,
    homogeneous, label_clusters, radius_distribution, russo_pivotal_count,
    sample_config, triangular_critical_probability,
)
from validators import ValidationError

HALF = Fraction(1, 2)

# === FIXTURES ===

@pytest.fixture(scope="module")
def duality_patch():
    """Square rectangle [0,6]x[0,5]"""
    return build_lattice_patch('square', 6, 5)

@pytest.fixture(scope="module")
def box_patch():
    """Square box of radius 4 around (4, 4)"""
    return build_lattice_patch('square', 8, 8)

def all_bits(patch, value):
    return BondConfig(patch, np.full(patch.n_edges, value, dtype=np.bool_))

# === SAMPLING TESTS ===

def test_homogeneous():
    """Test one probability per edge class"""
    assert homogeneous(build_lattice_patch('tri', 2, 2), HALF) == (HALF, HALF, HALF)

    with pytest.raises(ValidationError, match="out of range"):
        homogeneous(build_lattice_patch('square', 2, 2), 1.5)

def test_sample_is_reproducible(duality_patch):
    """Test (seed, stream) fixes the configuration"""
    a = sample_config(duality_patch, (HALF, HALF), seed=3, stream=9)
    b = sample_config(duality_patch, (HALF, HALF), seed=3, stream=9)
    c = sample_config(duality_patch, (HALF, HALF), seed=3, stream=10)
    assert np.array_equal(a.bits, b.bits)
    assert not np.array_equal(a.bits, c.bits)

def test_sample_extremes(duality_patch):
    """Test p=0 and p=1"""
    assert sample_config(duality_patch, (0, 0)).n_open == 0
    assert sample_config(duality_patch, (1, 1)).n_open == duality_patch.n_edges
    opened = sample_config(duality_patch, (1, 0))
    assert opened.n_open == len(duality_patch.edges_of_class(0))

def test_sample_class_mismatch(duality_patch):
    """Test class count validation"""
    with pytest.raises(ValidationError, match="Class count mismatch"):
        sample_config(duality_patch, (HALF,))

def test_bits_shape_checked(duality_patch):
    """Test BondConfig rejects the wrong number of bits"""
    with pytest.raises(ValidationError, match="bits for"):
        BondConfig(duality_patch, np.zeros(3, dtype=np.bool_))

def test_label_clusters(duality_patch):
    """Test cluster labelling at the extremes"""
    assert label_clusters(all_bits(duality_patch, True)).n_clusters == 1
    closed = label_clusters(all_bits(duality_patch, False))
    assert closed.n_clusters == duality_patch.n_vertices
    assert not closed.connected(0, 1)
    assert closed.cluster_of(5).tolist() == [5]

# === CROSSING TESTS ===

def test_crossing_extremes(duality_patch):
    """Test fully open and fully closed rectangles"""
    rect = (0, 0, 6, 5)
    assert has_crossing(all_bits(duality_patch, True), rect)
    assert not has_crossing(all_bits(duality_patch, False), rect)

def test_crossing_single_row():
    """Test one open row crosses horizontally but not vertically"""
    patch = build_lattice_patch('square', 4, 3)
    bits = np.zeros(patch.n_edges, dtype=np.bool_)
    for e, (u, v, cls) in enumerate(patch.edges):
        if cls == 0 and patch.vertices[u][1] == 1:
            bits[e] = True
    config = BondConfig(patch, bits)
    assert has_crossing(config, (0, 0, 4, 3), 'horizontal')
    assert not has_crossing(config, (0, 0, 4, 3), 'vertical')

def test_crossing_rejects_square_rectangle(duality_patch):
    """Test square rectangles have no preferred direction"""
    with pytest.raises(ValidationError, match="Square rectangle"):
        crossing_geometry(duality_patch, (0, 0, 3, 3))

def test_crossing_rejects_torus():
    """Test crossings on periodic patches are refused"""
    with pytest.raises(ValidationError, match="planar"):
        crossing_geometry(build_torus(6), (0, 0, 3, 2))

def test_crossing_bad_orientation(duality_patch):
    """Test orientation validation"""
    with pytest.raises(ValidationError, match="Unknown orientation"):
        crossing_geometry(duality_patch, (0, 0, 6, 5), 'diagonal')

def test_crossing_duality(duality_patch):
    """Test exactly one of the primal and dual crossings occurs"""
    for stream in range(200):
        config = sample_config(duality_patch, (HALF, HALF), seed=1, stream=stream)
        assert check_crossing_duality(config)
    primal, dual = crossing_pair(all_bits(duality_patch, False))
    assert (primal, dual) == (False, True)

def test_crossing_duality_needs_rectangle():
    """Test the duality check refuses other shapes"""
    with pytest.raises(ValidationError, match="n\\+1"):
        check_crossing_duality(all_bits(build_lattice_patch('square', 5, 5), True))

def test_crossing_estimate_at_half(duality_patch):
    """Test the crossing probability of [0,n+1]x[0,n] is 1/2"""
    report = estimate_crossing_prob(
        duality_patch, homogeneous(duality_patch, HALF), (0, 0, 6, 5), 4000,
        seed=7, check_duality=True,
    )
    assert report.experiment == 'perc.crossing'
    assert report.samples == 4000
    assert abs(report.estimate - 0.5) < 4 * report.se

@pytest.mark.slow
def test_crossing_estimate_at_half_full_scale():
    """Test [0,17]x[0,16] at p=1/2 with 10^5 samples sits within 3 SE of 1/2"""
    patch = build_lattice_patch('square', 17, 16)
    report = estimate_crossing_prob(
        patch, homogeneous(patch, HALF), (0, 0, 17, 16), 100000,
        seed=7, check_duality=True,
    )
    assert report.samples == 100000
    assert abs(report.estimate - 0.5) < 3 * report.se

@pytest.mark.slow
@pytest.mark.parametrize("n", [8, 16, 32])
def test_triangular_crossing_stays_non_degenerate(n):
    """Test 2:1 rectangles at the triangular critical point cross with probability in (0.05, 0.95)"""
    patch = build_lattice_patch('tri', 3 * n, n)
    height = n * math.sqrt(3) / 2
    rect = (n / 2, 0.0, n / 2 + 2 * height, height)
    report = estimate_crossing_prob(
        patch, homogeneous(patch, triangular_critical_probability()), rect, 2000, seed=11,
    )
    assert 0.05 < report.estimate < 0.95

def test_crossing_estimate_independent_of_workers(duality_patch):
    """Test thread count does not change the estimate"""
    probs = homogeneous(duality_patch, 0.4)
    one = estimate_crossing_prob(duality_patch, probs, (0, 0, 6, 5), 2500, seed=2, workers=1)
    many = estimate_crossing_prob(duality_patch, probs, (0, 0, 6, 5), 2500, seed=2, workers=3)
    assert one.estimate == many.estimate
    assert one.values == many.values

def test_box_crossing_scale():
    """Test the smallest crossing scale of the fully open lattice"""
    assert box_crossing_scale('square') == 1
    assert box_crossing_scale('tri') == 1

# === CRITICAL SURFACE TESTS ===

def test_critical_surfaces():
    """Test the square, triangular and hexagonal surfaces"""
    assert critical_surface('square', (HALF, HALF)) == 0
    assert critical_surface('square', (Fraction(1, 3), Fraction(2, 3))) == 0
    p_tri = triangular_critical_probability()
    assert p_tri == pytest.approx(2 * math.sin(math.pi / 18), rel=1e-10)
    assert critical_surface('tri', (p_tri,) * 3) == pytest.approx(0.0, abs=1e-10)
    assert critical_surface('hex', (1 - p_tri,) * 3) == pytest.approx(0.0, abs=1e-10)

    with pytest.raises(ValidationError, match="needs 2 probabilities"):
        critical_surface('square', (HALF,) * 3)
    with pytest.raises(ValidationError, match="No critical surface"):
        critical_surface('fisher', (HALF, HALF))

# === RUSSO TESTS ===

def test_count_pivotal_generic():
    """Test pivotal counting for the all-open event"""
    patch = build_lattice_patch('square', 2, 1)
    everything = lambda bits: bool(bits.all())
    assert count_pivotal(all_bits(patch, True), everything) == patch.n_edges
    bits = np.ones(patch.n_edges, dtype=np.bool_)
    bits[0] = False
    assert count_pivotal(BondConfig(patch, bits), everything) == 1

def test_crossing_pivotals_match_generic(duality_patch):
    """Test the compiled pivotal counter against brute force"""
    rect = (0, 0, 6, 5)
    geometry = crossing_geometry(duality_patch, rect)
    event = lambda bits: crossing_holds(geometry, bits)
    for stream in range(40):
        config = sample_config(duality_patch, (HALF, HALF), seed=4, stream=stream)
        assert russo_pivotal_count(config, rect) == count_pivotal(config, event)

@pytest.mark.slow
def test_russo_methods_agree():
    """Test pivotal mean against the coupled finite difference on an 8x7 box"""
    patch = build_lattice_patch('square', 8, 7)
    rect = (0, 0, 8, 7)
    pivotal = estimate_russo_derivative(patch, HALF, rect, 100000, seed=5)
    fd = estimate_russo_finite_difference(patch, HALF, rect, 100000, delta=0.01, seed=6)
    assert pivotal.estimate > 0
    assert abs(pivotal.estimate - fd.estimate) < 3 * math.hypot(pivotal.se, fd.se)

def test_finite_difference_range():
    """Test p +/- delta must stay a probability"""
    patch = build_lattice_patch('square', 4, 3)
    with pytest.raises(ValidationError):
        estimate_russo_finite_difference(patch, 0.99, (0, 0, 4, 3), 10, delta=0.05)

# === ARM TESTS ===

def test_arm_classes():
    """Test colour sequence classification"""
    assert arm_class((1,)) == 'monochromatic'
    assert arm_class((0, 0)) == 'monochromatic'
    assert arm_class((1, 0, 1, 0)) == 'alternating'
    assert arm_class((1, 0, 1)) == 'bichromatic'
    assert arm_class((1, 1, 0)) == 'bichromatic'

def test_arm_spec_validation():
    """Test radii and colour checks"""
    with pytest.raises(ValidationError, match="Arm radii"):
        ArmSpec((1,), 3, 3)
    with pytest.raises(ValidationError, match="0 or 1"):
        ArmSpec((2,), 1, 3)

def test_arm_events_at_extremes(box_patch):
    """Test primal arms when all open, dual arms when all closed"""
    open_config = all_bits(box_patch, True)
    closed_config = all_bits(box_patch, False)
    assert arm_event_occurs(open_config, ArmSpec((1, 1, 1, 1), 1, 4))
    assert not arm_event_occurs(open_config, ArmSpec((0,), 1, 4))
    assert arm_event_occurs(closed_config, ArmSpec((0, 0), 1, 4))
    assert not arm_event_occurs(closed_config, ArmSpec((1,), 1, 4))
    assert not arm_event_occurs(open_config, ArmSpec((1, 0), 1, 4))

def test_arm_box_must_fit(box_patch):
    """Test the annulus must lie in the patch"""
    with pytest.raises(ValidationError, match="leaves the patch"):
        arm_event_occurs(all_bits(box_patch, True), ArmSpec((1,), 1, 5))

def test_arm_estimate_fully_open():
    """Test p=1 makes every primal event certain"""
    report = estimate_arm_prob(ArmSpec((1, 1, 1, 1), 1, 3), 1, 20)
    assert report.estimate == 1.0
    assert report.se == 0.0
    assert report.params['class'] == 'monochromatic'

def test_mixed_colour_arms(box_patch):
    """Test one open ray to the right gives a primal arm beside dual arms"""
    ray = {frozenset({(x, 4), (x + 1, 4)}) for x in range(4, 8)}
    bits = np.array([
        frozenset({box_patch.vertices[u], box_patch.vertices[w]}) in ray
        for u, w, _ in box_patch.edges
    ], dtype=np.bool_)
    ray_config = BondConfig(box_patch, bits)
    centre = box_patch.index[(4, 4)]
    assert arm_event_occurs(ray_config, ArmSpec((1, 0), 1, 4), centre)
    assert arm_event_occurs(ray_config, ArmSpec((1, 0, 0), 1, 4), centre)
    assert not arm_event_occurs(ray_config, ArmSpec((1, 1), 1, 4), centre)
    assert not arm_event_occurs(ray_config, ArmSpec((1, 0, 1, 0), 1, 4), centre)

@pytest.mark.slow
def test_four_alternating_arms_decay():
    """Test the four-arm probability at p=1/2 falls as the outer radius doubles"""
    reports = [estimate_arm_prob(ArmSpec((1, 0, 1, 0), 1, n), HALF, 4000, seed=13) for n in (4, 8, 16)]
    for near, far in zip(reports, reports[1:]):
        assert near.estimate - far.estimate > 3 * math.hypot(near.se, far.se)

# === RADIUS TESTS ===

def test_radius_extremes():
    """Test radius 0 when closed and full censoring when open"""
    patch = build_lattice_patch('square', 6, 6)
    closed = radius_distribution(patch, (0, 0), 30)
    assert closed.estimate == 0.0
    assert closed.values['censored'] == 0

    full = radius_distribution(patch, (1, 1), 30)
    assert full.estimate == pytest.approx(3.0)
    assert full.values['censored'] == 30
    assert full.values['survival'][-1] == (3, 1.0)

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
