"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for walk counts, the turning observable and bridges
"""

import pytest
import os
import sys

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from lattice_core import build_lattice_patch, build_region, build_torus
from saw import (
    CHI, CRITICAL_SIGMA, KAPPA_HEX, boundary_sums, bridge_decompose,
    check_submultiplicativity, count_saws, count_saws_oracle,
    critical_weight_factor, enumerate_saws, estimate_connective_constant,
    fisher_lattice_constant, hammersley_welsh_bound, midpoint_partition_function,
    parafermionic_observable, patch_for_walks, phase_factors, reconstruct,
    region_walk_table, solve_critical_x, turning_angle, upsilon_geometric_bound,
    upsilon_lower_bound, verify_vertex_identity,
)
from validators import BudgetExceededError, ValidationError

HEX_COUNTS = [
    3, 6, 12, 24, 48, 90, 174, 336, 648, 1218, 2328, 4416,
    8388, 15780, 29892, 56268, 106200, 199350, 375504, 704304,
]
SQUARE_COUNTS = [
    4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932,
    881500, 2374444, 6416596, 17245332,
]
TRIANGULAR_COUNTS = [6, 30, 138, 618, 2730, 11946, 51882, 224130]
REGIONS = [(1, 1), (1, 2), (2, 2), (2, 3)]

# === FIXTURES ===

@pytest.fixture(scope="module")
def hex_patch():
    """Hexagonal window deep enough for 8-step walks"""
    return patch_for_walks('hex', 8)

@pytest.fixture(scope="module")
def walks_to_ten():
    """Hexagonal window and every walk of 1 to 10 steps from its origin"""
    patch = patch_for_walks('hex', 10)
    return patch, enumerate_saws(patch, 10, exact_length=False)

@pytest.fixture(scope="module")
def small_region():
    """Region with h=1, v=2"""
    return build_region(1, 2)

# === COUNTING TESTS ===

def test_hexagonal_counts():
    """Test exact hexagonal counts up to 12 steps"""
    patch = patch_for_walks('hex', 12)
    assert count_saws(patch, 12) == HEX_COUNTS[:12]

def test_square_and_triangular_counts():
    """Test exact counts on the square and triangular lattices"""
    assert count_saws(patch_for_walks('square', 7), 7) == SQUARE_COUNTS[:7]
    assert count_saws(patch_for_walks('tri', 5), 5) == TRIANGULAR_COUNTS[:5]

@pytest.mark.parametrize("workers", [1, 3])
def test_counts_independent_of_workers(hex_patch, workers):
    """Test the parallel split gives the same counts"""
    assert count_saws(hex_patch, 8, workers=workers) == HEX_COUNTS[:8]

def test_oracle_agrees(hex_patch):
    """Test the kernel against the breadth-first counter"""
    assert count_saws_oracle(hex_patch, 7) == count_saws(hex_patch, 7)

@pytest.mark.slow
def test_hexagonal_counts_to_twenty():
    """Test exact hexagonal counts up to 20 steps"""
    assert count_saws(patch_for_walks('hex', 20), 20) == HEX_COUNTS

@pytest.mark.slow
def test_square_counts_to_sixteen():
    """Test exact square counts up to 16 steps"""
    assert count_saws(patch_for_walks('square', 16), 16) == SQUARE_COUNTS

@pytest.mark.slow
@pytest.mark.parametrize("family,n_max", [
    ('hex', 16), ('archimedean', 16), ('square', 11), ('tri', 7),
])
def test_oracle_agrees_on_every_family(family, n_max):
    """Test kernel and breadth-first counter agree on all four lattices"""
    patch = patch_for_walks(family, n_max)
    counts = count_saws(patch, n_max)
    assert count_saws_oracle(patch, n_max) == counts
    if family == 'tri':
        assert counts == TRIANGULAR_COUNTS[:n_max]

def test_count_budget():
    """Test enumeration stops at the budget"""
    with pytest.raises(BudgetExceededError):
        count_saws(patch_for_walks('hex', 10), 10, budget=50)

def test_count_patch_too_small():
    """Test the depth check"""
    with pytest.raises(ValidationError, match="Patch too small"):
        count_saws(build_lattice_patch('square', 2, 2), 3)

def test_count_periodic_rejected():
    """Test tori are refused"""
    with pytest.raises(ValidationError, match="non-periodic"):
        count_saws(build_torus(6), 2)

def test_submultiplicativity():
    """Test sigma_{m+n} <= sigma_m * sigma_n"""
    assert check_submultiplicativity(HEX_COUNTS) == (True, None)
    assert check_submultiplicativity([2, 5]) == (False, (1, 1))

@pytest.mark.parametrize("counts", [HEX_COUNTS[:16], SQUARE_COUNTS[:16]], ids=['hex', 'square'])
def test_submultiplicativity_up_to_sixteen(counts):
    """Test sigma_{m+n} <= sigma_m * sigma_n for every m+n <= 16"""
    assert check_submultiplicativity(counts) == (True, None)
    for total in range(2, 17):
        for m in range(1, total):
            assert counts[total - 1] <= counts[m - 1] * counts[total - m - 1]

def test_hexagonal_ratios_after_ten_steps():
    """Test sigma_{n+1}/sigma_n for n >= 10 stays in [1.7, 2.0]"""
    estimate = estimate_connective_constant(HEX_COUNTS, 'hex')
    assert all(1.7 <= r <= 2.0 for r in estimate.ratios[9:])
    assert len(estimate.ratios[9:]) == 10

def test_square_estimates_below_three():
    """Test square roots and ratios respect the degree bound"""
    estimate = estimate_connective_constant(SQUARE_COUNTS, 'square')
    assert estimate.ratios_within_bounds
    assert max(estimate.ratios) <= 3.0
    assert all(1.0 < r <= 4.0 for r in estimate.roots)

def test_connective_estimates():
    """Test ratios and roots stay inside the degree bounds"""
    estimate = estimate_connective_constant(HEX_COUNTS, 'hex')
    assert estimate.degree == 3
    assert estimate.ratios_within_bounds
    assert estimate.ratios[0] == pytest.approx(2.0)
    # roots decrease towards the connective constant from above
    assert estimate.roots[-1] > KAPPA_HEX
    assert estimate.roots[-1] < estimate.roots[2]

    with pytest.raises(ValidationError, match="at least 3"):
        estimate_connective_constant([3, 6])

# === ENUMERATION TESTS ===

def test_enumerate_matches_counts(hex_patch):
    """Test explicit walks against the counts"""
    for n in range(1, 6):
        assert len(enumerate_saws(hex_patch, n)) == HEX_COUNTS[n - 1]
    assert len(enumerate_saws(hex_patch, 4, exact_length=False)) == sum(HEX_COUNTS[:4])

def test_walks_are_self_avoiding(hex_patch):
    """Test no walk repeats a vertex"""
    for path in enumerate_saws(hex_patch, 6):
        assert len(set(path.vertices)) == path.length
        assert path.steps == 6

def test_turning_matches_embedding(hex_patch):
    """Test incremental turning equals the geometric turning"""
    for path in enumerate_saws(hex_patch, 5):
        assert turning_angle(path, hex_patch) == path.turning_thirds
        assert abs(path.turning_thirds) <= 4

def test_turning_needs_hexagonal():
    """Test turning on a square patch is refused"""
    patch = build_lattice_patch('square', 2, 2)
    path = enumerate_saws(patch, 1)[0]
    with pytest.raises(ValidationError, match="hexagonal"):
        turning_angle(path, patch)

# === OBSERVABLE TESTS ===

def test_critical_constants():
    """Test sigma=5/8 cancels the weight factor and gives x_c"""
    assert critical_weight_factor(CRITICAL_SIGMA) == pytest.approx(0.0, abs=1e-12)
    assert solve_critical_x(CRITICAL_SIGMA) == pytest.approx(CHI, rel=1e-12)
    assert CHI == pytest.approx(1.0 / KAPPA_HEX)
    assert np.allclose(phase_factors(0.0, 2), np.ones(5))

@pytest.mark.parametrize("h,v", REGIONS)
def test_vertex_relation_at_criticality(h, v):
    """Test the vertex relation holds inside every region at sigma=5/8"""
    assert verify_vertex_identity(build_region(h, v), CRITICAL_SIGMA, CHI) < 1e-10

def test_vertex_relation_fails_off_criticality(small_region):
    """Test the relation is specific to the critical pair"""
    assert verify_vertex_identity(small_region, 0.3, CHI) > 1e-6

def test_vertex_relation_fails_below_critical_x():
    """Test a 10% smaller x breaks the relation somewhere"""
    assert verify_vertex_identity(build_region(1, 1), CRITICAL_SIGMA, 0.9 * CHI) > 1e-6

@pytest.mark.parametrize("h,v", REGIONS)
def test_boundary_identity_on_regions(h, v):
    """Test c_l*lambda + c_t*tau + upsilon = 1 at x_c on several regions"""
    assert boundary_sums(build_region(h, v), CHI).identity_error < 1e-9

def test_boundary_identity_fails_below_critical_x():
    """Test the boundary identity needs x = x_c"""
    assert boundary_sums(build_region(1, 1), 0.9 * CHI).identity_error > 1e-6

@pytest.mark.parametrize("v", [1, 2, 3])
def test_lambda_grows_with_width(v):
    """Test lambda at (1, v) <= lambda at (2, v) at x_c"""
    narrow = boundary_sums(build_region(1, v), CHI)
    wide = boundary_sums(build_region(2, v), CHI)
    assert narrow.lam <= wide.lam

def test_boundary_identity(small_region):
    """Test c_l*lambda + c_t*tau + upsilon = 1 at x_c"""
    report = parafermionic_observable(small_region, CRITICAL_SIGMA, CHI)
    assert report.sums.identity_error < 1e-9
    assert abs(report.unsimplified) < 1e-9
    assert abs(report.values[small_region.start] - 1.0) < 1e-12

def test_boundary_sums_monotone(small_region):
    """Test walk sums grow with x"""
    low = boundary_sums(small_region, 0.3)
    high = boundary_sums(small_region, 0.5)
    assert low.lam < high.lam
    assert low.upsilon < high.upsilon
    assert low.tau == pytest.approx(low.tau_plus + low.tau_minus)

    with pytest.raises(ValidationError, match="positive"):
        boundary_sums(small_region, 0.0)

def test_region_table_symmetry(small_region):
    """Test left/right exits carry the same walk sums by reflection"""
    table = region_walk_table(small_region)
    assert table.length_sums(CHI, small_region.left) == pytest.approx(
        table.length_sums(CHI, small_region.right)
    )

def test_region_budget():
    """Test the region enumeration budget"""
    with pytest.raises(BudgetExceededError):
        region_walk_table(build_region(3, 3), budget=10)

# === BRIDGE TESTS ===

def test_bridge_round_trip(walks_to_ten):
    """Test decomposition reassembles every walk of at most 10 steps"""
    patch, walks = walks_to_ten
    assert len(walks) == sum(HEX_COUNTS[:10])
    for path in walks:
        decomposition = bridge_decompose(path, patch)
        assert reconstruct(decomposition).vertices == path.vertices
        assert decomposition.n_bridges >= 1
        assert all(span > 0 for span in decomposition.suffix_spans)

def test_walks_split_into_several_bridges(walks_to_ten):
    """Test long walks reach three or more bridges"""
    patch, walks = walks_to_ten
    sizes = [bridge_decompose(path, patch).n_bridges for path in walks]
    assert max(sizes) >= 3
    longest = walks[sizes.index(max(sizes))]
    assert reconstruct(bridge_decompose(longest, patch)).vertices == longest.vertices

def test_monotone_walk_is_one_bridge(walks_to_ten):
    """Test a walk from its lowest to its highest vertex is a single bridge"""
    patch, walks = walks_to_ten
    found = 0
    for path in walks:
        heights = [patch.embedding[v][1][0] for v in path.vertices]
        if heights[0] < min(heights[1:]) and heights[-1] > max(heights[:-1]):
            assert bridge_decompose(path, patch).n_bridges == 1
            found += 1
    assert found > 0

def test_bridge_spans_decrease(walks_to_ten):
    """Test prefix spans strictly decrease and suffix spans never grow"""
    patch, walks = walks_to_ten
    for path in walks:
        decomposition = bridge_decompose(path, patch)
        prefix, suffix = decomposition.prefix_spans, decomposition.suffix_spans
        assert all(a > b for a, b in zip(prefix, prefix[1:]))
        assert all(a >= b for a, b in zip(suffix, suffix[1:]))
        assert all(a > b for a, b in zip(suffix[1:], suffix[2:]))

def test_suffix_spans_tie_once_on_return_to_pivot_height(walks_to_ten):
    """Test T_0 == T_1 exactly when the suffix comes back down to the pivot height"""
    patch, walks = walks_to_ten
    ties = 0
    for path in walks:
        decomposition = bridge_decompose(path, patch)
        suffix = decomposition.suffix_spans
        if len(suffix) < 2 or suffix[0] != suffix[1]:
            continue
        ties += 1
        pivot_height = patch.embedding[decomposition.pivot][1][0]
        second = decomposition.suffix_pieces[1]
        assert patch.embedding[second[-1]][1][0] == pivot_height
        # only the first pair may tie
        assert all(a > b for a, b in zip(suffix[1:], suffix[2:]))
    assert ties > 0

# === BOUNDS TESTS ===

def test_hammersley_welsh_bound():
    """Test the product bound"""
    assert hammersley_welsh_bound(0.5, 2, [0.0, 0.0]) == pytest.approx(2.0)
    assert hammersley_welsh_bound(0.5, 1, [0.5]) == pytest.approx(4.5)
    assert upsilon_geometric_bound(CHI, 3) == pytest.approx([1.0, 1.0, 1.0])

    with pytest.raises(ValidationError, match="x out of range"):
        hammersley_welsh_bound(CHI + 0.01, 1, [0.0])

def test_partition_function_below_product_bound():
    """Test truncated Z(x) at x = 0.9*x_c stays under 2*prod(1 + upsilon_T)^2"""
    x = 0.9 * CHI
    n_max = 14
    bound = hammersley_welsh_bound(x, n_max, upsilon_geometric_bound(x, n_max))
    partial = [midpoint_partition_function(x, n) for n in range(1, n_max + 1)]
    assert all(a < b for a, b in zip(partial, partial[1:]))
    assert partial[-1] <= bound

def test_product_bound_converges():
    """Test partial products settle by T = 200 below x_c"""
    x = 0.9 * CHI
    upsilon = upsilon_geometric_bound(x, 200)
    assert all(a > b for a, b in zip(upsilon, upsilon[1:]))
    late = hammersley_welsh_bound(x, 200, upsilon)
    earlier = hammersley_welsh_bound(x, 199, upsilon)
    assert abs(late - earlier) / late < 1e-6

def test_upsilon_lower_bound():
    """Test the 1/v scaling of the lower bound"""
    assert upsilon_lower_bound(4, 0.2) == pytest.approx(0.05)
    assert upsilon_lower_bound(2, 100.0) < 100.0 / 2

def test_midpoint_partition_function():
    """Test the first terms of Z(x)"""
    assert midpoint_partition_function(0.1, 1) == pytest.approx(1.4)
    assert midpoint_partition_function(0.1, 2) == pytest.approx(1.4 + 8 * 0.01)
    # truncated sums grow with the cutoff
    assert midpoint_partition_function(CHI, 6) > midpoint_partition_function(CHI, 5)

# === FISHER TESTS ===

def test_fisher_constant():
    """Test the (3,12^2) connective constant from kappa_hex"""
    y = fisher_lattice_constant(KAPPA_HEX)
    assert y == pytest.approx(1.711041, rel=1e-5)
    assert 1 / y ** 2 + 1 / y ** 3 == pytest.approx(1 / KAPPA_HEX, rel=1e-10)

    with pytest.raises(ValidationError, match="kappa_hex"):
        fisher_lattice_constant(1.0)

def test_fisher_constant_exact_root():
    """Test kappa_hex = 8/3 gives y = 2 and larger kappa gives a larger root"""
    assert fisher_lattice_constant(8 / 3) == pytest.approx(2.0, abs=1e-10)
    assert fisher_lattice_constant(KAPPA_HEX) < fisher_lattice_constant(2.0) < fisher_lattice_constant(8 / 3)

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
