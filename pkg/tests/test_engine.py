"""Quadrature engine, count laws, standard statistics, and the sampler."""

import csv
import math

import numpy as np
import pytest

import heinegas as hg
from heinegas.engine import (
    HardRegion,
    QuadratureConfig,
    RegionSet,
    SplitBump,
    SplitRegion,
    exact_count_law,
    joint_mgf,
    log_norm,
    moduli_to_csv,
    region_probabilities,
    sample_moduli,
    standard_regions,
)
from heinegas.potentials import BumpSpec, Shoulder


# ---------------------------------------------------------------- log norms


@pytest.mark.parametrize("n", [64, 256])
def test_ginibre_log_norm_closed_form(ginibre_pot, n):
    # 2 int r^(2j+1) e^(-n r^2) dr = j! / n^(j+1)
    for j in range(n):
        val = log_norm(ginibre_pot, n, j)
        exact = math.lgamma(j + 1) - (j + 1) * math.log(n)
        assert val == pytest.approx(exact, rel=1e-10)


def test_log_norm_rejects_bad_index(ginibre_pot):
    with pytest.raises(ValueError, match="index j"):
        log_norm(ginibre_pot, 16, 16)
    with pytest.raises(ValueError, match="index j"):
        log_norm(ginibre_pot, 16, -1)


def test_log_norm_windowed_matches_full(case1_pot, case2_pot):
    cfg_full = QuadratureConfig(mode="full")
    cfg_win = QuadratureConfig(mode="windowed")
    n = 128
    for pot in (case1_pot, case2_pot):
        for j in (0, 40, 63, 64, 100, 127):
            a = log_norm(pot, n, j, cfg=cfg_full)
            b = log_norm(pot, n, j, cfg=cfg_win)
            assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_log_norm_both_mode_cross_checks(case1_pot):
    cfg = QuadratureConfig(mode="both")
    val = log_norm(case1_pot, 64, 50, cfg=cfg)
    assert val == pytest.approx(log_norm(case1_pot, 64, 50), rel=1e-12)


def test_quadrature_config_validation():
    with pytest.raises(ValueError, match="mode"):
        QuadratureConfig(mode="fast")
    with pytest.raises(ValueError, match="tolerances"):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError, match="window constant"):
        QuadratureConfig(window_constant=0.5)


# ------------------------------------------------------------------ regions


def test_region_set_rejects_overlap():
    with pytest.raises(ValueError, match="disjoint"):
        RegionSet.hard([HardRegion(1.3, 1.7), HardRegion(1.4, 1.8)])


def test_region_set_rejects_mixed_kind():
    with pytest.raises(ValueError, match="hard statistics"):
        RegionSet.hard([BumpSpec(1.5, 0.1)])
    with pytest.raises(ValueError, match="smooth statistics"):
        RegionSet.smooth([HardRegion(1.3, 1.7)])
    with pytest.raises(ValueError, match="kind"):
        RegionSet((), "soft")


def test_region_set_rejects_shoulder_plateau_overlap():
    # the shoulder's kept side counts hits all the way out, so another
    # region there would double-count
    entry = SplitBump(
        4,
        below=Shoulder(1.45, 1.55, keep_below=False),
        above=Shoulder(1.05, 1.15, keep_below=True),
    )
    with pytest.raises(ValueError, match="disjoint"):
        RegionSet.smooth([entry, BumpSpec(2.0, 0.1)])


def test_split_region_resolve():
    entry = SplitRegion(5, below=HardRegion(1.5, 8.0), above=HardRegion(0.0, 1.1))
    rs = RegionSet.hard([entry])
    assert rs.resolve(0, 4) is entry.below
    assert rs.resolve(0, 5) is entry.above
    assert rs.group_key(4) == (False,)
    assert rs.group_key(5) == (True,)


def test_standard_regions_case1(case1_data):
    regions, eps = standard_regions(case1_data)
    assert regions.kind == "hard"
    assert regions.m == 2
    assert eps == pytest.approx(0.1, abs=1e-9)
    for region, t in zip(regions.entries, (1.5, 2.0)):
        assert isinstance(region, HardRegion)
        assert region.lo == pytest.approx(t - eps, abs=1e-9)
        assert region.hi == pytest.approx(t + eps, abs=1e-9)


def test_standard_regions_case2_hard(case2_data):
    regions, eps = standard_regions(case2_data, n=512)
    assert regions.m == 3
    assert eps == pytest.approx(0.04, abs=1e-9)
    head = regions.entries[0]
    assert isinstance(head, SplitRegion)
    # flagship regression: M0 n = 256.0 exactly must not round down to 255
    assert head.m0 == 256
    assert head.above.lo == 0.0
    assert head.above.hi == pytest.approx(1.11, abs=1e-9)
    assert head.below.lo == pytest.approx(1.49, abs=1e-9)
    assert head.below.hi > 2.2
    for region, t in zip(regions.entries[1:], (1.2, 1.4)):
        assert region.lo == pytest.approx(t - eps, abs=1e-9)
        assert region.hi == pytest.approx(t + eps, abs=1e-9)


def test_standard_regions_case2_smooth(case2_data):
    regions, eps = standard_regions(case2_data, n=512, smooth=True)
    assert regions.kind == "smooth"
    head = regions.entries[0]
    assert isinstance(head, SplitBump)
    assert isinstance(head.below, Shoulder)
    assert isinstance(head.above, Shoulder)
    assert not head.below.keep_below
    assert head.above.keep_below
    assert 0.5 * (head.above.lo + head.above.hi) == pytest.approx(1.11, abs=1e-9)
    assert 0.5 * (head.below.lo + head.below.hi) == pytest.approx(1.49, abs=1e-9)
    for region, t in zip(regions.entries[1:], (1.2, 1.4)):
        assert isinstance(region, BumpSpec)
        assert region.center == pytest.approx(t, abs=1e-9)
        assert region.half_width == pytest.approx(eps, abs=1e-9)


def test_standard_regions_case2_needs_n(case2_data):
    with pytest.raises(ValueError, match="need n"):
        standard_regions(case2_data)


def test_standard_regions_bare_gap(case2_bare_data):
    regions, _ = standard_regions(case2_bare_data, n=128)
    assert regions.m == 1
    head = regions.entries[0]
    gap_mid = 1.3
    assert head.above.hi < gap_mid
    assert head.below.lo > gap_mid
    assert head.above.hi - 1.0 == pytest.approx(1.6 - head.below.lo, abs=1e-9)


# ----------------------------------------------------- landing probabilities


def test_region_probabilities_bounds(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data)
    n = 64
    for j in (0, 32, 60, 63):
        pi = region_probabilities(case1_pot, n, j, regions)
        assert pi.shape == (2,)
        assert np.all(pi >= 0.0)
        assert pi.sum() <= 1.0 + 1e-12
    # bulk indices essentially never reach the outposts
    assert region_probabilities(case1_pot, n, 0, regions).sum() < 1e-30


def test_region_probabilities_rejects_smooth(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data, smooth=True)
    with pytest.raises(ValueError, match="hard"):
        region_probabilities(case1_pot, 64, 0, regions)


def test_region_probability_is_integral_ratio(ginibre_pot):
    # landing probability of modulus j in [a,b] for ginibre is the
    # normalized incomplete gamma of r^2
    from scipy.special import gammainc

    regions = RegionSet.hard([HardRegion(0.5, 0.9)])
    n, j = 64, 40
    pi = region_probabilities(ginibre_pot, n, j, regions)
    want = gammainc(j + 1, n * 0.81) - gammainc(j + 1, n * 0.25)
    assert pi[0] == pytest.approx(want, rel=1e-9)


# --------------------------------------------------------------- count laws


def test_count_law_mass_accounting(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data)
    law = exact_count_law(case1_pot, 96, regions)
    assert law.m == 2
    assert law.total_mass + law.mass_deficit == pytest.approx(1.0, abs=1e-12)
    assert law.mass_deficit <= 1e-12
    assert all(p > 0.0 for p in law.entries.values())


def test_count_law_all_covering_region(ginibre_pot):
    regions = RegionSet.hard([HardRegion(0.0, 6.0)])
    law = exact_count_law(ginibre_pot, 32, regions, cap=32)
    assert law.pmf((32,)) == pytest.approx(1.0, abs=1e-10)


def test_count_law_dead_zone(ginibre_pot):
    regions = RegionSet.hard([HardRegion(4.0, 5.0)])
    law = exact_count_law(ginibre_pot, 32, regions)
    assert law.pmf((0,)) == pytest.approx(1.0, abs=1e-12)


def test_count_law_no_regions(ginibre_pot):
    law = exact_count_law(ginibre_pot, 32, RegionSet.hard([]))
    assert law.m == 0
    assert law.entries == {(): 1.0}
    assert law.mass_deficit == 0.0


def test_count_law_rejects_smooth(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data, smooth=True)
    with pytest.raises(ValueError, match="hard"):
        exact_count_law(case1_pot, 64, regions)


def test_count_law_split_matches_per_index_probabilities(
    case2_pot, case2_bare_data
):
    # the split coordinate's law is the poisson-binomial over the per-index
    # landing probabilities of whichever branch is active at that index
    n = 48
    regions = standard_regions(case2_bare_data, n=n)[0]
    head = regions.entries[0]
    law = exact_count_law(case2_pot, n, regions, cap=n)
    pi = np.empty((n, 1))
    for j in range(n):
        branch = RegionSet.hard([head.above if j >= head.m0 else head.below])
        pi[j, 0] = region_probabilities(case2_pot, n, j, branch)[0]
    table, _ = hg.poisson_binomial_dp(pi, (n,))
    for a in range(n + 1):
        assert law.pmf((a,)) == pytest.approx(float(table[a]), abs=1e-13)


# ------------------------------------------------------------------ the MGF


def test_joint_mgf_at_zero_is_one(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data)
    res = joint_mgf(case1_pot, 64, np.zeros(2), regions)
    assert res.value == 1.0
    assert res.log_value == 0.0


def test_joint_mgf_matches_count_law(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data)
    n = 96
    law = exact_count_law(case1_pot, n, regions)
    for s in (np.array([0.5, -0.5]), np.array([-1.0, 1.0])):
        direct = sum(
            p * math.exp(s[0] * a[0] + s[1] * a[1]) for a, p in law.entries.items()
        )
        res = joint_mgf(case1_pot, n, s, regions)
        slack = law.mass_deficit * math.exp(float(np.abs(s).sum()) * n)
        assert res.value == pytest.approx(direct, rel=1e-8, abs=slack)


def test_joint_mgf_input_validation(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data)
    with pytest.raises(ValueError, match="length"):
        joint_mgf(case1_pot, 64, np.zeros(3), regions)
    with pytest.raises(ValueError, match="out of range"):
        joint_mgf(case1_pot, 64, np.array([10.0, 0.0]), regions)


def test_joint_mgf_tail_restriction(case1_pot, case1_data):
    regions, _ = standard_regions(case1_data)
    s = np.array([0.7, -0.4])
    full = joint_mgf(case1_pot, 128, s, regions)
    tail = joint_mgf(case1_pot, 128, s, regions, restrict="tail")
    assert tail.remainder_bound >= 0.0
    assert abs(tail.value - full.value) <= 1e-9 + tail.remainder_bound


def test_smooth_and_hard_mgf_agree_in_the_limit(case1_pot, case1_data):
    # the two statistics share their limit law, so the gap must shrink
    s = np.array([0.7, -0.4])
    gaps = []
    for n in (32, 64, 128, 256):
        hard, _ = standard_regions(case1_data, n=n)
        smooth, _ = standard_regions(case1_data, n=n, smooth=True)
        vh = joint_mgf(case1_pot, n, s, hard).value
        vs = joint_mgf(case1_pot, n, s, smooth).value
        gaps.append(abs(vs - vh))
    assert all(a > b for a, b in zip(gaps[:-1], gaps[1:]))
    assert gaps[-1] < 1e-4


# ----------------------------------------------------------------- sampling


def test_sampler_deterministic(ginibre_pot):
    a = sample_moduli(ginibre_pot, 32, seed=7)
    b = sample_moduli(ginibre_pot, 32, seed=7)
    c = sample_moduli(ginibre_pot, 32, seed=8)
    assert np.array_equal(a.radii, b.radii)
    assert not np.array_equal(a.radii, c.radii)
    assert a.law_truncation <= 1e-9


def test_sampler_reps_batching_consistent(ginibre_pot):
    # substream per index: batched draws extend, never reshuffle
    one = sample_moduli(ginibre_pot, 16, seed=3, reps=1)
    many = sample_moduli(ginibre_pot, 16, seed=3, reps=4)
    assert many.radii.shape == (4, 16)
    assert np.array_equal(many.radii[0], one.radii)


def test_sampler_ginibre_moments(ginibre_pot):
    # modulus j has r^2 ~ Gamma(j+1, 1/n): mean (j+1)/n, var (j+1)/n^2
    n, reps = 64, 2000
    sample = sample_moduli(ginibre_pot, n, seed=11, reps=reps)
    sq = sample.radii**2
    for j in (0, 20, 40, 63):
        mean = sq[:, j].mean()
        want = (j + 1) / n
        se = math.sqrt(j + 1) / n / math.sqrt(reps)
        assert abs(mean - want) <= 4.0 * se


def test_sampler_case1_outpost_occupancy(case1_pot, case1_data):
    # occupancy frequencies of the top index must match its landing law
    regions, _ = standard_regions(case1_data)
    n, reps = 64, 4000
    sample = sample_moduli(case1_pot, n, seed=5, reps=reps)
    pi = region_probabilities(case1_pot, n, n - 1, regions)
    top = sample.radii[:, n - 1]
    for k, region in enumerate(regions.entries):
        freq = np.mean((top > region.lo) & (top < region.hi))
        se = math.sqrt(max(pi[k] * (1 - pi[k]), 1e-12) / reps)
        assert abs(freq - pi[k]) <= 4.0 * se + 1e-9


def test_sampler_input_validation(ginibre_pot):
    with pytest.raises(ValueError, match="n must be"):
        sample_moduli(ginibre_pot, 0, seed=1)
    with pytest.raises(ValueError, match="reps"):
        sample_moduli(ginibre_pot, 4, seed=1, reps=0)


def test_moduli_csv_roundtrip(tmp_path, ginibre_pot):
    sample = sample_moduli(ginibre_pot, 8, seed=2, reps=3)
    path = tmp_path / "draws.csv"
    moduli_to_csv(sample, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["j", "r"]
    assert len(rows) == 1 + 3 * 8
    j0, r0 = rows[1]
    assert int(j0) == 0
    assert float(r0) == sample.radii[0, 0]
