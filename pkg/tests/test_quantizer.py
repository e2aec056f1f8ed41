"""Quantizer: MI arithmetic, DP optimality, page designs, text records."""

import itertools

import numpy as np
import pytest

from flashdet.channel import DeviceParams, mlc_device, simulate_wordline
from flashdet.quantizer import (
    BinaryDmc,
    ScalarQuantizer,
    design_page_quantizers,
    discretize_page_channel,
    merge_quantizers,
    mutual_information,
    optimize_quantizer,
    partition_mi,
    quantize,
    read_quantizer_records,
    voltage_grid,
    write_quantizer_records,
)


def h2(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def random_dmc(rng, m):
    t = rng.uniform(0.05, 1.0, size=(2, m))
    t /= t.sum(axis=1, keepdims=True)
    return BinaryDmc(transition=t, bin_edges=np.arange(m + 1, dtype=np.float64))


def merged_mi(dmc, cuts):
    """Oracle MI of a partition: merge columns, then the plain MI formula."""
    bounds = np.array([0, *cuts, dmc.transition.shape[1]])
    merged = np.add.reduceat(dmc.transition, bounds[:-1], axis=1)
    return mutual_information(merged)


class TestScalarQuantizer:
    def test_validation(self):
        with pytest.raises(ValueError):
            ScalarQuantizer(thresholds=())
        with pytest.raises(ValueError):
            ScalarQuantizer(thresholds=(1.0, 1.0))
        with pytest.raises(ValueError):
            ScalarQuantizer(thresholds=(2.0, 1.0))

    def test_quantize_conventions(self):
        quant = ScalarQuantizer(thresholds=(1.0, 2.0))
        y = np.array([0.5, 1.0, 1.5, 2.0, 2.5])
        # a sample exactly on a threshold lands in the region above it
        assert quantize(y, quant).tolist() == [0, 1, 1, 2, 2]
        assert quant.n_regions == 3

    def test_merge_is_sorted_union(self):
        a = ScalarQuantizer(thresholds=(1.0, 3.0))
        b = ScalarQuantizer(thresholds=(2.0, 3.0))
        merged = merge_quantizers(a, b)
        assert merged.thresholds == (1.0, 2.0, 3.0)


class TestMutualInformation:
    def test_perfect_channel_is_one_bit(self):
        t = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert mutual_information(t) == pytest.approx(1.0, abs=1e-12)

    def test_useless_channel_is_zero(self):
        t = np.array([[0.3, 0.7], [0.3, 0.7]])
        assert mutual_information(t) == pytest.approx(0.0, abs=1e-12)

    def test_bsc_closed_form(self):
        p = 0.11
        t = np.array([[1 - p, p], [p, 1 - p]])
        assert mutual_information(t) == pytest.approx(1 - h2(p), abs=1e-12)

    def test_bsc_nonuniform_prior(self):
        p, pi0 = 0.11, 0.2
        t = np.array([[1 - p, p], [p, 1 - p]])
        out0 = pi0 * (1 - p) + (1 - pi0) * p
        expect = h2(out0) - h2(p)
        got = mutual_information(t, input_prior=(pi0, 1 - pi0))
        assert got == pytest.approx(expect, abs=1e-12)

    def test_merging_bins_never_gains_information(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            dmc = random_dmc(rng, 12)
            full = mutual_information(dmc)
            cuts = np.sort(rng.choice(np.arange(1, 12), size=3, replace=False))
            assert merged_mi(dmc, cuts) <= full + 1e-12


class TestOptimizeQuantizer:
    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(31)
        for trial in range(25):
            m = int(rng.integers(6, 16))
            dmc = random_dmc(rng, m)
            quant = optimize_quantizer(dmc, 4)
            dp_cuts = np.searchsorted(dmc.bin_edges, quant.thresholds)
            dp_mi = merged_mi(dmc, dp_cuts)
            best = max(
                merged_mi(dmc, cuts)
                for cuts in itertools.combinations(range(1, m), 3)
            )
            assert dp_mi == pytest.approx(best, abs=1e-12), f"trial {trial} (m={m})"

    def test_beats_uniform_partition(self):
        rng = np.random.default_rng(32)
        for _ in range(10):
            dmc = random_dmc(rng, 60)
            quant = optimize_quantizer(dmc, 4)
            cuts = np.searchsorted(dmc.bin_edges, quant.thresholds)
            uniform = np.array([15, 30, 45])
            assert merged_mi(dmc, cuts) >= merged_mi(dmc, uniform) - 1e-12

    def test_partition_mi_agrees_with_merged_columns(self):
        rng = np.random.default_rng(33)
        dmc = random_dmc(rng, 20)
        cuts = np.array([4, 9, 15])
        assert partition_mi(dmc, cuts) == pytest.approx(merged_mi(dmc, cuts), abs=1e-12)

    def test_region_count_and_validation(self):
        rng = np.random.default_rng(34)
        dmc = random_dmc(rng, 10)
        quant = optimize_quantizer(dmc, 5)
        assert quant.n_regions == 5
        assert all(t in dmc.bin_edges for t in quant.thresholds)
        with pytest.raises(ValueError):
            optimize_quantizer(dmc, 1)
        with pytest.raises(ValueError):
            optimize_quantizer(dmc, 11)

    def test_symmetric_channel_optimum_is_mirror_degenerate(self):
        # no ICI and equal noise makes the LSB channel an even function of
        # voltage.  Three cuts cannot mirror themselves without wasting a
        # region (a cut at 0 splits two identical regions), so the optimum
        # is an asymmetric partition whose mirror image ties it exactly
        params = DeviceParams(
            q=4,
            nominal_voltage=(-3.0, -1.0, 1.0, 3.0),
            noise_std=(0.4, 0.4, 0.4, 0.4),
            gamma_v=0.0,
            gamma_d=0.0,
        )
        grid = voltage_grid(params, 400)
        dmc = discretize_page_channel(params, "lsb", grid)
        quant = optimize_quantizer(dmc, 4)
        thr = np.asarray(quant.thresholds)
        assert len(thr) == 3
        cuts = np.searchsorted(dmc.bin_edges, thr)
        mirror = np.sort(dmc.transition.shape[1] - cuts)
        best = merged_mi(dmc, cuts)
        assert merged_mi(dmc, mirror) == pytest.approx(best, abs=1e-9)
        # and it strictly beats the best mirror-symmetric partition (-t, 0, t)
        m = dmc.transition.shape[1]
        sym_best = max(
            merged_mi(dmc, np.array([c, m // 2, m - c])) for c in range(1, m // 2)
        )
        assert best > sym_best + 1e-4


class TestPageChannels:
    def test_rows_are_distributions(self):
        params = mlc_device(beta=1.0, gamma_v=0.12, alpha=0.3)
        for page in ("lsb", "msb"):
            dmc = discretize_page_channel(params, page)
            assert np.allclose(dmc.transition.sum(axis=1), 1.0, atol=1e-5)
            assert dmc.transition.min() >= 0.0

    def test_bad_page_and_narrow_grid(self):
        params = mlc_device()
        with pytest.raises(ValueError):
            discretize_page_channel(params, "csb")
        with pytest.raises(ValueError):
            discretize_page_channel(params, "lsb", grid=np.linspace(2.0, 3.0, 50))

    def test_design_shapes_and_determinism(self):
        params = mlc_device(beta=1.0, gamma_v=0.1, alpha=0.5)
        a = design_page_quantizers(params)
        b = design_page_quantizers(params)
        assert a["lsb"].n_regions == 4 and a["msb"].n_regions == 7
        assert a["lsb"].thresholds == b["lsb"].thresholds
        assert a["msb"].thresholds == b["msb"].thresholds
        joint = merge_quantizers(a["lsb"], a["msb"])
        assert joint.n_regions <= 10

    def test_empirical_bin_frequencies_match_dmc(self):
        params = mlc_device(beta=1.0, gamma_v=0.1, alpha=0.25)
        grid = voltage_grid(params, 500)
        dmc = discretize_page_channel(params, "lsb", grid)
        quant = optimize_quantizer(dmc, 4)
        cuts = np.searchsorted(dmc.bin_edges, quant.thresholds)
        bounds = np.array([0, *cuts])
        expect = np.add.reduceat(dmc.transition.mean(axis=0), bounds)

        rng = np.random.default_rng(35)
        n = 200_000
        victims = rng.integers(0, 4, n)
        aggressors = rng.integers(0, 4, n)
        y = simulate_wordline(params, victims, aggressors, rng)
        freq = np.bincount(quantize(y, quant), minlength=4) / n
        err = np.abs(freq - expect).max()
        assert err < 4e-3, f"empirical vs DMC region mass: {err:.2e}"


class TestRecords:
    def test_round_trip(self, tmp_path):
        params = mlc_device(beta=1.0, gamma_v=0.1, alpha=0.5)
        pages = design_page_quantizers(params)
        path = tmp_path / "quant.txt"
        records = [
            {"beta": 1.0, "gamma_v": 0.1, "alpha": 0.5, "page": "lsb", "quantizer": pages["lsb"]},
            {"beta": 2.0, "gamma_v": 0.2, "alpha": 0.25, "page": "msb",
             "thresholds": (1.5, 2.5, 3.5)},
        ]
        write_quantizer_records(path, records)
        back = read_quantizer_records(path)
        assert len(back) == 2
        assert back[0]["page"] == "lsb" and back[1]["page"] == "msb"
        assert back[0]["quantizer"].thresholds == pages["lsb"].thresholds
        assert back[1]["quantizer"].thresholds == (1.5, 2.5, 3.5)
        assert back[1]["beta"] == 2.0 and back[1]["alpha"] == 0.25

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# flashdet quantizer records v1\n\nnot a record\n")
        with pytest.raises(ValueError):
            read_quantizer_records(path)
