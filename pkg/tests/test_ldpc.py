"""LDPC construction, systematic encoding, BP decoding, alist round trips."""

import numpy as np
import pytest

from flashdet._kernels_numba import bp_decode as bp_numba
from flashdet._kernels_numpy import bp_decode as bp_numpy
from flashdet.ldpc import (
    decode,
    encode,
    generate_code,
    load_bundled_code,
    read_alist,
    syndrome,
    write_alist,
)


def small_code():
    return generate_code(n_code=256, rate=0.5, seed=3)


def noisy_llrs(code, cw, sigma, rng):
    y = (1.0 - 2.0 * cw) + sigma * rng.standard_normal(code.n)
    return np.clip(2.0 * y / sigma**2, -30, 30)


class TestConstruction:
    def test_seed_determinism(self):
        a = generate_code(256, 0.5, seed=3)
        b = generate_code(256, 0.5, seed=3)
        c = generate_code(256, 0.5, seed=4)
        assert np.array_equal(a.to_dense(), b.to_dense())
        assert not np.array_equal(a.to_dense(), c.to_dense())

    def test_dimensions_and_rate(self):
        code = generate_code(300, 0.8, seed=1)
        assert code.m == 60 and code.k == 240
        assert code.rate == pytest.approx(0.8)
        assert len(code.info_cols) == code.k and len(code.pivot_cols) == code.m

    def test_column_weight(self):
        code = small_code()
        H = code.to_dense()
        assert np.all(H.sum(axis=0) == 3), "every variable slots into 3 checks"

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            generate_code(256, 0.0, seed=1)
        with pytest.raises(ValueError):
            generate_code(256, 0.999, seed=1)

    def test_bundled_codes(self):
        desk = load_bundled_code(2304)
        assert (desk.n, desk.m, desk.k) == (2304, 253, 2051)
        full = load_bundled_code(9216)
        assert (full.n, full.m, full.k) == (9216, 1014, 8202)
        assert load_bundled_code(2304) is desk  # cached
        with pytest.raises(ValueError):
            load_bundled_code(4096)

    def test_bundled_code_girth_at_least_six(self):
        # no two checks share more than one variable => no 4-cycles
        code = load_bundled_code(2304)
        H = code.to_dense().astype(np.int64)
        overlap = H @ H.T
        np.fill_diagonal(overlap, 0)
        assert overlap.max() == 1, f"check pair sharing {overlap.max()} variables"


class TestEncode:
    def test_zero_info_gives_zero_codeword(self):
        code = small_code()
        assert not encode(code, np.zeros(code.k, dtype=np.uint8)).any()

    def test_random_codewords_satisfy_parity(self):
        code = small_code()
        rng = np.random.default_rng(41)
        for _ in range(10):
            cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
            assert not syndrome(code, cw).any()

    def test_linearity(self):
        code = small_code()
        rng = np.random.default_rng(42)
        u1 = rng.integers(0, 2, code.k).astype(np.uint8)
        u2 = rng.integers(0, 2, code.k).astype(np.uint8)
        assert np.array_equal(
            encode(code, u1 ^ u2), encode(code, u1) ^ encode(code, u2)
        )

    def test_systematic_positions(self):
        code = small_code()
        rng = np.random.default_rng(43)
        u = rng.integers(0, 2, code.k).astype(np.uint8)
        assert np.array_equal(encode(code, u)[code.info_cols], u)

    def test_input_validation(self):
        code = small_code()
        with pytest.raises(ValueError):
            encode(code, np.zeros(code.k - 1, dtype=np.uint8))
        with pytest.raises(ValueError):
            encode(code, np.full(code.k, 2, dtype=np.uint8))


class TestDecode:
    def test_noiseless_decodes_immediately(self):
        code = small_code()
        rng = np.random.default_rng(44)
        cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
        llr = np.where(cw == 0, 30.0, -30.0)
        res = decode(code, llr)
        assert res.syndrome_ok and res.iterations <= 1
        assert np.array_equal(res.hard_bits, cw)

    def test_single_flip_corrected(self):
        code = small_code()
        rng = np.random.default_rng(45)
        cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
        llr = np.where(cw == 0, 12.0, -12.0)
        llr[100] = -llr[100]
        for min_sum in (False, True):
            res = decode(code, llr, min_sum=min_sum)
            assert res.syndrome_ok, f"min_sum={min_sum}"
            assert np.array_equal(res.hard_bits, cw)

    def test_extrinsic_identity(self):
        code = small_code()
        rng = np.random.default_rng(46)
        cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
        llr = noisy_llrs(code, cw, 0.9, rng)
        res = decode(code, llr, max_iter=5)
        assert np.array_equal(res.posterior_llrs, llr + res.extrinsic_llrs)

    def test_all_zero_llrs(self):
        code = small_code()
        res = decode(code, np.zeros(code.n), max_iter=3)
        assert np.array_equal(res.extrinsic_llrs, res.posterior_llrs)

    def test_determinism(self):
        code = small_code()
        rng = np.random.default_rng(47)
        cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
        llr = noisy_llrs(code, cw, 0.8, rng)
        a = decode(code, llr, max_iter=10)
        b = decode(code, llr, max_iter=10)
        assert np.array_equal(a.posterior_llrs, b.posterior_llrs)
        assert a.iterations == b.iterations

    def test_statistical_error_reduction(self):
        code = load_bundled_code(2304)
        rng = np.random.default_rng(48)
        pre = post = ok = 0
        for _ in range(10):
            cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
            llr = noisy_llrs(code, cw, 0.45, rng)
            pre += int(((llr < 0) != cw).sum())
            res = decode(code, llr)
            post += int((res.hard_bits != cw).sum())
            ok += int(res.syndrome_ok)
        assert pre > 100, f"test operating point too clean (pre={pre})"
        assert ok >= 9, f"only {ok}/10 wordlines converged"
        assert post < pre // 5, f"decode left {post} errors of {pre}"

    def test_input_validation(self):
        code = small_code()
        with pytest.raises(ValueError):
            decode(code, np.zeros(code.n - 1))
        with pytest.raises(ValueError):
            decode(code, np.full(code.n, np.inf))
        with pytest.raises(ValueError):
            decode(code, np.zeros(code.n), max_iter=0)

    def test_backend_kernels_agree(self):
        code = small_code()
        rng = np.random.default_rng(49)
        cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
        llr = noisy_llrs(code, cw, 0.7, rng)
        for min_sum in (False, True):
            a = bp_numpy(llr, code.check_ptr, code.check_var, 10, 30.0, min_sum)
            b = bp_numba(llr, code.check_ptr, code.check_var, 10, 30.0, min_sum)
            assert np.abs(a[0] - b[0]).max() < 1e-9, f"min_sum={min_sum}"
            assert a[1] == b[1] and a[2] == b[2]


class TestAlist:
    def test_round_trip(self, tmp_path):
        code = small_code()
        path = tmp_path / "code.alist"
        write_alist(path, code)
        back = read_alist(path)
        assert np.array_equal(back.to_dense(), code.to_dense())
        assert np.array_equal(back.info_cols, code.info_cols)
        assert np.array_equal(back.A, code.A)

    def test_padded_variant(self, tmp_path):
        # same graph, zero-padded adjacency rows (the other common dialect)
        code = small_code()
        path = tmp_path / "code.alist"
        write_alist(path, code)
        tok = path.read_text().split("\n")
        max_col, max_row = (int(x) for x in tok[1].split())
        pad = lambda line, width: line.split() + ["0"] * (width - len(line.split()))
        lines = tok[:4]
        lines += [" ".join(pad(l, max_col)) for l in tok[4 : 4 + code.n]]
        lines += [" ".join(pad(l, max_row)) for l in tok[4 + code.n : 4 + code.n + code.m]]
        padded = tmp_path / "padded.alist"
        padded.write_text("\n".join(lines) + "\n")
        back = read_alist(padded)
        assert np.array_equal(back.to_dense(), code.to_dense())

    def test_inconsistent_sections_rejected(self, tmp_path):
        code = small_code()
        path = tmp_path / "code.alist"
        write_alist(path, code)
        text = path.read_text()
        assert "\n" in text
        # truncating the last adjacency row breaks the redundancy check
        with pytest.raises(ValueError):
            read_alist(text.rstrip("\n").rsplit(" ", 1)[0] + "\n")
