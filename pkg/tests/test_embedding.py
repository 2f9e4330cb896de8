import itertools

import numpy as np
import pytest

from onebit_rip.embedding import (
    BitCode,
    NoiseVector,
    SensingMatrix,
    augment_matrix,
    embed,
    embed_batch,
    embed_noisy,
    hamming,
    hamming_pair_counts,
    pack_sign_bits,
    sign_quantize,
)
from onebit_rip.geometry import NoiseModel, UnitVector, lift, sample_sparse_unit
from onebit_rip.stochastics import RngStream, gaussian_vector


def e(i, n):
    v = np.zeros(n)
    v[i] = 1.0
    return UnitVector(v)


class TestSignQuantize:
    def test_strictly_positive(self):
        assert sign_quantize(3.2) == 1
        assert sign_quantize(1e-300) == 1

    def test_negative(self):
        assert sign_quantize(-0.1) == -1

    def test_zero_maps_to_minus_one(self):
        assert sign_quantize(0.0) == -1

    def test_signed_zero(self):
        assert sign_quantize(-0.0) == -1

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            sign_quantize(float("nan"))
        with pytest.raises(ValueError):
            sign_quantize(float("inf"))


class TestBitCode:
    def test_tail_bits_must_be_zero(self):
        with pytest.raises(ValueError):
            BitCode(np.array([0b111], dtype=np.uint64), length=2)

    def test_word_count_must_match_length(self):
        with pytest.raises(ValueError):
            BitCode(np.array([0, 0], dtype=np.uint64), length=64)

    def test_bit_access(self):
        code = BitCode(np.array([0b101], dtype=np.uint64), length=3)
        assert [code.bit(i) for i in range(3)] == [1, -1, 1]
        with pytest.raises(IndexError):
            code.bit(3)

    def test_complement(self):
        code = BitCode(np.array([0b101], dtype=np.uint64), length=3)
        comp = code.complement()
        assert [comp.bit(i) for i in range(3)] == [-1, 1, -1]
        # complement keeps tail invariant
        assert comp.words[0] >> np.uint64(3) == 0

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(0)
        for m in (1, 7, 64, 65, 130, 1000):
            bits = rng.random(m) > 0.4
            code = BitCode(pack_sign_bits(bits), m)
            back = BitCode.from_bytes(code.to_bytes())
            assert back == code

    def test_serialized_layout_little_endian(self):
        # bit 0 and bit 65 set: words 0x1, 0x2; length prefix 66
        bits = np.zeros(66, dtype=bool)
        bits[0] = True
        bits[65] = True
        code = BitCode(pack_sign_bits(bits), 66)
        data = code.to_bytes()
        assert data[:8] == (66).to_bytes(8, "little")
        assert data[8:16] == (1).to_bytes(8, "little")
        assert data[16:24] == (2).to_bytes(8, "little")

    def test_from_bytes_validates(self):
        with pytest.raises(ValueError):
            BitCode.from_bytes(b"\x01")
        good = BitCode(np.array([1], dtype=np.uint64), 1).to_bytes()
        with pytest.raises(ValueError):
            BitCode.from_bytes(good + b"\x00")


class TestEmbed:
    def test_identity_matrix_basis_vector(self):
        A = SensingMatrix(np.eye(4))
        code = embed(A, e(0, 4))
        assert [code.bit(i) for i in range(4)] == [1, -1, -1, -1]

    def test_positive_scaling_invariance(self):
        A = SensingMatrix.gaussian(RngStream(1, 0), 50, 6)
        x = sample_sparse_unit(RngStream(2, 0), 6, 3)
        codes = embed_batch(A, np.vstack([x.coords, 3.0 * x.coords, 0.25 * x.coords]))
        assert np.array_equal(codes[0], codes[1])
        assert np.array_equal(codes[0], codes[2])

    def test_antipode_gives_complement(self):
        A = SensingMatrix.gaussian(RngStream(3, 0), 129, 8)
        x = sample_sparse_unit(RngStream(4, 0), 8, 4)
        assert embed(A, -x) == embed(A, x).complement()

    def test_dimension_mismatch(self):
        A = SensingMatrix(np.eye(4))
        with pytest.raises(ValueError):
            embed(A, e(0, 3))

    def test_batch_matches_single(self):
        A = SensingMatrix.gaussian(RngStream(5, 0), 77, 10)
        xs = [sample_sparse_unit(RngStream(6, i), 10, 3) for i in range(5)]
        batch = embed_batch(A, np.vstack([x.coords for x in xs]))
        for i, x in enumerate(xs):
            assert np.array_equal(batch[i], embed(A, x).words)

    def test_deterministic_tie_handling(self):
        # adversarial matrix producing exact zeros still quantizes totally
        A = SensingMatrix(np.array([[0.0, 1.0], [0.0, -0.0], [1.0, 0.0]]))
        code = embed(A, e(1, 2))
        assert [code.bit(i) for i in range(3)] == [1, -1, -1]


class TestEmbedNoisy:
    def test_zero_noise_equals_embed(self):
        A = SensingMatrix.gaussian(RngStream(7, 0), 40, 5)
        x = sample_sparse_unit(RngStream(8, 0), 5, 2)
        eta = NoiseVector(np.zeros(40), sigma=0.0)
        assert embed_noisy(A, eta, x) == embed(A, x)

    def test_zero_matrix_determined_by_noise(self):
        A = SensingMatrix(np.zeros((6, 3)))
        eta = NoiseVector(np.array([1.0, -1.0, 0.5, -0.5, 2.0, -0.0]), sigma=1.0)
        code = embed_noisy(A, eta, e(0, 3))
        assert [code.bit(i) for i in range(6)] == [1, -1, 1, -1, 1, -1]

    def test_length_mismatch(self):
        A = SensingMatrix.gaussian(RngStream(9, 0), 10, 4)
        eta = NoiseVector(np.zeros(9), sigma=0.0)
        with pytest.raises(ValueError):
            embed_noisy(A, eta, e(0, 4))

    def test_lift_equivalence_bit_for_bit(self):
        stream = RngStream(10, 0)
        for sigma in (0.2, 0.7, 1.0, 2.0):
            A = SensingMatrix.gaussian(stream, 128, 6)
            eta = NoiseVector.gaussian(stream, 128, sigma)
            x = sample_sparse_unit(stream, 6, 3)
            noisy = embed_noisy(A, eta, x)
            lifted = embed(augment_matrix(A, eta, sigma), lift(x, NoiseModel(sigma)))
            assert noisy == lifted


class TestAugmentMatrix:
    def test_appended_column_is_noise_over_sigma(self):
        A = SensingMatrix(np.ones((1, 2)))
        eta = NoiseVector(np.array([0.7]), sigma=1.0)
        aug = augment_matrix(A, eta, 1.0)
        assert aug.n == 3
        assert aug.rows[0, 2] == 0.7

    def test_sigma_zero_rejected(self):
        A = SensingMatrix(np.ones((1, 2)))
        eta = NoiseVector(np.array([0.7]), sigma=0.0)
        with pytest.raises(ValueError):
            augment_matrix(A, eta, 0.0)

    def test_row_inner_product_identity(self):
        stream = RngStream(11, 0)
        sigma = 0.5
        A = SensingMatrix.gaussian(stream, 200, 7)
        eta = NoiseVector.gaussian(stream, 200, sigma)
        x = sample_sparse_unit(stream, 7, 3)
        aug = augment_matrix(A, eta, sigma)
        lifted = lift(x, NoiseModel(sigma))
        lhs = aug.rows @ lifted.coords
        rhs = (A.rows @ x.coords + eta.values) / np.sqrt(1 + sigma**2)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    def test_appended_coordinate_variance(self):
        # eta_k / sigma is standard normal; chi-square band at 1e5 rows
        sigma = 0.5
        eta = NoiseVector.gaussian(RngStream(12, 0), 100_000, sigma)
        col = eta.values / sigma
        assert abs(col.var() - 1.0) <= 0.02


class TestHamming:
    def test_identical_codes(self):
        c = BitCode(pack_sign_bits(np.array([True, False, True])), 3)
        assert hamming(c, c) == 0.0

    def test_complement_full_distance(self):
        bits = np.array([True, False, True, True, False, False, True, False])
        c = BitCode(pack_sign_bits(bits), 8)
        assert hamming(c, c.complement()) == 1.0

    def test_single_bit_quarter(self):
        a = BitCode(pack_sign_bits(np.array([True, True, False, False])), 4)
        b = BitCode(pack_sign_bits(np.array([True, False, False, False])), 4)
        assert hamming(a, b) == 0.25

    def test_length_mismatch(self):
        a = BitCode(pack_sign_bits(np.array([True])), 1)
        b = BitCode(pack_sign_bits(np.array([True, False])), 2)
        with pytest.raises(ValueError):
            hamming(a, b)

    def test_metric_axioms_exhaustive_small(self):
        m = 4
        codes = [BitCode(pack_sign_bits(np.array([(c >> i) & 1 == 1 for i in range(m)])), m) for c in range(2**m)]
        for a, b in itertools.product(codes, repeat=2):
            assert hamming(a, b) == hamming(b, a)
            assert (hamming(a, b) == 0.0) == (a == b)
        for a, b, c in itertools.product(codes, repeat=3):
            assert hamming(a, c) <= hamming(a, b) + hamming(b, c) + 1e-15

    def test_metric_axioms_sampled_m12(self):
        rng = np.random.default_rng(42)
        m = 12
        codes = [BitCode(pack_sign_bits(rng.random(m) > 0.5), m) for _ in range(60)]
        idx = rng.integers(0, len(codes), size=(10_000, 3))
        for i, j, k in idx:
            a, b, c = codes[i], codes[j], codes[k]
            assert hamming(a, c) <= hamming(a, b) + hamming(b, c) + 1e-15

    def test_values_are_multiples_of_inverse_m(self):
        rng = np.random.default_rng(7)
        m = 130
        a = BitCode(pack_sign_bits(rng.random(m) > 0.5), m)
        b = BitCode(pack_sign_bits(rng.random(m) > 0.5), m)
        value = hamming(a, b)
        assert value * m == pytest.approx(round(value * m), abs=1e-9)


class TestExpectationLaw:
    def test_hamming_concentrates_on_geodesic_distance(self):
        # for a fixed pair, m * hamming is Binomial(m, d(x, y));
        # band: 4 sigma with sigma = sqrt(d (1 - d) / m)
        from onebit_rip.geometry import geodesic_distance

        stream = RngStream(13, 0)
        x = sample_sparse_unit(stream, 8, 4)
        y = sample_sparse_unit(stream, 8, 4)
        d = geodesic_distance(x, y)
        m = 250_000
        A = SensingMatrix.gaussian(RngStream(14, 0), m, 8)
        emp = hamming(embed(A, x), embed(A, y))
        assert abs(emp - d) <= 4.0 * np.sqrt(d * (1 - d) / m)

    def test_noisy_hamming_concentrates_on_distorted_distance(self):
        from onebit_rip.geometry import distorted_distance

        stream = RngStream(15, 0)
        sigma = 1.0
        x = sample_sparse_unit(stream, 8, 4)
        y = sample_sparse_unit(stream, 8, 4)
        ds = distorted_distance(x, y, NoiseModel(sigma))
        m = 250_000
        A = SensingMatrix.gaussian(RngStream(16, 0), m, 8)
        eta = NoiseVector.gaussian(RngStream(17, 0), m, sigma)
        emp = hamming(embed_noisy(A, eta, x), embed_noisy(A, eta, y))
        assert abs(emp - ds) <= 4.0 * np.sqrt(ds * (1 - ds) / m)


class TestPackHelpers:
    def test_pair_counts_match_scalar_hamming(self):
        rng = np.random.default_rng(21)
        m = 500
        bits = rng.random((6, m)) > 0.5
        words = pack_sign_bits(bits)
        left = np.array([0, 1, 2, 3])
        right = np.array([5, 4, 3, 2])
        counts = hamming_pair_counts(words, left, right)
        for idx, (i, j) in enumerate(zip(left, right)):
            a = BitCode(words[i], m)
            b = BitCode(words[j], m)
            assert counts[idx] == round(hamming(a, b) * m)

    def test_pack_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            pack_sign_bits(np.zeros((2, 2, 2), dtype=bool))
