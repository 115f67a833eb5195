import numpy as np
import pytest

from seekrl import dqn, tinyinfer
from seekrl.parity import run_parity


@pytest.fixture(scope="module")
def trained_like_blob(tmp_path_factory):
    path = tmp_path_factory.mktemp("blob") / "net.blob"
    dqn.save(dqn.init_mlp(21), path)
    return path


@pytest.fixture(scope="module")
def zero_blob(tmp_path_factory):
    path = tmp_path_factory.mktemp("blob") / "zero.blob"
    net = dqn.Mlp(
        weights=[np.zeros((o, i), dtype=np.float32) for i, o in dqn.LAYER_DIMS],
        biases=[np.zeros(o, dtype=np.float32) for _, o in dqn.LAYER_DIMS],
    )
    dqn.save(net, path)
    return path


class TestLoad:
    def test_round_trip_parameters_bitwise(self, trained_like_blob):
        net = dqn.load(trained_like_blob)
        ctx = tinyinfer.load_file(trained_like_blob)
        assert np.array_equal(ctx._w1, net.weights[0])
        assert np.array_equal(ctx._w2, net.weights[1])
        assert np.array_equal(ctx._w3, net.weights[2])
        assert np.array_equal(ctx._b1, net.biases[0])
        assert np.array_equal(ctx._b2, net.biases[1])
        assert np.array_equal(ctx._b3, net.biases[2])

    def test_four_error_classes_have_distinct_codes(self, trained_like_blob):
        data = bytearray(trained_like_blob.read_bytes())

        with pytest.raises(tinyinfer.MagicError):
            tinyinfer.load(b"JUNK" + bytes(data[4:]))

        bad_version = bytearray(data)
        bad_version[4] = 7
        with pytest.raises(tinyinfer.VersionError):
            tinyinfer.load(bytes(bad_version))

        four_layers = bytearray(data)
        four_layers[6] = 4
        with pytest.raises(tinyinfer.DimensionError):
            tinyinfer.load(bytes(four_layers))

        flipped = bytearray(data)
        flipped[400] ^= 0x01
        with pytest.raises(tinyinfer.ChecksumError):
            tinyinfer.load(bytes(flipped))

        with pytest.raises(tinyinfer.ChecksumError):
            tinyinfer.load(bytes(data[:-8]))

        codes = {
            tinyinfer.MagicError.code,
            tinyinfer.VersionError.code,
            tinyinfer.DimensionError.code,
            tinyinfer.ChecksumError.code,
        }
        assert len(codes) == 4


class TestInfer:
    def test_zero_blob_ties_break_to_action_zero(self, zero_blob):
        ctx = tinyinfer.load_file(zero_blob)
        for _ in range(5):
            assert ctx.infer(1.0, 2.0, 3.0, 4.0, 0.5) == 0

    def test_non_finite_input_rejected(self, trained_like_blob):
        ctx = tinyinfer.load_file(trained_like_blob)
        with pytest.raises(tinyinfer.InputError):
            ctx.infer(float("nan"), 1.0, 1.0, 1.0, 0.5)
        with pytest.raises(tinyinfer.InputError):
            ctx.infer(1.0, 1.0, 1.0, 1.0, float("inf"))

    def test_constant_reading_converges_geometrically(self, zero_blob):
        ctx = tinyinfer.load_file(zero_blob)
        ctx.infer(1.0, 1.0, 1.0, 1.0, 0.2)  # seeds the filter at 0.2
        c = 0.9
        gaps = []
        for _ in range(12):
            ctx.infer(1.0, 1.0, 1.0, 1.0, c)
            gaps.append(abs(ctx.filter_state - c))
        for a, b in zip(gaps, gaps[1:]):
            assert b == pytest.approx(0.9 * a, rel=1e-9)

    def test_reset_reseeds_filter(self, zero_blob):
        ctx = tinyinfer.load_file(zero_blob)
        ctx.infer(1.0, 1.0, 1.0, 1.0, 0.8)
        ctx.infer(1.0, 1.0, 1.0, 1.0, 0.2)
        ctx.reset()
        ctx.infer(1.0, 1.0, 1.0, 1.0, 0.6)
        assert ctx.filter_state == 0.6

    def test_contexts_are_independent(self, trained_like_blob, zero_blob):
        a = tinyinfer.load_file(trained_like_blob)
        b = tinyinfer.load_file(zero_blob)
        rng = np.random.default_rng(0)
        inputs = [(rng.uniform(0, 5, 4), float(rng.uniform(0, 1))) for _ in range(50)]

        solo = tinyinfer.load_file(trained_like_blob)
        expected = [solo.infer(*l, c) for l, c in inputs]

        interleaved = []
        for l, c in inputs:
            interleaved.append(a.infer(*l, c))
            b.infer(*l, 1.0 - c)  # interference attempt with different stream
        assert interleaved == expected


class TestParity:
    def test_bit_parity_with_trainer_forward(self, trained_like_blob):
        net = dqn.load(trained_like_blob)
        ctx = tinyinfer.load_file(trained_like_blob)
        report = run_parity(net, ctx, n_cases=2000, seed=3)
        assert report.max_deviation <= 1e-6
        assert report.off_tie_mismatches == 0
        assert report.off_tie_cases > 1900  # random nets: almost everything off-tie

    def test_zero_blob_all_ties_agree_on_action_zero(self, zero_blob):
        net = dqn.load(zero_blob)
        ctx = tinyinfer.load_file(zero_blob)
        report = run_parity(net, ctx, n_cases=200, seed=0)
        assert report.max_deviation == 0.0
        assert report.off_tie_cases == 0


class TestFootprint:
    def test_parameter_bytes_and_budget(self, trained_like_blob):
        ctx = tinyinfer.load_file(trained_like_blob)
        layout = dict(tinyinfer.CONTEXT_LAYOUT)
        param_bytes = sum(
            v for k, v in layout.items() if k.endswith(("_weights", "_bias"))
        )
        assert param_bytes == 623 * 4 == 2492
        total = tinyinfer.footprint(ctx)
        assert total == sum(layout.values())
        assert total < 4096
        assert total < 20_992

    def test_footprint_constant_and_no_reallocation(self, trained_like_blob):
        ctx = tinyinfer.load_file(trained_like_blob)
        before = tinyinfer.footprint(ctx)
        buffers = (id(ctx._x), id(ctx._h1), id(ctx._h2), id(ctx._q))
        rng = np.random.default_rng(1)
        for _ in range(2000):
            l = rng.uniform(0, 5, 4)
            ctx.infer(l[0], l[1], l[2], l[3], float(rng.uniform(0, 1)))
        assert tinyinfer.footprint(ctx) == before
        assert (id(ctx._x), id(ctx._h1), id(ctx._h2), id(ctx._q)) == buffers
