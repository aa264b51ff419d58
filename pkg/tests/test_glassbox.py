import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uqe.glassbox import (
    ConstantModel,
    DecodeSample,
    DropoutSpec,
    MASK_TOKEN,
    NoiseConfig,
    PROB_FLOOR,
    ToyLexicalModel,
    UnigramMLM,
    force_decode,
    generate_noised_input,
    greedy_translate,
    mc_dropout_samples,
    toy_dropout_perturb,
    train_toy_model,
)
from uqe.seeding import mix


def permutation_model(eps=1e-6, lam=1.0):
    """Near-one-hot table mapping s_i -> t_i; handy for exact decoding tests."""
    src = ("<unk>", "s0", "s1", "s2")
    tgt = ("t0", "t1", "t2")
    V = len(tgt)
    trans = np.full((len(src), V), eps / (V - 1))
    trans[0] = 1.0 / V
    for i in range(3):
        trans[i + 1, i] = 1.0 - eps
    bigram = np.full((V + 1, V), 1.0 / V)
    return ToyLexicalModel(src, tgt, trans, bigram, lam=lam, alpha=eps)


class TestForceDecode:
    def test_constant_model(self):
        probs = ConstantModel(0.5).force_decode(("x",), ("a", "b", "c"))
        assert probs == (math.log(0.5),) * 3

    def test_matches_own_greedy_pass(self, toy_model):
        src = tuple(toy_model.src_vocab[1:5])
        dec = greedy_translate(toy_model, src)
        forced = force_decode(toy_model, src, dec.tokens)
        assert forced == dec.step_logprobs

    def test_dropout_rate_zero_is_off(self, toy_model):
        src = tuple(toy_model.src_vocab[2:6])
        mt = tuple(toy_model.tgt_vocab[:4])
        off = force_decode(toy_model, src, mt, None)
        zero = force_decode(toy_model, src, mt, DropoutSpec(rate=0.0, seed=99))
        assert off == zero

    def test_empty_inputs_error(self, toy_model):
        with pytest.raises(ValueError):
            force_decode(toy_model, (), ("a",))
        with pytest.raises(ValueError):
            force_decode(toy_model, ("a",), ())

    def test_oov_target_gets_floor(self, toy_model):
        src = tuple(toy_model.src_vocab[1:3])
        probs = force_decode(toy_model, src, ("definitely-oov",))
        assert probs[0] == pytest.approx(math.log(PROB_FLOOR))

    def test_length_mismatch_clamps_source(self, toy_model):
        # mt longer than src: conditioning clamps to the last source token
        src = (toy_model.src_vocab[1],)
        mt = tuple(toy_model.tgt_vocab[:3])
        probs = force_decode(toy_model, src, mt)
        assert len(probs) == 3
        assert all(v <= 0 and math.isfinite(v) for v in probs)


class TestGreedyTranslate:
    def test_permutation_dictionary(self):
        model = permutation_model()
        dec = greedy_translate(model, ("s2", "s0", "s1"))
        assert dec.tokens == ("t2", "t0", "t1")

    def test_deterministic_without_dropout(self, toy_model):
        src = tuple(toy_model.src_vocab[3:8])
        assert greedy_translate(toy_model, src) == greedy_translate(toy_model, src)

    def test_seeding_contract(self, toy_model):
        src = tuple(toy_model.src_vocab[1:6])
        a1 = greedy_translate(toy_model, src, DropoutSpec(0.5, seed=1))
        a2 = greedy_translate(toy_model, src, DropoutSpec(0.5, seed=1))
        assert a1 == a2

    def test_unk_source_token_allowed(self, toy_model):
        dec = greedy_translate(toy_model, ("never-seen-token",))
        assert len(dec.tokens) == 1

    def test_output_length_is_source_length(self, toy_model):
        src = tuple(toy_model.src_vocab[1:7])
        assert len(greedy_translate(toy_model, src).tokens) == len(src)

    def test_logprob_floor_bound(self, toy_model):
        src = tuple(toy_model.src_vocab[1:6])
        dec = greedy_translate(toy_model, src, DropoutSpec(0.7, seed=3))
        assert all(math.log(PROB_FLOOR) <= v <= 0 for v in dec.step_logprobs)


class TestMcDropoutSamples:
    def test_rate_zero_identical(self, toy_model):
        src = tuple(toy_model.src_vocab[1:5])
        samples = mc_dropout_samples(toy_model, src, 4, 0.0, base_seed=5)
        assert len(samples) == 4
        assert all(s == samples[0] for s in samples)

    def test_determinism(self, toy_model):
        src = tuple(toy_model.src_vocab[2:7])
        a = mc_dropout_samples(toy_model, src, 5, 0.4, base_seed=11)
        b = mc_dropout_samples(toy_model, src, 5, 0.4, base_seed=11)
        assert a == b

    def test_singleton_matches_single_translate(self, toy_model):
        src = tuple(toy_model.src_vocab[1:4])
        [only] = mc_dropout_samples(toy_model, src, 1, 0.4, base_seed=7)
        direct = greedy_translate(toy_model, src, DropoutSpec(0.4, seed=mix(7, 0)))
        assert only == direct

    def test_different_seeds_can_differ(self, toy_model):
        src = tuple(toy_model.src_vocab[1:9])
        a = mc_dropout_samples(toy_model, src, 8, 0.6, base_seed=1)
        b = mc_dropout_samples(toy_model, src, 8, 0.6, base_seed=2)
        assert a != b


class TestDropoutPerturb:
    def test_rows_stay_stochastic(self, toy_model):
        for seed in range(5):
            view = toy_dropout_perturb(toy_model, 0.5, seed)
            assert np.allclose(view.trans_table.sum(axis=1), 1.0, atol=1e-9)

    def test_deterministic(self, toy_model):
        a = toy_dropout_perturb(toy_model, 0.3, 42).trans_table
        b = toy_dropout_perturb(toy_model, 0.3, 42).trans_table
        assert np.array_equal(a, b)

    def test_bigram_and_lambda_untouched(self, toy_model):
        view = toy_dropout_perturb(toy_model, 0.5, 0)
        assert np.array_equal(view.bigram_table, toy_model.bigram_table)
        assert view.lam == toy_model.lam

    def test_fully_masked_row_is_uniform(self):
        model = permutation_model()
        # rate ~1 masks everything; rows renormalize to uniform
        view = toy_dropout_perturb(model, 1.0 - 1e-12, 0)
        V = len(model.tgt_vocab)
        assert np.allclose(view.trans_table, 1.0 / V)

    def test_no_mask_fires_leaves_table(self, toy_model):
        rng = np.random.Generator(np.random.PCG64(123))
        draws = rng.random(toy_model.trans_table.shape)
        rate = draws.min() / 2  # below every draw: no entry masked
        view = toy_dropout_perturb(toy_model, rate, 123)
        assert np.allclose(view.trans_table, toy_model.trans_table, atol=1e-12)


class TestTrainToyModel:
    def test_disjoint_counts_near_onehot(self):
        model = train_toy_model([(("a",), ("x",)), (("b",), ("y",))], alpha=1e-9, lam=1.0)
        ax = model.trans_table[model.src_vocab.index("a"), model.tgt_vocab.index("x")]
        by = model.trans_table[model.src_vocab.index("b"), model.tgt_vocab.index("y")]
        assert ax == pytest.approx(1.0, abs=1e-6)
        assert by == pytest.approx(1.0, abs=1e-6)

    def test_large_alpha_approaches_uniform(self):
        model = train_toy_model([(("a",), ("x",)), (("b",), ("y",))], alpha=1e9, lam=1.0)
        V = len(model.tgt_vocab)
        assert np.allclose(model.trans_table, 1.0 / V, atol=1e-6)

    def test_rows_sum_to_one(self, toy_model):
        assert np.allclose(toy_model.trans_table.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(toy_model.bigram_table.sum(axis=1), 1.0, atol=1e-9)

    def test_empty_corpus_errors(self):
        with pytest.raises(ValueError):
            train_toy_model([], alpha=0.1, lam=0.5)

    def test_json_round_trip(self, toy_model, tmp_path):
        path = tmp_path / "model.json"
        toy_model.save(path)
        loaded = ToyLexicalModel.load(path)
        assert loaded.src_vocab == toy_model.src_vocab
        assert np.array_equal(loaded.trans_table, toy_model.trans_table)
        assert np.array_equal(loaded.bigram_table, toy_model.bigram_table)
        assert (loaded.lam, loaded.alpha, loaded.floor) == (toy_model.lam, toy_model.alpha, toy_model.floor)


class TestUnigramMLM:
    def test_no_mask_is_identity(self, mlm):
        tokens = ("a", "b", "c")
        assert mlm.fill(tokens, seed=0) == tokens

    def test_single_token_table(self):
        single = UnigramMLM(("w",), np.array([1.0]))
        assert single.fill((MASK_TOKEN, "x", MASK_TOKEN), seed=3) == ("w", "x", "w")

    def test_deterministic(self, mlm):
        tokens = (MASK_TOKEN, "a", MASK_TOKEN, MASK_TOKEN)
        assert mlm.fill(tokens, seed=17) == mlm.fill(tokens, seed=17)

    def test_empty_table_errors(self):
        with pytest.raises(ValueError):
            UnigramMLM.from_corpus([])

    def test_json_round_trip(self, mlm, tmp_path):
        path = tmp_path / "mlm.json"
        mlm.save(path)
        loaded = UnigramMLM.load(path)
        assert loaded.vocab == mlm.vocab
        assert np.array_equal(loaded.probs, mlm.probs)


class TestGenerateNoisedInput:
    def test_no_noise_is_identity(self, mlm):
        x = ("a", "b", "c")
        for rounds in (1, 2, 4):
            cfg = NoiseConfig(rounds=rounds, p_insert=0.0, p_delete=0.0)
            for seed in (0, 1, 999):
                assert generate_noised_input(x, cfg, mlm, seed) == x

    def test_delete_all_guard(self, mlm):
        cfg = NoiseConfig(rounds=1, p_insert=0.0, p_delete=1.0)
        out = generate_noised_input(("a", "b", "c"), cfg, mlm, seed=4)
        # everything deleted; guard inserts one mask which the MLM fills
        assert len(out) == 1
        assert out[0] in mlm.vocab
        assert out == (mlm.fill((MASK_TOKEN,), mix(4, "mlm-fill")))

    def test_insert_everywhere(self, mlm):
        cfg = NoiseConfig(rounds=1, p_insert=1.0, p_delete=0.0)
        out = generate_noised_input(("a", "b"), cfg, mlm, seed=8)
        assert len(out) == 5
        assert out[1] == "a" and out[3] == "b"
        assert all(tok in mlm.vocab for tok in (out[0], out[2], out[4]))

    def test_deterministic(self, mlm):
        cfg = NoiseConfig(rounds=3, p_insert=0.4, p_delete=0.4)
        x = ("a", "b", "c", "d")
        assert generate_noised_input(x, cfg, mlm, 13) == generate_noised_input(x, cfg, mlm, 13)

    def test_empty_input_errors(self, mlm):
        with pytest.raises(ValueError):
            generate_noised_input((), NoiseConfig(1, 0.1, 0.1), mlm, 0)

    @settings(max_examples=1000, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 4), st.floats(0.0, 0.5))
    def test_length_bound(self, mlm_module, seed, rounds, p_insert):
        x = ("a", "b", "c", "d", "e")
        cfg = NoiseConfig(rounds=rounds, p_insert=p_insert, p_delete=0.2)
        out = generate_noised_input(x, cfg, mlm_module, seed)
        assert len(out) <= (len(x) + rounds) * 2**rounds


@pytest.fixture(scope="module")
def mlm_module():
    from conftest import FIXTURES

    return UnigramMLM.load(FIXTURES / "mlm.json")


def test_decode_sample_length_invariant():
    with pytest.raises(ValueError):
        DecodeSample(tokens=("a",), step_logprobs=(-1.0, -2.0))
