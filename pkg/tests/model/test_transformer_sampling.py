import itertools
import math

import numpy as np
import pytest
import torch

from pcsvs.errors import (CapacityError, ConfigError, DecodingError,
                          InvalidInputError, NotTrainedError)
from pcsvs.model.config import END, ModelConfig
from pcsvs.model.layout import build_sequence, pad_layouts
from pcsvs.model.sampling import (SamplingConfig, candidates, infer,
                                  sequence_log_prob)
from pcsvs.model.transformer import MultiScaleTransformer


def _config(**overrides):
    base = dict(
        hidden=16, global_layers=2, global_heads=2, local_layers=1, local_heads=2,
        n_q=2, codebook_size=4, phoneme_vocab=5, max_pitch_hz=50, max_slots=64,
    )
    return ModelConfig(**{**base, **overrides})


def _model(config, seed=0, trained=True):
    torch.manual_seed(seed)
    model = MultiScaleTransformer(config).eval()
    if trained:
        model.trained_steps.fill_(1)
    return model


def _training_tokens(config, seed=0):
    rng = np.random.default_rng(seed)
    seq = build_sequence(
        2, rng.integers(0, 5, 4), rng.integers(1, 50, 4), 30,
        rng.integers(0, config.codebook_size, (4, config.n_q)), config=config,
    )
    tokens, _, prompt = pad_layouts([seq])
    return torch.as_tensor(tokens), torch.as_tensor(prompt)


def test_forward_shape():
    config = _config()
    model = _model(config)
    tokens, prompt_mask = _training_tokens(config)
    prompt = torch.randn(1, 2, config.hidden)
    logits = model(tokens, prompt, prompt_mask)
    assert logits.shape == (1, tokens.shape[1], config.n_q, config.vocab.size)


def test_later_slots_do_not_affect_earlier_logits():
    config = _config()
    model = _model(config)
    tokens, _ = _training_tokens(config)
    base = model(tokens)
    t = tokens.shape[1] - 3
    changed = tokens.clone()
    changed[0, t:] = (changed[0, t:] + 1) % config.vocab.size
    out = model(changed)
    torch.testing.assert_close(out[:, :t], base[:, :t])
    # position 0 of slot t sees only earlier slots
    torch.testing.assert_close(out[:, t, 0], base[:, t, 0])


def test_later_positions_in_a_slot_do_not_affect_earlier_ones():
    config = _config(n_q=3)
    model = _model(config)
    tokens, _ = _training_tokens(config)
    t = tokens.shape[1] - 1
    changed = tokens.clone()
    changed[0, t, 1:] = (changed[0, t, 1:] + 1) % config.vocab.size
    out, base = model(changed), model(tokens)
    torch.testing.assert_close(out[:, t, :2], base[:, t, :2])
    assert not torch.allclose(out[:, t, 2], base[:, t, 2])


def test_stepwise_decoding_matches_teacher_forcing():
    config = _config()
    model = _model(config)
    tokens, _ = _training_tokens(config)
    logits = model(tokens)
    S = tokens.shape[1]
    ctx = model.next_context(tokens[:, : S - 1])
    for c in range(config.n_q):
        step = model.position_logits(ctx, tokens[:, S - 1, :c])
        torch.testing.assert_close(step, logits[:, S - 1, c], rtol=1e-4, atol=1e-4)


def test_capacity_is_enforced():
    config = _config(max_slots=8)
    model = _model(config)
    with pytest.raises(CapacityError):
        model(torch.zeros(1, 9, 2, dtype=torch.long))
    with pytest.raises(CapacityError):
        model.next_context(torch.zeros(1, 8, 2, dtype=torch.long))


def test_prompt_vectors_need_a_mask_and_matching_width():
    config = _config()
    model = _model(config)
    tokens, prompt_mask = _training_tokens(config)
    with pytest.raises(InvalidInputError):
        model(tokens, torch.randn(1, 2, config.hidden))
    with pytest.raises(InvalidInputError):
        model(tokens, torch.randn(1, 2, 8), prompt_mask)


def test_candidate_sets():
    config = _config()
    rng = candidates(config, "range", allow_end=True)
    assert rng.tolist() == list(range(13, 63))
    ac = candidates(config, "acoustic", 1, allow_end=True)
    assert ac.tolist() == [67, 68, 69, 70, END]
    assert END not in candidates(config, "acoustic", 1, allow_end=False).tolist()


def _prefix(config, prompt_len=2, T=3):
    return build_sequence(prompt_len, np.arange(T) % 5, np.full(T, 23), config=config)


def test_infer_produces_in_range_units_deterministically():
    config = _config()
    model = _model(config)
    prompt = torch.randn(2, config.hidden)
    sampling = SamplingConfig(allow_end=False, seed=4)
    a = infer(model, prompt, _prefix(config), sampling)
    b = infer(model, prompt, _prefix(config), sampling)
    assert a.units.shape == (3, 2)
    assert a.units.min() >= 0 and a.units.max() < config.codebook_size
    assert 1 <= a.range_factor <= config.max_pitch_hz
    np.testing.assert_array_equal(a.units, b.units)
    assert a.range_factor == b.range_factor
    assert a.n_frames == 3


def test_infer_without_range_factor():
    config = _config(use_range_factor=False)
    result = infer(_model(config), torch.randn(1, config.hidden), _prefix(config, 1, 2),
                   SamplingConfig(greedy=True, allow_end=False))
    assert result.range_factor is None
    assert result.units.shape == (2, 2)


def test_infer_preconditions():
    config = _config()
    prompt = torch.randn(2, config.hidden)
    with pytest.raises(NotTrainedError):
        infer(_model(config, trained=False), prompt, _prefix(config))
    model = _model(config)
    full = build_sequence(2, np.array([1]), np.array([20]), 20, np.array([[0, 1]]), config=config)
    with pytest.raises(InvalidInputError):
        infer(model, prompt, full)
    with pytest.raises(InvalidInputError):
        infer(model, torch.randn(3, config.hidden), _prefix(config))


def test_end_token_during_acoustic_decoding_raises():
    config = _config()
    model = _model(config)
    with torch.no_grad():
        model.lm_head.bias[END] = 1e4
    prefix = _prefix(config, prompt_len=2, T=3)
    with pytest.raises(DecodingError) as ei:
        infer(model, torch.randn(2, config.hidden), prefix, SamplingConfig(greedy=True))
    # the range slot and its separator follow the prefix
    assert ei.value.position == (prefix.n_slots + 2) * config.n_q


def test_output_distribution_sums_to_one():
    config = _config(max_pitch_hz=3, codebook_size=2, phoneme_vocab=2)
    model = _model(config, seed=3)
    prompt = torch.randn(1, config.hidden)
    prefix = build_sequence(1, np.array([0, 1]), np.array([1, 2]), config=config)
    total = 0.0
    for rf in (1, 2, 3):
        for flat in itertools.product(range(2), repeat=4):
            units = np.array(flat).reshape(2, 2)
            total += math.exp(sequence_log_prob(model, prompt, prefix, rf, units))
    assert total == pytest.approx(1.0, abs=1e-6)


def test_sequence_log_prob_rejects_out_of_set_tokens():
    config = _config()
    model = _model(config)
    prefix = _prefix(config, 1, 1)
    with pytest.raises(InvalidInputError):
        sequence_log_prob(model, torch.randn(1, config.hidden), prefix, 20, np.array([[0, 9]]))


def test_sampling_config_validation():
    with pytest.raises(ConfigError):
        SamplingConfig(temperature=0)
    with pytest.raises(ConfigError):
        SamplingConfig(top_k=-1)
    with pytest.raises(ConfigError):
        SamplingConfig.from_dict({"beam": 4})
    assert SamplingConfig.from_dict({"greedy": True}).greedy
