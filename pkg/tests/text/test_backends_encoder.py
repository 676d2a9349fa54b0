import pytest
import torch

from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.text import builtin_toy_encoder
from pcsvs.text.backends import (ToyBackend, backend_init_kwargs, freeze,
                                 parameter_checksum, resolve_backend, tokenize)
from pcsvs.text.encoder import PromptEncoder, encode_prompt, masked_mean


def test_tokenize_keeps_hyphenated_words():
    assert tokenize("A High-pitched, LOUD lady!") == ["a", "high-pitched", "loud", "lady"]


def test_toy_backend_shapes_and_mask():
    backend = ToyBackend(width=16, n_buckets=64)
    hidden, mask = backend(["a lady singer", "loud"])
    assert hidden.shape == (2, 3, 16)
    assert mask.tolist() == [[True, True, True], [True, False, False]]
    assert torch.all(hidden[1, 1:] == 0)


def test_toy_backend_is_deterministic_and_keywords_are_distinct():
    a = ToyBackend(width=16, seed=3)
    b = ToyBackend(width=16, seed=3)
    ha, _ = a(["woman man"])
    hb, _ = b(["woman man"])
    torch.testing.assert_close(ha, hb)
    assert not torch.allclose(ha[0, 0], ha[0, 1])


def test_toy_backend_rejects_wordless_prompt():
    with pytest.raises(InvalidInputError):
        ToyBackend(width=8)(["!!!"])


def test_resolve_backend_freezes_and_validates():
    backend = resolve_backend("toy", width=8)
    assert not any(p.requires_grad for p in backend.parameters())
    assert not backend.training
    with pytest.raises(ConfigError):
        resolve_backend("word2vec")
    with pytest.raises(ConfigError):
        resolve_backend("hf")


def test_parameter_checksum_tracks_changes():
    backend = ToyBackend(width=8)
    before = parameter_checksum(backend)
    assert before == parameter_checksum(backend)
    with torch.no_grad():
        backend.table.weight[0, 0] += 1.0
    assert parameter_checksum(backend) != before


def test_backend_init_kwargs_rebuild_matching_shapes():
    backend = ToyBackend(width=12, n_buckets=100)
    rebuilt = resolve_backend("toy", **backend_init_kwargs(backend))
    rebuilt.load_state_dict(backend.state_dict())
    assert parameter_checksum(rebuilt) == parameter_checksum(backend)


def test_prompt_encoder_token_level_and_pooled():
    backend = freeze(ToyBackend(width=8))
    tokens = PromptEncoder(backend, 24)
    vectors, mask = tokens(["a quiet lady singer"])
    assert vectors.shape == (1, 4, 24)
    pooled = PromptEncoder(backend, 24, pooled=True)
    vectors, mask = pooled(["a quiet lady singer", "loud"])
    assert vectors.shape == (2, 1, 24)
    assert mask.all()


def test_encode_prompt_drops_padding_and_tags_encoder():
    encoder = PromptEncoder(ToyBackend(width=8), 16)
    emb = encode_prompt("a deep male voice", encoder)
    assert emb.vectors.shape == (4, 16)
    assert emb.encoder_id == "toy"
    assert len(emb) == 4
    with pytest.raises(InvalidInputError):
        encode_prompt("   ", encoder)


def test_prompt_encoder_only_projection_gets_gradients():
    encoder = PromptEncoder(resolve_backend("toy", width=8), 16)
    vectors, _ = encoder(["a lady singer"])
    vectors.sum().backward()
    assert encoder.projection.weight.grad is not None
    assert all(p.grad is None for p in encoder.backend.parameters())


def test_masked_mean_ignores_padding():
    hidden = torch.tensor([[[1.0], [3.0], [100.0]]])
    mask = torch.tensor([[True, True, False]])
    assert masked_mean(hidden, mask).item() == pytest.approx(2.0)


def test_builtin_toy_encoder_is_reproducible():
    a = builtin_toy_encoder("Generate a song by a lady singer.", hidden=32, seed=1)
    b = builtin_toy_encoder("Generate a song by a lady singer.", hidden=32, seed=1)
    torch.testing.assert_close(a.vectors, b.vectors)
    assert a.vectors.shape[1] == 32
