import os
import sys

import pytest

# Ensure project root is on sys.path so 'import pcsvs' works when running pytest
ROOT_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT_DIR not in sys.path:
    sys.path.insert(0, ROOT_DIR)


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """A small synthetic singing corpus; returns the manifest path."""
    from pcsvs.features.synthetic import make_toy_corpus

    return make_toy_corpus(tmp_path_factory.mktemp("toy"), 12, seed=7)


@pytest.fixture(scope="session")
def toy_records(toy_corpus):
    from pcsvs.features.manifest import ingest_corpus

    return ingest_corpus(toy_corpus, "singing", hop=480, strict=True)


@pytest.fixture(scope="session")
def bank():
    from pcsvs.prompts.bank import load_keyword_bank

    return load_keyword_bank()


@pytest.fixture(scope="session")
def templates(bank):
    from pcsvs.prompts.bank import load_templates

    return load_templates(bank=bank)


@pytest.fixture(scope="session")
def eval_templates(bank):
    from pcsvs.prompts.bank import load_templates

    return load_templates(bank=bank, eval_set=True)


TINY_CODEC = dict(
    n_mels=32, hidden=32, latent_dim=16, n_levels=4, n_q=2, codebook_size=16, griffin_lim_iters=4
)


@pytest.fixture(scope="session")
def toy_feats(toy_records):
    from pcsvs.codec.model import CodecConfig, ToyCodec
    from pcsvs.utils.io import read_wav

    extractor = ToyCodec(CodecConfig(**TINY_CODEC))
    return [extractor.features(*read_wav(r.audio_path)) for r in toy_records]


@pytest.fixture(scope="session")
def trained_codec(toy_feats):
    """(codec, report) from a short training run on the toy corpus."""
    from pcsvs.codec.model import CodecConfig
    from pcsvs.codec.train import train_codec

    return train_codec(
        toy_feats,
        CodecConfig(**TINY_CODEC),
        train_cfg={"steps": 80, "batch_size": 4, "segment_frames": 24},
        seed=0,
    )
