import numpy as np
import pytest

from pcsvs.errors import ConfigError
from pcsvs.prompts.labels import ABSENT, AttributeLabels
from pcsvs.prompts.pipeline import infer_labels
from pcsvs.text.backends import ToyBackend, parameter_checksum
from pcsvs.text.finetune import (COMBINATIONS, LABEL_SPACE, MultiLabelHead,
                                 exact_match_accuracy, finetune_multilabel,
                                 labels_to_targets, make_prompt_pairs,
                                 random_labels, targets_to_labels)


def test_label_space_has_seven_categories():
    assert len(LABEL_SPACE) == 7


def test_targets_round_trip():
    labels = AttributeLabels(gender="male", volume="medium", vocal_range="high")
    targets = labels_to_targets(labels)
    assert targets.sum() == 3
    assert targets_to_labels(targets) == labels
    assert labels_to_targets({"volume": "low"}).sum() == 1
    assert targets_to_labels(np.zeros(7)) == AttributeLabels()


def test_targets_reject_foreign_label_space():
    with pytest.raises(ConfigError):
        labels_to_targets({"gender": "child"})


def test_random_labels_use_template_combinations():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(300):
        labels = random_labels(rng)
        assert labels.present() in COMBINATIONS
        seen.add(labels.present())
    assert seen == set(COMBINATIONS)


def test_prompt_pairs_match_their_labels(bank, templates):
    pairs = make_prompt_pairs(bank, templates, 50, np.random.default_rng(1))
    assert len(pairs) == 50
    for sentence, labels in pairs:
        assert infer_labels(sentence, bank) == labels


def test_finetune_rejects_leaked_or_empty_data(bank, templates):
    backend = ToyBackend(width=8)
    pairs = make_prompt_pairs(bank, templates, 5, np.random.default_rng(2))
    with pytest.raises(ConfigError):
        finetune_multilabel(backend, [])
    with pytest.raises(ConfigError):
        finetune_multilabel(backend, pairs, heldout=pairs[:1])


def test_finetune_improves_accuracy_and_refreezes(bank, templates, eval_templates):
    rng = np.random.default_rng(3)
    pairs = make_prompt_pairs(bank, templates, 300, rng)
    heldout = make_prompt_pairs(bank, eval_templates, 60, rng)
    backend = ToyBackend(width=32, n_buckets=512, seed=0)
    before = parameter_checksum(backend)
    baseline = exact_match_accuracy(backend, MultiLabelHead(backend.width), pairs)

    tuned, head, report = finetune_multilabel(
        backend, pairs, heldout=heldout, train_cfg={"steps": 200, "batch_size": 32}, seed=0
    )
    assert tuned is backend
    assert parameter_checksum(backend) != before
    assert not any(p.requires_grad for p in backend.parameters())
    assert not backend.training
    assert report.steps == 200
    assert report.train_accuracy > baseline + 20.0
    assert report.heldout_accuracy is not None
    assert not backend.lock.locked()
