import json

import pytest

from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.prompts.bank import (PromptTemplate, check_disjoint,
                                load_keyword_bank, load_templates)
from pcsvs.prompts.labels import ABSENT, ATTRIBUTES, CATEGORIES, AttributeLabels


def test_labels_validate_categories_and_range_dependency():
    AttributeLabels(gender="female", volume="high", vocal_range="low")
    with pytest.raises(InvalidInputError):
        AttributeLabels(volume="very loud")
    with pytest.raises(InvalidInputError):
        AttributeLabels(vocal_range="high")


def test_without_gender_also_drops_range():
    labels = AttributeLabels(gender="male", volume="low", vocal_range="high")
    assert labels.without("gender") == AttributeLabels(volume="low")
    assert labels.without("volume").present() == frozenset({"gender", "vocal_range"})


def test_labels_mapping_and_describe():
    labels = AttributeLabels.from_mapping({"gender": "female", "volume": None})
    assert labels.to_dict() == {"gender": "female", "volume": ABSENT, "vocal_range": ABSENT}
    assert labels.describe() == "gender=female"
    assert AttributeLabels().describe() == "none"


def test_shipped_bank_has_at_least_four_keywords_per_category(bank):
    for attr in ATTRIBUTES:
        for cat in CATEGORIES[attr]:
            assert len(bank.words(attr, cat)) >= 4


def test_shipped_templates_cover_every_combination(templates, eval_templates):
    combos = [
        frozenset({"gender"}), frozenset({"volume"}), frozenset({"gender", "volume"}),
        frozenset({"gender", "vocal_range"}), frozenset({"gender", "volume", "vocal_range"}),
    ]
    for pool in (templates, eval_templates):
        covered = {t.covered_attributes for t in pool}
        for combo in combos:
            assert combo in covered
        assert all(not ("vocal_range" in c and "gender" not in c) for c in covered)


def test_shipped_template_sets_are_disjoint(templates, eval_templates):
    check_disjoint(templates, eval_templates)
    with pytest.raises(ConfigError):
        check_disjoint(templates, templates[:1])


def test_template_placeholders_follow_attribute_order():
    t = PromptTemplate("x", "A [volume] song by a [pitch] [gender] singer.", frozenset(ATTRIBUTES))
    assert t.placeholders == ("gender", "volume", "vocal_range")


def test_category_specific_template_needs_its_keyword(bank):
    ok = PromptTemplate("x", "A song by a woman with a [volume] voice.",
                        frozenset({"gender", "volume"}), ("gender", "female"))
    ok.validate(bank)
    bad = PromptTemplate("y", "A song with a [volume] voice.",
                         frozenset({"gender", "volume"}), ("gender", "female"))
    with pytest.raises(ConfigError):
        bad.validate(bank)


def test_template_without_gender_cannot_cover_range(bank):
    t = PromptTemplate("x", "A [pitch] song.", frozenset({"vocal_range"}))
    with pytest.raises(ConfigError):
        t.validate(bank)


def test_unknown_bracket_token_is_rejected(bank):
    t = PromptTemplate("x", "A [gender] singer in [tempo] time.", frozenset({"gender"}))
    with pytest.raises(ConfigError):
        t.validate(bank)


def test_load_templates_rejects_duplicates(tmp_path, bank):
    row = {"id": "a", "text": "A [gender] singer.", "covered_attributes": ["gender"]}
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n")
    with pytest.raises(ConfigError):
        load_templates(path, bank=bank)


def test_bank_with_too_few_keywords_is_rejected(tmp_path):
    path = tmp_path / "k.yaml"
    path.write_text(
        "gender: {female: [woman], male: [man, boy, guy, sir]}\n"
        "volume: {low: [a, b, c, d], medium: [e, f, g, h], high: [i, j, k, l]}\n"
        "vocal_range: {low: [m, n, o, p], high: [q, r, s, t]}\n"
    )
    with pytest.raises(ConfigError):
        load_keyword_bank(path)
