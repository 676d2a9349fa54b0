import numpy as np
import pytest

from pcsvs.errors import InvalidInputError
from pcsvs.features.regulate import (UNK, PhonemeTable, frame_counts,
                                     frame_rate_of, read_phoneme_file,
                                     regulate, write_phoneme_file)


def test_frame_counts_round_cumulative_boundaries():
    # boundaries 0.5, 1.0, 1.5 frames round to 1, 1, 2
    assert frame_counts([0.01, 0.01, 0.01], 50.0).tolist() == [1, 0, 1]
    assert frame_counts([0.1, 0.25, 0.03], 50.0).tolist() == [5, 13, 1]
    assert frame_counts([], 50.0).tolist() == []


def test_total_length_is_independent_of_segmentation():
    rng = np.random.default_rng(0)
    durations = rng.uniform(0.005, 0.3, size=40)
    counts = frame_counts(durations, 50.0)
    assert counts.sum() == int(np.floor(durations.sum() * 50.0 + 0.5))
    assert np.all(counts >= 0)


def test_frame_counts_reject_negative_and_non_finite():
    with pytest.raises(InvalidInputError):
        frame_counts([0.1, -0.1], 50.0)
    with pytest.raises(InvalidInputError):
        frame_counts([np.inf], 50.0)


def test_regulate_expands_ids_per_frame():
    table = PhonemeTable(["a", "n"])
    seq = regulate(["n", "a", "x"], [0.04, 0.06, 0.02], 50.0, table=table)
    assert seq.phoneme_ids.tolist() == [2, 2, 1, 1, 1, 0]
    assert seq.source_index.tolist() == [0, 0, 1, 1, 1, 2]
    assert len(seq) == 6
    assert seq.vocab_size == 3


def test_regulate_rejects_length_mismatch():
    with pytest.raises(InvalidInputError):
        regulate(["a", "b"], [0.1], 50.0)


def test_phoneme_table_round_trip_and_unknown():
    table = PhonemeTable.build([["sil", "a"], ["a", "n", "sil"]])
    assert table.to_list() == [UNK, "sil", "a", "n"]
    assert table.id_of("zz") == 0
    assert "n" in table and "zz" not in table
    assert PhonemeTable.from_list(table.to_list()).to_list() == table.to_list()
    with pytest.raises(InvalidInputError):
        PhonemeTable.from_list(["a", "b"])


def test_frame_rate_of_default_grid():
    assert frame_rate_of(24000, 480) == 50.0
    with pytest.raises(InvalidInputError):
        frame_rate_of(24000, 0)


def test_phoneme_file_read_write(tmp_path):
    path = tmp_path / "x.phn"
    write_phoneme_file(path, ["sil", "a"], [0.1, 0.25])
    assert read_phoneme_file(path) == (["sil", "a"], [0.1, 0.25])

    path.write_text("# header\nsil 0.1\n\na 0.2  # held\n")
    assert read_phoneme_file(path) == (["sil", "a"], [0.1, 0.2])

    path.write_text("sil\n")
    with pytest.raises(InvalidInputError):
        read_phoneme_file(path)
    path.write_text("sil long\n")
    with pytest.raises(InvalidInputError):
        read_phoneme_file(path)
