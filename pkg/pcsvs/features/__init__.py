from __future__ import annotations

from .manifest import (CORPUS_KINDS, UtteranceRecord, build_phoneme_table,
                       ingest_corpus)
from .mixing import MixedSampler, select_by_hours
from .regulate import (PhonemeFrameSequence, PhonemeTable, frame_rate_of,
                       read_phoneme_file, regulate, write_phoneme_file)
from .synthetic import make_toy_corpus

__all__ = [
    "CORPUS_KINDS",
    "UtteranceRecord",
    "PhonemeFrameSequence",
    "PhonemeTable",
    "MixedSampler",
    "build_phoneme_table",
    "frame_rate_of",
    "ingest_corpus",
    "make_toy_corpus",
    "read_phoneme_file",
    "regulate",
    "select_by_hours",
    "write_phoneme_file",
]
