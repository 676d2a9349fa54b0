import json

import pytest

from pcsvs.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, build_parser, main
from pcsvs.utils.io import read_jsonl


def _base(tmp_path):
    return ["--set", f"paths.work_dir={tmp_path / 'runs'}", "--log-level", "WARNING"]


def test_make_toy_corpus_succeeds_and_records_a_run(tmp_path, capsys):
    code = main(_base(tmp_path) + ["make-toy-corpus", "--out", str(tmp_path / "toy"), "--n", "4"])
    assert code == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert len(read_jsonl(printed["manifest"])) == 4
    [run] = list((tmp_path / "runs").iterdir())
    assert run.name.startswith("make-toy-corpus-")
    assert {"config.yaml", "meta.json", "run.log"} <= {p.name for p in run.iterdir()}


def test_invalid_config_exits_with_config_code(tmp_path):
    code = main(_base(tmp_path) + ["--set", "prompts.p1=2", "make-toy-corpus", "--out", str(tmp_path / "toy")])
    assert code == EXIT_CONFIG
    assert not (tmp_path / "toy").exists()


def test_unknown_override_exits_with_config_code(tmp_path):
    assert main(_base(tmp_path) + ["--set", "nosuch.key=1", "make-toy-corpus", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_checkpoint_is_a_config_error(tmp_path):
    code = main(_base(tmp_path) + ["synthesize", "--prompt", "A song.", "--melody", "m.f0",
                                   "--lyrics", "l.phn", "--out", str(tmp_path / "o.wav")])
    assert code == EXIT_CONFIG


def test_missing_manifest_exits_with_data_code(tmp_path):
    code = main(_base(tmp_path) + ["evaluate", "--manifest", str(tmp_path / "absent.jsonl")])
    assert code == EXIT_DATA


def test_synthesize_modes_are_exclusive(tmp_path):
    from pcsvs.cli import _check_synthesize_args
    from pcsvs.errors import ConfigError

    parser = build_parser()
    both = parser.parse_args(["synthesize", "--prompt", "x", "--manifest", "m.jsonl", "--out", "o"])
    with pytest.raises(ConfigError):
        _check_synthesize_args(both)
    partial = parser.parse_args(["synthesize", "--prompt", "x", "--out", "o"])
    with pytest.raises(ConfigError):
        _check_synthesize_args(partial)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_prepare_manifest_flag_becomes_an_override(tmp_path):
    from pcsvs.cli import _flag_overrides

    args = build_parser().parse_args(["prepare-data", "--manifest", "x.jsonl", "--kind", "speech"])
    assert _flag_overrides(args) == ["paths.speech_manifest=x.jsonl"]


def test_batch_synthesis_takes_a_corpus_kind():
    parser = build_parser()
    args = parser.parse_args(["synthesize", "--manifest", "m.jsonl", "--kind", "speech", "--out", "o"])
    assert args.kind == "speech"
    assert parser.parse_args(["synthesize", "--manifest", "m.jsonl", "--out", "o"]).kind == "singing"
