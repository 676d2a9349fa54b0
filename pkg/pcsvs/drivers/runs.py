"""
Run directories: one per CLI invocation, under paths.work_dir.

    <work_dir>/<command>-<YYYYmmdd-HHMMSS>[-n]/
        config.yaml      fully resolved RunConfig
        meta.json        seed, version string, command line
        run.log          copy of everything logged during the run
        metrics.ndjson   loss_hook records
        timing.csv       timer_hook records ("k,step_sec")
"""

from __future__ import annotations

import logging
import subprocess
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterator, Mapping, Sequence

from pcsvs.config.loader import dump_config
from pcsvs.core.api import Hook
from pcsvs.hooks import loss_hook, timer_hook
from pcsvs.utils.io import atomic_open, write_json

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def version_string() -> str:
    """`git describe --always --dirty` of the source tree, else the package version."""
    from pcsvs import __version__

    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        described = out.stdout.strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def seed_of(cfg: Mapping[str, Any]) -> int:
    seed = cfg.get("seed")
    return 0 if seed is None else int(seed)


@dataclass
class RunDir:
    path: Path
    command: str
    prefix: str = ""
    _handler: logging.Handler | None = None
    _sinks: list[IO[str]] = field(default_factory=list)

    def file(self, name: str) -> Path:
        return self.path / f"{self.prefix}{name}"

    def sink(self, name: str) -> IO[str]:
        fh = open(self.file(name), "a", encoding="utf-8")
        self._sinks.append(fh)
        return fh

    def close(self) -> None:
        for fh in self._sinks:
            fh.close()
        self._sinks.clear()
        if self._handler is not None:
            logging.getLogger().removeHandler(self._handler)
            self._handler.close()
            self._handler = None


def _fresh_dir(work_dir: Path, command: str) -> Path:
    stem = f"{command}-{time.strftime('%Y%m%d-%H%M%S')}"
    path = work_dir / stem
    n = 1
    while path.exists():
        path = work_dir / f"{stem}-{n}"
        n += 1
    path.mkdir(parents=True)
    return path


def open_run(cfg: Mapping[str, Any], command: str, argv: Sequence[str] | None = None) -> RunDir:
    work_dir = Path(cfg["paths"]["work_dir"])
    path = _fresh_dir(work_dir, command)
    with atomic_open(path / "config.yaml") as fh:
        fh.write(dump_config(cfg))
    write_json(
        path / "meta.json",
        {
            "command": command,
            "seed": cfg.get("seed"),
            "version": version_string(),
            "argv": list(sys.argv if argv is None else argv),
            "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
        },
    )
    handler = logging.FileHandler(path / "run.log", encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    logger.info("run directory %s", path)
    return RunDir(path=path, command=command, _handler=handler)


@contextmanager
def run_directory(cfg: Mapping[str, Any], command: str, argv: Sequence[str] | None = None) -> Iterator[RunDir]:
    run = open_run(cfg, command, argv)
    try:
        yield run
    finally:
        run.close()


def standard_hooks(run: RunDir | None, cfg: Mapping[str, Any]) -> tuple[Hook, ...]:
    """Loss NDJSON (always) and per-step timing CSV (hooks.timing) into the run directory."""
    if run is None:
        return ()
    hcfg = cfg.get("hooks", {})
    hooks: list[Hook] = [loss_hook(sink=run.sink("metrics.ndjson"), window=int(hcfg.get("loss_window", 50)))]
    if hcfg.get("timing", True):
        hooks.append(timer_hook(sink=run.sink("timing.csv")))
    return tuple(hooks)
