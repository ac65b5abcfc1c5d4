"""Run directories and manifests.

Every command that computes something gets a directory whose manifest.json
is written before the work starts and records everything needed to redo the
run: subcommand, resolved flags, seeds, package version, input paths with
content digests. Deterministic outputs (CSV logs, checkpoints, queried-id
lists) land next to it; wall-clock timings go to a separate sidecar file so
the deterministic artifacts stay byte-comparable across reruns.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

OUT_ROOT_ENV = "MTAL_OUT_ROOT"


def default_out_root() -> str:
    return os.environ.get(OUT_ROOT_ENV, os.path.join(os.getcwd(), "runs"))


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    inputs: dict[str, str] = field(default_factory=dict)   # path -> sha256
    outputs_root: str = ""
    version: str = ""
    started_at: str = ""

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        return RunManifest(**json.loads(text))


class RunDir:
    """A created run directory with its manifest already on disk."""

    def __init__(self, path: str, manifest: RunManifest):
        self.path = path
        self.manifest = manifest

    def file(self, name: str) -> str:
        path = os.path.join(self.path, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        return path

    def write_text(self, name: str, text: str) -> str:
        path = self.file(name)
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
        return path

    def read_text(self, name: str) -> str:
        with open(self.file(name)) as fh:
            return fh.read()

    def append_line(self, name: str, line: str, fsync: bool = False) -> None:
        with open(self.file(name), "a") as fh:
            fh.write(line.rstrip("\n") + "\n")
            if fsync:
                fh.flush()
                os.fsync(fh.fileno())


def create_run_dir(subcommand: str, config: dict, seed: int,
                   inputs: dict[str, str] | None = None,
                   out: str | None = None) -> RunDir:
    """Make the directory and write manifest.json before anything else runs."""
    from . import __version__
    if out is None:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        out = os.path.join(default_out_root(), f"{subcommand}-{stamp}-seed{seed}")
    os.makedirs(out, exist_ok=True)
    digests = {p: file_digest(p) for p in (inputs or {}).values() if p}
    manifest = RunManifest(
        subcommand=subcommand,
        config=config,
        seed=seed,
        inputs=digests,
        outputs_root=os.path.abspath(out),
        version=__version__,
        started_at=time.strftime("%Y-%m-%dT%H:%M:%S"),
    )
    run = RunDir(os.path.abspath(out), manifest)
    run.write_text("manifest.json", manifest.to_json())
    return run


def load_manifest(run_path: str) -> RunManifest:
    with open(os.path.join(run_path, "manifest.json")) as fh:
        return RunManifest.from_json(fh.read())
