"""Run manifests: what was run, with which tolerances, and what it wrote."""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: List[str]
    tolerances: Dict[str, float] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    wall_time: float = 0.0
    status: str = "ok"
    version: str = __version__
    python: str = field(default_factory=lambda: platform.python_version())
    extra: Dict = field(default_factory=dict)

    def add_output(self, path) -> None:
        path = Path(path)
        self.outputs[path.name] = sha256_of(path)

    def add_input(self, path) -> None:
        path = Path(path)
        self.inputs[str(path)] = sha256_of(path)

    def to_json(self) -> dict:
        return asdict(self)

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))

    def verify_outputs(self, directory) -> Dict[str, bool]:
        """Which recorded outputs in ``directory`` still match their digests."""
        directory = Path(directory)
        return {name: (directory / name).exists() and sha256_of(directory / name) == digest
                for name, digest in self.outputs.items()}


def command_line(argv: Optional[List[str]] = None) -> List[str]:
    return ["bifcc"] + list(sys.argv[1:] if argv is None else argv)
