"""Environment schema files: geometry, waypoints, reward constants, and
horizons are frozen in shipped config files so macro durations and returns are
reproducible.  The schema bytes are hashed into every metrics header."""

from __future__ import annotations

import configparser
import hashlib
from importlib import resources
from pathlib import Path


def schema_path(name: str) -> Path:
    """Path of a shipped schema file, e.g. 'box_pushing'."""
    return Path(str(resources.files("macrl.envs") / "schemas" / f"{name}.cfg"))


def load_schema(path: str | Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as f:
        parser.read_file(f)
    return parser


def schema_hash(path: str | Path) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()[:16]
