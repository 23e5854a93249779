"""Benchmark environments plus the tabular oracle testbed."""

from __future__ import annotations

from ..core import MacroEnv
from .box_pushing import BoxPushing
from .capture_target import CaptureTarget
from .toy_chain import ToyChain
from .warehouse import WarehouseA


def make_env(env_id: str, **kwargs) -> MacroEnv:
    """Environment factory used by the harness config layer."""
    if env_id == "capture_target":
        return CaptureTarget(
            n=int(kwargs.get("n", 4)),
            primitive=bool(kwargs.get("primitive", False)),
            schema_file=kwargs.get("schema"),
        )
    if env_id == "box_pushing":
        return BoxPushing(
            n=int(kwargs.get("n", 4)),
            primitive=bool(kwargs.get("primitive", False)),
            schema_file=kwargs.get("schema"),
        )
    if env_id == "warehouse_a":
        return WarehouseA(
            primitive=bool(kwargs.get("primitive", False)),
            schema_file=kwargs.get("schema"),
        )
    if env_id == "toy_chain":
        from ..oracle import fixture_path, load_tabular_spec

        fixture = kwargs.get("fixture")
        if fixture is None:
            raise ValueError("toy_chain requires a fixture name or path")
        path = fixture_path(fixture) if not str(fixture).endswith(".cfg") else fixture
        return ToyChain(load_tabular_spec(path))
    raise ValueError(f"unknown environment {env_id!r}")


__all__ = [
    "BoxPushing",
    "CaptureTarget",
    "ToyChain",
    "WarehouseA",
    "make_env",
]
