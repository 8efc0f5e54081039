"""Bundled example algebras.

Every example uses element 0 for the group identity (or the least
lattice element) so the zero-pointed helpers work without remapping.
"""
from __future__ import annotations

from importlib import resources

from .algebra import FiniteAlgebra, parse_algebra

_DIR = resources.files(__package__) / "fixtures"


def example_names() -> list[str]:
    return sorted(p.name[: -len(".json")] for p in _DIR.iterdir() if p.name.endswith(".json"))


def load_example(name: str) -> FiniteAlgebra:
    path = _DIR / f"{name}.json"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise KeyError(f"no bundled algebra named {name!r}; have {example_names()}") from None
    return parse_algebra(text)
