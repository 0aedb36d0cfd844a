"""Access to the shipped reference maps (package data under maps/)."""

from __future__ import annotations

from pathlib import Path

from .grid import GridMap, load_map

MAPS_DIR = Path(__file__).parent / "maps"


class MapLoadError(ValueError):
    pass


def list_shipped() -> list[str]:
    return sorted(p.stem for p in MAPS_DIR.glob("*.txt"))


def load_shipped(name: str) -> GridMap:
    path = MAPS_DIR / f"{name}.txt"
    if not path.exists():
        raise MapLoadError(f"no shipped map named {name!r}; have {list_shipped()}")
    return load_map(path.read_text(), name=name)


def resolve(name_or_path: str) -> GridMap:
    """A shipped map name, or a path to an ASCII map file."""
    path = Path(name_or_path)
    if path.exists():
        try:
            return load_map(path.read_text(), name=path.stem)
        except ValueError as exc:
            raise MapLoadError(f"{name_or_path}: {exc}") from exc
    return load_shipped(name_or_path)
