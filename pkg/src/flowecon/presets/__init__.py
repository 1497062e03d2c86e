"""Scenario presets shipped as TOML files."""

from importlib import resources
from pathlib import Path


def list_presets() -> list[str]:
    root = resources.files(__name__)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_path(name: str) -> Path:
    path = Path(str(resources.files(__name__).joinpath(name + ".toml")))
    if not path.is_file():
        raise FileNotFoundError("no preset named %r (have %s)" % (name, ", ".join(list_presets())))
    return path
