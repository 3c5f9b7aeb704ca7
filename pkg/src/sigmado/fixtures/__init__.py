"""Graph fixtures for every figure: fig1a-fig1c, fig2a-fig2d, fig3a-fig3d,
and the SC-projections fig4a-fig4h (projections of fig2a-d and fig3a-d)."""

from importlib import resources

from .. import graphio


def available() -> tuple[str, ...]:
    files = resources.files(__name__)
    return tuple(sorted(
        entry.name[:-5] for entry in files.iterdir() if entry.name.endswith(".json")))


def fixture_text(name: str) -> str:
    entry = resources.files(__name__).joinpath(f"{name}.json")
    if not entry.is_file():
        raise FileNotFoundError(
            f"no fixture {name!r}; available: {', '.join(available())}")
    return entry.read_text(encoding="utf-8")


def load(name: str):
    """Parse a named fixture into its graph."""
    return graphio.parse_graph(fixture_text(name))
