"""Shipped example project models, usable as regression corpus."""

from importlib import resources

from .model import ProjectModel, parse_model

FIXTURES = ("zorro", "primavera")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return (resources.files("demoscope") / "fixtures" / f"{name}.yaml").read_text(
        encoding="utf-8"
    )


def load_fixture(name: str) -> ProjectModel:
    return parse_model(fixture_text(name))
