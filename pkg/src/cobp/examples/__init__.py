"""Built-in example programs, addressable by name from the CLI and tests.

Each example bundles the behavioral definitions with their data repository,
an initial context, an environment model (simulation threads used for runs
and verification), safety assertions, and machine-checkable expected
properties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..behavior import CBTDefinition
from ..context import ContextStore
from ..engine import Program
from ..errors import ConfigurationError
from ..verifier import Assertion


@dataclass
class ExampleProgram:
    name: str
    program: Program
    ctx_init: ContextStore
    env_model: tuple[CBTDefinition, ...] = ()
    assertions: tuple[Assertion, ...] = ()
    expected_properties: dict[str, Callable] = field(default_factory=dict)
    ctx_from_doc: Callable[[Mapping], ContextStore] | None = None

    def merged(self) -> Program:
        """The program with its environment model folded in (for runs/search)."""

        return self.program.extended(self.env_model) if self.env_model else self.program

    def with_context_doc(self, doc: Mapping) -> "ExampleProgram":
        if self.ctx_from_doc is None:
            from ..context import load_context_tables
            ctx = load_context_tables(doc)
        else:
            ctx = self.ctx_from_doc(doc)
        out = ExampleProgram(**{**self.__dict__})
        out.ctx_init = ctx
        return out


_REGISTRY: dict[str, Callable[[], ExampleProgram]] = {}
_ALIASES = {
    "hot-cold": "hotcold",
    "hot-cold-interleave": "hotcold-interleave",
    "ext-hot-cold": "ext-hotcold",
}


def register_example(name: str, factory: Callable[[], ExampleProgram]) -> None:
    if name in _REGISTRY:
        raise ConfigurationError(f"example {name!r} already registered")
    _REGISTRY[name] = factory


def example_names() -> list[str]:
    _load_builtins()
    return sorted(_REGISTRY)


def get_example(name: str) -> ExampleProgram:
    _load_builtins()
    canonical = _ALIASES.get(name, name)
    try:
        factory = _REGISTRY[canonical]
    except KeyError:
        raise ConfigurationError(f"unknown example {name!r}; see 'cobp list'") from None
    example = factory()
    example.name = canonical
    return example


_loaded = False


def _load_builtins() -> None:
    global _loaded
    if _loaded:
        return
    _loaded = True
    from . import building, gameoflife, hotcold, robot  # noqa: F401  (registration side effect)
