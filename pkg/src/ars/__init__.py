"""Internet audience response system: authoring, live answering windows,
exact tabulation, event-sourced persistence, HTTP API and load simulator."""

from ars.engine import Engine
from ars.model import ChoiceKind, GroupState, Visibility

__all__ = ["Engine", "ChoiceKind", "GroupState", "Visibility"]
