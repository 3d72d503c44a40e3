"""Finite evaluation models.

A model fixes the entity domain, predicate extensions, and the initial
assignment (for the reader effect) and discourse state (for the state
effect).  Entity declaration order doubles as the total order used by the
deterministic choice handler.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class Model:
    entities: tuple = ()
    predicates: dict = field(default_factory=dict)  # (name, arity) -> frozenset of tuples
    initial_assignment: tuple = ()
    initial_state: tuple = ()

    def __post_init__(self):
        declared = set(self.entities)
        if len(declared) != len(self.entities):
            raise ModelError("duplicate entity declaration")
        for (name, arity), ext in self.predicates.items():
            for row in ext:
                if len(row) != arity:
                    raise ModelError(f"predicate {name}: tuple {row} does not match arity {arity}")
                for e in row:
                    if e not in declared:
                        raise ModelError(f"predicate {name}: undeclared entity {e}")
        for e in (*self.initial_assignment, *self.initial_state):
            if e not in declared:
                raise ModelError(f"undeclared entity {e} in assignment/state")

    def entity_index(self, name: str) -> int:
        try:
            return self.entities.index(name)
        except ValueError:
            raise ModelError(f"undeclared entity {name}") from None

    def extension(self, name: str, arity: int):
        try:
            return self.predicates[(name, arity)]
        except KeyError:
            for (other, a) in self.predicates:
                if other == name:
                    raise ModelError(
                        f"predicate {name} used with arity {arity} but declared with {a}") from None
            raise ModelError(f"predicate {name} is not declared in the model") from None
