"""
estimator_service.py - Count-based P_found estimator.

The estimator answers "how likely is an object of type ``o`` inside a
container of type ``c`` standing in a room of type ``r``?" from counts over a
corpus of generated worlds:

    positives(o, c, r) = container instances of type c in rooms of type r
                         that hold at least one object of type o
    total(o, c, r)     = container instances of type c in rooms of type r

    p_found = (positives + alpha) / (total + 2 * alpha)

Laplace smoothing keeps every answer strictly inside (0, 1); a triple never
seen in training answers exactly 1/2.

Time Complexity:
    train():   O(W * C * T) for W worlds, C containers each, T object types
    p_found(): O(1) dict lookup
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from loguru import logger

from src.exceptions import EstimatorValidationError, TrainingError
from src.models import WorldModel

Triple = tuple[str, str, str]


@dataclass
class Estimator:
    """
    Smoothed counts per ``(object_type, container_type, room_type)``.

    Attributes:
        counts (dict[Triple, tuple[int, int]]): ``(positives, total)`` per triple
        alpha (float): Laplace smoothing strength, > 0
        object_types, container_types, room_types (tuple[str, ...]):
            Vocabularies seen in training, sorted
        uniform (bool): If True every query answers 1/2 (ablation)
    """

    counts: dict[Triple, tuple[int, int]] = field(default_factory=dict)
    alpha: float = 1.0
    object_types: tuple[str, ...] = ()
    container_types: tuple[str, ...] = ()
    room_types: tuple[str, ...] = ()
    uniform: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Raise ``EstimatorValidationError`` if the table breaks an invariant."""
        if not self.alpha > 0:
            raise EstimatorValidationError(f"alpha must be positive, got {self.alpha}")
        for triple, (positives, total) in self.counts.items():
            if positives < 0 or total < 0:
                raise EstimatorValidationError(f"negative count for {triple}")
            if positives > total:
                raise EstimatorValidationError(
                    f"positives {positives} exceed total {total} for {' '.join(triple)}"
                )

    @classmethod
    def uniform_estimator(cls, alpha: float = 1.0) -> "Estimator":
        """Uninformative estimator: every container is equally likely."""
        return cls(alpha=alpha, uniform=True)

    def p_found(self, object_type: str, container_type: str, room_type: str) -> float:
        """Smoothed probability that ``object_type`` is in such a container.

        Unknown types fall back to the unseen-triple value 1/2.
        """
        if self.uniform:
            return 0.5
        positives, total = self.counts.get((object_type, container_type, room_type), (0, 0))
        return (positives + self.alpha) / (total + 2.0 * self.alpha)

    def add_example(self, object_type: str, container_type: str, room_type: str, found: bool) -> None:
        """Count one more container instance, positive if ``found``."""
        key = (object_type, container_type, room_type)
        positives, total = self.counts.get(key, (0, 0))
        self.counts[key] = (positives + int(found), total + 1)


def train(worlds: Iterable[WorldModel], alpha: float = 1.0) -> Estimator:
    """
    Count container/object co-occurrences over ``worlds``.

    Every container instance contributes one example per object type in the
    corpus vocabulary, positive when it holds an object of that type.

    Raises:
        TrainingError: empty corpus or a corpus without containers / objects.
    """
    worlds = list(worlds)
    if not worlds:
        raise TrainingError("cannot train on an empty corpus")

    object_types = sorted({o.type_name for w in worlds for o in w.objects})
    container_types = sorted({c.type_name for w in worlds for c in w.containers})
    room_types = sorted({c.room_type for w in worlds for c in w.containers})
    if not object_types or not container_types:
        raise TrainingError("corpus has no objects or no containers")

    est = Estimator(
        alpha=alpha,
        object_types=tuple(object_types),
        container_types=tuple(container_types),
        room_types=tuple(room_types),
    )
    for world in worlds:
        for container in world.containers:
            present = {world.object(oid).type_name for oid in world.objects_in(container.id)}
            for object_type in object_types:
                est.add_example(object_type, container.type_name, container.room_type, object_type in present)

    logger.info(
        f"trained estimator on {len(worlds)} worlds: {len(est.counts)} triples, "
        f"{len(object_types)} object types"
    )
    return est
