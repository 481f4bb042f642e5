"""
estimator_repository.py - Reads and writes estimator files.

Format (one record per line, whitespace separated)::

    # lios estimator v1
    alpha 1.0
    uniform 0
    objects apple bowl ...
    containers bed cabinet ...
    rooms bathroom bedroom ...
    table 3
    apple countertop kitchen 3 10
    ...
    end

The ``table`` row count lets a truncated file be detected and reported with
the line where the data stopped.
"""

from pathlib import Path

from src.exceptions import EstimatorParseError
from src.services.estimator_service import Estimator

ESTIMATOR_HEADER = "# lios estimator v1"


def format_estimator(est: Estimator) -> str:
    lines = [
        ESTIMATOR_HEADER,
        f"alpha {est.alpha!r}",
        f"uniform {int(est.uniform)}",
        " ".join(["objects", *est.object_types]),
        " ".join(["containers", *est.container_types]),
        " ".join(["rooms", *est.room_types]),
        f"table {len(est.counts)}",
    ]
    for (obj, container, room), (positives, total) in sorted(est.counts.items()):
        lines.append(f"{obj} {container} {room} {positives} {total}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_estimator(text: str) -> Estimator:
    """Parse an estimator file.

    Raises:
        EstimatorParseError: malformed or truncated text (1-based ``line``).
        EstimatorValidationError: counts with ``positives > total``.
    """
    lines = text.splitlines()

    def line_at(number: int, what: str) -> str:
        if number > len(lines):
            raise EstimatorParseError(f"file ends before {what}", number)
        return lines[number - 1].strip()

    def keyword(number: int, key: str) -> list[str]:
        fields = line_at(number, f"'{key}'").split()
        if not fields or fields[0] != key:
            raise EstimatorParseError(f"expected '{key}'", number)
        return fields[1:]

    if line_at(1, "header") != ESTIMATOR_HEADER:
        raise EstimatorParseError(f"first line must be {ESTIMATOR_HEADER!r}", 1)
    try:
        alpha = float(_single(keyword(2, "alpha"), 2))
        uniform = _single(keyword(3, "uniform"), 3) == "1"
    except ValueError:
        raise EstimatorParseError("alpha must be a number", 2)
    object_types = tuple(keyword(4, "objects"))
    container_types = tuple(keyword(5, "containers"))
    room_types = tuple(keyword(6, "rooms"))
    try:
        n_rows = int(_single(keyword(7, "table"), 7))
    except ValueError:
        raise EstimatorParseError("table row count must be an integer", 7)

    counts: dict[tuple[str, str, str], tuple[int, int]] = {}
    for number in range(8, 8 + n_rows):
        fields = line_at(number, f"table row {number - 7} of {n_rows}").split()
        if len(fields) != 5:
            raise EstimatorParseError("table row needs: object container room positives total", number)
        try:
            positives, total = int(fields[3]), int(fields[4])
        except ValueError:
            raise EstimatorParseError("counts must be integers", number)
        counts[(fields[0], fields[1], fields[2])] = (positives, total)
    if line_at(8 + n_rows, "'end'") != "end":
        raise EstimatorParseError("expected 'end' after the table", 8 + n_rows)

    return Estimator(
        counts=counts,
        alpha=alpha,
        object_types=object_types,
        container_types=container_types,
        room_types=room_types,
        uniform=uniform,
    )


def _single(fields: list[str], number: int) -> str:
    if len(fields) != 1:
        raise EstimatorParseError("expected exactly one value", number)
    return fields[0]


def save_estimator(est: Estimator, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_estimator(est), encoding="utf-8")
    return path


def load_estimator(path: Path | str) -> Estimator:
    return parse_estimator(Path(path).read_text(encoding="utf-8"))
