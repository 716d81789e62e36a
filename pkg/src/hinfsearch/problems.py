"""Problem ingestion, serialization, and the random instance recipe.

A problem file is a JSON object with row-major nested arrays:

    {
      "A": [[...], ...],        required, n_x x n_x
      "B": [[...], ...],        required, n_x x n_u
      "Q": [[...], ...],        required, symmetric positive definite
      "R": [[...], ...],        required, symmetric positive definite
      "K0": [[...], ...],       optional starting gain, n_u x n_x
      "J_star": 7.3475          optional known optimal value
    }

All numbers are decimal; ragged arrays are rejected.  Two desk-scale
instances ship with the package (``example13``, ``exampleD1``) so
benchmark runs do not depend on hand transcription.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import GenerationError, ProblemFormatError
from .systems import Plant, is_stabilizing, spectral_radius

BUNDLED = ("example13", "exampleD1")


@dataclass(frozen=True)
class Problem:
    plant: Plant
    K0: np.ndarray | None = None
    J_star: float | None = None
    name: str = ""


def _parse_matrix(obj, field: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ProblemFormatError(f"field {field!r} must be a non-empty "
                                 f"list of rows")
    widths = set()
    for row in obj:
        if not isinstance(row, list) or not row:
            raise ProblemFormatError(f"field {field!r} must contain "
                                     f"non-empty rows")
        widths.add(len(row))
        for x in row:
            if not isinstance(x, (int, float)) or isinstance(x, bool):
                raise ProblemFormatError(f"field {field!r} has a "
                                         f"non-numeric entry: {x!r}")
    if len(widths) != 1:
        raise ProblemFormatError(f"field {field!r} is ragged: row widths "
                                 f"{sorted(widths)}")
    return np.array(obj, dtype=float)


def problem_from_dict(doc: dict, name: str = "") -> Problem:
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem document must be a JSON object")
    for field in ("A", "B", "Q", "R"):
        if field not in doc:
            raise ProblemFormatError(f"missing required field {field!r}")
    A = _parse_matrix(doc["A"], "A")
    B = _parse_matrix(doc["B"], "B")
    Q = _parse_matrix(doc["Q"], "Q")
    R = _parse_matrix(doc["R"], "R")
    try:
        plant = Plant(A=A, B=B, Q=Q, R=R)
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from exc
    K0 = None
    if doc.get("K0") is not None:
        K0 = _parse_matrix(doc["K0"], "K0")
        if K0.shape != (plant.n_u, plant.n_x):
            raise ProblemFormatError(
                f"field 'K0' must be {plant.n_u}x{plant.n_x}, "
                f"got {K0.shape[0]}x{K0.shape[1]}")
    J_star = None
    if doc.get("J_star") is not None:
        if not isinstance(doc["J_star"], (int, float)):
            raise ProblemFormatError("field 'J_star' must be a number")
        J_star = float(doc["J_star"])
    return Problem(plant=plant, K0=K0, J_star=J_star, name=name)


def problem_to_dict(problem: Problem) -> dict:
    doc = {
        "A": problem.plant.A.tolist(),
        "B": problem.plant.B.tolist(),
        "Q": problem.plant.Q.tolist(),
        "R": problem.plant.R.tolist(),
    }
    if problem.K0 is not None:
        doc["K0"] = np.asarray(problem.K0).tolist()
    if problem.J_star is not None:
        doc["J_star"] = problem.J_star
    return doc


def load_problem(source) -> Problem:
    """Load a problem from a bundled name or a file path."""
    if isinstance(source, str) and source in BUNDLED:
        text = (resources.files("hinfsearch") / "data"
                / f"{source}.json").read_text()
        return problem_from_dict(json.loads(text), name=source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFormatError(f"cannot read problem file {path}: "
                                 f"{exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"problem file {path} is not valid JSON: "
                                 f"{exc}") from exc
    return problem_from_dict(doc, name=path.stem)


def save_problem(problem: Problem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=1)
                          + "\n")


def gen_random_problem(n_x: int, n_u: int, seed: int,
                       max_scales: int = 14,
                       attempts_per_scale: int = 10000):
    """Random instance: A = I + xi with entries of xi uniform on [0, 1],
    B uniform on [0, 1], Q = (1 + zeta) I with zeta uniform on [0, 0.1],
    R uniform on [1, 1.5] for one input or (1 + upsilon) I with upsilon
    uniform on [0, 0.5] otherwise.

    The starting gain is found by rejection: entries uniform on [0, 1]
    scaled by s in {1, 2, 4, ...}, first stabilizing draw wins, at most
    `attempts_per_scale` draws per scale.  Returns (Problem, attempts).
    """
    if n_x < 1 or n_u < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    A = np.eye(n_x) + rng.uniform(0.0, 1.0, (n_x, n_x))
    B = rng.uniform(0.0, 1.0, (n_x, n_u))
    Q = (1.0 + rng.uniform(0.0, 0.1)) * np.eye(n_x)
    if n_u == 1:
        R = np.array([[rng.uniform(1.0, 1.5)]])
    else:
        R = (1.0 + rng.uniform(0.0, 0.5)) * np.eye(n_u)
    plant = Plant(A=A, B=B, Q=Q, R=R)

    attempts = 0
    scale = 1.0
    for _ in range(max_scales):
        for _ in range(attempts_per_scale):
            attempts += 1
            K0 = scale * rng.uniform(0.0, 1.0, (n_u, n_x))
            if spectral_radius(A - B @ K0) < 1.0:
                prob = Problem(plant=plant, K0=K0,
                               name=f"random-{n_x}x{n_u}-seed{seed}")
                return prob, attempts
        scale *= 2.0
    raise GenerationError(
        f"no stabilizing K0 within {max_scales} scales x "
        f"{attempts_per_scale} attempts (seed {seed}); re-seed")
