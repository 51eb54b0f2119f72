"""Rosenbrock tableau loading and validation.

Coefficients live in flat text files, one record per line, with exact
decimal or rational values::

    s 4
    order 4
    embedded_order 3
    gamma 1/2
    alpha 2 1 1
    gamma_lower 2 1 -2
    b 1 8/27
    b_hat 1 16/27

alpha/gamma_lower records are "name i j value" with 1-based stage indices
and i > j (strict lower triangle); b/b_hat records are "name i value".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

DEFAULT_TABLEAU_RESOURCE = "ros4s.tab"


class TableauError(ValueError):
    """A coefficient file is malformed or violates the tableau invariants."""


@dataclass(frozen=True)
class Tableau:
    """Coefficients of an s-stage Rosenbrock-type method.

    alpha and gamma_lower are strictly lower triangular; gamma is the
    shared diagonal of the gamma matrix.  b are the solution weights and
    b_hat the embedded (error estimator) weights of order embedded_order.
    """

    s: int
    alpha: np.ndarray
    gamma_lower: np.ndarray
    gamma: float
    b: np.ndarray
    b_hat: np.ndarray
    order: int
    embedded_order: int
    name: str = "tableau"

    _gamma_full: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_gamma_full", self.gamma_lower + self.gamma * np.eye(self.s))

    @property
    def gamma_full(self) -> np.ndarray:
        """Lower-triangular gamma matrix including the diagonal."""
        return self._gamma_full

    @property
    def beta(self) -> np.ndarray:
        """alpha + gamma_full, the matrix entering the classical stability function."""
        return self.alpha + self.gamma_full

    def validate(self) -> None:
        for name, mat in (("alpha", self.alpha), ("gamma_lower", self.gamma_lower)):
            if mat.shape != (self.s, self.s):
                raise TableauError(f"{name} must be {self.s}x{self.s}")
            if np.any(np.triu(mat) != 0.0):
                raise TableauError(f"{name} must be strictly lower triangular")
        if self.gamma <= 0.0:
            raise TableauError("gamma must be positive")
        if self.b.shape != (self.s,) or self.b_hat.shape != (self.s,):
            raise TableauError("b and b_hat must have one weight per stage")
        if np.array_equal(self.b, self.b_hat):
            raise TableauError("embedded weights must differ from the solution weights")
        if not (self.order >= 1 and self.embedded_order >= 1):
            raise TableauError("orders must be positive")
        for name, arr in (("alpha", self.alpha), ("gamma_lower", self.gamma_lower),
                          ("b", self.b), ("b_hat", self.b_hat)):
            if not np.all(np.isfinite(arr)):
                raise TableauError(f"{name} contains non-finite entries")


def _parse_value(token: str) -> float:
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError) as exc:
        raise TableauError(f"cannot parse coefficient value {token!r}") from exc


def parse_tableau(text: str, name: str = "tableau") -> Tableau:
    scalars: dict[str, float] = {}
    matrix_records: dict[str, list[tuple[int, int, float]]] = {"alpha": [], "gamma_lower": []}
    vector_records: dict[str, dict[int, float]] = {"b": {}, "b_hat": {}}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key in ("s", "order", "embedded_order"):
                scalars[key] = int(parts[1])
            elif key == "gamma":
                scalars[key] = _parse_value(parts[1])
            elif key in matrix_records:
                i, j = int(parts[1]), int(parts[2])
                matrix_records[key].append((i, j, _parse_value(parts[3])))
            elif key in vector_records:
                vector_records[key][int(parts[1])] = _parse_value(parts[2])
            else:
                raise TableauError(f"unknown record {key!r}")
        except (IndexError, ValueError) as exc:
            raise TableauError(f"line {lineno}: malformed record {raw!r}") from exc

    for req in ("s", "order", "embedded_order", "gamma"):
        if req not in scalars:
            raise TableauError(f"missing required record {req!r}")
    s = int(scalars["s"])
    if s < 1:
        raise TableauError("stage count must be >= 1")

    mats = {}
    for mname, records in matrix_records.items():
        mat = np.zeros((s, s))
        for i, j, val in records:
            if not (1 <= j < i <= s):
                raise TableauError(f"{mname} index ({i},{j}) outside the strict lower triangle")
            mat[i - 1, j - 1] = val
        mats[mname] = mat
    vecs = {}
    for vname, records in vector_records.items():
        vec = np.zeros(s)
        for i, val in records.items():
            if not 1 <= i <= s:
                raise TableauError(f"{vname} index {i} out of range")
            vec[i - 1] = val
        vecs[vname] = vec
    if not vector_records["b_hat"]:
        raise TableauError("tableau lacks embedded weights (b_hat); the error controller requires them")

    tab = Tableau(
        s=s,
        alpha=mats["alpha"],
        gamma_lower=mats["gamma_lower"],
        gamma=float(scalars["gamma"]),
        b=vecs["b"],
        b_hat=vecs["b_hat"],
        order=int(scalars["order"]),
        embedded_order=int(scalars["embedded_order"]),
        name=name,
    )
    tab.validate()
    return tab


def load_tableau(path) -> Tableau:
    """Load and validate a tableau coefficient file."""
    path = Path(path)
    return parse_tableau(path.read_text(), name=path.stem)


def default_tableau() -> Tableau:
    """The packaged 4(3) Rosenbrock tableau."""
    text = resources.files("rok").joinpath("tableaus", DEFAULT_TABLEAU_RESOURCE).read_text()
    return parse_tableau(text, name="ros4s")
