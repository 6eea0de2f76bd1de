"""CSV and JSON formats used by the command line tool.

Grid functions are stored as two-column CSV (``offset,value``); the offsets
present define the support, which must be contiguous. Problem files are JSON
documents validated against :data:`PROBLEM_SCHEMA` before anything runs.
"""

from __future__ import annotations

import csv
import io
import json
import pathlib
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from mlgrid.errors import DomainError
from mlgrid.grid import Grid, GridFunction, Normalization, OrderClass, OrderFunction
from mlgrid.operators import Family, OperatorSpec, Side, Variant
from mlgrid.special import SeriesControl
from mlgrid.variational import QuadraticLagrangian, VariationalProblem


class SchemaError(ValueError):
    """A problem file does not match the schema."""


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return "%.17g" % x


# {{{ csv


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    text = buf.getvalue()
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        pathlib.Path(path).write_text(text)


def function_rows(f: GridFunction) -> list[tuple[int, float, float]]:
    return [(k, float(f.grid.point(k)), f.at(k)) for k in range(f.lo, f.hi + 1)]


def write_function(path, f: GridFunction) -> None:
    """Write ``offset,t,value`` rows on the support of *f*."""
    write_csv(path, ("offset", "t", "value"), function_rows(f))


def read_function_csv(path, grid: Grid) -> GridFunction:
    """Read ``offset,value`` (extra columns such as ``t`` are ignored)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "offset" not in rows[0] or "value" not in rows[0]:
        raise SchemaError(f"{path}: expected columns 'offset' and 'value'")
    offsets = [int(r["offset"]) for r in rows]
    values = [float(r["value"]) for r in rows]
    if offsets != list(range(offsets[0], offsets[0] + len(offsets))):
        raise SchemaError(f"{path}: offsets must be contiguous and increasing")
    return GridFunction.from_support(grid, values, offsets[0])


def read_order_csv(path, grid: Grid, clazz: OrderClass) -> OrderFunction:
    f = read_function_csv(path, grid)
    if f.support != (0, grid.n):
        raise SchemaError(f"{path}: an order must be given on every offset 0..{grid.n}")
    return OrderFunction(grid, f.defined, clazz)


# }}}


# {{{ problem files

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_COEFFICIENT = {"oneOf": [{"type": "number"}, _NUMBER_ARRAY]}
_FUNCTION = {"oneOf": [_NUMBER_ARRAY, {"type": "string"}]}

PROBLEM_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["grid", "order"],
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["a", "n"],
            "properties": {
                "a": {"type": "number"},
                "n": {"type": "integer", "minimum": 2},
            },
        },
        "order": {
            "type": "object",
            "additionalProperties": False,
            "required": ["class"],
            "properties": {
                "class": {"enum": [c.value for c in OrderClass]},
                "values": _FUNCTION,
                "constant": {"type": "number"},
            },
            "oneOf": [{"required": ["values"]}, {"required": ["constant"]}],
        },
        "normalization": {"enum": [m.value for m in Normalization]},
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["side", "family", "variant"],
            "properties": {
                "side": {"enum": [s.value for s in Side]},
                "family": {"enum": [f.value for f in Family]},
                "variant": {"enum": [v.value for v in Variant]},
            },
        },
        "functions": {
            "type": "object",
            "additionalProperties": False,
            "required": ["f"],
            "properties": {"f": _FUNCTION, "g": _FUNCTION},
        },
        "variational": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lagrangian", "A", "B"],
            "properties": {
                "lagrangian": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"const": "quadratic"},
                        "c1": _COEFFICIENT,
                        "c2": _COEFFICIENT,
                        "c3": _COEFFICIENT,
                        "c4": _COEFFICIENT,
                    },
                },
                "A": {"type": "number"},
                "B": {"type": "number"},
                "variant": {"enum": ["I", "II"]},
                "solver": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "method": {"enum": ["auto", "linear", "gradient"]},
                        "gradient": {"enum": ["auto", "exact", "fd"]},
                        "step": {"enum": ["bb", "armijo"]},
                        "max_iter": {"type": "integer", "minimum": 1},
                        "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "series": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "minimum": 0},
                "k_max": {"type": "integer", "minimum": 2},
                "k_min": {"type": "integer", "minimum": 1},
                "method": {"enum": ["recurrence", "series"]},
            },
        },
        "seed": {"type": "integer"},
    },
}


class Problem:
    """A validated problem file with its directory for resolving CSV paths."""

    def __init__(self, doc: dict, base: pathlib.Path = pathlib.Path(".")) -> None:
        validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise SchemaError(f"problem file invalid at {where}: {e.message}")
        self.doc = doc
        self.base = base

    @classmethod
    def load(cls, path) -> Problem:
        path = pathlib.Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
        return cls(doc, path.parent)

    def section(self, name: str) -> dict:
        if name not in self.doc:
            raise SchemaError(f"problem file has no '{name}' section")
        return self.doc[name]

    @property
    def grid(self) -> Grid:
        g = self.doc["grid"]
        return Grid(g["a"], g["n"])

    @property
    def norm(self) -> Normalization:
        return Normalization(self.doc.get("normalization", "unit"))

    @property
    def ctrl(self) -> SeriesControl:
        opts = {k: v for k, v in self.doc.get("series", {}).items() if k != "method"}
        return SeriesControl(**opts)

    @property
    def ml_method(self) -> str:
        return self.doc.get("series", {}).get("method", "recurrence")

    def order(self, grid: Grid | None = None) -> OrderFunction:
        grid = grid or self.grid
        o = self.doc["order"]
        clazz = OrderClass(o["class"])
        if "constant" in o:
            return OrderFunction.constant(grid, o["constant"], clazz)
        if isinstance(o["values"], str):
            return read_order_csv(self.base / o["values"], grid, clazz)
        return OrderFunction(grid, np.asarray(o["values"], dtype=np.float64), clazz)

    def function(self, name: str = "f") -> GridFunction:
        spec = self.section("functions").get(name)
        if spec is None:
            raise SchemaError(f"functions section has no '{name}'")
        if isinstance(spec, str):
            return read_function_csv(self.base / spec, self.grid)
        values = np.asarray(spec, dtype=np.float64)
        if values.size != self.grid.n + 1:
            raise DomainError(
                f"function '{name}' needs {self.grid.n + 1} values, got {values.size}"
            )
        return GridFunction(self.grid, values)

    def operator(self) -> OperatorSpec:
        op = self.section("operator")
        return OperatorSpec(
            Side(op["side"]), Family(op["family"]), Variant(op["variant"]),
            self.order(), self.norm, self.ctrl, self.ml_method,
        )

    def variational(self) -> VariationalProblem:
        v = self.section("variational")
        grid = self.grid
        lag = v["lagrangian"]
        coeffs = {}
        for key in ("c1", "c2", "c3", "c4"):
            c = np.asarray(lag.get(key, 0.0), dtype=np.float64)
            if c.ndim == 1 and c.size != grid.n + 1:
                raise DomainError(
                    f"tabulated coefficient {key} needs {grid.n + 1} values, got {c.size}"
                )
            coeffs[key] = c if c.ndim else float(c)
        return VariationalProblem(
            grid=grid,
            order=self.order(),
            lagrangian=QuadraticLagrangian(a=grid.a, **coeffs),
            A=v["A"],
            B=v["B"],
            variant=Variant(v.get("variant", "I")),
            norm=self.norm,
            ctrl=self.ctrl,
            ml_method=self.ml_method,
        )

    def solver_options(self) -> dict:
        return dict(self.section("variational").get("solver", {}))


def dump_json(path, obj) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        pathlib.Path(path).write_text(text)


# }}}
