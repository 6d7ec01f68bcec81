"""JSON problem configuration (schema ``ncvem-config/1``).

Example::

    {
      "schema": "ncvem-config/1",
      "k": 1,
      "coefficients": {"K11": "1", "K12": "0", "K22": "1", "beta1": "1", "beta2": "1", "c": "1"},
      "data": {"f": "2*pi^2*sin(pi*x)*sin(pi*y)", "g": "0"},
      "manufactured": {"u": "sin(pi*x)*sin(pi*y)", "ux": "...", "uy": "..."},
      "mesh": {"family": "quad", "n": 8},
      "rho": 0.1
    }

Coefficient strings must be polynomials; data strings may use sin/cos/exp.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ConfigError
from .expr import ExprSyntaxError, Function2, NonPolynomialError, parse_polynomial
from .forms import CoefficientField
from .mesh import MeshError, PolygonalMesh, read_poly2
from .meshgen import FAMILIES, builtin_mesh
from .postproc import ManufacturedProblem

SCHEMA = "ncvem-config/1"
COEFFICIENT_KEYS = ("K11", "K12", "K22", "beta1", "beta2", "c")
COEFFICIENT_DEFAULTS = {"K11": "1", "K12": "0", "K22": "1", "beta1": "0", "beta2": "0", "c": "0"}


@dataclass
class MeshSource:
    file: Optional[str] = None
    family: Optional[str] = None
    n: int = 4

    def load(self, base: Path | None = None) -> PolygonalMesh:
        if self.file is not None:
            path = Path(self.file)
            if base is not None and not path.is_absolute():
                path = base / path
            return read_poly2(path)
        if self.family not in FAMILIES:
            raise MeshError(f"unknown mesh family {self.family!r}; expected one of {FAMILIES}")
        return builtin_mesh(self.family, self.n)


@dataclass
class ProblemConfig:
    k: int = 1
    coefficients: Dict[str, str] = field(default_factory=lambda: dict(COEFFICIENT_DEFAULTS))
    f: str = "0"
    g: str = "0"
    manufactured: Optional[Dict[str, str]] = None
    mesh: MeshSource = field(default_factory=lambda: MeshSource(family="quad", n=4))
    data_degree: Optional[int] = None
    rho: float = 0.1
    c0: float = 0.0
    eta: Optional[float] = None
    xi: Optional[float] = None
    check_c0: bool = True
    coercivity: bool = True
    base_dir: Optional[Path] = None

    def __post_init__(self):
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
            raise ConfigError(f"order k must be an integer >= 1, got {self.k!r}")
        if not 0 < self.rho < 1:
            raise ConfigError(f"rho must lie in (0, 1), got {self.rho!r}")
        if self.data_degree is not None and self.data_degree < 0:
            raise ConfigError("quadrature.data_degree must be >= 0")
        if self.manufactured is not None:
            missing = {"u", "ux", "uy"} - set(self.manufactured)
            if missing:
                raise ConfigError(f"manufactured solution lacks {sorted(missing)}")
        # parse everything eagerly so bad input fails before any assembly
        self.coefficient_field()
        self._function(self.f, "data.f")
        self._function(self.g, "data.g")
        for key, text in (self.manufactured or {}).items():
            self._function(text, f"manufactured.{key}")

    # ------------------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: Dict[str, Any], base_dir: Path | None = None) -> "ProblemConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        schema = raw.get("schema")
        if schema != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}; expected {SCHEMA!r}")
        known = {"schema", "k", "coefficients", "data", "manufactured", "mesh", "quadrature", "bounds", "solver", "rho"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        coeffs = dict(COEFFICIENT_DEFAULTS)
        given = raw.get("coefficients", {})
        bad = set(given) - set(COEFFICIENT_KEYS)
        if bad:
            raise ConfigError(f"unknown coefficient slots {sorted(bad)}")
        coeffs.update({k: str(v) for k, v in given.items()})
        data = raw.get("data", {})
        mesh_raw = raw.get("mesh", {"family": "quad", "n": 4})
        if "file" in mesh_raw and "family" in mesh_raw:
            raise ConfigError("mesh: give either 'file' or 'family', not both")
        mesh = MeshSource(mesh_raw.get("file"), mesh_raw.get("family"), int(mesh_raw.get("n", 4)))
        if mesh.file is None and mesh.family is None:
            raise ConfigError("mesh: need 'file' or 'family'")
        bounds = raw.get("bounds", {})
        solver = raw.get("solver", {})
        manufactured = raw.get("manufactured")
        return cls(
            k=raw.get("k", 1),
            coefficients=coeffs,
            f=str(data.get("f", "0")),
            g=str(data.get("g", "0")),
            manufactured={k: str(v) for k, v in manufactured.items()} if manufactured else None,
            mesh=mesh,
            data_degree=raw.get("quadrature", {}).get("data_degree"),
            rho=float(raw.get("rho", 0.1)),
            c0=float(bounds.get("c0", 0.0)),
            eta=bounds.get("eta"),
            xi=bounds.get("xi"),
            check_c0=bool(bounds.get("check_c0", True)),
            coercivity=bool(solver.get("coercivity", True)),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path) -> "ProblemConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    # ------------------------------------------------------------------
    @staticmethod
    def _function(text: str, slot: str) -> Function2:
        try:
            return Function2(text)
        except ExprSyntaxError as exc:
            raise ConfigError(f"{slot}: {exc}") from exc

    def coefficient_field(self) -> CoefficientField:
        polys = {}
        for key in COEFFICIENT_KEYS:
            text = self.coefficients[key]
            try:
                polys[key] = parse_polynomial(text)
            except ExprSyntaxError as exc:
                raise ConfigError(f"coefficients.{key}: {exc}") from exc
            except NonPolynomialError as exc:
                raise ConfigError(f"coefficients.{key}: {exc}") from exc
        return CoefficientField(
            polys["K11"], polys["K12"], polys["K22"], polys["beta1"], polys["beta2"], polys["c"],
            c0=self.c0 if self.check_c0 else float("-inf"), eta=self.eta, xi=self.xi,
        )

    @property
    def f_func(self) -> Function2:
        return self._function(self.f, "data.f")

    @property
    def g_func(self) -> Function2:
        return self._function(self.g, "data.g")

    def manufactured_problem(self) -> ManufacturedProblem:
        if self.manufactured is None:
            raise ConfigError("this command needs a 'manufactured' block with u, ux, uy")
        m = {k: self._function(v, f"manufactured.{k}") for k, v in self.manufactured.items()}
        return ManufacturedProblem(self.coefficient_field(), self.f_func, self.g_func, m["u"], m["ux"], m["uy"])

    def load_mesh(self, override=None) -> PolygonalMesh:
        if override is not None:
            return read_poly2(override)
        return self.mesh.load(self.base_dir)
