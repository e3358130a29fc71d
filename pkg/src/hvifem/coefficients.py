"""Coefficient fields, the problem registry and ellipticity estimates."""
import configparser
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, EllipticityError, InvalidArgumentError, ProblemLookupError
from .expr import Expr, eval_expr, parse_expr, scale
from .nonsmooth import PotentialParams

CHECK_GRID = 33
THETA_GRID = 129


def _as_expr(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return parse_expr(repr(float(value)))
    return parse_expr(value)


@dataclass(frozen=True)
class ProblemSpec:
    """Data of L u = -div(A grad u) + a0 u together with both potentials.

    ``tensor`` is ((a11, a12), (a21, a22)).
    """

    name: str
    tensor: tuple
    reaction: Expr
    source: Expr
    interior_potential: PotentialParams
    boundary_potential: PotentialParams

    @classmethod
    def from_strings(cls, name, a11, a12, a21, a22, a0, f0, j1, j2):
        return cls(name=name,
                   tensor=((_as_expr(a11), _as_expr(a12)), (_as_expr(a21), _as_expr(a22))),
                   reaction=_as_expr(a0), source=_as_expr(f0),
                   interior_potential=j1, boundary_potential=j2)

    def tensor_at(self, x, y):
        """Array of shape ``broadcast(x, y).shape + (2, 2)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        out = np.empty(shape + (2, 2))
        for i in range(2):
            for j in range(2):
                out[..., i, j] = eval_expr(self.tensor[i][j], x, y)
        return out

    def reaction_at(self, x, y):
        return _broadcast_eval(self.reaction, x, y)

    def source_at(self, x, y):
        return _broadcast_eval(self.source, x, y)

    def scaled(self, factor):
        """Same problem with the diffusion tensor multiplied by ``factor``."""
        t = tuple(tuple(scale(e, factor) for e in row) for row in self.tensor)
        return replace(self, tensor=t)

    def with_potentials(self, interior=None, boundary=None):
        return replace(self,
                       interior_potential=interior or self.interior_potential,
                       boundary_potential=boundary or self.boundary_potential)

    def validate(self, grid=CHECK_GRID):
        """Check symmetry, a0 >= 0, finiteness and positive ellipticity."""
        x, y = _sample_grid(grid)
        a = self.tensor_at(x, y)
        if not np.allclose(a[..., 0, 1], a[..., 1, 0], rtol=0.0, atol=1e-14):
            raise InvalidArgumentError(f"problem {self.name!r}: a12 and a21 differ")
        if np.any(self.reaction_at(x, y) < 0):
            raise InvalidArgumentError(f"problem {self.name!r}: reaction a0 is negative")
        self.source_at(x, y)
        estimate_theta(self, grid)
        return self


def _broadcast_eval(expr, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    value = eval_expr(expr, x, y)
    return np.broadcast_to(value, np.broadcast(x, y).shape).astype(float)


def _sample_grid(n):
    s = np.linspace(0.0, 1.0, n)
    gx, gy = np.meshgrid(s, s)
    return gx.ravel(), gy.ravel()


def smallest_eigenvalue_2x2(a):
    """Smaller eigenvalue of symmetric 2x2 matrices stacked on the last axes."""
    tr = a[..., 0, 0] + a[..., 1, 1]
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    return 0.5 * (tr - disc)


def estimate_theta(spec, grid=THETA_GRID):
    """Minimum over a ``grid x grid`` sample of the smaller tensor eigenvalue."""
    if grid < 2:
        raise InvalidArgumentError(f"grid must be >= 2, got {grid}")
    x, y = _sample_grid(grid)
    theta = float(np.min(smallest_eigenvalue_2x2(spec.tensor_at(x, y))))
    if not theta > 0:
        raise EllipticityError(
            f"problem {spec.name!r} is not uniformly elliptic (theta estimate {theta:g})")
    return theta


EXAMPLE2_SOURCE = (
    "(12*pi^2*sin(2*pi*y)+sin(2*pi*y)-2*pi*y*cos(2*pi*y))*sin(2*pi*x)"
    "-(2*pi*x*sin(2*pi*y)+8*pi^2*x*y*cos(2*pi*y))*cos(2*pi*x)"
)

_REGISTRY = {}


def register_problem(spec, replace_existing=False):
    spec.validate()
    if spec.name in _REGISTRY and not replace_existing:
        raise InvalidArgumentError(f"problem {spec.name!r} is already registered")
    _REGISTRY[spec.name] = spec
    return spec


def registered_problems():
    return sorted(_REGISTRY)


def get_problem(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ProblemLookupError(name, registered_problems()) from None


def _builtin():
    j1 = PotentialParams(1.0, 1.0)
    j2 = PotentialParams(0.5, 0.5)
    register_problem(ProblemSpec.from_strings(
        "example1", "2", "1", "1", "1", "0", "-40*sin(2*pi*x)*exp(2*y)", j1, j2))
    register_problem(ProblemSpec.from_strings(
        "example2", "1", "x*y", "x*y", "10", "1", EXAMPLE2_SOURCE, j1, j2))


_builtin()


def parse_potential(text, selection="left"):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ConfigError(f"potential must be given as '<a>,<b>', got {text!r}")
    try:
        a, b = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"potential must be given as '<a>,<b>', got {text!r}") from None
    return PotentialParams(a, b, selection)


_PROBLEM_KEYS = ("a11", "a12", "a21", "a22", "a0", "f0", "j1", "j2")


def read_config(path):
    """Parse a problem/solver/study config file into a ConfigParser."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parser


def problems_from_config(parser, selection="left"):
    """Build (but do not register) every ``[problem <name>]`` section."""
    specs = []
    for section in parser.sections():
        head, _, name = section.partition(" ")
        if head != "problem":
            continue
        name = name.strip()
        if not name:
            raise ConfigError(f"section [{section}] needs a problem name")
        sec = parser[section]
        unknown = set(sec) - set(_PROBLEM_KEYS)
        if unknown:
            raise ConfigError(f"[{section}]: unknown keys {sorted(unknown)}")
        missing = [k for k in _PROBLEM_KEYS if k not in sec]
        if missing:
            raise ConfigError(f"[{section}]: missing keys {missing}")
        specs.append(ProblemSpec.from_strings(
            name, sec["a11"], sec["a12"], sec["a21"], sec["a22"], sec["a0"], sec["f0"],
            parse_potential(sec["j1"], selection), parse_potential(sec["j2"], selection)))
    return specs


def load_problem_config(path, selection="left", replace_existing=True):
    """Register every problem of a config file; returns their names."""
    parser = read_config(path)
    if parser.has_option("solver", "selection_at_zero"):
        selection = parser.get("solver", "selection_at_zero")
    names = []
    for spec in problems_from_config(parser, selection):
        register_problem(spec, replace_existing=replace_existing)
        names.append(spec.name)
    return names

