"""Planar fields, angular profiles, and text-format persistence.

Three kinds of evaluable scalar field on the unit disk:

* closed-form test fields (a callable with an exact gradient),
* homogeneous lifts  u(r, theta) = r^gamma * phi(theta)  built from a
  periodic :class:`AngularProfile`,
* raw grid samples on [-1, 1]^2 with finite-difference gradients.

Profiles are interpolated with a periodic Catmull-Rom cubic so evaluation is
C^1, which the glued circle profiles require.  Files use the versioned text
container ``NODALLAB v1`` with 17-significant-digit decimal samples, so a
save/load round trip is bit exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import ProblemParams

FORMAT_MAGIC = "NODALLAB"
FORMAT_VERSION = "v1"


class DomainError(ValueError):
    """Evaluation point outside the field's domain."""


class ParseError(ValueError):
    """Malformed NODALLAB file; message carries the offending line number."""


def _catmull_rom(values: np.ndarray, x: np.ndarray):
    """Periodic Catmull-Rom interpolation of uniform samples.

    ``x`` is in sample units (sample j sits at x=j); returns the interpolant
    and its derivative with respect to x.
    """
    n = len(values)
    x = np.asarray(x, dtype=float)
    j = np.floor(x).astype(int)
    s = x - j
    p0 = values[(j - 1) % n]
    p1 = values[j % n]
    p2 = values[(j + 1) % n]
    p3 = values[(j + 2) % n]
    # Catmull-Rom basis (tension 1/2)
    a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3
    b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3
    c = 0.5 * (p2 - p0)
    d = p1
    val = ((a * s + b) * s + c) * s + d
    der = (3.0 * a * s + 2.0 * b) * s + c
    return val, der


@dataclass
class AngularProfile:
    """2*pi-periodic function phi sampled on the uniform grid theta_j = 2*pi*j/n."""

    values: np.ndarray
    derivative: np.ndarray
    params: ProblemParams | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.derivative = np.asarray(self.derivative, dtype=float)
        if self.values.ndim != 1 or self.values.shape != self.derivative.shape:
            raise ValueError("values and derivative must be 1-d arrays of equal length")
        if len(self.values) < 16:
            raise ValueError("profile needs at least 16 samples")

    @property
    def n_theta(self) -> int:
        return len(self.values)

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    def __call__(self, theta):
        x = np.asarray(theta, dtype=float) * self.n_theta / (2.0 * np.pi)
        val, _ = _catmull_rom(self.values, x % self.n_theta)
        return val

    def prime(self, theta):
        x = np.asarray(theta, dtype=float) * self.n_theta / (2.0 * np.pi)
        val, _ = _catmull_rom(self.derivative, x % self.n_theta)
        return val

    def scale(self) -> float:
        return float(np.max(np.abs(self.values))) or 1.0

    @classmethod
    def from_callable(cls, f, fprime, n_theta=256, params=None):
        th = 2.0 * np.pi * np.arange(n_theta) / n_theta
        return cls(np.array([f(t) for t in th]), np.array([fprime(t) for t in th]), params)


class PlanarField:
    """Base interface: scalar value and gradient at points of the unit disk."""

    params: ProblemParams

    def __call__(self, x, y):
        raise NotImplementedError

    def grad(self, x, y):
        raise NotImplementedError

    def scale(self) -> float:
        """Crude magnitude estimate, used for relative tolerances."""
        th = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        v = self(0.7 * np.cos(th), 0.7 * np.sin(th))
        m = float(np.max(np.abs(v)))
        return m if m > 0 else 1.0


class ClosedFormField(PlanarField):
    """Test field from explicit value/gradient callables (vectorized over numpy arrays)."""

    def __init__(self, f, gradf, params=None, name="closed-form"):
        self.f = f
        self.gradf = gradf
        self.params = params if params is not None else ProblemParams(q=1.0, mu=0.0)
        self.name = name

    def __call__(self, x, y):
        return self.f(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def grad(self, x, y):
        return self.gradf(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


class HomogeneousField(PlanarField):
    """Homogeneous lift u = r^gamma * phi(theta) of an angular profile."""

    def __init__(self, gamma: float, profile: AngularProfile, params=None):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)
        self.profile = profile
        self.params = params or profile.params or ProblemParams(q=1.0, mu=0.0)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        return r**self.gamma * self.profile(th)

    def grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        phi = self.profile(th)
        dphi = self.profile.prime(th)
        with np.errstate(divide="ignore", invalid="ignore"):
            u_r = self.gamma * r ** (self.gamma - 1.0) * phi
            u_t_over_r = r ** (self.gamma - 1.0) * dphi
        # gradient vanishes at the origin whenever gamma > 1
        u_r = np.where(r > 0, u_r, 0.0)
        u_t_over_r = np.where(r > 0, u_t_over_r, 0.0)
        ct, st = np.cos(th), np.sin(th)
        return u_r * ct - u_t_over_r * st, u_r * st + u_t_over_r * ct

    def scale(self) -> float:
        return self.profile.scale()


class GridField(PlanarField):
    """Samples on the uniform n x n grid over [-1, 1]^2, bilinear evaluation.

    Gradients use central differences in the interior and second-order
    one-sided stencils at the boundary, then bilinear interpolation.
    """

    def __init__(self, values: np.ndarray, params=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("grid values must be a square 2-d array")
        self.values = values
        self.n = values.shape[0]
        self.h = 2.0 / (self.n - 1)
        self.params = params or ProblemParams(q=1.0, mu=0.0)
        self._gx = self._diff(values, axis=0)
        self._gy = self._diff(values, axis=1)

    def _diff(self, v, axis):
        g = np.gradient(v, self.h, axis=axis)
        # replace the first-order boundary rows with second-order one-sided stencils
        sl = [slice(None), slice(None)]

        def take(i):
            s = list(sl)
            s[axis] = i
            return v[tuple(s)]

        first = (-3.0 * take(0) + 4.0 * take(1) - take(2)) / (2.0 * self.h)
        last = (3.0 * take(-1) - 4.0 * take(-2) + take(-3)) / (2.0 * self.h)
        s0, s1 = list(sl), list(sl)
        s0[axis] = 0
        s1[axis] = -1
        g[tuple(s0)] = first
        g[tuple(s1)] = last
        return g

    def _bilinear(self, arr, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(x) > 1 + 1e-12) or np.any(np.abs(y) > 1 + 1e-12):
            raise DomainError("point outside the grid hull [-1,1]^2")
        fx = np.clip((x + 1.0) / self.h, 0, self.n - 1 - 1e-12)
        fy = np.clip((y + 1.0) / self.h, 0, self.n - 1 - 1e-12)
        i = fx.astype(int)
        j = fy.astype(int)
        sx = fx - i
        sy = fy - j
        v00 = arr[i, j]
        v10 = arr[i + 1, j]
        v01 = arr[i, j + 1]
        v11 = arr[i + 1, j + 1]
        return (
            v00 * (1 - sx) * (1 - sy)
            + v10 * sx * (1 - sy)
            + v01 * (1 - sx) * sy
            + v11 * sx * sy
        )

    def __call__(self, x, y):
        return self._bilinear(self.values, x, y)

    def grad(self, x, y):
        return self._bilinear(self._gx, x, y), self._bilinear(self._gy, x, y)

    @classmethod
    def sample(cls, f: PlanarField, n: int, params=None):
        xs = np.linspace(-1.0, 1.0, n)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        return cls(f(X, Y), params or f.params)


def monomial_field(d: int, phase: str = "cos") -> ClosedFormField:
    """Harmonic r^d cos(d theta) (the real part of z^d) or its sine companion."""
    if d < 1:
        raise ValueError("degree must be >= 1")

    if phase == "cos":
        f = lambda x, y: np.real((x + 1j * y) ** d)
    else:
        f = lambda x, y: np.imag((x + 1j * y) ** d)

    def gradf(x, y):
        dz = d * (x + 1j * y) ** (d - 1)
        if phase == "cos":
            return np.real(dz), -np.imag(dz)
        return np.imag(dz), np.real(dz)

    return ClosedFormField(f, gradf, ProblemParams(q=1.0, mu=0.0), name=f"monomial-{phase}-{d}")


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save(obj, path) -> None:
    """Write a profile or field to the NODALLAB v1 text container."""
    lines = []
    if isinstance(obj, AngularProfile):
        lines.append(f"{FORMAT_MAGIC} {FORMAT_VERSION} profile")
        lines += _params_lines(obj.params)
        lines.append(f"n_theta={obj.n_theta}")
        lines.append(" ".join(_fmt(v) for v in obj.values))
        lines.append(" ".join(_fmt(v) for v in obj.derivative))
    elif isinstance(obj, HomogeneousField):
        lines.append(f"{FORMAT_MAGIC} {FORMAT_VERSION} homogeneous")
        lines += _params_lines(obj.params)
        lines.append(f"gamma={_fmt(obj.gamma)}")
        lines.append(f"n_theta={obj.profile.n_theta}")
        lines.append(" ".join(_fmt(v) for v in obj.profile.values))
        lines.append(" ".join(_fmt(v) for v in obj.profile.derivative))
    elif isinstance(obj, GridField):
        lines.append(f"{FORMAT_MAGIC} {FORMAT_VERSION} grid")
        lines += _params_lines(obj.params)
        lines.append(f"n={obj.n}")
        for row in obj.values:
            lines.append(" ".join(_fmt(v) for v in row))
    else:
        raise TypeError(f"cannot save object of type {type(obj).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _params_lines(params):
    if params is None:
        return []
    return [
        f"q={_fmt(params.q)}",
        f"lambda_plus={_fmt(params.lambda_plus)}",
        f"lambda_minus={_fmt(params.lambda_minus)}",
        f"mu={_fmt(params.mu)}",
    ]


def _parse_floats(line: str, lineno: int, expected: int) -> np.ndarray:
    try:
        arr = np.array([float(t) for t in line.split()])
    except ValueError:
        raise ParseError(f"line {lineno}: malformed number")
    if len(arr) != expected:
        raise ParseError(f"line {lineno}: expected {expected} samples, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"line {lineno}: non-finite sample")
    return arr


def load(path):
    """Read a NODALLAB v1 file back into a profile or field."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise ParseError("line 1: empty file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != FORMAT_MAGIC:
        raise ParseError("line 1: bad header")
    if head[1] != FORMAT_VERSION:
        raise ParseError(f"line 1: unsupported version {head[1]!r}")
    kind = head[2]

    meta = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        key, _, val = lines[i].partition("=")
        meta[key.strip()] = val.strip()
        i += 1

    params = None
    if "q" in meta:
        try:
            params = ProblemParams(
                q=float(meta["q"]),
                lambda_plus=float(meta["lambda_plus"]),
                lambda_minus=float(meta["lambda_minus"]),
                mu=float(meta["mu"]),
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"line {i}: bad parameter block ({exc})")

    if kind in ("profile", "homogeneous"):
        try:
            n_theta = int(meta["n_theta"])
        except (KeyError, ValueError):
            raise ParseError(f"line {i}: missing n_theta")
        if i + 1 >= len(lines):
            raise ParseError(f"line {i + 1}: missing sample lines")
        values = _parse_floats(lines[i], i + 1, n_theta)
        deriv = _parse_floats(lines[i + 1], i + 2, n_theta)
        profile = AngularProfile(values, deriv, params)
        if kind == "profile":
            return profile
        try:
            gamma = float(meta["gamma"])
        except (KeyError, ValueError):
            raise ParseError("header: missing gamma for homogeneous field")
        return HomogeneousField(gamma, profile, params)
    if kind == "grid":
        try:
            n = int(meta["n"])
        except (KeyError, ValueError):
            raise ParseError(f"line {i}: missing n")
        if len(lines) - i < n:
            raise ParseError(f"line {len(lines)}: expected {n} sample rows")
        rows = [_parse_floats(lines[i + j], i + j + 1, n) for j in range(n)]
        return GridField(np.array(rows), params)
    raise ParseError(f"line 1: unknown kind {kind!r}")


@dataclass
class NodalSet:
    """Zero-set polyline segments plus detected singular points.

    Each segment is ((x1, y1), (x2, y2)); each singular point is
    (x, y, abs_u, abs_grad_u).
    """

    segments: list = field(default_factory=list)
    singular_points: list = field(default_factory=list)

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x1,y1,x2,y2\n")
            for (x1, y1), (x2, y2) in self.segments:
                fh.write(f"{_fmt(x1)},{_fmt(y1)},{_fmt(x2)},{_fmt(y2)}\n")
