"""Similarity kernels over magnification pairs and their transfer potentials.

Magnifications are measured in microns per pixel (mpp). A kernel K(x, y)
scores how strongly training at magnification x benefits magnification y.
Its transfer potential over a range [a, b],

    tp(x) = integral of K(x, y) dy over [a, b],

is the aggregate benefit of one sample taken at x. Built-in kernels have
closed-form potentials; tabulated kernels are integrated by composite
trapezoid quadrature on their own grid, which is exact for the bilinear
interpolant they define.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError, ParameterError, RangeError

#: Interval count for quadrature fallbacks on kernels without a closed form.
DEFAULT_QUADRATURE_INTERVALS = 1000


@dataclass(frozen=True)
class MagRange:
    """Closed magnification interval [a, b] in microns per pixel."""

    a: float = 0.25
    b: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and 0.0 < self.a < self.b):
            raise ParameterError(
                f"magnification range requires 0 < a < b, got [{self.a}, {self.b}]"
            )

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def contains(self, x):
        x = np.asarray(x)
        return (x >= self.a) & (x <= self.b)

    def grid(self, n: int) -> np.ndarray:
        """Uniform grid of ``n`` points including both endpoints."""
        if n < 2:
            raise ParameterError(f"grid size must be >= 2, got {n}")
        return np.linspace(self.a, self.b, int(n))

    def cell_edges(self, cells: int) -> np.ndarray:
        """Edges of ``cells`` equal-width cells covering the range."""
        if cells < 1:
            raise ParameterError(f"cell count must be >= 1, got {cells}")
        return np.linspace(self.a, self.b, int(cells) + 1)

    def cell_midpoints(self, cells: int) -> np.ndarray:
        edges = self.cell_edges(cells)
        return 0.5 * (edges[:-1] + edges[1:])


class Kernel:
    """Base class for magnification-similarity kernels.

    Subclasses implement :meth:`_evaluate` on positive mpp arrays and may
    override :meth:`_transfer_potential` with a closed form; the base class
    falls back to composite trapezoid quadrature on a uniform grid.
    """

    name = "kernel"

    def __call__(self, x, y):
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        if (
            not np.all(np.isfinite(xa))
            or not np.all(np.isfinite(ya))
            or np.any(xa <= 0.0)
            or np.any(ya <= 0.0)
        ):
            raise DomainError("kernel arguments must be positive finite mpp values")
        out = self._evaluate(xa, ya)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(out)
        return out

    def _evaluate(self, x, y):
        raise NotImplementedError

    def covers(self, mag_range: MagRange) -> bool:
        """Whether the kernel is defined on all of ``mag_range`` (both axes)."""
        return True

    def transfer_potential(self, x, mag_range: MagRange = MagRange()):
        """Integral of K(x, .) over the range, at one or many query points.

        ``x`` must lie inside the range; no clamping is performed.
        """
        if not self.covers(mag_range):
            raise RangeError(
                f"kernel {self.name!r} is not defined on [{mag_range.a}, {mag_range.b}]"
            )
        xa = np.asarray(x, dtype=float)
        if not np.all(mag_range.contains(xa)):
            raise RangeError(
                f"query magnification outside [{mag_range.a}, {mag_range.b}]"
            )
        out = self._transfer_potential(xa, mag_range)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def _transfer_potential(self, xa, mag_range):
        nodes = mag_range.grid(DEFAULT_QUADRATURE_INTERVALS + 1)
        vals = self._evaluate(xa[..., None], nodes)
        return np.trapezoid(vals, nodes, axis=-1)


class AbsDistanceKernel(Kernel):
    """K(x, y) = 1 / (1 + |x - y|): similarity decays with mpp distance."""

    name = "abs"

    def _evaluate(self, x, y):
        return 1.0 / (1.0 + np.abs(x - y))

    def _transfer_potential(self, xa, mag_range):
        # antiderivative: log(1 + x - a) + log(1 + b - x)
        return np.log1p(xa - mag_range.a) + np.log1p(mag_range.b - xa)


class InfoOverlapKernel(Kernel):
    """K(x, y) = (min(x, y) / max(x, y))^2: squared field-of-view overlap.

    A patch of fixed pixel size at mpp x covers an area proportional to x^2,
    so the squared ratio of the two magnifications is the fraction of tissue
    area shared by the two fields of view.
    """

    name = "info"

    def _evaluate(self, x, y):
        r = np.minimum(x, y) / np.maximum(x, y)
        return r * r

    def _transfer_potential(self, xa, mag_range):
        a, b = mag_range.a, mag_range.b
        return (xa**3 - a**3) / (3.0 * xa**2) + xa - xa**2 / b


class TabulatedKernel(Kernel):
    """Kernel tabulated on a rectangular (x, y) grid, bilinearly interpolated.

    Queries outside the tabulated rectangle raise :class:`RangeError`.
    Values must be strictly positive and finite so transfer potentials and
    the optimizers built on them stay well defined.
    """

    name = "custom"

    def __init__(self, xs, ys, values):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        values = np.asarray(values, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.size < 2 or ys.size < 2:
            raise ParameterError("tabulated kernel needs at least a 2x2 grid")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ParameterError("tabulated grid coordinates must be strictly increasing")
        if xs[0] <= 0 or ys[0] <= 0:
            raise DomainError("tabulated grid coordinates must be positive")
        if values.shape != (xs.size, ys.size):
            raise ParameterError(
                f"value grid shape {values.shape} does not match ({xs.size}, {ys.size})"
            )
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise DomainError("tabulated kernel values must be positive and finite")
        self.xs = xs
        self.ys = ys
        self.values = values

    @classmethod
    def from_csv(cls, path) -> "TabulatedKernel":
        """Load a kernel from a CSV file with header ``x,y,value``.

        The rows must cover a complete rectangular grid.
        """
        points = {}
        with open(path, "r", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["x", "y", "value"]:
                raise FormatError(f"{path}: expected header 'x,y,value'", line=1)
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 3:
                    raise FormatError(f"{path}: expected 3 columns", line=lineno)
                try:
                    x, y, v = (float(c) for c in row)
                except ValueError:
                    raise FormatError(f"{path}: non-numeric entry {row!r}", line=lineno) from None
                points[(x, y)] = v
        if not points:
            raise FormatError(f"{path}: no kernel samples found")
        xs = np.array(sorted({x for x, _ in points}))
        ys = np.array(sorted({y for _, y in points}))
        values = np.empty((xs.size, ys.size))
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                if (x, y) not in points:
                    raise FormatError(f"{path}: grid is missing the sample x={x}, y={y}")
                values[i, j] = points[(x, y)]
        return cls(xs, ys, values)

    def covers(self, mag_range: MagRange) -> bool:
        return (
            self.xs[0] <= mag_range.a
            and mag_range.b <= self.xs[-1]
            and self.ys[0] <= mag_range.a
            and mag_range.b <= self.ys[-1]
        )

    @staticmethod
    def _locate(grid, q):
        i = np.clip(np.searchsorted(grid, q, side="right") - 1, 0, grid.size - 2)
        frac = (q - grid[i]) / (grid[i + 1] - grid[i])
        return i, frac

    def _evaluate(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if (
            np.any(x < self.xs[0])
            or np.any(x > self.xs[-1])
            or np.any(y < self.ys[0])
            or np.any(y > self.ys[-1])
        ):
            raise RangeError("query outside the tabulated kernel grid")
        i, fx = self._locate(self.xs, x)
        j, fy = self._locate(self.ys, y)
        v = self.values
        return (
            v[i, j] * (1.0 - fx) * (1.0 - fy)
            + v[i + 1, j] * fx * (1.0 - fy)
            + v[i, j + 1] * (1.0 - fx) * fy
            + v[i + 1, j + 1] * fx * fy
        )

    def _transfer_potential(self, xa, mag_range):
        # Trapezoid on the tabulated y-nodes clipped to the range; exact for
        # the piecewise-bilinear interpolant.
        inner = self.ys[(self.ys > mag_range.a) & (self.ys < mag_range.b)]
        nodes = np.concatenate(([mag_range.a], inner, [mag_range.b]))
        vals = self._evaluate(xa[..., None], nodes)
        return np.trapezoid(vals, nodes, axis=-1)


@dataclass(frozen=True)
class TransferPotentialCurve:
    """Transfer potential tabulated on a uniform grid over a range.

    ``argmax_x`` is the grid point with the largest value; ties resolve to
    the smallest x so results are stable under grid refinement.
    """

    mag_range: MagRange
    xs: np.ndarray
    values: np.ndarray
    argmax_x: float
    max_value: float


def transfer_potential_curve(
    kernel: Kernel, mag_range: MagRange = MagRange(), grid_n: int = 1000
) -> TransferPotentialCurve:
    """Evaluate the transfer potential on a uniform ``grid_n``-point grid."""
    if grid_n < 2:
        raise ParameterError(f"grid size must be >= 2, got {grid_n}")
    xs = mag_range.grid(grid_n)
    values = np.asarray(kernel.transfer_potential(xs, mag_range))
    imax = int(np.argmax(values))  # first occurrence: ties break toward smaller x
    return TransferPotentialCurve(
        mag_range=mag_range,
        xs=xs,
        values=values,
        argmax_x=float(xs[imax]),
        max_value=float(values[imax]),
    )


def kernel_from_string(selector: str) -> Kernel:
    """Build a kernel from its CLI/config selection string.

    Accepted forms: ``abs``, ``info``, or ``custom:<path>`` where ``<path>``
    is a CSV file with header ``x,y,value``.
    """
    if selector == "abs":
        return AbsDistanceKernel()
    if selector == "info":
        return InfoOverlapKernel()
    if selector.startswith("custom:"):
        path = selector[len("custom:"):]
        if not path:
            raise ParameterError("custom kernel requires a path: custom:<path>")
        try:
            return TabulatedKernel.from_csv(path)
        except FileNotFoundError:
            raise FileNotFoundError(f"custom kernel file not found: {path}") from None
    raise ParameterError(
        f"unknown kernel {selector!r}; expected abs, info, or custom:<path>"
    )
