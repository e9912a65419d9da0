"""Probability distributions over a magnification range.

A :class:`SamplingDistribution` mixes point masses (atoms) with a
piecewise-constant density on equal-width cells. Construction normalizes
the total mass to one. The class provides exact CDF, quantile, and
interval-mass computations; these back the signal evaluator, the plan
sampler, and the statistical tests.

Distribution file format (``.msdist``), UTF-8 text:

    #msdist v1
    range <a> <b>
    atom <x> <w>            (zero or more)
    density <n>             (optional, followed by n nonnegative cell values,
                             whitespace-separated, possibly spanning lines)

Lines starting with ``#`` after the first are comments. Numbers are decimal
and written at full precision.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ParameterError, RangeError
from .kernels import MagRange

_MAGIC = "#msdist v1"


def _fmt(v: float) -> str:
    return repr(float(v))


class SamplingDistribution:
    """Mixed atomic / piecewise-constant distribution over magnifications."""

    def __init__(self, mag_range: MagRange, atoms: Iterable = (), density=None):
        self.range = mag_range
        pairs = [(float(x), float(w)) for x, w in atoms]
        for x, w in pairs:
            if not np.isfinite(x) or not np.isfinite(w):
                raise ParameterError("atom locations and weights must be finite")
            if w < 0.0:
                raise ParameterError(f"atom weight must be nonnegative, got {w}")
            if not (mag_range.a <= x <= mag_range.b):
                raise RangeError(
                    f"atom at {x} outside range [{mag_range.a}, {mag_range.b}]"
                )
        pairs.sort(key=lambda p: p[0])
        self._atom_x = np.array([p[0] for p in pairs], dtype=float)
        self._atom_w = np.array([p[1] for p in pairs], dtype=float)

        if density is not None:
            dens = np.array(density, dtype=float)
            if dens.ndim != 1 or dens.size < 1:
                raise ParameterError("density must be a 1-D sequence of cell values")
            if not np.all(np.isfinite(dens)) or np.any(dens < 0.0):
                raise ParameterError("density cell values must be nonnegative and finite")
        else:
            dens = None

        cell_w = mag_range.width / dens.size if dens is not None else 0.0
        total = self._atom_w.sum() + (dens.sum() * cell_w if dens is not None else 0.0)
        if not np.isfinite(total) or total <= 0.0:
            raise ParameterError("distribution has no mass")
        if abs(total - 1.0) > 1e-12:  # idempotent: round-trips stay bit-exact
            self._atom_w /= total
            if dens is not None:
                dens = dens / total
        self._density = dens
        self._build_cdf()

    # -- constructors ------------------------------------------------------

    @classmethod
    def discrete(cls, mag_range: MagRange, locations: Sequence[float], weights=None):
        """Atoms at the given locations, equally weighted unless specified."""
        locations = list(locations)
        if weights is None:
            weights = [1.0] * len(locations)
        return cls(mag_range, atoms=zip(locations, weights))

    @classmethod
    def uniform(cls, mag_range: MagRange, cells: int = 1):
        """Uniform density over the range (exact for any cell count)."""
        return cls(mag_range, density=np.ones(int(cells)))

    @classmethod
    def from_density(cls, mag_range: MagRange, values):
        return cls(mag_range, density=values)

    # -- basic accessors ----------------------------------------------------

    @property
    def atom_locations(self) -> np.ndarray:
        return self._atom_x

    @property
    def atom_weights(self) -> np.ndarray:
        return self._atom_w

    @property
    def density(self):
        """Cell values of the density part, or None."""
        return self._density

    @property
    def has_atoms(self) -> bool:
        return self._atom_x.size > 0

    @property
    def has_density(self) -> bool:
        return self._density is not None

    @property
    def cells(self) -> int:
        return 0 if self._density is None else self._density.size

    @property
    def cell_width(self) -> float:
        if self._density is None:
            raise ParameterError("distribution has no density part")
        return self.range.width / self._density.size

    def cell_edges(self) -> np.ndarray:
        return self.range.cell_edges(self.cells)

    def cell_midpoints(self) -> np.ndarray:
        return self.range.cell_midpoints(self.cells)

    def total_mass(self) -> float:
        dens_mass = 0.0 if self._density is None else self._density.sum() * self.cell_width
        return float(self._atom_w.sum() + dens_mass)

    def density_at(self, x):
        """Density value at magnification x (0 where only atoms carry mass)."""
        xa = np.asarray(x, dtype=float)
        if not np.all(self.range.contains(xa)):
            raise RangeError(f"magnification outside [{self.range.a}, {self.range.b}]")
        if self._density is None:
            out = np.zeros_like(xa, dtype=float)
        else:
            edges = self.cell_edges()
            idx = np.clip(np.searchsorted(edges, xa, side="right") - 1, 0, self.cells - 1)
            out = self._density[idx]
        return float(out) if np.ndim(x) == 0 else out

    def __eq__(self, other):
        if not isinstance(other, SamplingDistribution):
            return NotImplemented
        same_density = (
            (self._density is None and other._density is None)
            or (
                self._density is not None
                and other._density is not None
                and self._density.shape == other._density.shape
                and bool(np.all(self._density == other._density))
            )
        )
        return (
            self.range == other.range
            and bool(np.all(self._atom_x == other._atom_x))
            and self._atom_x.shape == other._atom_x.shape
            and bool(np.all(self._atom_w == other._atom_w))
            and same_density
        )

    def __repr__(self):
        return (
            f"SamplingDistribution(range=[{self.range.a}, {self.range.b}], "
            f"atoms={self._atom_x.size}, cells={self.cells})"
        )

    # -- CDF machinery -------------------------------------------------------

    def _build_cdf(self):
        # Knots where the CDF jumps (atoms) or changes slope (cell edges).
        if self._density is not None:
            edges = self.cell_edges()
        else:
            edges = np.array([self.range.a, self.range.b])
        knots = np.unique(np.concatenate([edges, self._atom_x]))
        jumps = np.zeros_like(knots)
        if self._atom_x.size:
            np.add.at(jumps, np.searchsorted(knots, self._atom_x), self._atom_w)
        seg_mid = 0.5 * (knots[:-1] + knots[1:])
        if self._density is not None:
            cedges = self.cell_edges()
            idx = np.clip(np.searchsorted(cedges, seg_mid, side="right") - 1, 0, self.cells - 1)
            slopes = self._density[idx]
        else:
            slopes = np.zeros(knots.size - 1)
        seg_mass = slopes * np.diff(knots)
        after = np.cumsum(jumps) + np.concatenate(([0.0], np.cumsum(seg_mass)))
        self._knots = knots
        self._slopes = slopes
        self._cdf_after = after
        self._cdf_before = after - jumps
        # infimum of the support, returned by quantile(0)
        support_min = np.inf
        if self._atom_x.size:
            support_min = self._atom_x[0]
        if self._density is not None:
            first_live = int(np.argmax(self._density > 0.0))
            support_min = min(support_min, self.cell_edges()[first_live])
        self._support_min = float(support_min)

    def quantile(self, u):
        """Inverse CDF: the smallest x with CDF(x) >= u."""
        ua = np.asarray(u, dtype=float)
        if np.any(ua < 0.0) or np.any(ua > 1.0) or not np.all(np.isfinite(ua)):
            raise ParameterError("quantile argument must lie in [0, 1]")
        knots, before, after = self._knots, self._cdf_before, self._cdf_after
        uu = np.minimum(ua, after[-1])
        k = np.searchsorted(after, uu, side="left")
        k = np.minimum(k, knots.size - 1)
        at_knot = uu >= before[k]
        kprev = np.maximum(k - 1, 0)
        denom = before[k] - after[kprev]
        safe = np.where(denom > 0.0, denom, 1.0)
        interp = knots[kprev] + (uu - after[kprev]) / safe * (knots[k] - knots[kprev])
        out = np.where(at_knot, knots[k], interp)
        out = np.where(uu <= 0.0, self._support_min, out)
        return float(out) if np.ndim(u) == 0 else out

    def cdf_before(self, x):
        """Probability mass strictly below x."""
        xa = np.asarray(x, dtype=float)
        knots, before, after = self._knots, self._cdf_before, self._cdf_after
        j = np.searchsorted(knots, xa, side="left")
        jseg = np.clip(j - 1, 0, knots.size - 2)
        lin = after[jseg] + self._slopes[jseg] * (xa - knots[jseg])
        exact = (j < knots.size) & (knots[np.minimum(j, knots.size - 1)] == xa)
        out = np.where(exact, before[np.minimum(j, knots.size - 1)], lin)
        out = np.where(xa <= knots[0], 0.0, out)
        out = np.where(xa > knots[-1], after[-1], out)
        return float(out) if np.ndim(x) == 0 else out

    def _jump_at(self, x):
        j = np.searchsorted(self._knots, x)
        if j < self._knots.size and self._knots[j] == x:
            return float(self._cdf_after[j] - self._cdf_before[j])
        return 0.0

    def bin_masses(self, edges) -> np.ndarray:
        """Probability mass per histogram bin.

        Bins are half-open [e_k, e_{k+1}) except the last, which is closed,
        matching ``np.searchsorted(edges, x, side='right')`` binning.
        """
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ParameterError("bin edges must be strictly increasing")
        cb = self.cdf_before(edges)
        masses = np.diff(cb)
        masses[-1] += self._jump_at(float(edges[-1]))
        return masses


def mix(
    d1: SamplingDistribution, d2: SamplingDistribution, alpha: float
) -> SamplingDistribution:
    """Mixture alpha * d1 + (1 - alpha) * d2.

    Ranges must match; densities, when both present, must share a cell grid.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ParameterError(f"mixture weight must lie in [0, 1], got {alpha}")
    if d1.range != d2.range:
        raise ParameterError("cannot mix distributions on different ranges")
    atoms = [(x, alpha * w) for x, w in zip(d1.atom_locations, d1.atom_weights)]
    atoms += [(x, (1.0 - alpha) * w) for x, w in zip(d2.atom_locations, d2.atom_weights)]
    if d1.has_density and d2.has_density:
        if d1.cells != d2.cells:
            raise ParameterError("cannot mix densities with different cell counts")
        density = alpha * d1.density + (1.0 - alpha) * d2.density
    elif d1.has_density:
        density = alpha * d1.density
    elif d2.has_density:
        density = (1.0 - alpha) * d2.density
    else:
        density = None
    return SamplingDistribution(d1.range, atoms=atoms, density=density)


# -- file format -------------------------------------------------------------


def parse_distribution(text: str) -> SamplingDistribution:
    """Parse the ``#msdist v1`` text format; errors carry line numbers."""
    lines = text.splitlines()
    if not lines or lines[0].rstrip() != _MAGIC:
        raise FormatError(f"expected {_MAGIC!r} header", line=1)

    mag_range = None
    atoms = []
    density = None
    want = 0  # density values still to read
    values: list[float] = []

    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if want > 0:
            for tok in tokens:
                if want == 0:
                    raise FormatError("unexpected token after density values", line=lineno)
                try:
                    values.append(float(tok))
                except ValueError:
                    raise FormatError(f"bad density value {tok!r}", line=lineno) from None
                want -= 1
            continue
        key = tokens[0]
        if key == "range":
            if mag_range is not None:
                raise FormatError("duplicate range line", line=lineno)
            if len(tokens) != 3:
                raise FormatError("range line needs two bounds", line=lineno)
            try:
                mag_range = MagRange(float(tokens[1]), float(tokens[2]))
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno) from None
        elif key == "atom":
            if mag_range is None:
                raise FormatError("atom before range line", line=lineno)
            if density is not None:
                raise FormatError("atom lines must precede the density block", line=lineno)
            if len(tokens) != 3:
                raise FormatError("atom line needs location and weight", line=lineno)
            try:
                atoms.append((float(tokens[1]), float(tokens[2])))
            except ValueError:
                raise FormatError("bad atom numbers", line=lineno) from None
        elif key == "density":
            if mag_range is None:
                raise FormatError("density before range line", line=lineno)
            if density is not None:
                raise FormatError("duplicate density block", line=lineno)
            if len(tokens) < 2:
                raise FormatError("density line needs a cell count", line=lineno)
            try:
                want = int(tokens[1])
            except ValueError:
                raise FormatError(f"bad density cell count {tokens[1]!r}", line=lineno) from None
            if want < 1:
                raise FormatError("density cell count must be >= 1", line=lineno)
            density = True
            for tok in tokens[2:]:
                if want == 0:
                    raise FormatError("unexpected token after density values", line=lineno)
                try:
                    values.append(float(tok))
                except ValueError:
                    raise FormatError(f"bad density value {tok!r}", line=lineno) from None
                want -= 1
        else:
            raise FormatError(f"unknown directive {key!r}", line=lineno)

    if mag_range is None:
        raise FormatError("missing range line")
    if want > 0:
        raise FormatError(f"density block ended early; {want} values missing")
    return SamplingDistribution(
        mag_range, atoms=atoms, density=values if density else None
    )


def read_distribution(path) -> SamplingDistribution:
    with open(path, "r", encoding="utf-8") as f:
        return parse_distribution(f.read())


def format_distribution(dist: SamplingDistribution, comments: Sequence[str] = ()) -> str:
    """Serialize to the ``#msdist v1`` format at full precision."""
    out = [_MAGIC, f"range {_fmt(dist.range.a)} {_fmt(dist.range.b)}"]
    out += [f"# {c}" for c in comments]
    out += [
        f"atom {_fmt(x)} {_fmt(w)}"
        for x, w in zip(dist.atom_locations, dist.atom_weights)
    ]
    if dist.has_density:
        out.append(f"density {dist.cells}")
        vals = [_fmt(v) for v in dist.density]
        out += [" ".join(vals[i : i + 8]) for i in range(0, len(vals), 8)]
    return "\n".join(out) + "\n"


def write_distribution(dist: SamplingDistribution, path, comments: Sequence[str] = ()):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(format_distribution(dist, comments))
