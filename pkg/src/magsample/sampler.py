"""Magnification draws and executable crop-and-resize plans.

A patch at target mpp ``t`` is synthesized from a source patch at a coarser
standard mpp ``s`` by cropping ``round(output_size * t / s)`` pixels and
resizing to ``output_size``. The source is the largest standard mpp that
does not exceed ``t`` and whose crop still fits in the source patch, so
patches are always downsampled, never upsampled.

Plans are reproducible byte for byte: entry ``i`` consumes the counter-based
RNG at counters ``3i`` (target draw), ``3i + 1`` and ``3i + 2`` (crop
offsets), so any subrange of a plan can be regenerated independently.

File formats owned by this module:

* plan CSV with header
  ``index,target_mpp,source_mpp,source_size_px,crop_size_px,output_size_px,offset_x_frac,offset_y_frac``;
* raw image arrays (``.msim``): 16-byte header of magic ``MSIM``, u32 height,
  u32 width, u32 channels (little-endian), then float32 pixels in row-major
  order.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import SamplingDistribution
from .errors import FeasibilityError, FormatError, ParameterError, ShapeError
from .rng import CounterRng

STANDARD_MPPS = (0.25, 0.5, 1.0, 2.0)

PLAN_CSV_FIELDS = (
    "index",
    "target_mpp",
    "source_mpp",
    "source_size_px",
    "crop_size_px",
    "output_size_px",
    "offset_x_frac",
    "offset_y_frac",
)

_IMAGE_MAGIC = b"MSIM"
_IMAGE_HEADER = struct.Struct("<4sIII")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CropPlanEntry:
    """One executable crop: where to read, how much, and the output size."""

    index: int
    target_mpp: float
    source_mpp: float
    source_size_px: int
    crop_size_px: int
    output_size_px: int
    offset_x_frac: float
    offset_y_frac: float
    seed: int  # RNG draw index that produced this entry (equals index)


@dataclass
class SamplerConfig:
    """Distribution plus the geometry of the source and output patches."""

    distribution: SamplingDistribution
    standard_mpps: Sequence[float] = STANDARD_MPPS
    source_size_px: int = 512
    output_size_px: int = 224
    rng_seed: int = 0

    def __post_init__(self):
        std = tuple(float(s) for s in self.standard_mpps)
        if not std or any(s <= 0 for s in std) or any(
            b <= a for a, b in zip(std, std[1:])
        ):
            raise ParameterError(
                "standard mpps must be a nonempty, strictly increasing, positive sequence"
            )
        if self.source_size_px < 1 or self.output_size_px < 1:
            raise ParameterError("patch sizes must be positive")
        self.standard_mpps = std
        self._check_feasible()

    def _check_feasible(self):
        """Every target in the distribution's range must admit a source.

        The worst target of each segment between consecutive standards is its
        right end (crop size grows with t for fixed s), so checking segment
        ends covers the whole continuum.
        """
        mag_range = self.distribution.range
        std = self.standard_mpps
        if mag_range.a < std[0]:
            raise FeasibilityError(
                f"target {mag_range.a} lies below the smallest standard mpp {std[0]}"
            )
        uppers = list(std[1:]) + [mag_range.b]
        for s, hi in zip(std, uppers):
            hi = min(hi, mag_range.b)
            if hi <= s or s > mag_range.b:
                continue
            crop = _round_half_up(self.output_size_px * hi / s)
            if crop > self.source_size_px:
                raise FeasibilityError(
                    f"target {hi} needs a {crop}px crop from source mpp {s}, "
                    f"larger than the {self.source_size_px}px source"
                )


def draw_target_mpp(dist: SamplingDistribution, rng: CounterRng, counter: int = 0) -> float:
    """Inverse-CDF draw of one target magnification."""
    return dist.quantile(rng.uniform(counter))


def sample_targets(
    dist: SamplingDistribution, seed: int, n: int, start_index: int = 0
) -> np.ndarray:
    """Vectorized target draws matching ``generate_plan``'s entries.

    Returns the targets of plan entries ``start_index .. start_index+n-1``
    for a sampler seeded with ``seed``.
    """
    rng = CounterRng(seed)
    counters = 3 * (np.uint64(start_index) + np.arange(n, dtype=np.uint64))
    return dist.quantile(rng.uniform_at(counters))


def _select_source(t: float, cfg: SamplerConfig) -> tuple[float, int]:
    """Largest standard mpp <= t whose crop fits; smaller sources only grow
    the crop, so only the largest candidate needs checking."""
    std = cfg.standard_mpps
    pos = int(np.searchsorted(std, t, side="right")) - 1
    if pos < 0:
        raise FeasibilityError(f"no standard mpp at or below target {t}")
    s = std[pos]
    crop = _round_half_up(cfg.output_size_px * t / s)
    if crop > cfg.source_size_px:
        raise FeasibilityError(
            f"target {t} needs a {crop}px crop from source mpp {s}, "
            f"larger than the {cfg.source_size_px}px source"
        )
    return s, crop


def plan_crop(t: float, cfg: SamplerConfig, rng: CounterRng, index: int = 0) -> CropPlanEntry:
    """Plan one crop for target ``t``; offsets come from counters 3i+1, 3i+2."""
    t = float(t)
    if not bool(cfg.distribution.range.contains(t)):
        raise ParameterError(
            f"target {t} outside the distribution range "
            f"[{cfg.distribution.range.a}, {cfg.distribution.range.b}]"
        )
    s, crop = _select_source(t, cfg)
    return CropPlanEntry(
        index=index,
        target_mpp=t,
        source_mpp=s,
        source_size_px=cfg.source_size_px,
        crop_size_px=crop,
        output_size_px=cfg.output_size_px,
        offset_x_frac=rng.uniform(3 * index + 1),
        offset_y_frac=rng.uniform(3 * index + 2),
        seed=index,
    )


def generate_plan(cfg: SamplerConfig, n: int) -> list[CropPlanEntry]:
    """Draw ``n`` targets and plan their crops; pure function of (cfg, n)."""
    if n < 1:
        raise ParameterError(f"plan length must be >= 1, got {n}")
    rng = CounterRng(cfg.rng_seed)
    idx = np.arange(n, dtype=np.uint64)
    targets = cfg.distribution.quantile(rng.uniform_at(3 * idx))
    off_x = rng.uniform_at(3 * idx + np.uint64(1))
    off_y = rng.uniform_at(3 * idx + np.uint64(2))
    entries = []
    for i in range(n):
        t = float(targets[i])
        s, crop = _select_source(t, cfg)
        entries.append(
            CropPlanEntry(
                index=i,
                target_mpp=t,
                source_mpp=s,
                source_size_px=cfg.source_size_px,
                crop_size_px=crop,
                output_size_px=cfg.output_size_px,
                offset_x_frac=float(off_x[i]),
                offset_y_frac=float(off_y[i]),
                seed=i,
            )
        )
    return entries


# -- plan CSV -----------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def format_plan_csv(entries: Sequence[CropPlanEntry]) -> str:
    lines = [",".join(PLAN_CSV_FIELDS)]
    for e in entries:
        lines.append(
            f"{e.index},{_fmt(e.target_mpp)},{_fmt(e.source_mpp)},"
            f"{e.source_size_px},{e.crop_size_px},{e.output_size_px},"
            f"{_fmt(e.offset_x_frac)},{_fmt(e.offset_y_frac)}"
        )
    return "\n".join(lines) + "\n"


def write_plan_csv(entries: Sequence[CropPlanEntry], path):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(format_plan_csv(entries))


def read_plan_csv(path) -> list[CropPlanEntry]:
    entries = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PLAN_CSV_FIELDS:
            raise FormatError(
                f"expected plan header {','.join(PLAN_CSV_FIELDS)!r}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(PLAN_CSV_FIELDS):
                raise FormatError("wrong number of plan columns", line=lineno)
            try:
                index = int(row[0])
                entry = CropPlanEntry(
                    index=index,
                    target_mpp=float(row[1]),
                    source_mpp=float(row[2]),
                    source_size_px=int(row[3]),
                    crop_size_px=int(row[4]),
                    output_size_px=int(row[5]),
                    offset_x_frac=float(row[6]),
                    offset_y_frac=float(row[7]),
                    seed=index,
                )
            except ValueError:
                raise FormatError("bad plan entry", line=lineno) from None
            if (
                entry.target_mpp <= 0
                or entry.source_mpp <= 0
                or entry.output_size_px < 1
                or not 1 <= entry.crop_size_px <= entry.source_size_px
                or not 0.0 <= entry.offset_x_frac <= 1.0
                or not 0.0 <= entry.offset_y_frac <= 1.0
            ):
                raise FormatError("plan entry violates its invariants", line=lineno)
            entries.append(entry)
    return entries


# -- applying plans -----------------------------------------------------------


def _resize_bilinear(window: np.ndarray, out_size: int) -> np.ndarray:
    """Corner-aligned separable bilinear resize of a square window."""
    crop = window.shape[0]
    if crop == 1:
        return np.broadcast_to(window, (out_size, out_size, window.shape[2])).copy()
    # np.linspace hits both corners exactly
    pos = np.linspace(0.0, crop - 1.0, out_size)
    i0 = np.minimum(np.floor(pos).astype(np.intp), crop - 2)
    frac = pos - i0
    a = window.astype(np.float64, copy=False)
    a = a[i0] * (1.0 - frac)[:, None, None] + a[i0 + 1] * frac[:, None, None]
    a = a[:, i0] * (1.0 - frac)[None, :, None] + a[:, i0 + 1] * frac[None, :, None]
    return a.astype(window.dtype, copy=False)


def apply_crop(image: np.ndarray, entry: CropPlanEntry) -> np.ndarray:
    """Execute one plan entry on an H x W x C pixel array.

    The image must be square with side ``entry.source_size_px``. When the
    crop size equals the output size the result is the exact sub-array.
    """
    arr = np.asarray(image)
    if arr.ndim != 3:
        raise ShapeError(f"expected an H x W x C array, got shape {arr.shape}")
    h, w, _ = arr.shape
    if h != entry.source_size_px or w != entry.source_size_px:
        raise ShapeError(
            f"image is {h}x{w} but the plan entry expects "
            f"{entry.source_size_px}x{entry.source_size_px}"
        )
    crop = entry.crop_size_px
    if crop < 1 or crop > h:
        raise ShapeError(f"crop size {crop} does not fit a {h}px source")
    if not (0.0 <= entry.offset_x_frac <= 1.0 and 0.0 <= entry.offset_y_frac <= 1.0):
        raise ShapeError("offset fractions outside [0, 1]; crop window would not fit")
    oy = _round_half_up(entry.offset_y_frac * (h - crop))
    ox = _round_half_up(entry.offset_x_frac * (w - crop))
    window = arr[oy : oy + crop, ox : ox + crop]
    if crop == entry.output_size_px:
        return window.copy()
    return _resize_bilinear(window, entry.output_size_px)


# -- raw image arrays ----------------------------------------------------------


def write_image_array(path, image: np.ndarray):
    arr = np.asarray(image)
    if arr.ndim != 3:
        raise ShapeError(f"expected an H x W x C array, got shape {arr.shape}")
    h, w, c = arr.shape
    with open(path, "wb") as f:
        f.write(_IMAGE_HEADER.pack(_IMAGE_MAGIC, h, w, c))
        f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_image_array(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_IMAGE_HEADER.size)
        if len(header) != _IMAGE_HEADER.size:
            raise FormatError("truncated image header")
        magic, h, w, c = _IMAGE_HEADER.unpack(header)
        if magic != _IMAGE_MAGIC:
            raise FormatError(f"bad image magic {magic!r}")
        payload = f.read()
    expected = h * w * c * 4
    if len(payload) != expected:
        raise FormatError(
            f"image payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(h, w, c).copy()
