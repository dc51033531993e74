"""3-vector and workspace-bounds primitives used everywhere in the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

Vec3 = tuple[float, float, float]


def vec3(x: float, y: float, z: float) -> Vec3:
    v = (float(x), float(y), float(z))
    if not all(math.isfinite(c) for c in v):
        raise ValueError(f"non-finite vector component in {v}")
    return v


def add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def dist(a: Vec3, b: Vec3) -> float:
    return math.sqrt(sum((a[i] - b[i]) ** 2 for i in range(3)))


def dist_xy(a: Vec3, b: Vec3) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Bounds:
    """Closed axis-aligned workspace box, in meters."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    z_range: tuple[float, float]

    def __post_init__(self):
        for lo, hi in (self.x_range, self.y_range, self.z_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid bounds range ({lo}, {hi})")

    def contains(self, p: Vec3) -> bool:
        (xl, xh), (yl, yh), (zl, zh) = self.x_range, self.y_range, self.z_range
        return xl <= p[0] <= xh and yl <= p[1] <= yh and zl <= p[2] <= zh

    def clamp_xy(self, p: Vec3) -> Vec3:
        (xl, xh), (yl, yh) = self.x_range, self.y_range
        return (min(max(p[0], xl), xh), min(max(p[1], yl), yh), p[2])

    @property
    def min_corner(self) -> Vec3:
        return (self.x_range[0], self.y_range[0], self.z_range[0])

    @property
    def max_corner(self) -> Vec3:
        return (self.x_range[1], self.y_range[1], self.z_range[1])

    def to_lists(self) -> list[list[float]]:
        return [list(self.x_range), list(self.y_range), list(self.z_range)]

    @classmethod
    def from_lists(cls, data) -> "Bounds":
        [xl, xh], [yl, yh], [zl, zh] = data
        return cls((xl, xh), (yl, yh), (zl, zh))
