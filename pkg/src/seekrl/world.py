"""2D arena geometry: axis-aligned obstacles, ray casting, collision, kinematics.

Coordinate system: x to the right, y upward, origin at the bottom-left arena
corner. Headings are in radians, measured counterclockwise from the +x axis
and normalized to (-pi, pi]. All distances are in meters.

Everything here is a pure function of its inputs; there is no shared state,
so any number of workers may call into this module concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(angle, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Vec2 components must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, slots=True)
class Pose:
    """Planar robot state. The heading is normalized at construction."""

    position: Vec2
    heading: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True, slots=True)
class Obstacle:
    """Axis-aligned box given by its center and half extents."""

    center: Vec2
    half_extents: Vec2

    def __post_init__(self) -> None:
        if self.half_extents.x <= 0.0 or self.half_extents.y <= 0.0:
            raise ValueError("obstacle half_extents must be strictly positive")

    @property
    def min_x(self) -> float:
        return self.center.x - self.half_extents.x

    @property
    def max_x(self) -> float:
        return self.center.x + self.half_extents.x

    @property
    def min_y(self) -> float:
        return self.center.y - self.half_extents.y

    @property
    def max_y(self) -> float:
        return self.center.y + self.half_extents.y

    def overlaps(self, other: "Obstacle") -> bool:
        return (
            self.min_x < other.max_x
            and self.max_x > other.min_x
            and self.min_y < other.max_y
            and self.max_y > other.min_y
        )

    def distance_to_point(self, p: Vec2) -> float:
        """Euclidean distance from a point to this box (0 inside)."""
        dx = max(self.min_x - p.x, 0.0, p.x - self.max_x)
        dy = max(self.min_y - p.y, 0.0, p.y - self.max_y)
        return math.hypot(dx, dy)


@dataclass(slots=True)
class Arena:
    """Rectangular room with axis-aligned box obstacles.

    Walls count as solid geometry for both ray casting and collision.
    Obstacle placement rules (pairwise disjoint, fully inside) are enforced
    by the episode generator, not re-checked here.
    """

    width: float
    height: float
    obstacles: list[Obstacle] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.width <= 0.0 or self.height <= 0.0:
            raise ValueError("arena dimensions must be positive")

    def contains(self, p: Vec2) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height


@dataclass(frozen=True, slots=True)
class LaserScan:
    """Body-frame ranger readings in meters, clamped to the sensor max range."""

    front: float
    right: float
    back: float
    left: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.front, self.right, self.back, self.left)


def _ray_box_entry(ox: float, oy: float, dx: float, dy: float, obstacle: Obstacle) -> float:
    """Slab-method ray/AABB intersection.

    Returns the entry distance along the ray, or inf when the ray misses the
    box or starts past it. Ties between slabs resolve to the nearer boundary
    because we take the max of entry distances directly.
    """
    t_near = -math.inf
    t_far = math.inf

    if dx != 0.0:
        inv = 1.0 / dx
        t1 = (obstacle.min_x - ox) * inv
        t2 = (obstacle.max_x - ox) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
    elif ox < obstacle.min_x or ox > obstacle.max_x:
        return math.inf

    if dy != 0.0:
        inv = 1.0 / dy
        t1 = (obstacle.min_y - oy) * inv
        t2 = (obstacle.max_y - oy) * inv
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
    elif oy < obstacle.min_y or oy > obstacle.max_y:
        return math.inf

    if t_near > t_far or t_far < 0.0:
        return math.inf
    return max(t_near, 0.0)


def _wall_exit_distance(ox: float, oy: float, dx: float, dy: float, arena: Arena) -> float:
    """Distance from an interior point to the arena boundary along the ray."""
    t = math.inf
    if dx > 0.0:
        t = min(t, (arena.width - ox) / dx)
    elif dx < 0.0:
        t = min(t, -ox / dx)
    if dy > 0.0:
        t = min(t, (arena.height - oy) / dy)
    elif dy < 0.0:
        t = min(t, -oy / dy)
    return t


def raycast(origin: Vec2, direction: Vec2, arena: Arena, max_range: float) -> float:
    """Distance to the nearest wall or obstacle along a unit-direction ray.

    The result is clamped to max_range and is never negative. The origin must
    lie inside the arena.
    """
    if not arena.contains(origin):
        raise ValueError(f"ray origin {origin} lies outside the arena")
    ox, oy = origin.x, origin.y
    dx, dy = direction.x, direction.y

    t = _wall_exit_distance(ox, oy, dx, dy, arena)
    for obstacle in arena.obstacles:
        t_obs = _ray_box_entry(ox, oy, dx, dy, obstacle)
        if t_obs < t:
            t = t_obs
    if t > max_range:
        return max_range
    return max(t, 0.0)


def laser_scan(pose: Pose, arena: Arena, max_range: float = 5.0) -> LaserScan:
    """Four body-frame raycasts: +x (front), -y (right), -x (back), +y (left)."""
    c = math.cos(pose.heading)
    s = math.sin(pose.heading)
    p = pose.position
    return LaserScan(
        front=raycast(p, Vec2(c, s), arena, max_range),
        right=raycast(p, Vec2(s, -c), arena, max_range),
        back=raycast(p, Vec2(-c, -s), arena, max_range),
        left=raycast(p, Vec2(-s, c), arena, max_range),
    )


def step_kinematics(pose: Pose, forward_speed: float, yaw_rate: float, dt: float) -> Pose:
    """Advance the unicycle model one decision step.

    The heading updates first; translation then uses the new heading. This is
    deterministic and preserves position exactly when forward_speed is 0.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    heading = normalize_angle(pose.heading + yaw_rate * dt)
    step = forward_speed * dt
    return Pose(
        position=Vec2(
            pose.position.x + step * math.cos(heading),
            pose.position.y + step * math.sin(heading),
        ),
        heading=heading,
    )


def collision(pose: Pose, arena: Arena, robot_radius: float) -> bool:
    """True when the robot disc touches an obstacle or comes within
    robot_radius of a wall."""
    if robot_radius <= 0.0:
        raise ValueError("robot_radius must be positive")
    p = pose.position
    if (
        p.x < robot_radius
        or p.y < robot_radius
        or p.x > arena.width - robot_radius
        or p.y > arena.height - robot_radius
    ):
        return True
    for obstacle in arena.obstacles:
        if obstacle.distance_to_point(p) < robot_radius:
            return True
    return False


def arena_to_dict(arena: Arena) -> dict:
    """Scene-file representation of the arena geometry."""
    return {
        "width": arena.width,
        "height": arena.height,
        "obstacles": [
            {
                "center": [o.center.x, o.center.y],
                "half_extents": [o.half_extents.x, o.half_extents.y],
            }
            for o in arena.obstacles
        ],
    }


def arena_from_dict(data: dict) -> Arena:
    """Inverse of arena_to_dict. Raises ValueError on malformed entries."""
    try:
        obstacles = [
            Obstacle(
                center=Vec2(float(o["center"][0]), float(o["center"][1])),
                half_extents=Vec2(float(o["half_extents"][0]), float(o["half_extents"][1])),
            )
            for o in data.get("obstacles", [])
        ]
        return Arena(width=float(data["width"]), height=float(data["height"]), obstacles=obstacles)
    except (KeyError, IndexError, TypeError) as exc:
        raise ValueError(f"malformed scene data: {exc}") from exc
