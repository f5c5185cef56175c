"""Convex-body oracles in a chart and bisection-based boundary geometry.

Bodies are membership oracles, not meshes: every geometric question is
reduced to one-dimensional bisection along lines and rays, which inherits
its correctness from convexity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DescriptorError,
    EmptyClip,
    GeometryError,
    NotBoundary,
    PointOutside,
)
from .lingeom import (
    RANK_TOL,
    RankOneDirection,
    as_chart_point,
    matrix_from_lists,
    matrix_to_lists,
    numeric_rank,
)

# Bisection tolerance for boundary parameters (relative above |t| = 1).
# Tighter than the documented error bound of 1e-10 so that single-segment
# values are good to ~1e-13.
BISECT_TOL = 1e-13
# Sampled rank-one-line witnesses are certified out to this parameter.
T_BIG = 1e3
# Rays still inside past this parameter are reported as unbounded.  Far
# beyond T_BIG: truncating a genuine exit inflates a cross ratio by ~1/limit,
# which must stay below the 1e-9 tolerances on metric comparisons.
RAY_LIMIT = 1e10
# Openness probe radius for membership oracles.
MEMBER_EPS = 1e-9
# Tangent-cone scan floor: membership is declared false below this scale.
SCAN_FLOOR = 2.0 ** -40
# |det| threshold for the extreme-point witness test.
DET_TOL = 1e-8


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value, with closed forms for the small shapes.

    The 2x2 case uses the cancellation-free rotation form (sum of two
    nonnegative roots), which stays accurate to machine precision near the
    unit sphere where membership decisions are made.
    """
    q, p = m.shape
    if p == 1 or q == 1:
        return float(np.linalg.norm(m))
    if p == 2 and q == 2:
        a, b = m[0, 0], m[0, 1]
        c, d = m[1, 0], m[1, 1]
        q_part = math.hypot(a + d, b - c)
        r_part = math.hypot(a - d, b + c)
        return 0.5 * (q_part + r_part)
    return float(np.linalg.svd(m, compute_uv=False)[0])


def symmetric_min_eig(s: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (closed form up to 2x2)."""
    n = s.shape[0]
    if n == 1:
        return float(s[0, 0])
    if n == 2:
        a, b, d = s[0, 0], s[0, 1], s[1, 1]
        half_tr = 0.5 * (a + d)
        return half_tr - math.sqrt(0.25 * (a - d) ** 2 + b * b)
    return float(np.linalg.eigvalsh(s)[0])


class ConvexBody:
    """Open convex subset of a q-by-p chart defined by a membership oracle.

    ``interior_point`` is a designated member used as the reference point
    for all bisection routines.  Membership predicates must be pure.
    """

    kind = "abstract"

    def __init__(
        self,
        q: int,
        p: int,
        label: str,
        bounding_radius: float | None = None,
        is_cone: bool = False,
        apex=None,
        interior_point=None,
    ):
        self.q = int(q)
        self.p = int(p)
        self.label = label
        self.bounding_radius = bounding_radius
        self.is_cone = is_cone
        self.apex = None if apex is None else as_chart_point(apex)
        if interior_point is None:
            interior_point = np.zeros((self.q, self.p))
        self.interior_point = as_chart_point(interior_point)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.q, self.p)

    def contains(self, x) -> bool:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(q={self.q}, p={self.p}, label={self.label!r})"


class OperatorNormBall(ConvexBody):
    """Unit ball of q-by-p matrices in the operator norm."""

    kind = "operator_ball"

    def __init__(self, q: int, p: int):
        super().__init__(
            q,
            p,
            label=f"operator_ball({q},{p})",
            bounding_radius=math.sqrt(min(p, q)),
        )

    def contains(self, x) -> bool:
        return spectral_norm(np.asarray(x, dtype=float)) < 1.0

    def boundary_margin(self, x) -> float:
        return 1.0 - spectral_norm(np.asarray(x, dtype=float))

    def descriptor(self) -> dict:
        return {"kind": self.kind, "p": self.p, "q": self.q}


class PositiveHalfCone(ConvexBody):
    """Cone of p-by-p matrices with positive-definite symmetric part."""

    kind = "half_cone"

    def __init__(self, p: int):
        super().__init__(
            p,
            p,
            label=f"half_cone({p})",
            is_cone=True,
            apex=np.zeros((p, p)),
            interior_point=np.eye(p),
        )

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return symmetric_min_eig(x + x.T) > 0.0

    def descriptor(self) -> dict:
        return {"kind": self.kind, "p": self.p}


class FullChart(ConvexBody):
    """The entire affine chart; no boundary at all."""

    kind = "full_chart"

    def __init__(self, q: int, p: int):
        super().__init__(q, p, label=f"full_chart({q},{p})")

    def contains(self, x) -> bool:
        return bool(np.all(np.isfinite(np.asarray(x, dtype=float))))

    def descriptor(self) -> dict:
        return {"kind": self.kind, "p": self.p, "q": self.q}


class Polytope(ConvexBody):
    """Intersection of open half-spaces <N_k, X> + c_k > 0.

    The interior reference point defaults to the Chebyshev center and the
    bounding radius is derived from per-coordinate linear programs (None
    when some coordinate is unbounded).
    """

    kind = "polytope"

    def __init__(self, q: int, p: int, functionals, interior_point=None):
        normals = []
        offsets = []
        for normal, offset in functionals:
            normal = as_chart_point(normal)
            if normal.shape != (q, p):
                raise ValueError("functional normal has the wrong shape")
            normals.append(normal)
            offsets.append(float(offset))
        if not normals:
            raise ValueError("a polytope needs at least one functional")
        self.normals = normals
        self.offsets = offsets
        self._normal_stack = np.stack([n.reshape(-1) for n in normals])
        self._offset_vec = np.array(offsets)
        if interior_point is None:
            interior_point = self._chebyshev_center(q, p)
        radius = self._bounding_radius(q, p)
        super().__init__(
            q,
            p,
            label=f"polytope({q},{p},{len(normals)})",
            bounding_radius=radius,
            interior_point=interior_point,
        )

    def contains(self, x) -> bool:
        vec = np.asarray(x, dtype=float).reshape(-1)
        return bool(np.all(self._normal_stack @ vec + self._offset_vec > 0.0))

    def _chebyshev_center(self, q: int, p: int) -> np.ndarray:
        d = q * p
        k = len(self.normals)
        a_ub = np.zeros((k, d + 1))
        b_ub = np.zeros(k)
        for i, (normal, offset) in enumerate(zip(self.normals, self.offsets)):
            a_ub[i, :d] = -normal.reshape(-1)
            a_ub[i, d] = np.linalg.norm(normal)
            b_ub[i] = offset
        objective = np.zeros(d + 1)
        objective[d] = -1.0
        bounds = [(-1e7, 1e7)] * d + [(0.0, None)]
        res = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if not res.success or res.x[d] <= 0.0:
            raise GeometryError("polytope has empty interior")
        return res.x[:d].reshape(q, p)

    def _bounding_radius(self, q: int, p: int) -> float | None:
        d = q * p
        a_ub = -self._normal_stack
        b_ub = self._offset_vec.copy()
        extents = np.zeros(d)
        for i in range(d):
            worst = 0.0
            for sign in (1.0, -1.0):
                objective = np.zeros(d)
                objective[i] = sign
                res = linprog(
                    objective,
                    A_ub=a_ub,
                    b_ub=b_ub,
                    bounds=[(None, None)] * d,
                    method="highs",
                )
                if res.status == 3:  # unbounded coordinate
                    return None
                if not res.success:
                    raise GeometryError("polytope bound LP failed")
                worst = max(worst, abs(res.x[i]))
            extents[i] = worst
        return float(np.linalg.norm(extents))

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.p,
            "q": self.q,
            "functionals": [
                {"normal": matrix_to_lists(n), "offset": c}
                for n, c in zip(self.normals, self.offsets)
            ],
        }


class AffineImage(ConvexBody):
    """Image of a body under an invertible affine map of the chart.

    The linear part acts on row-major vectorized chart points; ``offset``
    is a q-by-p matrix.
    """

    kind = "affine_image"

    def __init__(self, inner: ConvexBody, linear=None, offset=None):
        q, p = inner.shape
        d = q * p
        if linear is None:
            linear = np.eye(d)
        linear = np.asarray(linear, dtype=float)
        if linear.shape != (d, d):
            raise ValueError(f"linear part must be {d}x{d}")
        if offset is None:
            offset = np.zeros((q, p))
        offset = as_chart_point(offset)
        self.inner = inner
        self.linear = linear
        self.offset = offset
        self._linear_inv = np.linalg.inv(linear)
        radius = None
        if inner.bounding_radius is not None:
            gain = float(np.linalg.norm(linear, 2))
            radius = gain * inner.bounding_radius + float(np.linalg.norm(offset))

        def forward(x):
            return (linear @ np.asarray(x, float).reshape(-1)).reshape(q, p) + offset

        apex = None
        if inner.is_cone and inner.apex is not None:
            apex = forward(inner.apex)
        super().__init__(
            q,
            p,
            label=f"affine_image[{inner.label}]",
            bounding_radius=radius,
            is_cone=inner.is_cone,
            apex=apex,
            interior_point=forward(inner.interior_point),
        )

    @classmethod
    def from_left_right(cls, inner: ConvexBody, a_left, b_right, offset=None):
        """Image under X -> A X B + C with A q-by-q and B p-by-p."""
        a_left = np.asarray(a_left, dtype=float)
        b_right = np.asarray(b_right, dtype=float)
        return cls(inner, np.kron(a_left, b_right.T), offset)

    def map_point(self, x) -> np.ndarray:
        x = as_chart_point(x)
        return (self.linear @ x.reshape(-1)).reshape(self.shape) + self.offset

    def pull_back(self, y) -> np.ndarray:
        y = as_chart_point(y)
        vec = self._linear_inv @ (y - self.offset).reshape(-1)
        return vec.reshape(self.shape)

    def contains(self, x) -> bool:
        return self.inner.contains(self.pull_back(x))

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "inner": self.inner.descriptor(),
            "matrix": matrix_to_lists(self.linear),
            "offset": matrix_to_lists(self.offset),
        }


class TangentConeBody(ConvexBody):
    """Open tangent cone of a convex body at a boundary point.

    Membership holds when some positive rescaling toward the apex lands in
    the underlying body; by convexity the test is monotone in the scale, so
    a decreasing geometric scan down to SCAN_FLOOR decides it.
    """

    kind = "tangent_cone"

    def __init__(self, inner: ConvexBody, apex):
        apex = as_chart_point(apex)
        super().__init__(
            inner.q,
            inner.p,
            label=f"tangent_cone[{inner.label}]",
            is_cone=True,
            apex=apex,
            interior_point=inner.interior_point,
        )
        self.inner = inner

    def membership_scale(self, x) -> float | None:
        """The first scale in the scan at which membership holds, if any."""
        diff = as_chart_point(x) - self.apex
        s = 1.0
        while s >= SCAN_FLOOR:
            if self.inner.contains(self.apex + s * diff):
                return s
            s *= 0.5
        return None

    def contains(self, x) -> bool:
        return self.membership_scale(x) is not None

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "inner": self.inner.descriptor(),
            "point": matrix_to_lists(self.apex),
        }


# ---------------------------------------------------------------------------
# Line and boundary machinery


@dataclass(frozen=True)
class SegmentHit:
    """Exit parameters of a line from a body: t_minus < 0 < t_plus."""

    t_minus: float
    t_plus: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.t_minus) and math.isfinite(self.t_plus)

    @property
    def unbounded_both(self) -> bool:
        return math.isinf(self.t_minus) and math.isinf(self.t_plus)


def line_exit(body: ConvexBody, x, direction, sign: float = 1.0,
              tol: float = BISECT_TOL) -> float:
    """Signed exit parameter of {x + t*direction : t*sign >= 0}.

    Doubles out to a bracket, then bisects to |t_reported - t_true| <=
    tol * max(1, |t|).  Returns sign * inf when the ray is still inside
    past RAY_LIMIT.
    """
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    prev, t = 0.0, 1.0
    while body.contains(x + (sign * t) * direction):
        prev, t = t, 2.0 * t
        if prev > RAY_LIMIT:
            return sign * math.inf
    lo, hi = prev, t
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if body.contains(x + (sign * mid) * direction):
            lo = mid
        else:
            hi = mid
    return sign * 0.5 * (lo + hi)


def boundary_hits(body: ConvexBody, x, s: RankOneDirection,
                  tol: float | None = None) -> SegmentHit:
    """Exit parameters of the rank-one line x + t*S from the body."""
    x = as_chart_point(x)
    if not body.contains(x):
        raise PointOutside("base point of the line is outside the body")
    if tol is None:
        tol = BISECT_TOL
    d = s.matrix
    return SegmentHit(
        t_minus=line_exit(body, x, d, sign=-1.0, tol=tol),
        t_plus=line_exit(body, x, d, sign=+1.0, tol=tol),
    )


def delta_along(body: ConvexBody, x, s: RankOneDirection) -> float:
    """Distance from x to the boundary along the rank-one line x + R*S."""
    hit = boundary_hits(body, x, s)
    return min(abs(hit.t_minus), abs(hit.t_plus))


def certify_boundary(body: ConvexBody, e, tol: float = 1e-6) -> np.ndarray:
    """Project ``e`` onto the boundary along the ray from the interior point.

    The boundary crossing of the ray from the interior reference through
    ``e`` must lie within ``tol`` (relative) of ``e`` itself; otherwise the
    point is interior or too far outside and NotBoundary is raised.  The
    ray test is robust to the float coin-flip of membership exactly on the
    boundary.
    """
    e = as_chart_point(e)
    z0 = body.interior_point
    gap = e - z0
    reach = float(np.linalg.norm(gap))
    if reach == 0.0:
        raise NotBoundary("point coincides with the interior reference")
    unit = gap / reach
    # Bisect to machine precision: a tangent-cone scan at scale 2^-40
    # amplifies any apex offset by 1/scale, so the offset must sit at the
    # float noise floor for the cone oracle to resolve small margins.
    exit_param = line_exit(body, z0, unit, sign=+1.0, tol=1e-15)
    if not math.isfinite(exit_param):
        raise NotBoundary("ray toward the point never exits the body")
    if abs(exit_param - reach) > tol * max(1.0, reach):
        raise NotBoundary("point is interior or too far outside the body")
    return z0 + exit_param * unit


def tangent_cone(body: ConvexBody, e, tol: float = 1e-6) -> TangentConeBody:
    """Tangent cone of the body at a boundary-certified point ``e``."""
    apex = certify_boundary(body, e, tol=tol)
    return TangentConeBody(body, apex)


def hausdorff_distance_clipped(
    body_a: ConvexBody,
    body_b: ConvexBody,
    radius: float,
    direction_count: int = 512,
    seed: int = 0,
    base_point=None,
    tol: float = 1e-9,
) -> float:
    """Sampled local Hausdorff seminorm of two bodies clipped to the
    radius ball about the chart origin.

    Compares radial exit parameters from a common interior point over
    seeded unit directions; deterministic given the seed.
    """
    if body_a.shape != body_b.shape:
        raise ValueError("bodies must share a chart shape")
    candidates = []
    if base_point is not None:
        candidates.append(as_chart_point(base_point))
    candidates.extend([body_a.interior_point, body_b.interior_point])
    candidates.append(0.5 * (body_a.interior_point + body_b.interior_point))
    z0 = None
    for cand in candidates:
        if (
            np.linalg.norm(cand) < radius
            and body_a.contains(cand)
            and body_b.contains(cand)
        ):
            z0 = cand
            break
    if z0 is None:
        raise EmptyClip("no common interior point inside the clipping ball")
    rng = np.random.default_rng(seed)
    z_dot = float(np.linalg.norm(z0)) ** 2
    worst = 0.0
    for _ in range(direction_count):
        direction = rng.standard_normal(body_a.shape)
        direction /= np.linalg.norm(direction)
        c1 = float(np.sum(z0 * direction))
        s_ball = -c1 + math.sqrt(c1 * c1 + radius * radius - z_dot)
        ra = min(line_exit(body_a, z0, direction, tol=tol), s_ball)
        rb = min(line_exit(body_b, z0, direction, tol=tol), s_ball)
        worst = max(worst, abs(ra - rb))
    return worst


def z_hypersurface_contains(xi, x, tol: float = RANK_TOL) -> bool:
    """Whether the plane of ``x`` meets the plane ``xi`` nontrivially.

    ``xi`` may be a chart point of the same (square) shape as ``x`` or an
    explicit (p+q)-by-q basis of a q-plane.
    """
    x = as_chart_point(x)
    q, p = x.shape
    xi = np.asarray(xi, dtype=float)
    if xi.shape == (q, p):
        if p != q:
            raise ValueError("chart-point form of the test requires p = q")
        return numeric_rank(x - xi, tol) < p
    if xi.shape == (p + q, q):
        plane = np.vstack([np.eye(p), x])
        return numeric_rank(np.hstack([plane, xi]), tol) < p + q
    raise ValueError("xi must be a chart point or a (p+q)-by-q basis")


# ---------------------------------------------------------------------------
# Sampling helpers


def sample_interior(body: ConvexBody, rng: np.random.Generator, count: int,
                    scale: float | None = None) -> list[np.ndarray]:
    """Seeded interior samples around the reference point.

    Proposals outside the body are pulled toward the reference point by
    halving, so the sampler terminates on any valid body.
    """
    z0 = body.interior_point
    if not body.contains(z0):
        raise GeometryError("interior reference point is not a member")
    if scale is None:
        scale = body.bounding_radius if body.bounding_radius is not None else 1.0
    out = []
    dim = body.q * body.p
    while len(out) < count:
        direction = rng.standard_normal(body.shape)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        radius = scale * rng.uniform(0.0, 1.0) ** (1.0 / dim)
        x = z0 + (radius / norm) * direction
        for _ in range(80):
            if body.contains(x):
                out.append(x)
                break
            x = z0 + 0.5 * (x - z0)
    return out


def random_rank_one_direction(rng: np.random.Generator, q: int, p: int) -> RankOneDirection:
    u = rng.standard_normal(q)
    v = rng.standard_normal(p)
    return RankOneDirection(u, v)


def coordinate_directions(q: int, p: int) -> list[RankOneDirection]:
    dirs = []
    for i in range(q):
        for j in range(p):
            u = np.zeros(q)
            v = np.zeros(p)
            u[i] = 1.0
            v[j] = 1.0
            dirs.append(RankOneDirection(u, v))
    return dirs


def sample_rank_one_pair(
    body: ConvexBody,
    rng: np.random.Generator,
    fraction: float = 0.9,
    max_param: float = 10.0,
):
    """A member pair (x, y) with rank-one difference, plus its direction."""
    x = sample_interior(body, rng, 1)[0]
    s = random_rank_one_direction(rng, body.q, body.p)
    hit = boundary_hits(body, x, s)
    lo = max(hit.t_minus, -max_param) * fraction
    hi = min(hit.t_plus, max_param) * fraction
    t = rng.uniform(lo, hi)
    return x, x + t * s.matrix, s, t


# ---------------------------------------------------------------------------
# R-properness search


@dataclass
class RProperBudget:
    """Search budget for the rank-one-line scan."""

    points: int = 6
    random_dirs: int = 20
    boundary_probe_dirs: int = 6
    use_coordinate_dirs: bool = True
    t_grid: int = 33
    seed: int = 0

    def scaled(self, factor: float) -> "RProperBudget":
        return RProperBudget(
            points=max(1, int(round(self.points * factor))),
            random_dirs=max(0, int(round(self.random_dirs * factor))),
            boundary_probe_dirs=max(0, int(round(self.boundary_probe_dirs * factor))),
            use_coordinate_dirs=self.use_coordinate_dirs,
            t_grid=self.t_grid,
            seed=self.seed,
        )


@dataclass
class RProperVerdict:
    """Outcome of the rank-one-line search.

    ``no_violation_found`` is a sampling certificate, not a proof; a
    ``violation_witness`` is certified by membership on the whole sampled
    parameter grid out to T_BIG.
    """

    status: str
    witness_point: np.ndarray | None
    witness_direction: RankOneDirection | None
    stats: dict = field(default_factory=dict)

    @property
    def violation(self) -> bool:
        return self.status == "violation_witness"


def _violation_grid(t_grid: int) -> np.ndarray:
    half = max(2, (t_grid - 1) // 2)
    positive = np.logspace(-2, math.log10(T_BIG), half)
    return np.concatenate([-positive[::-1], [0.0], positive])


def is_r_proper(body: ConvexBody, budget: RProperBudget | None = None) -> RProperVerdict:
    """Search for a full rank-one affine line inside the body."""
    budget = budget or RProperBudget()
    rng = np.random.default_rng(budget.seed)
    q, p = body.shape

    points = [body.interior_point]
    if budget.points > 1:
        points.extend(sample_interior(body, rng, budget.points - 1))

    directions: list[RankOneDirection] = []
    if budget.use_coordinate_dirs:
        directions.extend(coordinate_directions(q, p))
    for _ in range(budget.random_dirs):
        directions.append(random_rank_one_direction(rng, q, p))
    # Structured probes: top singular direction of boundary-point offsets.
    z0 = body.interior_point
    for _ in range(budget.boundary_probe_dirs):
        probe = rng.standard_normal(body.shape)
        probe /= np.linalg.norm(probe)
        t_exit = line_exit(body, z0, probe)
        if not math.isfinite(t_exit):
            continue
        offset = t_exit * probe
        uu, _, vt = np.linalg.svd(offset)
        directions.append(RankOneDirection(uu[:, 0], vt[0, :]))

    grid = _violation_grid(budget.t_grid)
    tested = 0
    for x in points:
        for s in directions:
            tested += 1
            d = s.matrix
            if not (body.contains(x + T_BIG * d) and body.contains(x - T_BIG * d)):
                continue
            if all(body.contains(x + t * d) for t in grid):
                return RProperVerdict(
                    status="violation_witness",
                    witness_point=x,
                    witness_direction=s,
                    stats={
                        "pairs_tested": tested,
                        "points": len(points),
                        "directions": len(directions),
                        "seed": budget.seed,
                    },
                )
    return RProperVerdict(
        status="no_violation_found",
        witness_point=None,
        witness_direction=None,
        stats={
            "pairs_tested": tested,
            "points": len(points),
            "directions": len(directions),
            "seed": budget.seed,
        },
    )


# ---------------------------------------------------------------------------
# Extreme points and boundary adjacency


@dataclass
class ExtremeSearchBudget:
    samples: int = 192
    descent_starts: int = 6
    descent_iters: int = 80
    margin: float = 1e-3
    det_tol: float = DET_TOL
    seed: int = 0

    def scaled(self, factor: float) -> "ExtremeSearchBudget":
        return ExtremeSearchBudget(
            samples=max(8, int(round(self.samples * factor))),
            descent_starts=max(1, int(round(self.descent_starts * factor))),
            descent_iters=max(10, int(round(self.descent_iters * factor))),
            margin=self.margin,
            det_tol=self.det_tol,
            seed=self.seed,
        )


@dataclass
class ExtremeTestResult:
    status: str  # "extreme_evidence" | "non_extreme_witness"
    witness: np.ndarray | None
    attained_min: float
    evaluations: int

    @property
    def is_extreme(self) -> bool:
        return self.status == "extreme_evidence"


def _cofactor(m: np.ndarray) -> np.ndarray:
    """Cofactor matrix (the gradient of det), stable near singularity."""
    u, s, vt = np.linalg.svd(m)
    n = m.shape[0]
    prods = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    orientation = np.linalg.det(u) * np.linalg.det(vt)
    return orientation * (u * prods) @ vt


def extreme_point_test(
    body: ConvexBody, e, budget: ExtremeSearchBudget | None = None
) -> ExtremeTestResult:
    """Search for a member of the determinant hypersurface through ``e``.

    Minimizes |det(X - e)| over a margin-retracted copy of the body by
    sign-change bisection and Newton steps toward the zero set.  The
    margin keeps the search away from the boundary, where |det| can decay
    to zero even at extreme points.
    """
    if body.p != body.q:
        raise ValueError("the determinant test requires a square chart")
    budget = budget or ExtremeSearchBudget()
    e = certify_boundary(body, e)
    z0 = body.interior_point
    shrink = 1.0 - budget.margin

    def member(x: np.ndarray) -> bool:
        return body.contains(z0 + (x - z0) / shrink)

    def retract(x: np.ndarray) -> np.ndarray:
        return z0 + shrink * (x - z0)

    rng = np.random.default_rng(budget.seed)
    samples = [retract(x) for x in sample_interior(body, rng, budget.samples)]
    dets = np.array([np.linalg.det(x - e) for x in samples])
    evaluations = len(samples)

    order = np.argsort(np.abs(dets))
    best_x = samples[order[0]]
    best_f = abs(dets[order[0]])

    # A sign change brackets the zero set; the segment stays in the body.
    pos = np.argmax(dets)
    neg = np.argmin(dets)
    if dets[pos] > 0.0 > dets[neg]:
        lo_x, hi_x = samples[neg], samples[pos]
        f_lo = dets[neg]
        for _ in range(100):
            mid = 0.5 * (lo_x + hi_x)
            f_mid = np.linalg.det(mid - e)
            evaluations += 1
            if abs(f_mid) < best_f:
                best_f, best_x = abs(f_mid), mid
            if f_mid == 0.0:
                break
            if (f_mid < 0.0) == (f_lo < 0.0):
                lo_x, f_lo = mid, f_mid
            else:
                hi_x = mid
        return ExtremeTestResult("non_extreme_witness", best_x, best_f, evaluations)

    # Newton steps toward the hypersurface, projected into the retracted body.
    for start_idx in order[: budget.descent_starts]:
        x = samples[start_idx]
        fx = np.linalg.det(x - e)
        for _ in range(budget.descent_iters):
            if abs(fx) <= budget.det_tol * 1e-3:
                break
            grad = _cofactor(x - e)
            grad_sq = float(np.sum(grad * grad))
            if grad_sq < 1e-30:
                break
            step = (-fx / grad_sq) * grad
            eta, moved = 1.0, False
            while eta > 1e-8:
                xn = x + eta * step
                if member(xn):
                    fn = np.linalg.det(xn - e)
                    evaluations += 1
                    if abs(fn) < abs(fx):
                        x, fx, moved = xn, fn, True
                        break
                eta *= 0.5
            if not moved:
                break
        if abs(fx) < best_f:
            best_f, best_x = abs(fx), x

    if best_f <= budget.det_tol:
        return ExtremeTestResult("non_extreme_witness", best_x, best_f, evaluations)
    return ExtremeTestResult("extreme_evidence", None, best_f, evaluations)


@dataclass
class AdjacencyVerdict:
    adjacent: bool
    difference_rank: int
    segment_samples: int


def boundary_adjacent(
    body: ConvexBody,
    x,
    y,
    segment_samples: int = 17,
    inward_eps: float = 1e-6,
    extension: float = 1e-3,
    tol: float = 1e-6,
) -> AdjacencyVerdict:
    """Whether two boundary points lie in one open boundary line segment.

    True when the difference has rank at most one and the sampled points
    of the segment, extended slightly past both endpoints, all lie on the
    boundary.  The extension realizes the open-interval condition: both
    points must be interior to the boundary trace of the line, so the
    endpoint of a boundary face is not adjacent to the face's interior.
    A point counts as on the boundary when its inward perturbation toward
    the interior reference is a member while the outward one is not.
    """
    x = certify_boundary(body, x, tol=tol)
    y = certify_boundary(body, y, tol=tol)
    diff = y - x
    rank = numeric_rank(diff)
    if np.linalg.norm(diff) <= 1e-12 * max(1.0, np.linalg.norm(x)):
        return AdjacencyVerdict(True, 0, 0)
    if rank > 1:
        return AdjacencyVerdict(False, rank, 0)
    z0 = body.interior_point
    lambdas = np.concatenate(
        [[-extension], np.linspace(0.0, 1.0, segment_samples + 2)[1:-1],
         [1.0 + extension]]
    )
    for lam in lambdas:
        z = x + lam * diff
        inward = z + inward_eps * (z0 - z)
        outward = z - inward_eps * (z0 - z)
        if body.contains(outward) or not body.contains(inward):
            return AdjacencyVerdict(False, rank, segment_samples)
    return AdjacencyVerdict(True, rank, segment_samples)


# ---------------------------------------------------------------------------
# Descriptors


def body_from_descriptor(desc: dict) -> ConvexBody:
    """Build a body from its JSON descriptor; unknown fields are rejected."""
    if not isinstance(desc, dict):
        raise DescriptorError("domain descriptor must be an object")
    kind = desc.get("kind")
    try:
        if kind == "operator_ball":
            _require_keys(desc, {"kind", "p", "q"})
            return OperatorNormBall(int(desc["q"]), int(desc["p"]))
        if kind == "half_cone":
            _require_keys(desc, {"kind", "p"})
            return PositiveHalfCone(int(desc["p"]))
        if kind == "full_chart":
            _require_keys(desc, {"kind", "p", "q"})
            return FullChart(int(desc["q"]), int(desc["p"]))
        if kind == "polytope":
            _require_keys(desc, {"kind", "p", "q", "functionals"})
            functionals = [
                (matrix_from_lists(item["normal"]), float(item["offset"]))
                for item in desc["functionals"]
            ]
            return Polytope(int(desc["q"]), int(desc["p"]), functionals)
        if kind == "affine_image":
            _require_keys(desc, {"kind", "inner", "matrix", "offset"})
            inner = body_from_descriptor(desc["inner"])
            return AffineImage(
                inner,
                matrix_from_lists(desc["matrix"]),
                matrix_from_lists(desc["offset"]),
            )
        if kind == "tangent_cone":
            _require_keys(desc, {"kind", "inner", "point"})
            inner = body_from_descriptor(desc["inner"])
            return tangent_cone(inner, matrix_from_lists(desc["point"]))
    except DescriptorError:
        raise
    except (KeyError, TypeError, ValueError, GeometryError) as exc:
        raise DescriptorError(f"bad {kind!r} descriptor: {exc}") from exc
    raise DescriptorError(f"unknown domain kind {kind!r}")


def _require_keys(desc: dict, allowed: set):
    unknown = set(desc) - allowed
    if unknown:
        raise DescriptorError(f"unknown descriptor fields: {sorted(unknown)}")
    missing = allowed - set(desc)
    if missing:
        raise DescriptorError(f"missing descriptor fields: {sorted(missing)}")
