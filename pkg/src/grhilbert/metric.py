"""The generalized Hilbert metric on convex chart domains.

Single rank-one segments carry the exact cross-ratio distance rho; the
full metric is the infimum of rho-sums over chains of rank-one segments.
It is approximated from above by chain refinement and controlled from
below by the classical Hilbert metric of the body in its ambient chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .domains import (
    ConvexBody,
    SegmentHit,
    boundary_hits,
    delta_along,
    line_exit,
    random_rank_one_direction,
    sample_interior,
)
from .errors import (
    BallNotContained,
    DegenerateConfiguration,
    GeometryError,
    PointOutside,
)
from .lingeom import RankOneDirection, as_chart_point, cross_ratio

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# Relative second-singular-value level below which a difference counts as
# rank one inside the metric (tighter than the generic rank tolerance so
# transformed rank-one pairs survive round-off).
SEGMENT_RANK_TOL = 1e-9


@dataclass(frozen=True)
class RhoValue:
    """Single-segment distance together with its witnessing endpoints."""

    value: float
    endpoints: SegmentHit | None

    @property
    def properness_violation(self) -> bool:
        """True when the whole line lay inside the body (degenerate zero)."""
        return self.endpoints is not None and self.endpoints.unbounded_both


def _chord_value(body: ConvexBody, x: np.ndarray, y: np.ndarray,
                 direction: np.ndarray, length: float) -> float:
    """|log cross ratio| along the chord x + t*direction containing y."""
    t_plus = line_exit(body, x, direction, sign=+1.0)
    t_minus = line_exit(body, x, direction, sign=-1.0)
    ratio = cross_ratio(t_minus, 0.0, length, t_plus)
    return abs(math.log(ratio))


def rho(body: ConvexBody, x, y, tol: float | None = None) -> RhoValue:
    """Exact single-segment distance between two members.

    Infinite when the difference has rank above one; zero exactly when the
    points coincide or the whole rank-one line lies inside the body.
    """
    x = as_chart_point(x)
    y = as_chart_point(y)
    if not body.contains(x) or not body.contains(y):
        raise PointOutside("rho requires both points inside the body")
    diff = y - x
    scale = float(np.linalg.norm(diff))
    if scale == 0.0:
        return RhoValue(0.0, None)
    sv = np.linalg.svd(diff, compute_uv=False)
    if len(sv) > 1 and sv[1] > SEGMENT_RANK_TOL * sv[0]:
        return RhoValue(math.inf, None)
    direction = RankOneDirection.from_matrix(diff, tol=1.0)  # rank checked above
    length = float(sv[0])
    hit = boundary_hits(body, x, direction, tol=tol)
    ratio = cross_ratio(hit.t_minus, 0.0, length, hit.t_plus)
    return RhoValue(abs(math.log(ratio)), hit)


def hilbert_classical(body: ConvexBody, x, y) -> float:
    """Classical Hilbert metric for a p = 1 chart (all directions allowed)."""
    if body.p != 1:
        raise ValueError("the classical Hilbert metric requires p = 1")
    return hilbert_lower_bound(body, x, y)


def hilbert_lower_bound(body: ConvexBody, x, y) -> float:
    """Hilbert metric of the body as a convex set in its ambient chart.

    Treats every chart direction as admissible, which can only shorten
    distances, so the value is a lower bound for the rank-one metric.
    """
    x = as_chart_point(x)
    y = as_chart_point(y)
    if not body.contains(x) or not body.contains(y):
        raise PointOutside("both points must be inside the body")
    diff = y - x
    scale = float(np.linalg.norm(diff))
    if scale == 0.0:
        return 0.0
    return _chord_value(body, x, y, diff / scale, scale)


# ---------------------------------------------------------------------------
# Chains


@dataclass
class Chain:
    """Waypoints joined by rank-one segments: X_{i+1} = X_i + t_i S_i."""

    waypoints: list
    directions: list
    steps: list

    @property
    def segments(self) -> int:
        return len(self.steps)

    def reconstruction_error(self) -> float:
        worst = 0.0
        for i, (s, t) in enumerate(zip(self.directions, self.steps)):
            gap = self.waypoints[i + 1] - (self.waypoints[i] + t * s.matrix)
            worst = max(worst, float(np.linalg.norm(gap)))
        return worst


def _segment_data(a: np.ndarray, b: np.ndarray):
    """Direction and step of the rank-one segment from a to b."""
    diff = b - a
    u, s, vt = np.linalg.svd(diff)
    direction = RankOneDirection(u[:, 0], vt[0, :])
    return direction, float(s[0])


def _chain_from_waypoints(waypoints: list) -> Chain:
    directions, steps = [], []
    for a, b in zip(waypoints, waypoints[1:]):
        direction, step = _segment_data(a, b)
        directions.append(direction)
        steps.append(step)
    return Chain(list(waypoints), directions, steps)


def svd_chain(x, y, trim_tol: float = 1e-13) -> Chain:
    """Chain through partial sums of the SVD of Y - X.

    Singular values are taken in decreasing order (ties broken by lower
    index); each segment difference is rank one by construction.
    """
    x = as_chart_point(x)
    y = as_chart_point(y)
    diff = y - x
    u, s, vt = np.linalg.svd(diff)
    order = np.argsort(-s, kind="stable")
    waypoints = [x]
    directions: list[RankOneDirection] = []
    steps: list[float] = []
    top = s[order[0]] if len(s) else 0.0
    for idx in order:
        if s[idx] <= max(trim_tol * top, 1e-300):
            continue
        direction = RankOneDirection(u[:, idx], vt[idx, :])
        directions.append(direction)
        steps.append(float(s[idx]))
        waypoints.append(waypoints[-1] + float(s[idx]) * direction.matrix)
    if directions:
        waypoints[-1] = y.copy()
    return Chain(waypoints, directions, steps)


def _interleaved_waypoints(x, y, rounds: int) -> list:
    """Waypoints alternating the SVD components in ``rounds`` passes.

    As the number of rounds grows the polyline converges uniformly to the
    straight segment [x, y], which lies in any convex body containing both
    endpoints; this is the feasibility fallback for chains.
    """
    diff = y - x
    u, s, vt = np.linalg.svd(diff)
    order = [i for i in np.argsort(-s, kind="stable") if s[i] > 1e-13 * s.max()]
    waypoints = [x]
    current = x.copy()
    for _ in range(rounds):
        for idx in order:
            current = current + (s[idx] / rounds) * np.outer(u[:, idx], vt[idx, :])
            waypoints.append(current)
    waypoints[-1] = y.copy()
    return waypoints


def feasible_chain(body: ConvexBody, x, y) -> Chain:
    """SVD chain with interleaved subdivision until all waypoints are members."""
    x = as_chart_point(x)
    y = as_chart_point(y)
    if float(np.linalg.norm(y - x)) == 0.0:
        return Chain([x], [], [])
    rounds = 1
    while rounds <= 2048:
        if rounds == 1:
            chain = svd_chain(x, y)
            waypoints = chain.waypoints
        else:
            waypoints = _interleaved_waypoints(x, y, rounds)
            chain = _chain_from_waypoints(waypoints)
        if all(body.contains(w) for w in waypoints):
            return chain
        rounds *= 2
    raise GeometryError("could not produce a feasible chain (is the body convex?)")


# ---------------------------------------------------------------------------
# Upper-bound estimation


@dataclass
class MetricBudget:
    """Refinement budget for the chain estimator."""

    resplit_grid: int = 12
    golden_iters: int = 16
    sweeps: int = 3
    rounds: int = 3
    restart_rounds: int = 1
    slide_iters: int = 14
    restarts: int = 2
    max_segments: int | None = None
    seed: int = 0
    improve_rtol: float = 1e-12
    inner_tol: float = 3e-8

    def scaled(self, factor: float) -> "MetricBudget":
        return replace(
            self,
            resplit_grid=max(4, int(round(self.resplit_grid * factor))),
            golden_iters=max(6, int(round(self.golden_iters * factor))),
            rounds=max(1, int(round(self.rounds * factor))),
            slide_iters=max(0, int(round(self.slide_iters * factor))),
            restarts=max(0, int(round(self.restarts * factor))),
        )

    def to_jsonable(self) -> dict:
        return {
            "resplit_grid": self.resplit_grid,
            "golden_iters": self.golden_iters,
            "sweeps": self.sweeps,
            "rounds": self.rounds,
            "slide_iters": self.slide_iters,
            "restarts": self.restarts,
            "max_segments": self.max_segments,
            "seed": self.seed,
        }


@dataclass
class MetricEstimate:
    """Certified upper bound for the chain metric with its witness chain."""

    value: float
    chain: Chain
    segment_rhos: list
    trace: list
    budget: MetricBudget
    seed: int

    def to_jsonable(self) -> dict:
        return {
            "value": self.value,
            "chain": [[list(map(float, row)) for row in w] for w in self.chain.waypoints],
            "segment_rhos": [float(v) for v in self.segment_rhos],
            "trace": [float(v) for v in self.trace],
            "seed": self.seed,
            "budget": self.budget.to_jsonable(),
        }


def _rho_or_inf(body: ConvexBody, a: np.ndarray, b: np.ndarray,
                tol: float | None = None) -> float:
    try:
        return rho(body, a, b, tol=tol).value
    except DegenerateConfiguration:
        return math.inf


def _chain_cost(body: ConvexBody, waypoints: list,
                tol: float | None = None) -> tuple[float, list]:
    rhos = [_rho_or_inf(body, a, b, tol=tol) for a, b in zip(waypoints, waypoints[1:])]
    return sum(rhos), rhos


def _golden_min(fun, lo: float, hi: float, iters: int):
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def _resplit_window(body: ConvexBody, wa: np.ndarray, wc: np.ndarray,
                    budget: MetricBudget):
    """Best two-segment route from wa to wc through the rank-one splitting
    family of their (rank at most two) difference.

    Returns (cost, middle_waypoint) or (cost, None) when the difference is
    rank one and the straight segment wins.
    """
    diff = wc - wa
    u, s, vt = np.linalg.svd(diff)
    if s[0] == 0.0:
        return 0.0, None
    if len(s) < 2 or s[1] <= 1e-12 * s[0]:
        return _rho_or_inf(body, wa, wc, tol=budget.inner_tol), None
    sigma1, sigma2 = float(s[0]), float(s[1])
    u1, u2 = u[:, 0], u[:, 1]
    v1, v2 = vt[0, :], vt[1, :]

    def middle(alpha: float, beta: float):
        ca, sa = math.cos(alpha), math.sin(alpha)
        cb, sb = math.cos(beta), math.sin(beta)
        den = ca * cb / sigma1 + sa * sb / sigma2
        if abs(den) < 1e-9:
            return None
        part = (1.0 / den) * np.outer(ca * u1 + sa * u2, cb * v1 + sb * v2)
        return wa + part

    best = {"cost": math.inf, "ab": (0.0, 0.0)}

    def cost_at(alpha: float, beta: float) -> float:
        w = middle(alpha, beta)
        if w is None or not body.contains(w):
            return math.inf
        value = (_rho_or_inf(body, wa, w, tol=budget.inner_tol)
                 + _rho_or_inf(body, w, wc, tol=budget.inner_tol))
        if value < best["cost"]:
            best["cost"], best["ab"] = value, (alpha, beta)
        return value

    # Coarse scan of the (alpha, beta) torus; angles have period pi.
    grid = np.linspace(0.0, math.pi, budget.resplit_grid, endpoint=False)
    for alpha in grid:
        for beta in grid:
            cost_at(alpha, beta)
    if not math.isfinite(best["cost"]):
        return math.inf, None
    spread = math.pi / budget.resplit_grid
    for _ in range(budget.sweeps):
        alpha, beta = best["ab"]
        _golden_min(lambda a: cost_at(a, beta), alpha - spread, alpha + spread,
                    budget.golden_iters)
        alpha, beta = best["ab"]
        _golden_min(lambda b: cost_at(alpha, b), beta - spread, beta + spread,
                    budget.golden_iters)
        spread *= 0.35
    alpha, beta = best["ab"]
    return best["cost"], middle(alpha, beta)


def _slide_waypoint(body: ConvexBody, wa, wm, wc, budget: MetricBudget):
    """Slide the middle waypoint along directions that keep both segments
    rank one (mixing one factor of each adjacent direction)."""
    d1, _ = _segment_data(wa, wm)
    d2, _ = _segment_data(wm, wc)
    base = (_rho_or_inf(body, wa, wm, tol=budget.inner_tol)
            + _rho_or_inf(body, wm, wc, tol=budget.inner_tol))
    best_cost, best_w = base, None
    for slide in (np.outer(d1.u, d2.v), np.outer(d2.u, d1.v)):
        norm = float(np.linalg.norm(slide))
        if norm == 0.0:
            continue
        slide = slide / norm
        hi = line_exit(body, wm, slide, sign=+1.0)
        lo = line_exit(body, wm, slide, sign=-1.0)
        hi = min(hi, 1e3) * 0.98
        lo = max(lo, -1e3) * 0.98

        def cost_at(t: float) -> float:
            w = wm + t * slide
            if not body.contains(w):
                return math.inf
            return (_rho_or_inf(body, wa, w, tol=budget.inner_tol)
                    + _rho_or_inf(body, w, wc, tol=budget.inner_tol))

        t_best, value = _golden_min(cost_at, lo, hi, budget.slide_iters)
        if value < best_cost:
            best_cost, best_w = value, wm + t_best * slide
    return best_cost, best_w


def _refine(body: ConvexBody, waypoints: list, budget: MetricBudget,
            trace: list) -> tuple[list, float]:
    """In-place chain refinement.

    Candidates are screened at the loose inner tolerance; a change is kept
    only when the full-precision chain cost actually drops, so the cost
    and the trace are strictly nonincreasing.
    """
    cost, _ = _chain_cost(body, waypoints)

    def commit_if_better() -> bool:
        nonlocal cost
        new_cost, _ = _chain_cost(body, waypoints)
        if new_cost < cost * (1.0 - budget.improve_rtol):
            cost = new_cost
            trace.append(cost)
            return True
        return False

    for _ in range(budget.rounds):
        improved = False
        # (a) pairwise re-decomposition over consecutive segment windows
        i = 0
        while i + 2 <= len(waypoints) - 1:
            wa, wm, wc = waypoints[i], waypoints[i + 1], waypoints[i + 2]
            window_now = (_rho_or_inf(body, wa, wm, tol=budget.inner_tol)
                          + _rho_or_inf(body, wm, wc, tol=budget.inner_tol))
            window_best, middle = _resplit_window(body, wa, wc, budget)
            if window_best < window_now * (1.0 - budget.improve_rtol):
                old = waypoints[i + 1]
                if middle is None:
                    del waypoints[i + 1]
                else:
                    waypoints[i + 1] = middle
                if commit_if_better():
                    improved = True
                elif middle is None:
                    waypoints.insert(i + 1, old)
                else:
                    waypoints[i + 1] = old
            i += 1
        # (b) waypoint slides along rank-one-preserving directions
        if budget.slide_iters > 0:
            for i in range(1, len(waypoints) - 1):
                wa, wm, wc = waypoints[i - 1], waypoints[i], waypoints[i + 1]
                window_now = (_rho_or_inf(body, wa, wm, tol=budget.inner_tol)
                              + _rho_or_inf(body, wm, wc, tol=budget.inner_tol))
                slid_cost, slid = _slide_waypoint(body, wa, wm, wc, budget)
                if slid is not None and slid_cost < window_now * (1.0 - budget.improve_rtol):
                    old = waypoints[i]
                    waypoints[i] = slid
                    if commit_if_better():
                        improved = True
                    else:
                        waypoints[i] = old
        if not improved:
            break
    return waypoints, cost


def k_estimate(
    body: ConvexBody,
    x,
    y,
    budget: MetricBudget | None = None,
    seed_waypoints=None,
) -> MetricEstimate:
    """Upper-bound estimate of the chain metric between two members.

    Initial routes come from the SVD chain of Y - X and from any seeded
    waypoint routes (each leg estimated recursively at the same budget,
    so a seeded concatenation is never worse than the sum of its legs).
    Refinement re-splits consecutive segment pairs through the full
    two-angle family of rank-one splittings, slides waypoints, and
    restarts through random interior points.  The refinement trace is
    nonincreasing and everything is deterministic given the seed.
    """
    budget = budget or MetricBudget()
    x = as_chart_point(x)
    y = as_chart_point(y)
    if not body.contains(x) or not body.contains(y):
        raise PointOutside("both endpoints must be inside the body")
    if budget.max_segments is None:
        budget = replace(budget, max_segments=2 * min(body.p, body.q))

    if float(np.linalg.norm(y - x)) == 0.0:
        empty = Chain([x], [], [])
        return MetricEstimate(0.0, empty, [], [0.0], budget, budget.seed)

    if min(body.p, body.q) == 1:
        # Every difference is rank one and rho is additive along chords, so
        # the single segment is exactly optimal; refinement cannot help.
        chain = svd_chain(x, y)
        value = _rho_or_inf(body, x, y)
        return MetricEstimate(value, chain, [value], [value], budget, budget.seed)

    routes = [feasible_chain(body, x, y).waypoints]
    if seed_waypoints is not None:
        middles = [as_chart_point(w) for w in seed_waypoints]
        stations = [x, *middles, y]
        seeded: list[np.ndarray] = [x]
        for a, b in zip(stations, stations[1:]):
            leg = k_estimate(body, a, b, budget=budget)
            seeded.extend(leg.chain.waypoints[1:])
        routes.append(seeded)

    best_waypoints, best_cost = None, math.inf
    for route in routes:
        cost, _ = _chain_cost(body, route)
        if cost < best_cost:
            best_cost, best_waypoints = cost, [w.copy() for w in route]
    trace = [best_cost]

    best_waypoints, best_cost = _refine(body, best_waypoints, budget, trace)

    rng = np.random.default_rng(budget.seed)
    for _ in range(budget.restarts):
        middle = sample_interior(body, rng, 1)[0]
        try:
            route = (
                feasible_chain(body, x, middle).waypoints
                + feasible_chain(body, middle, y).waypoints[1:]
            )
        except GeometryError:
            continue
        local_trace = [_chain_cost(body, route)[0]]
        route, cost = _refine(
            body, route, replace(budget, rounds=budget.restart_rounds), local_trace
        )
        if cost < best_cost * (1.0 - budget.improve_rtol):
            best_cost, best_waypoints = cost, route
            trace.append(cost)

    final_cost, rhos = _chain_cost(body, best_waypoints)
    chain = _chain_from_waypoints(best_waypoints)
    if final_cost < trace[-1]:
        trace.append(final_cost)
    return MetricEstimate(final_cost, chain, rhos, trace, budget, budget.seed)


# ---------------------------------------------------------------------------
# Appendix-style lower bounds


@dataclass
class BallLowerBound:
    """Linear lower-bound factor for rho on pairs inside a Euclidean ball."""

    factor: float
    m_sample_max: float
    eps: float
    ball_directions: int
    delta_samples: int

    def bound(self, separation: float) -> float:
        return self.factor * separation


def rho_lower_bound_ball(
    body: ConvexBody,
    x,
    eps: float,
    m_bound: float | None = None,
    ball_directions: int = 128,
    delta_samples: int = 160,
    seed: int = 0,
) -> BallLowerBound:
    """Factor 1/(eps + M) bounding rho from below on close rank-one pairs.

    M is the supremum of the nearest-boundary distance along rank-one
    lines over the closed eps-ball at x, estimated by sampling and
    reported with its sample maximum.  For rank-one pairs z1, z2 in the
    ball with separation at most eps, rho(z1, z2) >= factor * |z1 - z2|.
    """
    x = as_chart_point(x)
    if not body.contains(x):
        raise PointOutside("ball center must be inside the body")
    rng = np.random.default_rng(seed)
    for _ in range(ball_directions):
        direction = rng.standard_normal(body.shape)
        direction /= np.linalg.norm(direction)
        if not body.contains(x + eps * direction):
            raise BallNotContained("closed eps-ball is not inside the body")
    if m_bound is None:
        dim = body.q * body.p
        m_bound = 0.0
        for _ in range(delta_samples):
            direction = rng.standard_normal(body.shape)
            direction /= np.linalg.norm(direction)
            z = x + eps * rng.uniform(0.0, 1.0) ** (1.0 / dim) * direction
            s = random_rank_one_direction(rng, body.q, body.p)
            dist = delta_along(body, z, s)
            if math.isinf(dist):
                raise GeometryError(
                    "nearest-boundary distance unbounded; the body is not R-proper"
                )
            m_bound = max(m_bound, dist)
    return BallLowerBound(
        factor=1.0 / (eps + m_bound),
        m_sample_max=m_bound,
        eps=eps,
        ball_directions=ball_directions,
        delta_samples=delta_samples,
    )
