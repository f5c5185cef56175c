"""Automorphisms of the operator-norm ball and its Cayley-model cone.

The quadratic form J = diag(I_p, -I_p) matches the chart convention: a
plane [I_p; X] is J-positive exactly when X is in the open unit ball of
the operator norm, so exp of the J-antisymmetric algebra preserves the
ball and never leaves the chart.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .domains import OperatorNormBall, PositiveHalfCone, sample_interior, spectral_norm
from .errors import ConvergenceNotReached, NotOrthogonal
from .lingeom import (
    RANK_TOL,
    ProjectiveTransform,
    _sign_normalize,
    compound,
    plucker_embed,
)

logger = logging.getLogger(__name__)

# Single source of truth for the sign conventions of the indefinite form.
def j_form(p: int) -> np.ndarray:
    return np.diag([1.0] * p + [-1.0] * p)


def so_pp_defect(m: np.ndarray, p: int) -> float:
    """Frobenius norm of M^T J + J M; zero on the Lie algebra so(p, p)."""
    j = j_form(p)
    return float(np.linalg.norm(m.T @ j + j @ m))


@dataclass
class IndefiniteGenerator:
    """Element of so(p, p) built to satisfy the algebra identity exactly."""

    p: int
    algebra: np.ndarray

    def defect(self) -> float:
        return so_pp_defect(self.algebra, self.p)

    def transform(self, t: float = 1.0) -> ProjectiveTransform:
        return ProjectiveTransform(expm(t * self.algebra), self.p, self.p)


def random_so_pp(p: int, seed=0) -> IndefiniteGenerator:
    """Seeded random algebra element [[A, B], [B^T, D]] with A, D antisymmetric.

    Scaled so the spectral norm is at most one.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    raw_a = rng.standard_normal((p, p))
    raw_d = rng.standard_normal((p, p))
    a = 0.5 * (raw_a - raw_a.T)
    d = 0.5 * (raw_d - raw_d.T)
    b = rng.standard_normal((p, p))
    m = np.block([[a, b], [b.T, d]])
    norm = np.linalg.norm(m, 2)
    if norm > 1.0:
        m = m / norm
    return IndefiniteGenerator(p=p, algebra=m)


@dataclass
class OneParameterGroup:
    """One-parameter group t -> exp(t * generator) in PGL_(2p)."""

    generator: np.ndarray
    p: int
    q: int

    def evaluate(self, t: float) -> ProjectiveTransform:
        return ProjectiveTransform(expm(t * self.generator), self.p, self.q)


def homothety_group(p: int) -> OneParameterGroup:
    """Group acting on a square chart by X -> e^t X; preserves the half cone."""
    generator = np.diag([0.0] * p + [1.0] * p)
    return OneParameterGroup(generator=generator, p=p, q=p)


def rescaling_group(x0) -> OneParameterGroup:
    """Dilations centered at the chart point x0: X -> e^t (X - x0) + x0.

    The generator [[0, 0], [-x0, I]] is idempotent, so the exponential is
    exactly [[I, 0], [(1 - e^t) x0, e^t I]].
    """
    x0 = np.asarray(x0, dtype=float)
    p = x0.shape[1]
    if x0.shape != (p, p):
        raise ValueError("rescaling groups require a square chart point")
    generator = np.block([[np.zeros((p, p)), np.zeros((p, p))], [-x0, np.eye(p)]])
    return OneParameterGroup(generator=generator, p=p, q=p)


def unipotent_translation(p: int, q: int, y) -> ProjectiveTransform:
    """Chart translation X -> X + Y as a unipotent projective transform."""
    y = np.asarray(y, dtype=float)
    if y.shape != (q, p):
        raise ValueError("translation offset must be q-by-p")
    return ProjectiveTransform.from_blocks(
        np.eye(p), np.zeros((p, q)), y, np.eye(q)
    )


# ---------------------------------------------------------------------------
# Cayley transform onto the positive half cone

_CAYLEY_FLIP: dict[int, bool] = {}


def cayley_orientation(p: int) -> bool:
    """Whether the raw Cayley block map needs the X -> -X post-fix.

    Resolved empirically once per p by sampling eight ball points and
    checking that their images satisfy the cone membership; the resolved
    convention is logged and cached.
    """
    if p not in _CAYLEY_FLIP:
        raw = ProjectiveTransform.from_blocks(
            -np.eye(p), np.eye(p), np.eye(p), np.eye(p)
        )
        ball = OperatorNormBall(p, p)
        cone = PositiveHalfCone(p)
        rng = np.random.default_rng(0)
        samples = sample_interior(ball, rng, 8)
        in_cone = sum(cone.contains(raw.apply(x)) for x in samples)
        _CAYLEY_FLIP[p] = in_cone < len(samples)
        logger.info(
            "cayley orientation for p=%d: raw map sends %d/%d samples into the "
            "cone; sign flip %s",
            p, in_cone, len(samples), "applied" if _CAYLEY_FLIP[p] else "not needed",
        )
    return _CAYLEY_FLIP[p]


def cayley(p: int, a=None) -> ProjectiveTransform:
    """Projective map sending the operator ball onto the positive half cone.

    ``a`` is the orthogonal matrix at whose antipode the cone apex sits;
    by direct evaluation the block map [[-I, A^-1], [I, A^-1]] sends -A to
    the apex and its raw image is the wrong half, so the empirically
    resolved orientation fix is composed on top.
    """
    if a is None:
        a = np.eye(p)
    a = np.asarray(a, dtype=float)
    if np.linalg.norm(a.T @ a - np.eye(p)) > 1e-10:
        raise NotOrthogonal("cayley requires an orthogonal matrix")
    a_inv = a.T
    raw = ProjectiveTransform.from_blocks(-np.eye(p), a_inv, np.eye(p), a_inv)
    if cayley_orientation(p):
        flip = ProjectiveTransform.from_blocks(
            np.eye(p), np.zeros((p, p)), np.zeros((p, p)), -np.eye(p)
        )
        return flip @ raw
    return raw


# ---------------------------------------------------------------------------
# Ball preservation and degenerate limits


def verify_ball_preserved(g: ProjectiveTransform, samples: int = 1000,
                          seed: int = 0) -> dict:
    """Report whether a transform maps sampled ball points into the ball."""
    p = g.p
    ball = OperatorNormBall(p, p)
    rng = np.random.default_rng(seed)
    violations = 0
    max_margin_change = 0.0
    for x in sample_interior(ball, rng, samples):
        try:
            image = g.apply(x)
        except Exception:
            violations += 1
            continue
        if not ball.contains(image):
            violations += 1
            continue
        margin_change = abs(
            (1.0 - spectral_norm(image)) - (1.0 - spectral_norm(x))
        )
        max_margin_change = max(max_margin_change, margin_change)
    return {
        "check": "ball_preserved",
        "p": p,
        "samples": samples,
        "violations": violations,
        "max_defect": max_margin_change,
        "seed": seed,
    }


def boost_transform(p: int, t: float) -> ProjectiveTransform:
    """Hyperbolic boost [[cosh t I, sinh t I], [sinh t I, cosh t I]] in O(p, p)."""
    c, s = math.cosh(t), math.sinh(t)
    eye = np.eye(p)
    return ProjectiveTransform.from_blocks(c * eye, s * eye, s * eye, c * eye)


@dataclass
class DegenerateLimit:
    """Unit-norm compound representatives collapsing onto a rank-one limit."""

    ts: list
    representatives: list
    limit: np.ndarray
    residuals: list
    rank_estimate: int
    image_point: np.ndarray | None


def boost_degenerate_limit(p: int, t_sequence=None, attract_to=None) -> DegenerateLimit:
    """Compound representatives of boosts degenerating onto an extreme point.

    The unit-normalized p-th compounds of the boosts converge to a
    rank-one endomorphism whose image is the Pluecker point of the
    orthogonal matrix ``attract_to`` (identity by default).
    """
    if t_sequence is None:
        t_sequence = list(range(1, 13))
    ts = [float(t) for t in t_sequence]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_sequence must be increasing")
    conjugator = None
    if attract_to is not None:
        r = np.asarray(attract_to, dtype=float)
        if np.linalg.norm(r.T @ r - np.eye(p)) > 1e-10:
            raise NotOrthogonal("attracting point must be an orthogonal matrix")
        conjugator = ProjectiveTransform.from_blocks(
            np.eye(p), np.zeros((p, p)), np.zeros((p, p)), r
        )
    representatives = []
    for t in ts:
        g = boost_transform(p, t)
        if conjugator is not None:
            g = conjugator @ g @ conjugator.inverse()
        comp = compound(g.matrix, p)
        representatives.append(comp / np.linalg.norm(comp))

    final = representatives[-1]
    u, s, vt = np.linalg.svd(final)
    rank_estimate = int(np.count_nonzero(s > RANK_TOL * s[0]))
    if rank_estimate != 1:
        raise ConvergenceNotReached(
            f"compound limit has rank estimate {rank_estimate} at t={ts[-1]}"
        )
    limit = s[0] * np.outer(u[:, 0], vt[0, :])
    limit /= np.linalg.norm(limit)
    residuals = [float(np.linalg.norm(rep - limit)) for rep in representatives]
    image_point = _sign_normalize(u[:, 0])
    return DegenerateLimit(
        ts=ts,
        representatives=representatives,
        limit=limit,
        residuals=residuals,
        rank_estimate=rank_estimate,
        image_point=image_point,
    )


def boost_image_angle(limit: DegenerateLimit, target_point) -> float:
    """Angle between the limit image and a chart point's Pluecker image.

    Uses the sine form (residual orthogonal to the target), which resolves
    angles down to machine precision where the cosine form saturates.
    """
    target = plucker_embed(target_point)
    image = limit.image_point / np.linalg.norm(limit.image_point)
    residual = image - float(np.dot(image, target)) * target
    return math.asin(min(1.0, float(np.linalg.norm(residual))))
