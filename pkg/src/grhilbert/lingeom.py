"""Projective and linear geometry for affine charts of the Grassmannian.

A chart point is a q-by-p real matrix X; the p-plane it represents is the
column span of the stacked block [I_p; X] in R^(p+q).  Projective
transformations act on chart points by the fractional-linear map
X -> (c + dX)(a + bX)^(-1), where (a, b; c, d) are the row blocks of the
transformation matrix read top to bottom.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChartEscape,
    DegenerateConfiguration,
    NonDiagonalizableBeyondTolerance,
)

# Relative singular-value cutoff for all rank decisions.
RANK_TOL = 1e-9
# Relative modulus gap used to cluster eigenvalues, and the independence
# threshold below which a dominant cluster counts as defective.
EIG_CLUSTER_TOL = 1e-7
# Condition number of (a + bX) beyond which the image left the chart.
CHART_COND_LIMIT = 1e12


def as_chart_point(x) -> np.ndarray:
    """Validate and return a chart point as a float q-by-p array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError("chart point must be a 2-d (q-by-p) matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("chart point entries must be finite")
    return arr


def numeric_rank(m, tol: float = RANK_TOL) -> int:
    """Rank of ``m`` with singular values below ``tol`` * sigma_max dropped."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def _leading_sign(vec: np.ndarray, tol: float = 1e-12) -> float:
    """Sign of the first significant coordinate (0.0 for the zero vector)."""
    scale = np.max(np.abs(vec))
    if scale == 0.0:
        return 0.0
    for entry in vec.flat:
        if abs(entry) > tol * scale:
            return math.copysign(1.0, entry)
    return 0.0


def _sign_normalize(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip sign so the first significant coordinate is positive."""
    return -vec if _leading_sign(vec, tol) < 0 else vec


def cross_ratio(a: float, x: float, y: float, b: float) -> float:
    """Cross ratio of four collinear points given as line parameters.

    The parameters must be ordered a <= x <= y <= b with a < x and y < b;
    ``a`` may be -inf and ``b`` may be +inf, in which case the one-sided
    limit form of the ratio is used.  Returns 1.0 when both are infinite.
    """
    if math.isnan(a) or math.isnan(x) or math.isnan(y) or math.isnan(b):
        raise DegenerateConfiguration("cross ratio of NaN parameter")
    if not (a <= x <= y <= b):
        raise DegenerateConfiguration(
            f"parameters not ordered a <= x <= y <= b: {(a, x, y, b)}"
        )
    if x == a or y == b:
        raise DegenerateConfiguration("cross ratio undefined for x = a or y = b")
    a_inf = math.isinf(a)
    b_inf = math.isinf(b)
    if a_inf and b_inf:
        return 1.0
    if a_inf:
        return abs(x - b) / abs(y - b)
    if b_inf:
        return abs(y - a) / abs(x - a)
    return (abs(x - b) * abs(y - a)) / (abs(x - a) * abs(y - b))


class ProjectiveTransform:
    """Element of PGL_(p+q)(R), stored with unit determinant magnitude.

    Acts on chart points via :meth:`apply`.  Composition is matrix product
    (``g @ h`` applies ``h`` first).
    """

    def __init__(self, matrix, p: int, q: int):
        mat = np.array(matrix, dtype=float)
        n = p + q
        if mat.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {mat.shape}")
        det = np.linalg.det(mat)
        if det == 0.0 or not np.isfinite(det):
            raise ValueError("transform matrix must be invertible")
        self.matrix = mat / abs(det) ** (1.0 / n)
        self.matrix.flags.writeable = False
        self.p = p
        self.q = q

    @classmethod
    def identity(cls, p: int, q: int) -> "ProjectiveTransform":
        return cls(np.eye(p + q), p, q)

    @classmethod
    def from_blocks(cls, a, b, c, d) -> "ProjectiveTransform":
        """Assemble from row blocks: a is p-by-p, d is q-by-q."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        c = np.atleast_2d(np.asarray(c, dtype=float))
        d = np.atleast_2d(np.asarray(d, dtype=float))
        p, q = a.shape[0], d.shape[0]
        top = np.hstack([a, b])
        bottom = np.hstack([c, d])
        return cls(np.vstack([top, bottom]), p, q)

    @classmethod
    def from_chart_affine(cls, a_left, b_right, offset=None) -> "ProjectiveTransform":
        """Transform acting on the chart by X -> A X B + C.

        ``a_left`` is q-by-q, ``b_right`` is p-by-p invertible, ``offset``
        (optional) is q-by-p.
        """
        a_left = np.asarray(a_left, dtype=float)
        b_right = np.asarray(b_right, dtype=float)
        q = a_left.shape[0]
        p = b_right.shape[0]
        if offset is None:
            offset = np.zeros((q, p))
        offset = np.asarray(offset, dtype=float)
        b_inv = np.linalg.inv(b_right)
        return cls.from_blocks(b_inv, np.zeros((p, q)), offset @ b_inv, a_left)

    @property
    def blocks(self):
        p = self.p
        return (
            self.matrix[:p, :p],
            self.matrix[:p, p:],
            self.matrix[p:, :p],
            self.matrix[p:, p:],
        )

    def apply(self, x) -> np.ndarray:
        """Chart action (c + dX)(a + bX)^(-1); raises ChartEscape if singular."""
        x = as_chart_point(x)
        a, b, c, d = self.blocks
        den = a + b @ x
        sv = np.linalg.svd(den, compute_uv=False)
        if sv[-1] == 0.0 or sv[0] / sv[-1] > CHART_COND_LIMIT:
            raise ChartEscape("image of the chart point left the affine chart")
        num = c + d @ x
        return np.linalg.solve(den.T, num.T).T

    def compose(self, other: "ProjectiveTransform") -> "ProjectiveTransform":
        if (self.p, self.q) != (other.p, other.q):
            raise ValueError("shape mismatch in composition")
        return ProjectiveTransform(self.matrix @ other.matrix, self.p, self.q)

    def __matmul__(self, other: "ProjectiveTransform") -> "ProjectiveTransform":
        return self.compose(other)

    def inverse(self) -> "ProjectiveTransform":
        return ProjectiveTransform(np.linalg.inv(self.matrix), self.p, self.q)

    def compound(self) -> np.ndarray:
        return compound(self.matrix, self.p)

    def __repr__(self):
        return f"ProjectiveTransform(p={self.p}, q={self.q})"


class RankOneDirection:
    """Normalized pair (u, v) of unit vectors encoding the direction u v^T."""

    def __init__(self, u, v):
        u = np.asarray(u, dtype=float).reshape(-1)
        v = np.asarray(v, dtype=float).reshape(-1)
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0.0 or nv == 0.0:
            raise ValueError("rank-one direction factors must be nonzero")
        u, v = u / nu, v / nv
        # Deterministic representative of (u, v) ~ (-u, -v).
        if _leading_sign(u) < 0:
            u, v = -u, -v
        self.u = u
        self.v = v
        self.matrix = np.outer(u, v)
        self.matrix.flags.writeable = False

    @classmethod
    def from_matrix(cls, s, tol: float = RANK_TOL) -> "RankOneDirection":
        """Direction of a matrix that is rank one up to ``tol``."""
        s = np.asarray(s, dtype=float)
        uu, sv, vt = np.linalg.svd(s)
        if sv[0] == 0.0:
            raise ValueError("zero matrix has no direction")
        if len(sv) > 1 and sv[1] > tol * sv[0]:
            raise ValueError("matrix is not rank one within tolerance")
        return cls(uu[:, 0], vt[0, :])

    @property
    def shape(self):
        return self.matrix.shape

    def __repr__(self):
        return f"RankOneDirection(u={self.u!r}, v={self.v!r})"


@dataclass(frozen=True)
class RankOneLine:
    """Affine line t -> X + t S with rank-one direction S."""

    point: np.ndarray
    direction: RankOneDirection

    def at(self, t: float) -> np.ndarray:
        return self.point + t * self.direction.matrix


def rank_one_line(x, s: RankOneDirection) -> RankOneLine:
    """The chart trace of the projective line through ``x`` in direction ``s``."""
    x = as_chart_point(x)
    if x.shape != s.shape:
        raise ValueError("shape mismatch between point and direction")
    return RankOneLine(point=x, direction=s)


def intersection_dim(x, y, tol: float = RANK_TOL) -> int:
    """Dimension of the intersection of the planes of two chart points.

    Equals p - rank(X - Y); two chart points lie on a common projective
    line inside the Grassmannian exactly when this is at least p - 1.
    """
    x = as_chart_point(x)
    y = as_chart_point(y)
    if x.shape != y.shape:
        raise ValueError("chart points must share a shape")
    p = x.shape[1]
    return p - numeric_rank(x - y, tol)


def plucker_embed(x) -> np.ndarray:
    """Pluecker coordinates of the plane of ``x``.

    Returns the vector of p-by-p minors of [I_p; X] over row subsets in
    lexicographic order, normalized to unit length with the first nonzero
    coordinate positive.
    """
    x = as_chart_point(x)
    q, p = x.shape
    stacked = np.vstack([np.eye(p), x])
    coords = np.array(
        [
            np.linalg.det(stacked[list(rows), :])
            for rows in itertools.combinations(range(p + q), p)
        ]
    )
    coords /= np.linalg.norm(coords)
    return _sign_normalize(coords)


def compound(g, p: int | None = None) -> np.ndarray:
    """The p-th compound matrix: all p-by-p minors of ``g``.

    Row and column subsets are enumerated in lexicographic order, so
    ``compound(g) @ plucker`` implements the induced action on Pluecker
    coordinates.  Multiplicative by the Cauchy-Binet formula.
    """
    if isinstance(g, ProjectiveTransform):
        mat = g.matrix
        p = g.p
    else:
        mat = np.asarray(g, dtype=float)
        if p is None:
            raise ValueError("subset size p required for a raw matrix")
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ValueError("compound requires a square matrix")
    subsets = list(itertools.combinations(range(n), p))
    dim = len(subsets)
    out = np.empty((dim, dim))
    for i, rows in enumerate(subsets):
        strip = mat[list(rows), :]
        for j, cols in enumerate(subsets):
            out[i, j] = np.linalg.det(strip[:, cols])
    return out


@dataclass
class DominantSpectrum:
    """Moduli, dominant eigenspace and Jordan-size bound of a transform."""

    moduli: np.ndarray
    dominant_subspace: np.ndarray  # orthonormal columns spanning E+
    jordan_size_bound: int
    is_diagonalizable: bool


def dominant_spectrum(g, cluster_tol: float = EIG_CLUSTER_TOL) -> DominantSpectrum:
    """Dominant eigenstructure of a transform or square matrix.

    The input is normalized to unit determinant magnitude.  Eigenvalues
    whose moduli are within ``cluster_tol`` (relatively) of the largest
    form the dominant cluster; its eigenvectors must be numerically
    independent, otherwise the dominant block is defective and
    NonDiagonalizableBeyondTolerance is raised.  The returned subspace is
    the real form of the cluster's eigenspace.
    """
    if isinstance(g, ProjectiveTransform):
        mat = g.matrix
    else:
        mat = np.asarray(g, dtype=float)
        n = mat.shape[0]
        det = np.linalg.det(mat)
        if det == 0.0 or not np.isfinite(det):
            raise ValueError("matrix must be invertible")
        mat = mat / abs(det) ** (1.0 / n)
    eigenvalues, eigenvectors = np.linalg.eig(mat)
    moduli = np.abs(eigenvalues)
    top = moduli.max()
    dominant = moduli >= top * (1.0 - cluster_tol)

    real_vectors = []
    for idx in np.nonzero(dominant)[0]:
        lam = eigenvalues[idx]
        vec = eigenvectors[:, idx]
        if abs(lam.imag) <= cluster_tol * top:
            real_vectors.append(np.real(vec))
        elif lam.imag > 0:
            # One conjugate pair contributes the real 2-plane (Re v, Im v).
            real_vectors.append(np.real(vec))
            real_vectors.append(np.imag(vec))
    stack = np.column_stack(real_vectors)
    sv = np.linalg.svd(stack, compute_uv=False)
    if sv[-1] < cluster_tol * sv[0]:
        raise NonDiagonalizableBeyondTolerance(
            "dominant eigenvalue cluster has a defective block"
        )
    basis, _ = np.linalg.qr(stack)
    return DominantSpectrum(
        moduli=np.sort(moduli),
        dominant_subspace=basis,
        jordan_size_bound=1,
        is_diagonalizable=True,
    )


def subspace_angle(vec, basis) -> float:
    """Angle between a vector and the span of orthonormal basis columns."""
    vec = np.asarray(vec, dtype=float).reshape(-1)
    vec = vec / np.linalg.norm(vec)
    residual = vec - basis @ (basis.T @ vec)
    return float(np.arcsin(min(1.0, np.linalg.norm(residual))))


def matrix_to_lists(m) -> list:
    """Row-major JSON form of a matrix: a list of row lists."""
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(m, float))]


def matrix_from_lists(rows) -> np.ndarray:
    """Inverse of :func:`matrix_to_lists` with shape validation."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a list of rows (arrays of arrays)")
    return arr
