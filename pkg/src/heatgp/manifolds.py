"""Compact manifolds with explicit spectral decompositions.

Three models are supported, each with closed-form eigenvalues, eigenspace
multiplicities and projector kernels for a natural Laplace-type operator:

* ``Circle`` -- angles in [-pi, pi] with pi and -pi identified, normalized
  arc-length measure, Fourier bands.
* ``Sphere(n)`` -- the unit sphere S^{n-1} in R^n with normalized rotation
  invariant measure and spherical-harmonic bands.  Spectral formulas hold
  for any ambient n >= 3; quadrature, covering nets and point grids ship
  for n = 3 (S^2) only.
* ``JacobiInterval(alpha, beta)`` -- [-1, 1] under the normalized weight
  (1-x)^alpha (1+x)^beta dx with the Jacobi differential operator, whose
  eigenfunctions are the orthonormal Jacobi polynomials.

Conventions used throughout the package: the total measure is normalized
to one, metrics are the natural geodesic ones (diameter pi for all three
models), and projector kernels are orthonormal with respect to the
normalized measure, so that  integral P_k(x, x) dmu(x) = dim of band k.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "Circle",
    "Sphere",
    "JacobiInterval",
    "QuadratureRule",
    "SpectralBand",
    "ball_measure",
    "covering_number",
    "export_quadrature_csv",
    "gegenbauer_eval",
    "jacobi_poly_eval",
    "model_from_json",
    "model_to_json",
    "spectral_layout",
]


# ----------------------------------------------------------------------
# Orthogonal polynomial evaluation (forward three-term recurrences)


def gegenbauer_eval(nu, k, x):
    """Gegenbauer polynomial G_k^nu(x) in the generating-function convention
    (1 - 2xt + t^2)^{-nu} = sum_k G_k^nu(x) t^k.

    Parameters
    ----------
    nu : float > 0
    k : int >= 0
    x : scalar or ndarray in [-1, 1]
    """
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x) if x.ndim else 1.0
    prev = np.ones_like(x)
    cur = 2.0 * nu * x
    for j in range(2, k + 1):
        prev, cur = cur, (2.0 * x * (j + nu - 1.0) * cur - (j + 2.0 * nu - 2.0) * prev) / j
    return cur if x.ndim else float(cur)


def _jacobi_recurrence(alpha, beta, n):
    """Gautschi recurrence coefficients (a_k, b_k) for the monic Jacobi
    orthogonal polynomials under the weight (1-x)^alpha (1+x)^beta on [-1,1].

    b_0 is the total mass of the weight.
    """
    a = np.zeros(n)
    b = np.zeros(n)
    s = alpha + beta
    a[0] = (beta - alpha) / (s + 2.0)
    b[0] = math.exp(
        (s + 1.0) * math.log(2.0)
        + math.lgamma(alpha + 1.0)
        + math.lgamma(beta + 1.0)
        - math.lgamma(s + 2.0)
    )
    for k in range(1, n):
        den = (2.0 * k + s) * (2.0 * k + s + 2.0)
        a[k] = (beta**2 - alpha**2) / den
        b[k] = (
            4.0 * k * (k + alpha) * (k + beta) * (k + s)
            / ((2.0 * k + s) ** 2 * (2.0 * k + s + 1.0) * (2.0 * k + s - 1.0))
        )
    return a, b


def jacobi_poly_eval(alpha, beta, k, x):
    """Jacobi polynomial of degree k, orthonormal under the *normalized*
    weight, evaluated by the orthonormal three-term recurrence."""
    x = np.asarray(x, dtype=float)
    a, b = _jacobi_recurrence(alpha, beta, k + 2)
    b = b.copy()
    b[0] = 1.0  # normalized measure: pi_0 = 1
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for j in range(k):
        prev, cur = cur, ((x - a[j]) * cur - math.sqrt(b[j]) * prev) / math.sqrt(b[j + 1])
    return cur if x.ndim else float(cur)


def _jacobi_table(alpha, beta, kmax, x):
    """All orthonormal Jacobi polynomials up to degree kmax at points x;
    shape (len(x), kmax+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a, b = _jacobi_recurrence(alpha, beta, kmax + 2)
    b = b.copy()
    b[0] = 1.0
    out = np.empty((x.size, kmax + 1))
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    out[:, 0] = cur
    for j in range(kmax):
        prev, cur = cur, ((x - a[j]) * cur - math.sqrt(b[j]) * prev) / math.sqrt(b[j + 1])
        out[:, j + 1] = cur
    return out


# ----------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights realizing the normalized measure.

    ``exact_band_degree`` is the declared guarantee: integrals of products
    of two band functions with band indexes j, k <= exact_band_degree are
    computed exactly (so projector orthogonality relations hold at machine
    precision up to that band).
    """

    nodes: np.ndarray
    weights: np.ndarray
    exact_band_degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def size(self):
        return self.weights.size

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def export_quadrature_csv(rule, path):
    """Write (node coordinates..., weight) rows."""
    nodes = np.atleast_2d(np.asarray(rule.nodes, dtype=float))
    if nodes.shape[0] != rule.size:
        nodes = nodes.T
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        ncoord = 1 if nodes.ndim == 1 else nodes.shape[1]
        writer.writerow([f"x{i}" for i in range(ncoord)] + ["weight"])
        for row, w in zip(nodes, rule.weights):
            writer.writerow([repr(float(v)) for v in np.atleast_1d(row)] + [repr(float(w))])


# ----------------------------------------------------------------------
# Models


@dataclass(frozen=True)
class SpectralBand:
    k: int
    lam: float
    multiplicity: int


class Circle:
    """Unit circle, angle chart [-pi, pi] with endpoint identification."""

    kind = "circle"
    d = 1
    D = 1.0
    diameter = math.pi

    def key(self):
        return ("circle",)

    def eigenvalue(self, k):
        if k < 0:
            raise ValueError("band index must be >= 0")
        return float(k * k)

    def multiplicity(self, k):
        if k < 0:
            raise ValueError("band index must be >= 0")
        return 1 if k == 0 else 2

    def projector_kernel(self, k, x, y):
        """P_k(x, y) = 2 cos k(x - y) for k >= 1, and 1 for k = 0."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if k == 0:
            out = np.ones(np.broadcast(x, y).shape)
        else:
            out = 2.0 * np.cos(k * (x - y))
        return out if out.ndim else float(out)

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a = np.abs(x - y) % (2.0 * math.pi)
        out = np.minimum(a, 2.0 * math.pi - a)
        return out if out.ndim else float(out)

    def quadrature(self, resolution):
        """Uniform rule; exact on products of bands j, k <= (resolution-1)//2."""
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        n = int(resolution)
        nodes = -math.pi + 2.0 * math.pi * np.arange(n) / n
        weights = np.full(n, 1.0 / n)
        return QuadratureRule(nodes, weights, (n - 1) // 2)

    def random_points(self, rng, size=None):
        return rng.uniform(-math.pi, math.pi, size=size)

    def grid(self, m):
        return np.linspace(-math.pi, math.pi, m, endpoint=False)


class Sphere:
    """Unit sphere S^{n-1} in ambient R^n, points as unit vectors."""

    kind = "sphere"

    def __init__(self, ambient_dim=3):
        if ambient_dim < 3:
            raise ValueError("ambient dimension must be >= 3 (use Circle for n = 2)")
        self.n = int(ambient_dim)
        self.d = self.n - 1
        self.D = float(self.n - 1)
        self.diameter = math.pi
        self._nu = self.n / 2.0 - 1.0

    def key(self):
        return ("sphere", self.n)

    def eigenvalue(self, k):
        if k < 0:
            raise ValueError("band index must be >= 0")
        return float(k * (k + self.n - 2))

    def multiplicity(self, k):
        if k < 0:
            raise ValueError("band index must be >= 0")
        if k == 0:
            return 1
        n = self.n
        return round((2 * k + n - 2) / (n - 2) * math.comb(n + k - 3, k))

    def projector_kernel(self, k, x, y):
        """(1 + k/nu) G_k^nu(<x, y>) with nu = n/2 - 1 (normalized measure),
        the Gegenbauer form of the spherical-harmonic addition theorem."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dots = np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)
        out = (1.0 + k / self._nu) * gegenbauer_eval(self._nu, k, dots)
        return out

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dots = np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)
        out = np.arccos(dots)
        return out if np.ndim(out) else float(out)

    def quadrature(self, resolution):
        """Gauss-Legendre in the colatitude times uniform longitude (S^2).

        Exact on products of bands j, k <= resolution - 1.
        """
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        if self.n != 3:
            raise NotImplementedError("quadrature ships for S^2 only")
        m = int(resolution)
        z, wz = np.polynomial.legendre.leggauss(m)
        phi = 2.0 * math.pi * (np.arange(2 * m) + 0.5) / (2 * m)
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        st = np.sqrt(1.0 - zz**2)
        nodes = np.stack([st * np.cos(pp), st * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = np.repeat(wz / 2.0, 2 * m) / (2 * m)
        return QuadratureRule(nodes, weights, m - 1)

    def random_points(self, rng, size=None):
        shape = (self.n,) if size is None else (size, self.n)
        v = rng.standard_normal(shape)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def grid(self, m):
        """Deterministic quasi-uniform Fibonacci grid on S^2."""
        if self.n != 3:
            raise NotImplementedError("point grids ship for S^2 only")
        i = np.arange(m)
        z = 1.0 - (2.0 * i + 1.0) / m
        phi = i * math.pi * (3.0 - math.sqrt(5.0))
        st = np.sqrt(np.maximum(0.0, 1.0 - z**2))
        return np.stack([st * np.cos(phi), st * np.sin(phi), z], axis=-1)


class JacobiInterval:
    """[-1, 1] under the normalized Jacobi weight (1-x)^alpha (1+x)^beta."""

    kind = "jacobi"
    d = 1
    diameter = math.pi

    def __init__(self, alpha=0.0, beta=0.0):
        if alpha <= -1.0 or beta <= -1.0:
            raise ValueError("alpha and beta must be > -1")
        self.alpha = float(alpha)
        self.beta = float(beta)
        # measure is doubling but endpoint balls scale like r^{2a+2}, r^{2b+2}
        self.D = max(1.0, 2.0 * alpha + 2.0, 2.0 * beta + 2.0)

    def key(self):
        return ("jacobi", self.alpha, self.beta)

    def eigenvalue(self, k):
        if k < 0:
            raise ValueError("band index must be >= 0")
        return float(k * (k + self.alpha + self.beta + 1.0))

    def multiplicity(self, k):
        if k < 0:
            raise ValueError("band index must be >= 0")
        return 1

    def projector_kernel(self, k, x, y):
        pk_x = jacobi_poly_eval(self.alpha, self.beta, k, x)
        pk_y = jacobi_poly_eval(self.alpha, self.beta, k, y)
        return pk_x * pk_y

    def distance(self, x, y):
        x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
        y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
        out = np.abs(np.arccos(x) - np.arccos(y))
        return out if out.ndim else float(out)

    def quadrature(self, resolution):
        """Gauss-Jacobi rule; exact on products of bands j, k <= resolution - 1."""
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        nodes, weights = roots_jacobi(int(resolution), self.alpha, self.beta)
        weights = weights / weights.sum()  # total weight is the mass of omega
        return QuadratureRule(nodes, weights, int(resolution) - 1)

    def random_points(self, rng, size=None):
        # (x+1)/2 ~ Beta(beta+1, alpha+1) realizes the normalized weight
        return 2.0 * rng.beta(self.beta + 1.0, self.alpha + 1.0, size=size) - 1.0

    def grid(self, m):
        # uniform in the arccos metric
        return np.cos(np.linspace(math.pi, 0.0, m))


# ----------------------------------------------------------------------
# Coefficient layout shared by the field / posterior modules


@dataclass(frozen=True)
class _Layout:
    K: int
    offsets: np.ndarray  # band k occupies slots offsets[k]:offsets[k+1]
    lam: np.ndarray  # eigenvalue per slot
    band: np.ndarray  # band index per slot

    @property
    def dim(self):
        return int(self.offsets[-1])


_LAYOUT_CACHE = {}


def spectral_layout(model, K):
    """Flat slot layout for coefficients of bands 0..K (memoized)."""
    key = (model.key(), int(K))
    cached = _LAYOUT_CACHE.get(key)
    if cached is not None:
        return cached
    mults = [model.multiplicity(k) for k in range(K + 1)]
    offsets = np.concatenate([[0], np.cumsum(mults)]).astype(np.int64)
    lam = np.repeat([model.eigenvalue(k) for k in range(K + 1)], mults)
    band = np.repeat(np.arange(K + 1), mults)
    layout = _Layout(int(K), offsets, lam, band)
    _LAYOUT_CACHE[key] = layout
    return layout


# ----------------------------------------------------------------------
# Covering numbers and ball measures


def _sweep_cover_count(length, delta, n_grid=10**4):
    """Greedy forward-sweep covering of a 1-d segment of the given metric
    length by closed balls of radius delta, over a uniform dense grid.

    Each ball is centered delta past the first uncovered grid point, so the
    count is ceil(length / (2 delta)) up to grid resolution.  A circle of
    circumference L is covered whenever the segment [0, L] is.
    """
    n_grid = max(int(n_grid), int(20.0 * length / delta) + 1)
    grid = np.linspace(0.0, length, n_grid)
    count = 0
    idx = 0
    while idx < grid.size:
        count += 1
        reach = grid[idx] + 2.0 * delta
        idx = int(np.searchsorted(grid, reach, side="right"))
    return count


def covering_number(model, delta):
    """Size of a greedily constructed delta-covering of the model.

    d = 1 models use a forward-sweep covering over a dense deterministic
    grid (>= 1e4 candidates); S^2 uses a greedy maximal delta-net over a
    deterministic Fibonacci grid (>= 1e5 candidates), whose cardinality
    brackets the covering number between N(delta) and N(delta/2).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if delta >= model.diameter:
        return 1
    if model.kind == "circle":
        return _sweep_cover_count(2.0 * math.pi, delta)
    if model.kind == "jacobi":
        return _sweep_cover_count(math.pi, delta)
    if model.kind == "sphere":
        if model.n != 3:
            raise NotImplementedError("covering nets ship for S^2 only")
        pts = model.grid(10**5)
        cos_d = math.cos(delta)
        min_dot = np.full(pts.shape[0], -2.0)  # max cos-similarity to selected
        count = 0
        while True:
            cand = np.flatnonzero(min_dot < cos_d)
            if cand.size == 0:
                break
            i = cand[0]
            count += 1
            min_dot = np.maximum(min_dot, pts @ pts[i])
        return count
    raise ValueError(f"unknown model kind {model.kind!r}")


def ball_measure(model, x, r, rule):
    """Quadrature estimate of mu(B(x, r))."""
    dists = np.asarray(model.distance(x, rule.nodes))
    return float(np.sum(rule.weights[dists <= r]))


# ----------------------------------------------------------------------
# Serialization


def model_to_json(model):
    desc = {"kind": model.kind}
    if model.kind == "sphere":
        desc["n"] = model.n
    elif model.kind == "jacobi":
        desc["alpha"] = model.alpha
        desc["beta"] = model.beta
    return json.dumps(desc)


def model_from_json(text):
    desc = json.loads(text) if isinstance(text, str) else dict(text)
    kind = desc["kind"]
    if kind == "circle":
        return Circle()
    if kind == "sphere":
        return Sphere(desc.get("n", 3))
    if kind == "jacobi":
        return JacobiInterval(desc.get("alpha", 0.0), desc.get("beta", 0.0))
    raise ValueError(f"unknown model kind {kind!r}")
