"""Periodic scalar fields on the torus [0, 2*pi) with spectral calculus.

A field is stored in both representations at once: equispaced grid samples
and Fourier coefficients.  The Fourier convention is

    fhat(k) = (1/2pi) * integral_0^2pi f(x) exp(-i k x) dx,   k integer,

so ``coeffs = fft(samples) / n_grid`` and the reconstruction is
f(x) = sum_k fhat(k) exp(i k x).  With this convention the Sobolev weight
|k|^(2s) is literal, and the L2 (integral) norm relates to the coefficient
sum by

    ||f||_{L2}^2 = 2*pi * sum_k |fhat(k)|^2.

``COEFF_TO_L2`` below is that conversion constant; seminorms returned by
:func:`sobolev_norm` are pure coefficient sums, so for integer s and a
mean-zero field  ``sobolev_norm(f, s, dotted) = l2_norm(derivative(f, s)) /
COEFF_TO_L2``.
"""

from dataclasses import dataclass

import numpy as np

# sqrt(2*pi): multiplies a coefficient-side norm into an integral-side norm.
COEFF_TO_L2 = np.sqrt(2.0 * np.pi)

ROUNDTRIP_TOL = 1e-12
SYMMETRY_TOL = 1e-13
MEAN_TOL = 1e-13


class FieldError(ValueError):
    """Invalid field construction or operation."""


def grid(n_grid):
    """Sample points x_j = 2*pi*j/n, j = 0..n-1."""
    return 2.0 * np.pi * np.arange(n_grid) / n_grid


def wavenumbers(n_grid):
    """Integer wavenumbers in FFT ordering (0, 1, ..., -n/2, ..., -1)."""
    return np.fft.fftfreq(n_grid, d=1.0 / n_grid).astype(int)


def _check_n_grid(n_grid):
    if n_grid < 16 or (n_grid & (n_grid - 1)) != 0:
        raise FieldError(f"n_grid must be a power of two >= 16, got {n_grid}")


@dataclass(frozen=True)
class SpectralField:
    """One periodic scalar snapshot in dual (grid / Fourier) representation.

    Construct through :func:`from_samples`, :func:`from_coeffs` or one of
    the convenience builders; the constructor itself does not validate.
    """

    n_grid: int
    samples: np.ndarray       # (n_grid,) float64
    coeffs: np.ndarray        # (n_grid,) complex128, FFT ordering
    domain_length: float = 2.0 * np.pi

    def __post_init__(self):
        self.samples.setflags(write=False)
        self.coeffs.setflags(write=False)

    @property
    def mean(self):
        return self.coeffs[0].real

    @property
    def is_mean_zero(self):
        return abs(self.coeffs[0]) < MEAN_TOL

    def __call__(self, x):
        return evaluate(self, x)


def _validate(field):
    """Check the representation invariants; raise FieldError on failure."""
    back = np.fft.ifft(field.coeffs * field.n_grid)
    scale = max(1.0, float(np.max(np.abs(field.samples))))
    if np.max(np.abs(back.real - field.samples)) > ROUNDTRIP_TOL * scale:
        raise FieldError("grid/spectral round trip exceeds tolerance")
    k = wavenumbers(field.n_grid)
    # conj symmetry: fhat(-k) == conj(fhat(k)); Nyquist must be real
    idx = (-k) % field.n_grid
    sym = np.max(np.abs(field.coeffs[idx] - np.conj(field.coeffs)))
    if sym > SYMMETRY_TOL * scale:
        raise FieldError("coefficients are not conjugate-symmetric (field not real)")
    return field


def from_samples(samples, require_mean_zero=False):
    """Build a field from grid samples on x_j = 2*pi*j/n."""
    samples = np.asarray(samples, dtype=float).copy()
    n = samples.shape[0]
    _check_n_grid(n)
    coeffs = np.fft.fft(samples) / n
    f = SpectralField(n, samples, coeffs)
    if require_mean_zero and not f.is_mean_zero:
        raise FieldError(f"field has nonzero mean {f.mean:.3e}")
    return _validate(f)


def from_coeffs(coeffs, require_mean_zero=False, symmetrize=False):
    """Build a field from Fourier coefficients in FFT ordering.

    ``symmetrize=True`` projects onto Hermitian-symmetric (real-field)
    coefficients first; use it when the coefficients come out of multiplier
    operations that amplify round-off asymmetrically (e.g. k^4 weights).
    """
    coeffs = np.asarray(coeffs, dtype=complex).copy()
    n = coeffs.shape[0]
    _check_n_grid(n)
    if symmetrize:
        idx = (-wavenumbers(n)) % n
        coeffs = 0.5 * (coeffs + np.conj(coeffs[idx]))
    samples = np.fft.ifft(coeffs * n)
    f = SpectralField(n, samples.real.copy(), coeffs)
    if require_mean_zero and not f.is_mean_zero:
        raise FieldError(f"field has nonzero mean {f.mean:.3e}")
    return _validate(f)


def from_function(fn, n_grid):
    """Sample a callable on the grid."""
    return from_samples(fn(grid(n_grid)))


def zero_field(n_grid):
    return from_samples(np.zeros(n_grid))


def cosine_mode(n_grid, k=1, amp=1.0, phase=0.0):
    """amp * cos(k x + phase)."""
    return from_samples(amp * np.cos(k * grid(n_grid) + phase))


def random_field(n_grid, n_modes=4, amp=1.0, rng=None, decay=1.0):
    """Mean-zero random trigonometric polynomial.

    Coefficients of mode k are normal with std amp * k^(-decay); modes
    1..n_modes.  Pass a seeded ``numpy.random.Generator`` for
    reproducibility.
    """
    if rng is None:
        rng = np.random.default_rng()
    x = grid(n_grid)
    out = np.zeros(n_grid)
    for k in range(1, n_modes + 1):
        a, b = rng.standard_normal(2) * amp * k ** (-decay)
        out += a * np.cos(k * x) + b * np.sin(k * x)
    return from_samples(out)


def evaluate(field, x):
    """Trigonometric interpolation at arbitrary points.

    The Nyquist mode (k = -n/2), when present, is evaluated as a pure
    cosine so that real samples reproduce exactly on the grid.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = field.n_grid
    k = wavenumbers(n)
    body = k != -(n // 2)
    phases = np.exp(1j * np.outer(x, k[body]))
    vals = phases @ field.coeffs[body]
    c_nyq = field.coeffs[~body][0]
    vals = vals.real + c_nyq.real * np.cos((n // 2) * x)
    return vals if vals.shape[0] > 1 else float(vals[0])


def derivative(field, order):
    """Spectral derivative d^order/dx^order, order <= 4.

    Multiplies coefficients by (ik)^order.  The Nyquist mode is dropped for
    every order >= 1: odd powers of it cannot be represented by a real field,
    and dropping it uniformly keeps derivative composition exact
    (d1(d1(f)) == d2(f) to round-off).
    """
    if not (0 <= order <= 4):
        raise FieldError(f"derivative order must be in 0..4, got {order}")
    if order == 0:
        return field
    n = field.n_grid
    k = wavenumbers(n)
    mult = (1j * k) ** order
    mult[k == -(n // 2)] = 0.0
    return from_coeffs(field.coeffs * mult, symmetrize=True)


def integral(field):
    """integral over [0, 2*pi) of f dx (exact for the trig interpolant)."""
    return 2.0 * np.pi * field.coeffs[0].real


def l2_norm(field):
    """Integral-normalised L2 norm, sqrt(int f^2 dx)."""
    return COEFF_TO_L2 * float(np.linalg.norm(field.coeffs))


@dataclass(frozen=True)
class NormOrder:
    """Sobolev order: s >= 0, dotted=True for the seminorm (k=0 excluded)."""

    s: float
    dotted: bool = False

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s < 0:
            raise FieldError(f"Sobolev order must be finite and >= 0, got {self.s}")


def sobolev_norm(field, order):
    """Coefficient-sum Sobolev (semi)norm.

    Returns (sum_k w(k) |fhat(k)|^2)^(1/2) with w(k) = |k|^(2s) for the
    dotted seminorm and 1 + |k|^(2s) for the full norm.  0^0 is taken as 1,
    matching the usual reading of the weight at s = 0.
    """
    k = np.abs(wavenumbers(field.n_grid)).astype(float)
    mag2 = np.abs(field.coeffs) ** 2
    pow_part = np.zeros_like(k)
    nz = k > 0
    pow_part[nz] = 1.0 if order.s == 0 else k[nz] ** (2.0 * order.s)
    if order.s == 0:
        pow_part[~nz] = 1.0   # 0^0 convention; irrelevant for dotted use below
    if order.dotted:
        w = pow_part.copy()
        w[~nz] = 0.0          # k = 0 excluded from the seminorm
    else:
        w = 1.0 + pow_part
    return float(np.sqrt(np.sum(w * mag2)))


def interpolation_gap(field, s1, s2, theta):
    """Defect of the Sobolev interpolation inequality.

    For s = theta*s1 + (1-theta)*s2 returns
    ||f||_{H^s1}^theta * ||f||_{H^s2}^(1-theta) - ||f||_{H^s},
    which is >= 0 up to round-off (log-convexity of the weights).
    Zero field returns 0 by convention.
    """
    if not (0.0 <= theta <= 1.0):
        raise FieldError(f"theta must lie in [0,1], got {theta}")
    if np.all(field.samples == 0.0):
        return 0.0
    s = theta * s1 + (1.0 - theta) * s2
    n1 = sobolev_norm(field, NormOrder(s1))
    n2 = sobolev_norm(field, NormOrder(s2))
    ns = sobolev_norm(field, NormOrder(s))
    return n1 ** theta * n2 ** (1.0 - theta) - ns


def dealias_mask(n_grid):
    """Two-thirds rule mask: keep modes with |k| <= n/3."""
    k = wavenumbers(n_grid)
    return np.abs(k) <= n_grid // 3


def sgm_nonlinearity(field, dealias=True):
    """The growth-term d^2/dx^2 (f_x)^2, mean-zero by construction.

    The quadratic product is formed on the grid after truncating f_x to
    |k| <= n/3 and the product is truncated back to the same band, which
    removes aliasing of the quadratic term exactly.
    """
    fx = derivative(field, 1)
    if dealias:
        mask = dealias_mask(field.n_grid)
        cx = np.where(mask, fx.coeffs, 0.0)
        gx = np.fft.ifft(cx * field.n_grid).real
        prod_c = np.fft.fft(gx * gx) / field.n_grid
        prod_c = np.where(mask, prod_c, 0.0)
        sq = from_coeffs(prod_c, symmetrize=True)
    else:
        sq = from_samples(fx.samples * fx.samples)
    return derivative(sq, 2)


def shift(field, dx):
    """Rigid translation f(x + dx), spectral (exact for Nyquist-free fields)."""
    k = wavenumbers(field.n_grid)
    return from_coeffs(field.coeffs * np.exp(1j * k * dx), symmetrize=True)


def resample(field, n_new):
    """Zero-pad or truncate the spectrum onto a new grid size."""
    _check_n_grid(n_new)
    n = field.n_grid
    k_old = wavenumbers(n)
    new_c = np.zeros(n_new, dtype=complex)
    keep = np.abs(k_old) <= min(n, n_new) // 2 - 1
    k_new = wavenumbers(n_new)
    pos = {int(kk): i for i, kk in enumerate(k_new)}
    for i in np.nonzero(keep)[0]:
        new_c[pos[int(k_old[i])]] = field.coeffs[i]
    return from_coeffs(new_c, symmetrize=True)
