"""Real spherical harmonics on the unit sphere and the operator L = -Lap_0 - 2.

Coefficients are stored flat with index ``l*l + l + m``.  The real basis is
orthonormal and its degree-1 band is proportional to (y, z, x), so the kernel
of L is exactly the degree-1 band.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import sph_harm_y

from .errors import KernelObstructionError
from .quadrature import build_sphere_rule

__all__ = [
    "SphericalBasis",
    "SphericalField",
    "sphere_laplacian",
    "apply_L",
    "solve_L",
    "KERNEL_TOLERANCE",
]

KERNEL_TOLERANCE = 1e-10


def _index(l, m):
    return l * l + l + m


class SphericalBasis:
    """Real orthonormal harmonics up to ``lmax`` sampled on a sphere rule.

    Besides the values ``Y[node, k]`` the basis keeps the first and second
    derivatives with respect to (theta, phi), used to differentiate fields
    exactly on the nodes.
    """

    def __init__(self, lmax=16, order=None):
        if order is None:
            order = lmax + 2
        if order < lmax + 2:
            raise ValueError("quadrature order must be at least lmax + 2")
        self.lmax = int(lmax)
        self.rule = build_sphere_rule(order)
        nb = (self.lmax + 1) ** 2
        npts = self.rule.size
        self.Y = np.zeros((npts, nb))
        self.dY = np.zeros((2, npts, nb))
        self.ddY = np.zeros((2, 2, npts, nb))
        self.degree = np.zeros(nb, dtype=int)
        th, ph = self.rule.theta, self.rule.phi
        for l in range(self.lmax + 1):
            for m in range(l + 1):
                y, dy, ddy = sph_harm_y(l, m, th, ph, diff_n=2)
                sign = (-1) ** m
                if m == 0:
                    parts = [(_index(l, 0), np.real, 1.0)]
                else:
                    s = np.sqrt(2.0) * sign
                    parts = [(_index(l, m), np.real, s), (_index(l, -m), np.imag, s)]
                for k, take, s in parts:
                    self.Y[:, k] = s * take(y)
                    self.dY[:, :, k] = s * np.moveaxis(take(dy), -1, 0)
                    self.ddY[:, :, :, k] = s * np.moveaxis(take(ddy), 0, -1)
                    self.degree[k] = l

    @property
    def size(self):
        return self.Y.shape[1]

    def analyze(self, values):
        """Coefficients of nodal values by quadrature projection."""
        return self.Y.T @ (self.rule.weights * np.asarray(values, dtype=float))

    def synthesize(self, coeffs):
        return self.Y @ coeffs

    def field(self, values):
        return SphericalField(self.analyze(values), self)

    def band(self, l):
        return self.degree == l


@dataclass
class SphericalField:
    """Function on the unit sphere given by real harmonic coefficients."""

    coeffs: np.ndarray
    basis: SphericalBasis

    def values(self):
        return self.basis.synthesize(self.coeffs)

    def derivatives(self):
        """Nodal (f, df/dtheta, df/dphi, second-derivative 2x2 block)."""
        b = self.basis
        return (b.Y @ self.coeffs, b.dY @ self.coeffs, b.ddY @ self.coeffs)

    def band_coeffs(self, l):
        return self.coeffs[self.basis.band(l)]

    def sup_norm(self):
        return float(np.max(np.abs(self.values())))

    def __add__(self, other):
        return SphericalField(self.coeffs + other.coeffs, self.basis)

    def __sub__(self, other):
        return SphericalField(self.coeffs - other.coeffs, self.basis)

    def scaled(self, s):
        return SphericalField(s * self.coeffs, self.basis)

    @classmethod
    def zeros(cls, basis):
        return cls(np.zeros(basis.size), basis)


def sphere_laplacian(f):
    """Round-sphere Laplacian: multiplies the degree-l band by -l(l+1)."""
    l = f.basis.degree
    return SphericalField(-l * (l + 1) * f.coeffs, f.basis)


def apply_L(f):
    """L f = -Lap_0 f - 2 f."""
    l = f.basis.degree
    return SphericalField((l * (l + 1) - 2) * f.coeffs, f.basis)


def solve_L(rhs, project=True, tol=KERNEL_TOLERANCE):
    """Solve L psi = rhs for psi orthogonal to the kernel span{x^1, x^2, x^3}.

    With ``project`` the degree-1 band of ``rhs`` is discarded; otherwise a
    degree-1 component larger than ``tol`` raises KernelObstructionError.
    """
    l = rhs.basis.degree
    kernel = l == 1
    if not project and np.max(np.abs(rhs.coeffs[kernel]), initial=0.0) > tol:
        raise KernelObstructionError(
            "right-hand side has a degree-1 component; L is not invertible there"
        )
    denom = (l * (l + 1) - 2).astype(float)
    out = np.where(kernel, 0.0, rhs.coeffs / np.where(kernel, 1.0, denom))
    return SphericalField(out, rhs.basis)
