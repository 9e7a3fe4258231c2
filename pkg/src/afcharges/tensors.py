r"""Pointwise differential geometry computed from metric jets.

All routines accept batched input: every array carries an arbitrary leading
batch shape ``...`` followed by its tensor indices.  Index layout:

``g[..., i, j]``          metric components g_ij
``dg[..., i, j, k]``      first partials g_ij,k
``ddg[..., i, j, k, l]``  second partials g_ij,kl
``pi[..., i, j]``, ``dpi[..., i, j, k]``  momentum tensor and its partials

Curvature follows the convention

.. math::

    R_{ij} = \partial_k \Gamma^k_{ij} - \partial_j \Gamma^k_{ik}
             + \Gamma^k_{kl}\Gamma^l_{ij} - \Gamma^k_{jl}\Gamma^l_{ik},

under which round spheres have positive curvature and Schwarzschild data
have positive mass.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError, MissingMomentumError

__all__ = [
    "MetricJet",
    "ParityPair",
    "DEGENERACY_THRESHOLD",
    "christoffel",
    "christoffel_derivative",
    "ricci",
    "scalar_curvature",
    "einstein_tensor",
    "tensor_divergence",
    "vector_divergence",
    "lie_operator",
    "constraint_residual",
    "parity_decompose",
]

DEGENERACY_THRESHOLD = 1e-10


@dataclass(frozen=True)
class MetricJet:
    """Metric value with first and second partials, optionally with momentum."""

    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    pi: np.ndarray | None = None
    dpi: np.ndarray | None = None

    @property
    def batch_shape(self):
        return self.g.shape[:-2]

    @property
    def has_momentum(self):
        return self.pi is not None

    @classmethod
    def flat(cls, batch_shape=()):
        g = np.broadcast_to(np.eye(3), tuple(batch_shape) + (3, 3)).copy()
        dg = np.zeros(tuple(batch_shape) + (3, 3, 3))
        ddg = np.zeros(tuple(batch_shape) + (3, 3, 3, 3))
        return cls(g, dg, ddg)

    def __getitem__(self, idx):
        pick = lambda a: None if a is None else a[idx]
        return MetricJet(self.g[idx], self.dg[idx], self.ddg[idx],
                         pick(self.pi), pick(self.dpi))

    def with_momentum(self, pi, dpi):
        return MetricJet(self.g, self.dg, self.ddg, pi, dpi)


@dataclass(frozen=True)
class ParityPair:
    """Even and odd parts, f^even = f(x) + f(-x), f^odd = f(x) - f(-x)."""

    even_part: np.ndarray
    odd_part: np.ndarray

    def at_x(self):
        return 0.5 * (self.even_part + self.odd_part)

    def at_minus_x(self):
        return 0.5 * (self.even_part - self.odd_part)


def _inverse(g):
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise DegenerateMetricError("metric has non-finite entries")
    eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    if np.any(eig[..., 0] < DEGENERACY_THRESHOLD):
        raise DegenerateMetricError(
            f"smallest metric eigenvalue {eig[..., 0].min():.3e} "
            f"below {DEGENERACY_THRESHOLD:.0e}"
        )
    return np.linalg.inv(g)


def christoffel(jet, ginv=None):
    """Christoffel symbols ``G[..., k, i, j]`` = Gamma^k_ij."""
    if ginv is None:
        ginv = _inverse(jet.g)
    dg = jet.dg
    # lowered symbol Gamma_{l,ij} = (g_il,j + g_jl,i - g_ij,l)/2
    low = 0.5 * (np.einsum("...ilj->...lij", dg)
                 + np.einsum("...jli->...lij", dg)
                 - np.einsum("...ijl->...lij", dg))
    return np.einsum("...kl,...lij->...kij", ginv, low)


def christoffel_derivative(jet, ginv=None):
    """Partials ``dG[..., k, i, j, m]`` = d_m Gamma^k_ij from the second jet."""
    if ginv is None:
        ginv = _inverse(jet.g)
    dg, ddg = jet.dg, jet.ddg
    low = 0.5 * (np.einsum("...ilj->...lij", dg)
                 + np.einsum("...jli->...lij", dg)
                 - np.einsum("...ijl->...lij", dg))
    dlow = 0.5 * (np.einsum("...iljm->...lijm", ddg)
                  + np.einsum("...jlim->...lijm", ddg)
                  - np.einsum("...ijlm->...lijm", ddg))
    dginv = -np.einsum("...ka,...abm,...bl->...klm", ginv, dg, ginv)
    return (np.einsum("...klm,...lij->...kijm", dginv, low)
            + np.einsum("...kl,...lijm->...kijm", ginv, dlow))


def ricci(jet, ginv=None):
    """Ricci tensor R_ij (symmetrized to remove roundoff asymmetry)."""
    if ginv is None:
        ginv = _inverse(jet.g)
    G = christoffel(jet, ginv)
    dG = christoffel_derivative(jet, ginv)
    ric = (np.einsum("...kijk->...ij", dG)
           - np.einsum("...kikj->...ij", dG)
           + np.einsum("...kkl,...lij->...ij", G, G)
           - np.einsum("...kjl,...lik->...ij", G, G))
    return 0.5 * (ric + np.swapaxes(ric, -1, -2))


def scalar_curvature(jet, ginv=None):
    if ginv is None:
        ginv = _inverse(jet.g)
    return np.einsum("...ij,...ij->...", ginv, ricci(jet, ginv))


def einstein_tensor(jet, ginv=None):
    """G_ij = R_ij - R_g g_ij / 2."""
    if ginv is None:
        ginv = _inverse(jet.g)
    ric = ricci(jet, ginv)
    scal = np.einsum("...ij,...ij->...", ginv, ric)
    return ric - 0.5 * scal[..., None, None] * jet.g


def tensor_divergence(jet, T, dT, ginv=None):
    """(div_g T)_i = g^jk (T_ij,k - Gamma^l_kj T_il - Gamma^l_ki T_lj)."""
    if ginv is None:
        ginv = _inverse(jet.g)
    G = christoffel(jet, ginv)
    cov = (dT
           - np.einsum("...lkj,...il->...ijk", G, T)
           - np.einsum("...lki,...lj->...ijk", G, T))
    return np.einsum("...jk,...ijk->...i", ginv, cov)


def vector_divergence(jet, X, dX, ginv=None):
    """div_g X = X^k_,k + Gamma^k_kl X^l, with ``dX[..., k, l]`` = X^k_,l."""
    G = christoffel(jet, ginv)
    return np.einsum("...kk->...", dX) + np.einsum("...kkl,...l->...", G, X)


def lie_operator(jet, X, dX, ginv=None):
    r"""The operator :math:`L_X g - (\mathrm{div}_g X)\, g`.

    ``X[..., k]`` holds the vector components and ``dX[..., k, l]`` = X^k_,l.
    """
    if ginv is None:
        ginv = _inverse(jet.g)
    g = jet.g
    lie = (np.einsum("...k,...ijk->...ij", X, jet.dg)
           + np.einsum("...kj,...ki->...ij", g, dX)
           + np.einsum("...ik,...kj->...ij", g, dX))
    div = vector_divergence(jet, X, dX, ginv)
    return lie - div[..., None, None] * g


def constraint_residual(jet):
    """Constraint map (R_g + (tr pi)^2/2 - |pi|^2, div_g pi).

    Returns a tuple ``(hamiltonian, momentum)`` with shapes ``...`` and
    ``(..., 3)``.
    """
    if not jet.has_momentum:
        raise MissingMomentumError("constraint residual needs a momentum jet")
    ginv = _inverse(jet.g)
    pi = jet.pi
    tr = np.einsum("...ij,...ij->...", ginv, pi)
    norm2 = np.einsum("...ia,...jb,...ij,...ab->...", ginv, ginv, pi, pi)
    ham = scalar_curvature(jet, ginv) + 0.5 * tr**2 - norm2
    mom = tensor_divergence(jet, pi, jet.dpi, ginv)
    return ham, mom


def parity_decompose(f_at_x, f_at_minus_x):
    """Split values sampled at x and -x into even and odd parts."""
    a = np.asarray(f_at_x, dtype=float)
    b = np.asarray(f_at_minus_x, dtype=float)
    return ParityPair(even_part=a + b, odd_part=a - b)
