"""Gamma matrices, positive-energy spinors, photon polarizations, bilinears.

Dirac representation throughout. Spinors are box-normalized (u^dag u = 1) by
default, which makes the completeness sum over spins equal
(slash(q_on) + m) / (2 E_q) with q_on the on-shell four-momentum; the
covariant choice (ubar u = 1) is available behind a flag for frame-scaling
studies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MasslessAtRest, SuperluminalBoost, ZeroWavevector
from .lorentz import Boost, FourVector, boost, on_shell_energy

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

_ZERO2 = np.zeros((2, 2), dtype=complex)


def _build_gammas() -> tuple[np.ndarray, ...]:
    g0 = np.block([[np.eye(2), _ZERO2], [_ZERO2, -np.eye(2)]]).astype(complex)
    spatial = tuple(
        np.block([[_ZERO2, s], [-s, _ZERO2]]).astype(complex) for s in _SIGMA
    )
    mats = (g0,) + spatial
    for m in mats:
        m.setflags(write=False)
    return mats


_GAMMA = _build_gammas()
_I4 = np.eye(4, dtype=complex)


@dataclass(frozen=True)
class GammaSet:
    """The four gamma matrices, indexable by Lorentz index."""

    matrices: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    def __getitem__(self, mu: int) -> np.ndarray:
        return self.matrices[mu]


def gamma_set() -> GammaSet:
    return GammaSet(_GAMMA)


def slash(v) -> np.ndarray:
    """Contraction gamma^mu v_mu = v0 g0 - v.gamma for a four-vector."""
    a = v.as_array() if isinstance(v, FourVector) else np.asarray(v)
    return a[0] * _GAMMA[0] - a[1] * _GAMMA[1] - a[2] * _GAMMA[2] - a[3] * _GAMMA[3]


@dataclass(frozen=True)
class BiSpinor:
    """Positive-energy solution of the free Dirac equation.

    components: 4 complex amplitudes
    momentum:   3-momentum label
    spin:       1 or 2 (eigenspinor of sigma_z in the rest block)
    mass:       particle mass
    """

    components: np.ndarray
    momentum: np.ndarray
    spin: int
    mass: float
    normalization: str = "box"

    @property
    def energy(self) -> float:
        return on_shell_energy(self.momentum, self.mass)

    def on_shell_momentum(self) -> FourVector:
        return FourVector.from_spatial(self.energy, self.momentum)


def u_spinor(p3, s: int, m: float, normalization: str = "box") -> BiSpinor:
    """Free positive-energy spinor u_s(p).

    Construction N (chi_s ; sigma.p/(E+m) chi_s); with the default box
    normalization N = sqrt((E+m)/(2E)) so u^dag u = 1, and ubar u = m/E.
    The covariant option rescales to ubar u = 1 (massive particles only).
    """
    p3 = np.array(p3, dtype=float)
    p3.setflags(write=False)
    if s not in (1, 2):
        raise ValueError(f"spin index must be 1 or 2, got {s!r}")
    if m == 0.0 and not p3.any():
        raise MasslessAtRest("massless spinor needs a nonzero momentum")
    energy = on_shell_energy(p3, m)
    chi = np.zeros(2, dtype=complex)
    chi[s - 1] = 1.0
    sigma_p = p3[0] * _SIGMA[0] + p3[1] * _SIGMA[1] + p3[2] * _SIGMA[2]
    lower = (sigma_p @ chi) / (energy + m)
    u = math.sqrt((energy + m) / (2.0 * energy)) * np.concatenate([chi, lower])
    if normalization == "covariant":
        if m == 0.0:
            raise MasslessAtRest("covariant normalization undefined for massless spinors")
        u = u * math.sqrt(energy / m)
    elif normalization != "box":
        raise ValueError(f"unknown normalization {normalization!r}")
    u.setflags(write=False)
    return BiSpinor(u, p3, s, m, normalization)


def ubar(u: BiSpinor) -> np.ndarray:
    """Dirac adjoint row vector u^dag gamma^0."""
    return u.components.conj() @ _GAMMA[0]


def spin_sum(p3, m: float) -> np.ndarray:
    """Sum over spins of u_s(p) ubar_s(p), computed by outer products.

    Equals (slash(p_on) + m) / (2 E_p) with p_on = (E_p, p).
    """
    total = np.zeros((4, 4), dtype=complex)
    for s in (1, 2):
        u = u_spinor(p3, s, m)
        total += np.outer(u.components, ubar(u))
    return total


@dataclass(frozen=True)
class PolarizationVector:
    """Transverse photon polarization four-vector (Coulomb gauge, eps0 = 0)."""

    components: np.ndarray
    wavevector: np.ndarray
    alpha: int

    def as_array(self) -> np.ndarray:
        return self.components


def polarization_pair(k3) -> tuple[PolarizationVector, PolarizationVector]:
    """Deterministic real orthonormal transverse pair for wavevector k.

    The first vector is the Gram-Schmidt projection of the Cartesian axis
    least aligned with k; the second is khat x eps1. For k along +z this
    yields (0,1,0,0) and (0,0,1,0).
    """
    k3 = np.array(k3, dtype=float)
    k3.setflags(write=False)
    norm = float(np.linalg.norm(k3))
    if norm == 0.0:
        raise ZeroWavevector("polarization undefined for k = 0")
    khat = k3 / norm
    seed = np.eye(3)[int(np.argmin(np.abs(khat)))]
    e1 = seed - (seed @ khat) * khat
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(khat, e1)
    vecs = []
    for alpha, e in enumerate((e1, e2), start=1):
        comp = np.concatenate([[0.0], e]).astype(complex)
        comp.setflags(write=False)
        vecs.append(PolarizationVector(comp, k3, alpha))
    return vecs[0], vecs[1]


def vertex_bilinear(ub: BiSpinor, eps, ua: BiSpinor) -> complex:
    """ubar_b (gamma^nu eps_nu) u_a."""
    comp = eps.as_array() if isinstance(eps, PolarizationVector) else np.asarray(eps)
    return complex(ubar(ub) @ slash(comp) @ ua.components)


def boost_spinor(v: Boost, u: BiSpinor) -> BiSpinor:
    """Apply the spinor representation of a pure boost.

    S = cosh(z/2) + sinh(z/2) nhat.alpha with tanh(z) = |beta|; not unitary,
    so u^dag u changes while ubar u is preserved. The momentum label is
    updated to the boosted three-momentum.
    """
    b2 = v.beta2
    if b2 >= 1.0:
        raise SuperluminalBoost(f"|beta| >= 1 for beta={v.beta}")
    if b2 == 0.0:
        return u
    babs = math.sqrt(b2)
    nhat = v.beta_vector / babs
    zeta = math.atanh(babs)
    # alpha_i = gamma^0 gamma^i
    n_alpha = sum(nhat[i] * (_GAMMA[0] @ _GAMMA[i + 1]) for i in range(3))
    s_mat = math.cosh(zeta / 2.0) * _I4 + math.sinh(zeta / 2.0) * n_alpha
    comps = s_mat @ u.components
    comps.setflags(write=False)
    p_new = boost(v, u.on_shell_momentum()).spatial
    return BiSpinor(comps, p_new, u.spin, u.mass, u.normalization)
