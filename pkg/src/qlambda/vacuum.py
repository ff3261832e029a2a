"""Pair-bubble energy shift of the exchanged photon and its consequences.

The shift density is the spin-summed, polarization-averaged |coupling|^2
weighted by the two-level energy brackets; integrating it over all momenta
with a momentum cutoff gives the level shift whose cutoff convergence is
diagnosed here. The first-order corrected exchange amplitude and the
frame-compensating coupling rescale close the loop back to the scattering
module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplitudes import AmplitudeResult, moller_total
from .dirac import polarization_pair, slash, u_spinor, vertex_bilinear
from .errors import (
    ConfigError,
    CorrectionTooLarge,
    GridTooCoarse,
    PoleEncountered,
    RealPairThreshold,
    SignMismatch,
    ZeroWavevector,
)
from .lorentz import NATURAL, Constants, FourVector, boost, cm_boost

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def outgoing_eta(p3, k3, m: float) -> float:
    """Rest-mass-over-energy factor of the electron at momentum p + k."""
    pk = np.asarray(p3, float) + np.asarray(k3, float)
    return m / math.sqrt(float(pk @ pk) + m * m)


def pair_coupling(
    p3,
    k3,
    s: int = 1,
    s_out: int = 1,
    alpha: int = 1,
    constants: Constants = NATURAL,
    conjugate: bool = False,
) -> complex:
    """Transition rate of the photon -> pair two-level system.

    The prefactor carries the outgoing electron's eta and the combined energy
    E_p + E_{p+k}; `conjugate` selects the reversed process with the complex
    conjugate polarization.
    """
    p3 = np.asarray(p3, dtype=float)
    k3 = np.asarray(k3, dtype=float)
    if not k3.any():
        raise ZeroWavevector("pair coupling undefined for k = 0")
    m = constants.m_e
    pk = p3 + k3
    e_p = math.sqrt(float(p3 @ p3) + m * m)
    e_pk = math.sqrt(float(pk @ pk) + m * m)
    eta1 = m / e_pk
    prefactor = (
        constants.e
        * constants.c
        * constants.hbar
        * eta1
        * math.sqrt(1.0 / (constants.V * constants.eps0 * (e_pk + e_p)))
    )
    eps = polarization_pair(k3)[alpha - 1].as_array()
    u_in = u_spinor(p3, s, m)
    u_out = u_spinor(pk, s_out, m)
    if conjugate:
        bilinear = vertex_bilinear(u_in, eps.conj(), u_out)
    else:
        bilinear = vertex_bilinear(u_out, eps, u_in)
    return prefactor * bilinear


def _u_batch(p3s: np.ndarray, m: float) -> np.ndarray:
    """Box-normalized spinors for a batch of momenta; shape (n, 2, 4)."""
    energies = np.sqrt(np.einsum("ni,ni->n", p3s, p3s) + m * m)
    sigma_p = np.einsum("ni,ijk->njk", p3s, np.stack(_SIGMA))
    out = np.zeros((p3s.shape[0], 2, 4), dtype=complex)
    scale = np.sqrt((energies + m) / (2.0 * energies))
    for s in (0, 1):
        out[:, s, s] = 1.0
        out[:, s, 2:] = sigma_p[:, :, s] / (energies + m)[:, None]
        out[:, s, :] *= scale[:, None]
    return out


def _density_batch(
    p3s: np.ndarray, k3: np.ndarray, constants: Constants, photon_energy: float
) -> np.ndarray:
    """Spin-summed polarization-averaged shift density for a batch of momenta."""
    m = constants.m_e
    pks = p3s + k3[None, :]
    e_p = np.sqrt(np.einsum("ni,ni->n", p3s, p3s) + m * m)
    e_pk = np.sqrt(np.einsum("ni,ni->n", pks, pks) + m * m)
    combined = e_p + e_pk
    if np.any(photon_energy >= combined * (1.0 - 1e-12)):
        raise RealPairThreshold(
            f"photon energy {photon_energy!r} reaches the pair threshold"
        )
    eta1_sq = (m / e_pk) ** 2
    prefactor_sq = (constants.e * constants.c * constants.hbar) ** 2 * eta1_sq / (
        constants.V * constants.eps0 * combined
    )
    u_in = _u_batch(p3s, m)
    u_out = _u_batch(pks, m)
    g0 = np.block(
        [[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), -np.eye(2)]]
    ).astype(complex)
    bilinear_sq = np.zeros(p3s.shape[0])
    for pol in polarization_pair(k3):
        vertex = g0 @ slash(pol.as_array())
        for s in (0, 1):
            for s_out in (0, 1):
                amp = np.einsum(
                    "nd,de,ne->n", u_out[:, s_out, :].conj(), vertex, u_in[:, s, :]
                )
                bilinear_sq += 0.5 * np.abs(amp) ** 2  # average the two polarizations
    bracket = 1.0 / (photon_energy - combined) - 1.0 / (photon_energy + combined)
    return prefactor_sq * bilinear_sq * bracket


@dataclass(frozen=True)
class PairShiftSample:
    """One pair-momentum sample with its factors split out.

    spinor_factor is the spin-summed, polarization-averaged squared vertex
    bilinear; shift_density is negative whenever the photon energy lies below
    the pair threshold.
    """

    p3: np.ndarray
    k3: np.ndarray
    eta1: float
    spinor_factor: float
    shift_density: float


def pair_shift_sample(
    p3, k3, constants: Constants = NATURAL, photon_energy: float | None = None
) -> PairShiftSample:
    """Shift density at one pair momentum, with its provenance fields."""
    p3 = np.array(p3, dtype=float)
    k3 = np.array(k3, dtype=float)
    if not k3.any():
        raise ZeroWavevector("shift density undefined for k = 0")
    if photon_energy is None:
        photon_energy = float(np.linalg.norm(k3))
    m = constants.m_e
    density = float(_density_batch(p3[None, :], k3, constants, photon_energy)[0])
    pk = p3 + k3
    e_p = math.sqrt(float(p3 @ p3) + m * m)
    e_pk = math.sqrt(float(pk @ pk) + m * m)
    combined = e_p + e_pk
    eta1 = m / e_pk
    prefactor_sq = (constants.e * constants.c * constants.hbar) ** 2 * eta1**2 / (
        constants.V * constants.eps0 * combined
    )
    bracket = 1.0 / (photon_energy - combined) - 1.0 / (photon_energy + combined)
    spinor_factor = density / (prefactor_sq * bracket)
    p3.setflags(write=False)
    k3.setflags(write=False)
    return PairShiftSample(p3, k3, eta1, spinor_factor, density)


def shift_density(
    p3, k3, constants: Constants = NATURAL, photon_energy: float | None = None
) -> float:
    """Shift contribution of one pair momentum; negative below threshold.

    `photon_energy` defaults to |k| (on-shell photon), for which the
    threshold can never be reached with a massive electron; an explicit
    off-shell value makes RealPairThreshold reachable.
    """
    return pair_shift_sample(p3, k3, constants, photon_energy).shift_density


@dataclass(frozen=True)
class GridSpec:
    """Log-radial x Gauss-angular product grid for the momentum sum."""

    n_radial: int = 96
    n_theta: int = 16
    n_phi: int = 8
    p_min: float | None = None

    def __post_init__(self):
        if self.n_radial < 4 or self.n_theta < 2 or self.n_phi < 1:
            raise ConfigError("grid too small: need n_radial >= 4, n_theta >= 2, n_phi >= 1")


@dataclass(frozen=True)
class ConvergenceReport:
    """Cutoff scan of the momentum integral with tail and slope diagnostics."""

    cutoffs: np.ndarray
    partial_sums: np.ndarray
    tail_estimates: np.ndarray
    fitted_slope: float

    def write_csv(self, fh) -> None:
        fh.write("cutoff,partial_sum,tail_estimate\n")
        for c, s, t in zip(self.cutoffs, self.partial_sums, self.tail_estimates):
            fh.write(f"{c:.17g},{s:.17g},{t:.17g}\n")

    def to_json_dict(self) -> dict:
        return {
            "fitted_slope": self.fitted_slope,
            "cutoffs": [float(c) for c in self.cutoffs],
            "partial_sums": [float(s) for s in self.partial_sums],
            "tail_estimates": [float(t) for t in self.tail_estimates],
        }


def _directions(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors and weights with sum(weights) = 4 pi."""
    nodes, weights = np.polynomial.legendre.leggauss(grid.n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, grid.n_phi, endpoint=False)
    dirs = []
    wts = []
    for ct, w in zip(nodes, weights):
        st = math.sqrt(1.0 - ct * ct)
        for phi in phis:
            dirs.append((st * math.cos(phi), st * math.sin(phi), ct))
            wts.append(w * 2.0 * math.pi / grid.n_phi)
    return np.array(dirs), np.array(wts)


def _radial_profile(
    radii: np.ndarray,
    k3: np.ndarray,
    grid: GridSpec,
    constants: Constants,
    photon_energy: float,
    n_threads: int = 1,
) -> np.ndarray:
    """Angular integral of the density at each radius (one batched call)."""
    dirs, wts = _directions(grid)
    points = radii[:, None, None] * dirs[None, :, :]
    flat = points.reshape(-1, 3)
    if n_threads > 1 and flat.shape[0] > n_threads:
        # deterministic: fixed chunking, ordered concatenation
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(flat, n_threads)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(
                pool.map(
                    lambda chunk: _density_batch(chunk, k3, constants, photon_energy),
                    chunks,
                )
            )
        dens = np.concatenate(results)
    else:
        dens = _density_batch(flat, k3, constants, photon_energy)
    dens = dens.reshape(radii.size, dirs.shape[0])
    return dens @ wts


def _integrate(
    edges: np.ndarray,
    k3: np.ndarray,
    grid: GridSpec,
    constants: Constants,
    photon_energy: float,
    n_threads: int = 1,
) -> tuple[float, np.ndarray]:
    """Panel-wise Gauss quadrature in log radius; returns total and per-panel sums."""
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(4)
    log_edges = np.log(edges)
    lo = log_edges[:-1]
    hi = log_edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    us = mid[:, None] + half[:, None] * gl_nodes[None, :]
    ws = half[:, None] * gl_weights[None, :]
    radii = np.exp(us).ravel()
    profile = _radial_profile(radii, k3, grid, constants, photon_energy, n_threads).reshape(
        us.shape
    )
    # measure: V/(2 pi)^3 * p^2 dp, with dp = p du on the log axis
    measure = constants.V / (2.0 * math.pi) ** 3
    integrand = measure * np.exp(us) ** 3 * profile
    panel_sums = np.einsum("pi,pi->p", ws, integrand)
    return float(panel_sums.sum()), panel_sums


def total_shift(
    k3,
    cutoff: float,
    grid: GridSpec = GridSpec(),
    constants: Constants = NATURAL,
    photon_energy: float | None = None,
    refine_tol: float = 0.01,
    n_threads: int = 1,
) -> tuple[float, ConvergenceReport]:
    """Momentum integral of the shift density up to `cutoff`.

    The radial axis uses log-spaced panels with fixed-order Gauss rules, the
    angular average a Gauss x uniform product grid. The report carries the
    cumulative integral versus cutoff, a 1/cutoff tail estimate from the last
    sampled density, and a power-law fit of the radial profile over the top
    two decades. Raises GridTooCoarse when doubling the radial panel count
    moves the result by more than refine_tol.
    """
    k3 = np.asarray(k3, dtype=float)
    if not k3.any():
        raise ZeroWavevector("momentum integral undefined for k = 0")
    m = constants.m_e
    if cutoff <= 10.0 * max(m, float(np.linalg.norm(k3))):
        raise ConfigError(f"cutoff {cutoff!r} must exceed 10 max(m, |k|)")
    if photon_energy is None:
        photon_energy = float(np.linalg.norm(k3))
    p_min = grid.p_min if grid.p_min is not None else 1e-4 * m

    edges = np.exp(np.linspace(math.log(p_min), math.log(cutoff), grid.n_radial + 1))
    total, panel_sums = _integrate(edges, k3, grid, constants, photon_energy, n_threads)

    fine_edges = np.exp(
        np.linspace(math.log(p_min), math.log(cutoff), 2 * grid.n_radial + 1)
    )
    refined, _ = _integrate(fine_edges, k3, grid, constants, photon_energy, n_threads)
    if abs(total - refined) > refine_tol * abs(refined):
        raise GridTooCoarse(
            f"doubling the radial grid moved the result by "
            f"{abs(total - refined) / abs(refined):.3e} (> {refine_tol:g})"
        )

    cutoffs = edges[1:]
    partial_sums = np.cumsum(panel_sums)
    measure = constants.V / (2.0 * math.pi) ** 3
    edge_profile = _radial_profile(cutoffs, k3, grid, constants, photon_energy, n_threads)
    # profile ~ A p^-4 beyond the fit window, so the remainder integral is F(p) p
    tail_estimates = measure * cutoffs**3 * edge_profile

    window = cutoffs >= cutoff / 100.0
    log_p = np.log(cutoffs[window])
    log_f = np.log(np.abs(edge_profile[window]))
    fitted_slope = float(np.polyfit(log_p, log_f, 1)[0])

    report = ConvergenceReport(cutoffs, partial_sums, tail_estimates, fitted_slope)
    return total, report


def correction_factor(delta_e: float, photon_energy: float, pair_shift: float) -> float:
    """First-order multiplier (shift / E_k) ((dE)^2 + E_k^2) / ((dE)^2 - E_k^2)."""
    denom = delta_e * delta_e - photon_energy * photon_energy
    if denom == 0.0:
        raise PoleEncountered("correction factor pole at (dE)^2 = E_k^2")
    return (pair_shift / photon_energy) * (delta_e * delta_e + photon_energy**2) / denom


@dataclass(frozen=True)
class CorrectedAmplitude:
    """Exchange amplitude with the first-order pair-shift correction."""

    base: AmplitudeResult
    first_order: complex
    factor: float
    exact: complex
    pair_shift: float


def corrected_amplitude(
    p1: FourVector,
    q1: FourVector,
    p2: FourVector,
    q2: FourVector,
    pair_shift: float,
    spins: tuple[int, int, int, int] = (1, 1, 1, 1),
    constants: Constants = NATURAL,
    normalization: str = "box",
    guard: float = 0.1,
) -> CorrectedAmplitude:
    """First-order correction of the exchange amplitude for a shifted level.

    Returns the uncorrected amplitude, the first-order correction
    base * factor, and the exact shifted-denominator resummation for
    comparison. Raises CorrectionTooLarge when |pair_shift| exceeds `guard`
    times the smallest energy denominator.
    """
    base = moller_total(p1, q1, p2, q2, spins=spins, constants=constants,
                        normalization=normalization)
    min_denom = min(abs(part.denom) for part in base.parts)
    if abs(pair_shift) > guard * min_denom:
        raise CorrectionTooLarge(
            f"|pair shift| = {abs(pair_shift):.3e} exceeds {guard:g} x min denominator"
        )
    delta_e = p1.t - p2.t
    factor = correction_factor(delta_e, base.provenance["photon_energy"], pair_shift)
    first_order = base.total * factor
    exact = 0.0 + 0.0j
    scale = max(abs(part.denom) for part in base.parts)
    for part in base.parts:
        shifted = part.denom - pair_shift
        if abs(shifted) < 1e-9 * scale:
            raise PoleEncountered("shifted denominator vanishes")
        exact += part.weight * part.omega1 * part.omega2 / shifted
    return CorrectedAmplitude(base, first_order, factor, exact, pair_shift)


def cm_correction_factor(
    p1: FourVector,
    q1: FourVector,
    p2: FourVector,
    q2: FourVector,
    cutoff: float,
    grid: GridSpec = GridSpec(),
    constants: Constants = NATURAL,
) -> float:
    """Correction factor re-evaluated in the zero-momentum frame.

    Boosts the kinematics to the frame where the incoming spatial momenta
    cancel, reruns the momentum integral for the boosted exchange photon, and
    assembles the factor there.
    """
    to_cm = cm_boost(p1 + q1)
    b1, b2 = boost(to_cm, p1), boost(to_cm, p2)
    k_cm = b1 - b2
    shift_cm, _ = total_shift(k_cm.spatial, cutoff, grid, constants)
    return correction_factor(
        b1.t - b2.t, float(np.linalg.norm(k_cm.spatial)), shift_cm
    )


def corrected_pair_coupling(
    p3,
    k3,
    s: int = 1,
    s_out: int = 1,
    alpha: int = 1,
    factor_cm: float = 1.0,
    factor_here: float = 1.0,
    constants: Constants = NATURAL,
) -> complex:
    """Pair coupling rescaled by sqrt(factor_cm / factor_here).

    Both factors must be nonzero and share a sign; in the zero-momentum frame
    they coincide and the rescale is 1.
    """
    if factor_here == 0.0 or factor_cm == 0.0 or (factor_here > 0.0) != (factor_cm > 0.0):
        raise SignMismatch(
            f"correction factors must share a sign: cm={factor_cm!r} here={factor_here!r}"
        )
    return pair_coupling(p3, k3, s, s_out, alpha, constants) * math.sqrt(
        factor_cm / factor_here
    )
