"""Operator-level description of the reduced state.

Converts second moments into Gibbs coefficients, the renormalized
Hamiltonian (frequency shift plus induced pairing), its Bogoliubov
diagonalization, the extended Bose-Einstein distribution, and the
position-momentum representation with the canonical transformation to
quasi-particle coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchAmbiguity, UnstableReducedPotential, ZeroTemperature
from .spectral import OMEGA_S, bose_occupation
from .state import Moments, moments_to_kernel


@dataclass(frozen=True)
class GibbsCoefficients:
    """Coefficients of rho = exp[eta(ad a + a ad) + delta* ad^2 + delta a^2]/Z.

    ``alpha`` and ``gamma`` parametrize the equivalent ordered form
    exp(alpha ad^2) exp(gamma(ad a + a ad)) exp(alpha* a^2)/Z.
    """

    alpha: complex
    gamma: float
    eta: float
    delta: complex
    z_reduced: float


@dataclass(frozen=True)
class ReducedHamiltonian:
    """Renormalized frequency and pairing strength of the reduced mode."""

    omega: float
    pairing: complex

    def __post_init__(self):
        if self.omega <= abs(self.pairing):
            raise UnstableReducedPotential(
                f"omega_r = {self.omega:.6g} <= |Delta_r| = "
                f"{abs(self.pairing):.6g}")

    @property
    def eigenfrequency(self) -> float:
        return float(np.sqrt(self.omega**2 - abs(self.pairing)**2))


@dataclass(frozen=True)
class BogoliubovFrame:
    """Transformation c = u a + v a^dag diagonalizing the reduced Hamiltonian."""

    u: complex
    v: complex
    eigenfrequency: float


@dataclass(frozen=True)
class PositionForm:
    """Quadratic form of the reduced Hamiltonian in position and momentum.

    H = P^2/(2 M') + (M'/2) * harmonic * X^2 + (cross/2)(XP + PX), together
    with the canonical matrix mapping (X, P) to the quasi-particle pair.
    """

    mass_eff: float
    harmonic: float
    cross: float
    transform: np.ndarray
    mass: float = 1.0

    @property
    def eigenfrequency(self) -> float:
        return float(np.sqrt(self.harmonic - self.cross**2))

    def form_matrix(self) -> np.ndarray:
        """Symmetric matrix G with H = (1/2) (X, P) G (X, P)^T."""
        return np.array([[self.mass_eff * self.harmonic, self.cross],
                         [self.cross, 1.0 / self.mass_eff]])


def _branch_root(moments: Moments) -> float:
    """sqrt((n + 1/2)^2 - |s|^2), the supported branch of the coefficients."""
    n, s = moments.occupation, moments.squeezing
    val = (n + 0.5)**2 - abs(s)**2
    if val < 0:
        raise BranchAmbiguity(
            f"(n + 1/2)^2 - |s|^2 = {val:.3e} < 0: unsupported branch")
    return float(np.sqrt(val))


def gibbs_coefficients(moments: Moments) -> GibbsCoefficients:
    """Coefficients of the reduced Gibbs exponentials from (n, s).

    The pairing coefficient is proportional to the conjugate of the
    squeezing, fixed by requiring that the extended Bose-Einstein relation
    inverts this map exactly.
    """
    n, s = moments.occupation, moments.squeezing
    if n <= 0 and abs(s) == 0:
        raise ZeroTemperature("vacuum moments carry no Gibbs data")
    x = _branch_root(moments)
    z2 = n**2 + n - abs(s)**2
    if z2 <= 0:
        raise ZeroTemperature(
            f"n^2 + n - |s|^2 = {z2:.3e} <= 0: zero-temperature edge")
    log_ratio = float(np.log((x - 0.5) / (x + 0.5)))
    eta = (n + 0.5) * log_ratio / (2 * x)
    delta = -np.conj(s) * log_ratio / (2 * x)
    kernel = moments_to_kernel(moments)
    alpha = kernel.pi_s / 2
    gamma = float(np.log(np.sqrt(kernel.omega_s.real)))
    return GibbsCoefficients(alpha=complex(alpha), gamma=gamma, eta=float(eta),
                             delta=complex(delta), z_reduced=float(np.sqrt(z2)))


def reduced_hamiltonian(moments: Moments, temperature: float) -> ReducedHamiltonian:
    """Renormalized frequency and pairing from moments at the given temperature."""
    coeff = gibbs_coefficients(moments)
    return ReducedHamiltonian(omega=-2 * coeff.eta * temperature,
                              pairing=-2 * coeff.delta * temperature)


def bogoliubov(h: ReducedHamiltonian) -> BogoliubovFrame:
    """Bogoliubov pair (u, v) with |u|^2 - |v|^2 = 1 diagonalizing H.

    The phase of u follows the conjugate of the pairing; the phase of v is
    fixed by u* v = pairing/(2 eigenfrequency), which is what diagonalizes
    the position-momentum quadratic form (and leaves the printed moduli
    sqrt((omega +- wbar)/(2 wbar)) unchanged).  The pairing -> 0 limit is
    (u, v) = (1, 0) by convention.
    """
    wbar = h.eigenfrequency
    delta = h.pairing
    if abs(delta) == 0:
        return BogoliubovFrame(u=1.0 + 0j, v=0.0 + 0j, eigenfrequency=wbar)
    u = np.conj(delta) / np.sqrt(2 * wbar * (h.omega - wbar))
    v = abs(delta) / np.sqrt(2 * wbar * (h.omega + wbar))
    return BogoliubovFrame(u=complex(u), v=complex(v), eigenfrequency=wbar)


def extended_bose_einstein(h: ReducedHamiltonian, temperature: float) -> Moments:
    """Occupation and squeezing of the thermal state of the reduced Hamiltonian.

    n + 1/2 = (omega/wbar)(n_B(wbar) + 1/2) and
    s = -(pairing*/wbar)(n_B(wbar) + 1/2); exact inverse of
    ``reduced_hamiltonian``.
    """
    if temperature <= 0:
        raise ZeroTemperature("temperature must be positive")
    wbar = h.eigenfrequency
    filling = bose_occupation(1.0 / temperature, wbar) + 0.5
    n = (h.omega / wbar) * filling - 0.5
    s = -(np.conj(h.pairing) / wbar) * filling
    return Moments(occupation=float(n), squeezing=complex(s))


def quasiparticle_occupation(moments: Moments) -> float:
    """Occupation of the Bogoliubov quasi-particle, sqrt((n+1/2)^2-|s|^2) - 1/2."""
    return _branch_root(moments) - 0.5


def position_form(h: ReducedHamiltonian, mass: float = 1.0) -> PositionForm:
    """Position-momentum representation of the reduced Hamiltonian.

    M' = M omega_S / (omega_r - Re Delta); the harmonic coefficient is
    omega_r^2 - (Re Delta)^2 and the cross coefficient Im Delta, so the
    classical eigenfrequency of the form equals the Bogoliubov one.
    """
    if mass <= 0:
        raise UnstableReducedPotential("mass must be positive")
    if h.omega <= h.pairing.real:
        raise UnstableReducedPotential(
            f"omega_r = {h.omega:.6g} <= Re Delta = {h.pairing.real:.6g}")
    mass_eff = mass * OMEGA_S / (h.omega - h.pairing.real)
    frame = bogoliubov(h)
    transform = coordinate_transform(frame, mass, mass_eff)
    return PositionForm(mass_eff=float(mass_eff),
                        harmonic=float(h.omega**2 - h.pairing.real**2),
                        cross=float(h.pairing.imag),
                        transform=transform, mass=mass)


def coordinate_transform(frame: BogoliubovFrame, mass: float,
                         mass_eff: float) -> np.ndarray:
    """Canonical matrix taking (X, P) to the quasi-particle pair (Xbar, Pbar)."""
    u, v = frame.u, frame.v
    wbar = frame.eigenfrequency
    mw = mass * OMEGA_S
    mw_bar = mass_eff * wbar
    pref = np.sqrt(mw_bar / mw)
    return pref * np.array([
        [(u.real + v.real) * mw / mw_bar, (v.imag - u.imag) / mw_bar],
        [(u.imag + v.imag) * mw, (u.real - v.real)],
    ])
