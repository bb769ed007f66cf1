"""Ground-truth computations for a bath discretized into a finite mode list.

The total Gibbs state of system plus k_c bath modes is Gaussian; its
coherent-state kernel blocks (Omega, Pi) follow from exponentiating the
quadratic generator in a faithful matrix representation, and the reduced
kernel from an exact Gaussian partial trace.  A truncated Fock-space
diagonalization provides a brute-force cross-check for one or two modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (InvalidGrid, InvertedPotential, NonTraceable,
                     SingularBlock, TruncationError, ZeroTemperature)
from .spectral import OMEGA_S, ModeList
from .state import GaussianKernel, Moments, kernel_to_moments

# beta * Omega_max beyond which the plain matrix exponential is too graded
# (the lower-right block's condition number grows like exp(beta * Omega_max))
_EXPM_GRADE_LIMIT = 30.0


@dataclass(frozen=True)
class Generator:
    """Half-generator blocks (D, R) of the total Gibbs Gaussian.

    D and R follow the hand-construction convention with prefactor -beta/2;
    the matrix actually exponentiated by ``total_gaussian`` is twice the
    assembled block matrix (fixed by the single-free-mode limit, where the
    kernel must come out exp(-beta*omega)).
    """

    d: np.ndarray
    r: np.ndarray
    modes: ModeList
    beta: float
    counterterm: bool


@dataclass(frozen=True)
class TotalGaussian:
    """Kernel blocks of the total Gaussian state, system index first."""

    omega: np.ndarray
    pi: np.ndarray


def _reflect_minor(a: np.ndarray) -> np.ndarray:
    """Reflection in the minor diagonal: out[i, j] = a[n-1-j, n-1-i]."""
    n = a.shape[0]
    rev = np.arange(n - 1, -1, -1)
    return a[np.ix_(rev, rev)].T


def _reflect_major(a: np.ndarray) -> np.ndarray:
    """Reflection in the major diagonal (transpose)."""
    return a.T


def build_generator(modes: ModeList, beta: float,
                    counterterm: bool = False) -> Generator:
    """Populate the half-generator blocks for the given mode list.

    Column order of R follows the reflected layout of the second operator
    group (bath modes in reversed order, system last); the counterterm adds
    a system-frequency shift and a system-system pairing entry.
    """
    if beta <= 0:
        raise InvalidGrid("beta must be positive")
    kc = len(modes)
    n = kc + 1
    lam = modes.counterterm_strength if counterterm else 0.0
    d = np.zeros((n, n))
    d[0, 0] = OMEGA_S + 2 * lam
    d[0, 1:] = modes.couplings
    d[1:, 0] = modes.couplings
    d[np.arange(1, n), np.arange(1, n)] = modes.frequencies
    r = np.zeros((n, n))
    r[0, :kc] = modes.couplings[::-1]
    r[1:, kc] = modes.couplings
    r[0, kc] = 2 * lam
    scale = -beta / 2.0
    return Generator(d=scale * d, r=scale * r, modes=modes, beta=beta,
                     counterterm=counterterm)


def total_gaussian(gen: Generator, backend: str = "auto") -> TotalGaussian:
    """Exponentiate the generator and extract the kernel blocks (Omega, Pi).

    ``expm`` assembles [[D, R], [-R_hat, -D_tilde]], exponentiates twice that
    matrix and undoes the index reflections.  ``normal-mode`` evaluates the
    same blocks through the exact normal-mode factorization, which stays
    well-conditioned when beta * Omega_max is large and the exponential's
    grading would overflow double precision.
    """
    if backend == "auto":
        wmax = float(np.max(normal_mode_frequencies(gen.modes, gen.counterterm)))
        backend = "expm" if gen.beta * wmax < _EXPM_GRADE_LIMIT else "normal-mode"
    if backend == "expm":
        return _total_gaussian_expm(gen)
    if backend == "normal-mode":
        return _total_gaussian_normal_mode(gen)
    raise InvalidGrid(f"unknown total_gaussian backend {backend!r}")


def _total_gaussian_expm(gen: Generator) -> TotalGaussian:
    n = gen.d.shape[0]
    block = np.block([[gen.d, gen.r],
                      [-_reflect_major(gen.r), -_reflect_minor(gen.d)]])
    e = expm(2.0 * block)
    e12, e22 = e[:n, n:], e[n:, n:]
    if np.linalg.cond(e22) > 1e14:
        raise SingularBlock("lower-right block of the exponential is singular")
    omega_tilde = np.linalg.inv(e22)
    pi_raw = e12 @ omega_tilde
    omega = _reflect_minor(omega_tilde)
    pi = pi_raw[:, ::-1]  # undo the reversed column order of the second group
    return TotalGaussian(omega=omega, pi=pi)


def _total_gaussian_normal_mode(gen: Generator) -> TotalGaussian:
    modes, beta = gen.modes, gen.beta
    kc = len(modes)
    lam = modes.counterterm_strength if gen.counterterm else 0.0
    freqs = np.concatenate([[OMEGA_S], modes.frequencies])
    k = _stiffness(modes, gen.counterterm)
    ev, orth = np.linalg.eigh(k)
    wj = np.sqrt(ev.astype(complex))
    rt = np.sqrt(wj[None, :] / freqs[:, None])
    at = (orth * (0.5 * (rt + 1.0 / rt))).T   # c_j = At[j,i] a_i + Bt[j,i] a_i^dag
    bt = (orth * (0.5 * (rt - 1.0 / rt))).T
    em = np.exp(-beta * wj)
    c = np.linalg.inv(at.T)
    q = bt @ np.linalg.inv(at)
    y = em[:, None] * (c @ bt.T) * em[None, :]
    iyq = np.eye(kc + 1) - y @ q
    q_iyq = q @ np.linalg.inv(iyq)
    xi = em[:, None] * q_iyq * em[None, :]
    core = at.T - bt.T @ c @ bt.T
    pi = core @ xi @ c - bt.T @ c
    xi_open = em[:, None] * q_iyq    # e^- Q (1 - YQ)^-1, right factor unscaled
    omega = (at.T * em[None, :]) @ at + pi @ (bt.T * em[None, :]) @ at \
        - core @ xi_open @ bt
    if max(np.abs(omega.imag).max(), np.abs(pi.imag).max()) > 1e-9:
        return TotalGaussian(omega=omega, pi=pi)
    return TotalGaussian(omega=omega.real, pi=pi.real)


def gaussian_partial_trace(tg: TotalGaussian) -> tuple[GaussianKernel, float]:
    """Trace out the bath indices of the total kernel.

    Returns the reduced scalar kernel and the determinant factor
    ||1 - [[Omega_EE, Pi_EE], [Pi_EE*, Omega_EE*]]||^(1/2) entering the
    reduced-partition-function relation (NaN when the determinant is not
    positive, which only happens for formally unstable configurations).
    """
    om, pi = tg.omega, tg.pi
    n = om.shape[0]
    if n == 1:
        return GaussianKernel(omega_s=complex(om[0, 0]),
                              pi_s=complex(pi[0, 0])), 1.0
    kc = n - 1
    om_ee, pi_ee = om[1:, 1:], pi[1:, 1:]
    om_se, pi_se = om[0:1, 1:], pi[0:1, 1:]
    mee = np.block([[om_ee, pi_ee], [pi_ee.conj(), om_ee.conj()]])
    left = np.block([[om_se, pi_se], [pi_se.conj(), om_se.conj()]])
    right = np.vstack([np.hstack([om_se.conj().T, pi_se.T]),
                       np.hstack([pi_se.conj().T, om_se.T])])
    resolvent = np.eye(2 * kc) - mee
    if np.linalg.cond(resolvent) > 1e14:
        raise NonTraceable("1 - EE block is numerically singular")
    x = np.linalg.solve(resolvent, right)
    top = np.array([[om[0, 0], pi[0, 0]],
                    [np.conj(pi[0, 0]), np.conj(om[0, 0])]])
    red = top + left @ x
    sign, logdet = np.linalg.slogdet(resolvent)
    factor = float(np.exp(0.5 * logdet)) if sign > 0 else float("nan")
    return GaussianKernel(omega_s=complex(red[0, 0]),
                          pi_s=complex(red[0, 1])), factor


def finite_kernel(modes: ModeList, beta: float, counterterm: bool = False,
                  backend: str = "auto") -> GaussianKernel:
    """Reduced kernel of the discretized model (generator + partial trace)."""
    gen = build_generator(modes, beta, counterterm)
    kernel, _ = gaussian_partial_trace(total_gaussian(gen, backend))
    return kernel


def _stiffness(modes: ModeList, counterterm: bool) -> np.ndarray:
    lam = modes.counterterm_strength if counterterm else 0.0
    freqs = np.concatenate([[OMEGA_S], modes.frequencies])
    k = np.diag(freqs**2)
    k[0, 0] += 4 * OMEGA_S * lam
    coupling = 2 * modes.couplings * np.sqrt(OMEGA_S * modes.frequencies)
    k[0, 1:] = coupling
    k[1:, 0] = coupling
    return k


def normal_mode_frequencies(modes: ModeList, counterterm: bool = False) -> np.ndarray:
    """Eigenfrequencies of the coupled stiffness matrix, sorted ascending."""
    ev = np.linalg.eigvalsh(_stiffness(modes, counterterm))
    if ev[0] <= 0:
        raise InvertedPotential(
            f"stiffness matrix has eigenvalue {ev[0]:.6e} <= 0 "
            "(coupling too strong for the model without counterterm)")
    return np.sqrt(ev)


def log_partition_total(modes: ModeList, beta: float,
                        counterterm: bool = False) -> float:
    """ln Z of the total model: -sum_j ln[2 sinh(beta Omega_j / 2)]."""
    w = normal_mode_frequencies(modes, counterterm)
    return float(-np.sum(_log_2sinh_half(beta * w)))


def log_partition_env(modes: ModeList, beta: float) -> float:
    """ln Z of the decoupled bath: -sum_k ln[2 sinh(beta w_k / 2)]."""
    if beta <= 0:
        raise InvalidGrid("beta must be positive")
    return float(-np.sum(_log_2sinh_half(beta * modes.frequencies)))


def _log_2sinh_half(x: np.ndarray) -> np.ndarray:
    # ln(2 sinh(x/2)) = x/2 + ln(1 - exp(-x)), stable for large x
    x = np.asarray(x, dtype=float)
    return x / 2 + np.log1p(-np.exp(-np.minimum(x, 700.0)))


def reduced_partition(moments: Moments) -> float:
    """Reduced partition function sqrt(n^2 + n - |s|^2) of the squeezed state."""
    val = (moments.occupation**2 + moments.occupation
           - abs(moments.squeezing)**2)
    if val <= 1e-300:
        raise ZeroTemperature(
            f"n^2 + n - |s|^2 = {val:.3e} <= 0: zero-temperature edge")
    return float(np.sqrt(val))


def moments_from_modes(modes: ModeList, beta: float,
                       counterterm: bool = False) -> Moments:
    """Exact moments of the discretized model via normal-mode correlators.

    Equivalent to the Gaussian partial trace (both are exact for the finite
    model) but reduces to a single symmetric eigenproblem; used as a fast
    backend and as an independent cross-check of the kernel machinery.
    """
    if beta <= 0:
        raise InvalidGrid("beta must be positive")
    k = _stiffness(modes, counterterm)
    ev, orth = np.linalg.eigh(k)
    if ev[0] <= 0:
        raise InvertedPotential("no thermal state: inverted potential")
    wj = np.sqrt(ev)
    coth = 1.0 / np.tanh(np.minimum(beta * wj / 2, 350.0))
    weight = orth[0]**2 * coth
    x2 = float(np.sum(weight / (2 * wj)))
    p2 = float(np.sum(weight * wj / 2))
    n = 0.5 * (OMEGA_S * x2 + p2 / OMEGA_S) - 0.5
    s = 0.5 * (OMEGA_S * x2 - p2 / OMEGA_S)
    return Moments(occupation=n, squeezing=complex(s))


@dataclass(frozen=True)
class FockResult:
    """Brute-force oracle output: moments and partition data."""

    moments: Moments
    ln_z_total: float      # position convention, matches log_partition_total
    ln_z_reduced: float    # from the reduced density-matrix spectrum
    truncation: float | None = None


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1)


def fock_oracle(modes: ModeList, beta: float, n_max,
                counterterm: bool = False, check_truncation: bool = True,
                truncation_delta: int = 10,
                truncation_tol: float = 1e-5) -> FockResult:
    """Diagonalize the truncated Fock-space Hamiltonian and trace numerically.

    ``n_max`` is a single occupation cap or one per mode (system first).
    Total parity is conserved, so the Hamiltonian is diagonalized in two
    parity blocks.  The truncation error is estimated by re-running with
    every cap raised by ``truncation_delta``.
    """
    kc = len(modes)
    if kc not in (1, 2):
        raise InvalidGrid("fock_oracle supports 1 or 2 bath modes")
    caps = [n_max] * (kc + 1) if np.isscalar(n_max) else list(n_max)
    if len(caps) != kc + 1:
        raise InvalidGrid("n_max must be scalar or one entry per mode")
    result = _fock_once(modes, beta, caps, counterterm)
    if not check_truncation:
        return result
    bigger = _fock_once(modes, beta, [c + truncation_delta for c in caps],
                        counterterm)
    drift = max(abs(result.moments.occupation - bigger.moments.occupation),
                abs(result.moments.squeezing - bigger.moments.squeezing),
                abs(result.ln_z_reduced - bigger.ln_z_reduced))
    if drift > truncation_tol:
        raise TruncationError(
            f"n_max sensitivity {drift:.3e} exceeds {truncation_tol}")
    return FockResult(moments=bigger.moments, ln_z_total=bigger.ln_z_total,
                      ln_z_reduced=bigger.ln_z_reduced, truncation=float(drift))


def _kron_chain(factors) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def _fock_once(modes: ModeList, beta: float, caps, counterterm: bool) -> FockResult:
    dims = [c + 1 for c in caps]
    dim = int(np.prod(dims))
    eyes = [np.eye(d) for d in dims]
    numbers = [np.diag(np.arange(float(d))) for d in dims]
    positions = [_ladder(d) + _ladder(d).T for d in dims]

    def embed(i, op):
        return _kron_chain([op if j == i else eyes[j] for j in range(len(dims))])

    # assemble from per-mode factors: every product happens in the small spaces
    h = OMEGA_S * embed(0, numbers[0])
    xsys = embed(0, positions[0])
    for k in range(len(modes)):
        h += modes.frequencies[k] * embed(k + 1, numbers[k + 1])
        h += modes.couplings[k] * _kron_chain(
            [positions[j] if j in (0, k + 1) else eyes[j]
             for j in range(len(dims))])
    if counterterm:
        h += modes.counterterm_strength * embed(0, positions[0] @ positions[0])
    h = 0.5 * (h + h.T)

    # occupancy parity is conserved: diagonalize the two blocks separately
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    parity = (sum(grids).ravel() % 2).astype(int)
    evals, evecs, indices = [], [], []
    for par in (0, 1):
        idx = np.where(parity == par)[0]
        w, u = np.linalg.eigh(h[np.ix_(idx, idx)])
        evals.append(w)
        evecs.append(u)
        indices.append(idx)
    e0 = min(w.min() for w in evals)
    z = sum(float(np.sum(np.exp(-beta * (w - e0)))) for w in evals)
    rho = np.zeros((dim, dim))
    for w, u, idx in zip(evals, evecs, indices):
        rho[np.ix_(idx, idx)] = (u * np.exp(-beta * (w - e0))) @ u.T
    rho /= z
    n = float(np.sum(np.diag(embed(0, numbers[0])) * np.diag(rho)))
    aa = embed(0, _ladder(dims[0]) @ _ladder(dims[0]))
    s = float(np.sum(aa * rho))  # Tr(aa rho) with rho symmetric
    ln_z_h = float(np.log(z) - beta * e0)
    ln_z_total = ln_z_h - beta * (OMEGA_S + float(np.sum(modes.frequencies))) / 2

    rest = dim // dims[0]
    rho_s = rho.reshape(dims[0], rest, dims[0], rest).trace(axis1=1, axis2=3)
    p = np.sort(np.linalg.eigvalsh(rho_s))[::-1]
    ratio = p[1] / p[0]
    ln_z_reduced = float(np.log(np.sqrt(ratio) / (1 - ratio)))
    return FockResult(moments=Moments(occupation=n, squeezing=complex(s)),
                      ln_z_total=ln_z_total, ln_z_reduced=ln_z_reduced)


def oracle_moments(modes: ModeList, beta: float, counterterm: bool = False,
                   backend: str = "auto") -> Moments:
    """Moments of the discretized model through the Gaussian machinery."""
    return kernel_to_moments(finite_kernel(modes, beta, counterterm, backend))
