"""Atomic-vapor forward model: RF interference field, EIT susceptibility,
and the LO-dominant linearization of the absorption coefficient.

All quantities are SI (rad/s for angular rates, V/m for fields, 1/m for
absorption); angles are radians. Everything here is a pure function of its
inputs and vectorizes over position / field arguments via numpy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import DegenerateDetuning, LoDominanceWarning, SingularPoint

SPEED_OF_LIGHT = constants.c

# LO-to-signal amplitude ratio below which the linearized model is dubious.
LO_RATIO_WARN_THRESHOLD = 10.0


@dataclass(frozen=True)
class AtomicParams:
    """Constants of the four-level ladder system and the probe beam.

    Angular rates (decay, Rabi, detunings) are in rad/s; dipole moments in
    C*m; density in 1/m^3. Defaults correspond to a warm Rb vapor probed on
    the 780 nm line with a 480 nm coupling beam.
    """

    atom_density: float = 4.13e13
    probe_dipole: float = 1.06e-29
    rf_dipole: float = 7.85e-26
    decay_21: float = 2 * np.pi * 6.066e6
    coupling_rabi: float = 2 * np.pi * 40e6
    probe_detuning: float = 0.0
    coupling_detuning: float = 2 * np.pi * 10e3
    rf_detuning: float = 0.0
    probe_wavelength: float = 780.24e-9
    vacuum_permittivity: float = constants.epsilon_0
    reduced_planck: float = constants.hbar

    def __post_init__(self):
        for name in ("atom_density", "probe_dipole", "rf_dipole", "decay_21",
                     "coupling_rabi", "probe_wavelength"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.coupling_detuning + self.rf_detuning == 0:
            raise DegenerateDetuning(
                "coupling_detuning + rf_detuning must be nonzero")

    @property
    def probe_wavenumber(self) -> float:
        return 2 * np.pi / self.probe_wavelength

    @property
    def susceptibility_prefactor(self) -> float:
        """2*pi*N_a*mu_p^2 / (eps0*hbar), the scale of the susceptibility."""
        return (2 * np.pi * self.atom_density * self.probe_dipole**2
                / (self.vacuum_permittivity * self.reduced_planck))


@dataclass(frozen=True)
class PlaneWave:
    """A far-field plane wave: amplitude (V/m), phase (rad), angle (rad)."""

    amplitude: float
    phase: float = 0.0
    angle: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if not -np.pi / 2 <= self.angle <= np.pi / 2:
            raise ValueError("angle must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class RfScene:
    """LO plane wave plus N incoming signal plane waves at one carrier."""

    lo: PlaneWave
    signals: tuple[PlaneWave, ...] = field(default_factory=tuple)
    carrier_freq: float = 2.03e9

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        if self.lo.amplitude <= 0:
            raise ValueError("LO amplitude must be strictly positive")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be strictly positive")

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi * self.carrier_freq / SPEED_OF_LIGHT

    @property
    def rf_wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    @property
    def lo_dominance_ratio(self) -> float:
        total = sum(s.amplitude for s in self.signals)
        return np.inf if total == 0 else self.lo.amplitude / total

    @property
    def delta_ks(self) -> np.ndarray:
        """Beat wavenumbers k*(sin(theta_0) - sin(theta_i)), rad/m."""
        k = self.wavenumber
        return np.array([k * (np.sin(self.lo.angle) - np.sin(s.angle))
                         for s in self.signals])

    @property
    def delta_phis(self) -> np.ndarray:
        """Signal phases relative to the LO phase."""
        return np.array([s.phase - self.lo.phase for s in self.signals])

    def is_identifiable(self, rtol: float = 1e-9) -> bool:
        """True when all beat wavenumbers are distinct and nonzero."""
        dks = self.delta_ks
        scale = max(self.wavenumber, 1.0)
        if np.any(np.abs(dks) <= rtol * scale):
            return False
        if len(dks) > 1:
            diffs = np.abs(dks[:, None] - dks[None, :])
            np.fill_diagonal(diffs, np.inf)
            if diffs.min() <= rtol * scale:
                return False
        return True


def rabi_frequency(params: AtomicParams, field_magnitude) -> np.ndarray | float:
    """RF Rabi frequency mu_RF*|E|/hbar for a field magnitude in V/m."""
    field_magnitude = np.asarray(field_magnitude, dtype=float)
    if np.any(field_magnitude < 0):
        raise ValueError("field magnitude must be nonnegative")
    out = params.rf_dipole * field_magnitude / params.reduced_planck
    return out if out.ndim else float(out)


def rf_field(scene: RfScene, x) -> np.ndarray | complex:
    """Total complex RF field at position(s) x: direct phasor sum."""
    x = np.asarray(x, dtype=float)
    k = scene.wavenumber
    total = scene.lo.amplitude * np.exp(
        1j * (k * x * np.sin(scene.lo.angle) + scene.lo.phase))
    for s in scene.signals:
        total = total + s.amplitude * np.exp(
            1j * (k * x * np.sin(s.angle) + s.phase))
    return total if np.ndim(total) else complex(total)


def field_intensity(scene: RfScene, x) -> np.ndarray | float:
    """|E_RF(x)|^2 expanded term by term: LO self-term, signal self-terms,
    signal-LO beats, and all signal-signal cross-terms."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    k = scene.wavenumber
    amps = np.array([s.amplitude for s in scene.signals])
    out = np.full(x.shape, scene.lo.amplitude**2 + np.sum(amps**2))
    dks = scene.delta_ks
    dphis = scene.delta_phis
    for a_i, dk, dphi in zip(amps, dks, dphis):
        out = out + 2 * scene.lo.amplitude * a_i * np.cos(dk * x - dphi)
    sigs = scene.signals
    for i in range(len(sigs)):
        for m in range(i + 1, len(sigs)):
            beat_k = k * (np.sin(sigs[i].angle) - np.sin(sigs[m].angle))
            beat_phi = sigs[i].phase - sigs[m].phase
            out = out + 2 * sigs[i].amplitude * sigs[m].amplitude * np.cos(
                beat_k * x + beat_phi)
    return out if out.ndim else float(out)


def susceptibility_full(params: AtomicParams, rf_rabi,
                        gamma_31: float = 0.0,
                        gamma_41: float = 0.0) -> np.ndarray | complex:
    """Complex susceptibility of the four-level ladder system.

    Evaluates the nested continued-fraction response for a local RF Rabi
    frequency (rad/s). Rydberg-state decay rates default to zero, the limit
    in which they are negligible against the intermediate-state decay.
    """
    rf_rabi = np.asarray(rf_rabi, dtype=float)
    d_p = params.probe_detuning
    d_pc = params.probe_detuning + params.coupling_detuning
    d_pcr = d_pc + params.rf_detuning
    inner = gamma_41 - 1j * d_pcr
    if inner == 0:
        raise DegenerateDetuning("innermost denominator vanishes")
    mid = gamma_31 - 1j * d_pc + (rf_rabi**2 / 4) / inner
    if np.any(mid == 0):
        raise DegenerateDetuning("middle denominator vanishes")
    outer = params.decay_21 - 1j * d_p + (params.coupling_rabi**2 / 4) / mid
    if np.any(outer == 0):
        raise DegenerateDetuning("outer denominator vanishes")
    chi = 1j * params.susceptibility_prefactor / outer
    return chi if chi.ndim else complex(chi)


def susceptibility_simplified(params: AtomicParams,
                              rf_rabi) -> np.ndarray | complex:
    """Susceptibility for an on-resonance probe with negligible Rydberg decay.

    Requires probe_detuning == 0; this is the branch the linearized
    absorption model is built on.
    """
    if params.probe_detuning != 0:
        raise ValueError("simplified susceptibility assumes probe_detuning=0")
    rf_rabi = np.asarray(rf_rabi, dtype=float)
    d_c = params.coupling_detuning
    d_cr = d_c + params.rf_detuning
    if d_cr == 0:
        raise DegenerateDetuning("coupling_detuning + rf_detuning vanishes")
    inner = -1j * d_cr
    mid = -1j * d_c + (rf_rabi**2 / 4) / inner
    if np.any(mid == 0):
        raise DegenerateDetuning("middle denominator vanishes")
    outer = params.decay_21 + (params.coupling_rabi**2 / 4) / mid
    if np.any(outer == 0):
        raise DegenerateDetuning("outer denominator vanishes")
    chi = 1j * params.susceptibility_prefactor / outer
    return chi if chi.ndim else complex(chi)


def linearization_constants(params: AtomicParams) -> tuple[float, float]:
    """Constants (C, beta) of the algebraic absorption model.

    C scales the dimensionless intensity response into an absorption
    coefficient (1/m); beta maps field intensity (V/m)^2 into the shift of
    the two-photon resonance (rad/s).
    """
    d_cr = params.coupling_detuning + params.rf_detuning
    if d_cr == 0:
        raise DegenerateDetuning("coupling_detuning + rf_detuning vanishes")
    c_scale = (2 * np.pi * params.atom_density * params.probe_dipole**2
               * params.probe_wavenumber * params.decay_21
               / (params.vacuum_permittivity * params.reduced_planck))
    beta = params.rf_dipole**2 / (4 * params.reduced_planck**2 * d_cr)
    return c_scale, beta


def intensity_response(params: AtomicParams, s) -> np.ndarray | float:
    """Dimensionless absorption response f(s) vs field intensity s=(V/m)^2.

    f(s) = 1 / (gamma_21^2 + (Omega_c^2/4)^2 / (Delta_c - beta*s)^2);
    C*f(s) reproduces k_pr * Im(chi) of the simplified susceptibility.
    """
    s = np.asarray(s, dtype=float)
    _, beta = linearization_constants(params)
    shifted = params.coupling_detuning - beta * s
    if np.any(shifted == 0):
        raise SingularPoint("coupling detuning equals the intensity shift")
    q = params.coupling_rabi**2 / 4
    out = 1.0 / (params.decay_21**2 + q**2 / shifted**2)
    return out if out.ndim else float(out)


def intensity_response_derivative(params: AtomicParams,
                                  s) -> np.ndarray | float:
    """Derivative f'(s) of the intensity response, per (V/m)^2."""
    s = np.asarray(s, dtype=float)
    _, beta = linearization_constants(params)
    shifted = params.coupling_detuning - beta * s
    if np.any(shifted == 0):
        raise SingularPoint("coupling detuning equals the intensity shift")
    q = params.coupling_rabi**2 / 4
    denom = (params.decay_21**2 + q**2 / shifted**2) ** 2
    out = -2 * beta * q**2 / shifted**3 / denom
    return out if out.ndim else float(out)


def absorption_dc(params: AtomicParams, scene: RfScene) -> float:
    """Uniform absorption coefficient of the LO-only field, 1/m."""
    c_scale, _ = linearization_constants(params)
    return c_scale * intensity_response(params, scene.lo.amplitude**2)


def absorption_exact(params: AtomicParams, scene: RfScene,
                     x) -> np.ndarray | float:
    """Exact local absorption coefficient alpha(x) = C*f(|E_RF(x)|^2)."""
    c_scale, _ = linearization_constants(params)
    return c_scale * intensity_response(params, field_intensity(scene, x))


def modulation_amplitudes(params: AtomicParams, scene: RfScene) -> np.ndarray:
    """Per-target absorption modulation amplitudes 2*C*A0*A_i*f'(A0^2), 1/m.

    Warns when the scene is outside the LO-dominant regime; the linear
    model degrades gracefully but its error grows like 1/ratio.
    """
    _warn_if_weak_lo(scene)
    c_scale, _ = linearization_constants(params)
    fprime = intensity_response_derivative(params, scene.lo.amplitude**2)
    amps = np.array([s.amplitude for s in scene.signals])
    return 2 * c_scale * scene.lo.amplitude * amps * fprime


def absorption_linearized(params: AtomicParams, scene: RfScene,
                          x) -> np.ndarray | float:
    """LO-dominant linearization: alpha_DC plus one cosine per target."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, absorption_dc(params, scene))
    mods = modulation_amplitudes(params, scene)
    for a_mod, dk, dphi in zip(mods, scene.delta_ks, scene.delta_phis):
        out = out + a_mod * np.cos(dk * x - dphi)
    return out if out.ndim else float(out)


def scattering_rate(gamma: float, intensity_ratio,
                    detuning_ratio=0.0) -> np.ndarray | float:
    """Two-level photon scattering rate for I/I_sat and Delta/Gamma inputs."""
    intensity_ratio = np.asarray(intensity_ratio, dtype=float)
    if np.any(intensity_ratio < 0):
        raise ValueError("intensity ratio must be nonnegative")
    out = (gamma / 2) * intensity_ratio / (
        1 + intensity_ratio + 4 * np.asarray(detuning_ratio, dtype=float)**2)
    return out if out.ndim else float(out)


def _warn_if_weak_lo(scene: RfScene) -> None:
    if scene.lo_dominance_ratio < LO_RATIO_WARN_THRESHOLD:
        warnings.warn(
            "LO-to-signal amplitude ratio below 10; linearized absorption "
            "model may be inaccurate", LoDominanceWarning, stacklevel=3)
