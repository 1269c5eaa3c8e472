"""System parameters, derived cavity-QED figures of merit, and operator construction.

All rates are stored as angular frequencies in rad/s.  Configuration files
quote rates in GHz meaning ``rate / 2pi``; :meth:`SystemParams.from_ghz`
performs that conversion.

The Hamiltonian is written in a frame rotating at the laser frequency.
Detunings follow the convention ``transition - laser``:

    laser_detuning   = omega_cavity  - omega_laser
    exciton_detuning = omega_exciton - omega_laser

and the cavity tuning axis is ``exciton_detuning - laser_detuning``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK
from scipy.constants import hbar as HBAR

from .errors import DegenerateCouplingError, LayoutMismatchError, ParameterError
from .hilbert import CCW, CW, EMITTER, OperatorMatrix, SpaceLayout, annihilation, embed, lower_sigma

TWO_PI = 2.0 * math.pi
GHZ = TWO_PI * 1e9  # rad/s per GHz of (rate / 2pi)

BASES = ("traveling", "standing")


def g_tw_from_geometry(eta, lambda0, n_refr, tau_sp, V_tw) -> float:
    """Coherent exciton coupling to a traveling-wave mode, in rad/s.

    ``V_tw`` is given in units of ``(lambda0 / n_refr)**3``.
    """
    for name, val in (("lambda0", lambda0), ("n_refr", n_refr), ("tau_sp", tau_sp), ("V_tw", V_tw)):
        if not val > 0:
            raise ParameterError(f"{name} must be positive, got {val}")
    if not 0 <= eta <= 1:
        raise ParameterError(f"eta must lie in [0, 1], got {eta}")
    volume = V_tw * (lambda0 / n_refr) ** 3
    return eta * math.sqrt(3 * SPEED_OF_LIGHT * lambda0**2 / (8 * math.pi * n_refr**3 * tau_sp * volume))


def standing_couplings(g_tw: float, xi: float) -> tuple[complex, complex]:
    """Couplings to the symmetric and antisymmetric standing-wave modes."""
    phase = np.exp(1j * xi)
    return g_tw * (1 + phase) / math.sqrt(2), g_tw * (1 - phase) / math.sqrt(2)


def photon_flux_from_power(power: float, lambda0: float) -> float:
    """Photons per second carried by ``power`` watts at wavelength ``lambda0``."""
    if power < 0:
        raise ParameterError(f"power must be non-negative, got {power}")
    return power * lambda0 / (PLANCK * SPEED_OF_LIGHT)


@dataclass(frozen=True)
class SystemParams:
    """Rates, geometry and emitter properties of the fiber-coupled microdisk-QD system.

    Rates are angular frequencies (rad/s), ``lambda0`` is in meters, ``tau_sp``
    in seconds and ``V_tw`` in units of ``(lambda0/n_refr)**3``.  When ``g_tw``
    is ``None`` the coupling is derived from ``eta``, ``V_tw`` and ``tau_sp``.
    """

    kappa_e: float
    kappa_i: float
    gamma_beta: float
    xi: float
    gamma_perp: float
    gamma_par: float
    lambda0: float = 1300e-9
    n_refr: float = 3.4
    tau_sp: float = 1e-9
    V_tw: float = 6.4
    eta: float = 0.21
    g_tw: float | None = None

    def __post_init__(self):
        for name in ("kappa_e", "kappa_i", "gamma_beta", "gamma_perp", "gamma_par"):
            val = getattr(self, name)
            if not (val >= 0 and math.isfinite(val)):
                raise ParameterError(f"{name} must be a finite non-negative rate, got {val}")
        if self.g_tw is not None and not (self.g_tw >= 0 and math.isfinite(self.g_tw)):
            raise ParameterError(f"g_tw must be a finite non-negative rate, got {self.g_tw}")
        if not self.kappa_e + self.kappa_i > 0:
            raise ParameterError("total cavity decay kappa_e + kappa_i must be positive")
        if self.gamma_perp < self.gamma_par / 2 * (1 - 1e-12):
            raise ParameterError(
                f"gamma_perp ({self.gamma_perp:g}) < gamma_par/2 ({self.gamma_par / 2:g}): "
                "pure dephasing would be negative"
            )
        if not 0 <= self.eta <= 1:
            raise ParameterError(f"eta must lie in [0, 1], got {self.eta}")
        for name in ("V_tw", "lambda0", "n_refr", "tau_sp"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if not math.isfinite(self.xi):
            raise ParameterError("xi must be finite")

    @classmethod
    def from_ghz(cls, **kw) -> "SystemParams":
        """Build from rates quoted in GHz (rate/2pi), wavelength in nm, lifetime in ns."""
        rates = ("kappa_e", "kappa_i", "gamma_beta", "gamma_perp", "gamma_par", "g_tw")
        out = {}
        for key, val in kw.items():
            if key in rates:
                out[key] = None if val is None else val * GHZ
            elif key == "lambda0":
                out[key] = val * 1e-9
            elif key == "tau_sp":
                out[key] = val * 1e-9
            else:
                out[key] = val
        return cls(**out)

    @classmethod
    def nominal(cls) -> "SystemParams":
        """Nominal device parameters; the coupling is derived from geometry."""
        return cls.from_ghz(
            kappa_e=0.171, kappa_i=0.91, gamma_beta=1.99, xi=0.25 * math.pi,
            gamma_perp=1.17, gamma_par=0.55, lambda0=1300.0, n_refr=3.4,
            tau_sp=1.0, V_tw=6.4, eta=0.21,
        )

    def to_ghz(self) -> dict:
        """Inverse of :meth:`from_ghz`."""
        out = asdict(self)
        for key in ("kappa_e", "kappa_i", "gamma_beta", "gamma_perp", "gamma_par", "g_tw"):
            if out[key] is not None:
                out[key] = out[key] / GHZ
        out["lambda0"] = self.lambda0 * 1e9
        out["tau_sp"] = self.tau_sp * 1e9
        return out

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @property
    def kappa_T(self) -> float:
        return self.kappa_e + self.kappa_i

    @property
    def gamma_pure(self) -> float:
        return max(self.gamma_perp - self.gamma_par / 2, 0.0)

    @property
    def coupling(self) -> float:
        """Traveling-wave coupling actually used by the model (rad/s)."""
        if self.g_tw is not None:
            return self.g_tw
        return g_tw_from_geometry(self.eta, self.lambda0, self.n_refr, self.tau_sp, self.V_tw)

    @property
    def g_standing(self) -> tuple[complex, complex]:
        return standing_couplings(self.coupling, self.xi)

    @property
    def omega0(self) -> float:
        return TWO_PI * SPEED_OF_LIGHT / self.lambda0

    @property
    def quality_factor(self) -> float:
        return self.omega0 / (2 * self.kappa_T)


@dataclass(frozen=True)
class DriveSpec:
    """Input power and detunings (rad/s) of the probe laser."""

    input_power: float = 0.0
    laser_detuning: float = 0.0
    exciton_detuning: float = 0.0

    def __post_init__(self):
        if not self.input_power >= 0:
            raise ParameterError(f"input power must be non-negative, got {self.input_power}")
        if not (math.isfinite(self.laser_detuning) and math.isfinite(self.exciton_detuning)):
            raise ParameterError("detunings must be finite")

    @classmethod
    def tuned(cls, input_power, laser_detuning, cavity_exciton_detuning) -> "DriveSpec":
        return cls(input_power, laser_detuning, laser_detuning + cavity_exciton_detuning)

    @property
    def cavity_exciton_detuning(self) -> float:
        return self.exciton_detuning - self.laser_detuning

    def photon_flux(self, lambda0: float) -> float:
        return photon_flux_from_power(self.input_power, lambda0)

    def amplitude(self, lambda0: float) -> float:
        """Drive amplitude ``E = sqrt(photon flux)``."""
        return math.sqrt(self.photon_flux(lambda0))

    def with_laser(self, laser_detuning: float) -> "DriveSpec":
        """Same power and cavity tuning, different laser position."""
        return DriveSpec.tuned(self.input_power, laser_detuning, self.cavity_exciton_detuning)


def critical_numbers(params: SystemParams) -> tuple[float, float]:
    """Critical atom number and saturation photon number for the stronger standing mode."""
    g = abs(params.g_standing[0])
    if g <= 1e-12 * params.coupling:  # cos(xi/2) rounds to ~1e-16, not 0, at xi = pi
        raise DegenerateCouplingError("g_sw1 = 0: critical numbers are undefined")
    n0 = 2 * params.kappa_T * params.gamma_perp / g**2
    m0 = params.gamma_par * params.gamma_perp / (4 * g**2)
    return n0, m0


@dataclass(frozen=True)
class ModeOperators:
    """Embedded operators of one basis choice on a cavity-QD layout.

    ``modes`` are the operators living on the two bosonic slots: the
    traveling modes themselves, or ``(c_plus, c_minus)`` in the standing
    basis.  ``a_cw`` / ``a_ccw`` are always the traveling-wave fields
    expressed in that basis, as needed by input-output relations.
    """

    layout: SpaceLayout
    basis: str
    modes: tuple[OperatorMatrix, OperatorMatrix]
    a_cw: OperatorMatrix
    a_ccw: OperatorMatrix
    sigma_minus: OperatorMatrix

    @classmethod
    def build(cls, layout: SpaceLayout, basis: str = "traveling") -> "ModeOperators":
        if basis not in BASES:
            raise ValueError(f"unknown basis {basis!r}; expected one of {BASES}")
        if not layout.is_cavity_qd:
            raise LayoutMismatchError(f"need (N, N, 2) layout, got {layout.mode_dims}")
        a = annihilation(layout.n_fock)
        m0, m1 = embed(a, CW, layout), embed(a, CCW, layout)
        sm = embed(lower_sigma(), EMITTER, layout)
        if basis == "traveling":
            return cls(layout, basis, (m0, m1), m0, m1, sm)
        s = 1 / math.sqrt(2)
        return cls(layout, basis, (m0, m1), (m0 + m1) * s, (m0 - m1) * s, sm)


class HamiltonianTerms(NamedTuple):
    """Pieces of H such that H = static + laser_detuning*photons + exciton_detuning*exciton + E*drive."""

    static: OperatorMatrix
    photons: OperatorMatrix
    exciton: OperatorMatrix
    drive: OperatorMatrix

    def combine(self, laser_detuning, exciton_detuning, amplitude) -> OperatorMatrix:
        return (self.static + self.photons * laser_detuning
                + self.exciton * exciton_detuning + self.drive * amplitude)


def hamiltonian_terms(params: SystemParams, layout: SpaceLayout, basis: str = "traveling") -> HamiltonianTerms:
    ops = ModeOperators.build(layout, basis)
    m0, m1 = ops.modes
    sm = ops.sigma_minus
    sp_ = sm.dag()
    g, xi = params.coupling, params.xi
    photons = m0.dag() @ m0 + m1.dag() @ m1
    if basis == "traveling":
        backscatter = (m0.dag() @ m1 + m1.dag() @ m0) * params.gamma_beta
        coupling = (sp_ @ m0) * (g * np.exp(-0.5j * xi)) + (sp_ @ m1) * (g * np.exp(0.5j * xi))
        drive_mode = m0
    else:
        # mode c+ sits at +gamma_beta, c- at -gamma_beta; e^{-i xi/2} is the
        # common gauge phase inherited from the traveling-wave construction
        backscatter = (m0.dag() @ m0 - m1.dag() @ m1) * params.gamma_beta
        g1, g2 = standing_couplings(g, xi)
        gauge = np.exp(-0.5j * xi)
        coupling = (sp_ @ m0) * (gauge * g1) + (sp_ @ m1) * (gauge * g2)
        drive_mode = (m0 + m1) * (1 / math.sqrt(2))
    static = backscatter + coupling + coupling.dag()
    drive = (drive_mode.dag() - drive_mode) * (1j * math.sqrt(2 * params.kappa_e))
    return HamiltonianTerms(static, photons, sp_ @ sm, drive)


def build_hamiltonian(params: SystemParams, drive: DriveSpec, layout: SpaceLayout,
                      basis: str = "traveling") -> OperatorMatrix:
    """Driven Hamiltonian in the laser frame (rad/s)."""
    terms = hamiltonian_terms(params, layout, basis)
    return terms.combine(drive.laser_detuning, drive.exciton_detuning, drive.amplitude(params.lambda0))


def build_collapse_ops(params: SystemParams, layout: SpaceLayout, basis: str = "traveling") -> list[OperatorMatrix]:
    """Cavity decay on both modes, exciton decay and pure dephasing.

    Zero-rate channels are omitted.
    """
    gamma_p = params.gamma_perp - params.gamma_par / 2
    if gamma_p < -1e-12 * max(params.gamma_perp, 1.0):
        raise ParameterError("negative pure dephasing rate")
    ops = ModeOperators.build(layout, basis)
    sm = ops.sigma_minus
    out = []
    for rate, op in ((2 * params.kappa_T, ops.modes[0]),
                     (2 * params.kappa_T, ops.modes[1]),
                     (params.gamma_par, sm),
                     (2 * max(gamma_p, 0.0), sm.dag() @ sm)):
        if rate > 0:
            out.append(op * math.sqrt(rate))
    return out


class BareCavity(NamedTuple):
    n_cav: float
    p_dropped: float
    alpha_cw: complex
    alpha_ccw: complex


def bare_cavity_photon_number(params: SystemParams, drive: DriveSpec) -> BareCavity:
    """Intracavity photon number of the empty cavity and the power it dissipates.

    Solves the linear coupled-mode equations of the two traveling-wave modes
    at the drive's laser detuning.  ``p_dropped`` counts intrinsic loss only.
    """
    E = drive.amplitude(params.lambda0)
    k = 1j * drive.laser_detuning + params.kappa_T
    gb = 1j * params.gamma_beta
    det = k * k - gb * gb
    drive_in = math.sqrt(2 * params.kappa_e) * E
    alpha_cw = k * drive_in / det
    alpha_ccw = -gb * drive_in / det
    n = abs(alpha_cw) ** 2 + abs(alpha_ccw) ** 2
    p_d = HBAR * params.omega0 * 2 * params.kappa_i * n
    return BareCavity(n, p_d, complex(alpha_cw), complex(alpha_ccw))


def doublet_resonance(params: SystemParams) -> float:
    """Laser detuning at which the upper (symmetric) standing-wave mode is resonant."""
    return -params.gamma_beta


def power_for_photon_number(params: SystemParams, n_cav: float) -> float:
    """Input power giving bare-cavity photon number ``n_cav`` on the upper doublet resonance."""
    if n_cav < 0:
        raise ParameterError("photon number must be non-negative")
    ref = bare_cavity_photon_number(params, DriveSpec(1.0, doublet_resonance(params), 0.0)).n_cav
    return n_cav / ref


def photon_number_for_power(params: SystemParams, power: float) -> float:
    return bare_cavity_photon_number(params, DriveSpec(power, doublet_resonance(params), 0.0)).n_cav
