"""Transmission/reflection spectra, parameter sweeps and spectral feature extraction.

Output fields in the forward (CW) and backward (CCW) waveguide channels are

    b_t = E - sqrt(2 kappa_e) a_cw,   b_r = -sqrt(2 kappa_e) a_ccw.

``T`` and ``R`` are the coherent (elastically scattered) parts
``|<b>|^2 / E^2``.  The total photon fluxes ``<b^+ b> / E^2`` also count light
scattered incoherently by the dephased emitter; they are stored as
``T_total`` and ``R_total`` and are the quantities for which the power
balance ``1 - T_total - R_total = (2 kappa_i n + gamma_par P_e) / flux`` closes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from .errors import CQEDError, ParameterError
from .hilbert import SpaceLayout
from .model import (
    TWO_PI,
    DriveSpec,
    ModeOperators,
    SystemParams,
    bare_cavity_photon_number,
    build_collapse_ops,
    doublet_resonance,
    hamiltonian_terms,
)
from .solver import (
    DensityMatrix,
    Liouvillian,
    dissipator_superop,
    expectation,
    hamiltonian_superop,
    steady_state,
    truncation_residual,
)

TRUNCATION_GATE = 1e-3


# --- unit conversion --------------------------------------------------------

def pm_to_ghz(delta_pm, lambda0: float = 1300e-9):
    """Wavelength offset (pm) to frequency offset (GHz): ``c * dl / lambda0**2``."""
    if not lambda0 > 0:
        raise ParameterError("lambda0 must be positive")
    return np.asarray(delta_pm) * 1e-12 * SPEED_OF_LIGHT / lambda0**2 / 1e9


def ghz_to_pm(delta_ghz, lambda0: float = 1300e-9):
    if not lambda0 > 0:
        raise ParameterError("lambda0 must be positive")
    return np.asarray(delta_ghz) * 1e9 * lambda0**2 / SPEED_OF_LIGHT / 1e-12


def rad_to_pm(omega, lambda0: float = 1300e-9):
    """Angular-frequency offset (rad/s) to a wavelength offset in pm, same sign."""
    return ghz_to_pm(np.asarray(omega) / TWO_PI / 1e9, lambda0)


def pm_to_rad(delta_pm, lambda0: float = 1300e-9):
    return pm_to_ghz(delta_pm, lambda0) * 1e9 * TWO_PI


# --- single-point observables -------------------------------------------------

@dataclass(frozen=True)
class SpectrumPoint:
    laser_detuning: float
    exciton_detuning: float
    input_power: float
    photon_flux: float
    T: float
    R: float
    T_total: float
    R_total: float
    n_intracavity: float
    exciton_population: float
    truncation: tuple[float, float]
    balance_error: float
    lambda0: float = 1300e-9
    trace_error: float = 0.0
    hermiticity_error: float = 0.0
    min_eigenvalue: float = 0.0

    @property
    def cavity_exciton_detuning(self) -> float:
        return self.exciton_detuning - self.laser_detuning

    @property
    def laser_pm(self) -> float:
        return float(rad_to_pm(self.laser_detuning, self.lambda0))

    @property
    def cavity_exciton_pm(self) -> float:
        return float(rad_to_pm(self.cavity_exciton_detuning, self.lambda0))


def _observables(ops: ModeOperators) -> dict:
    return {
        "a_cw": ops.a_cw,
        "a_ccw": ops.a_ccw,
        "n_cw": ops.a_cw.dag() @ ops.a_cw,
        "n_ccw": ops.a_ccw.dag() @ ops.a_ccw,
        "pop": ops.sigma_minus.dag() @ ops.sigma_minus,
    }


def _observe(rho: DensityMatrix, params: SystemParams, drive: DriveSpec, obs: dict) -> SpectrumPoint:
    flux = drive.photon_flux(params.lambda0)
    if flux <= 0:
        raise ParameterError("transmission/reflection need a non-zero drive")
    E = math.sqrt(flux)
    root = math.sqrt(2 * params.kappa_e)
    a_cw = expectation(rho, obs["a_cw"])
    a_ccw = expectation(rho, obs["a_ccw"])
    n_cw = expectation(rho, obs["n_cw"]).real
    n_ccw = expectation(rho, obs["n_ccw"]).real
    pop = expectation(rho, obs["pop"]).real
    T_tot = 1 - 2 * root * a_cw.real / E + root**2 * n_cw / flux
    R_tot = root**2 * n_ccw / flux
    T = abs(1 - root * a_cw / E) ** 2
    R = abs(root * a_ccw / E) ** 2
    dissipated = (2 * params.kappa_i * (n_cw + n_ccw) + params.gamma_par * pop) / flux
    trunc = truncation_residual(rho)
    return SpectrumPoint(
        drive.laser_detuning, drive.exciton_detuning, drive.input_power, flux,
        float(T), float(R), float(T_tot), float(R_tot), float(n_cw + n_ccw), float(pop),
        (float(trunc[0]), float(trunc[1])), float(abs(1 - T_tot - R_tot - dissipated)), params.lambda0,
        abs(rho.trace - 1), rho.hermiticity_error, rho.min_eigenvalue,
    )


def transmission_reflection(rho: DensityMatrix, params: SystemParams, drive: DriveSpec,
                            basis: str = "traveling") -> tuple[float, float]:
    """Coherent transmission and reflection ``|<b_t>|^2 / E^2``, ``|<b_r>|^2 / E^2``."""
    pt = _observe(rho, params, drive, _observables(ModeOperators.build(rho.layout, basis)))
    return pt.T, pt.R


class CavityQDSystem:
    """Superoperator pieces of one parameter set, reused across a sweep.

    The generator is affine in the two detunings and the drive amplitude, so
    each point only needs a weighted sum of four precomputed sparse matrices.
    """

    def __init__(self, params: SystemParams, n_fock: int = 6, basis: str = "traveling"):
        self.params = params
        self.layout = SpaceLayout.cavity_qd(n_fock)
        self.basis = basis
        self.ops = ModeOperators.build(self.layout, basis)
        self._obs = _observables(self.ops)
        terms = hamiltonian_terms(params, self.layout, basis)
        fixed = hamiltonian_superop(terms.static)
        for c in build_collapse_ops(params, self.layout, basis):
            fixed = fixed + dissipator_superop(c)
        self._fixed = sp.csr_array(fixed)
        self._photons = sp.csr_array(hamiltonian_superop(terms.photons))
        self._exciton = sp.csr_array(hamiltonian_superop(terms.exciton))
        self._drive = sp.csr_array(hamiltonian_superop(terms.drive))

    def liouvillian(self, drive: DriveSpec) -> Liouvillian:
        E = drive.amplitude(self.params.lambda0)
        mat = (self._fixed + drive.laser_detuning * self._photons
               + drive.exciton_detuning * self._exciton + E * self._drive)
        mat = sp.csr_array(mat)
        mat.eliminate_zeros()
        mat.sort_indices()
        return Liouvillian(self.layout, mat, lindblad=True)

    def solve(self, drive: DriveSpec) -> DensityMatrix:
        return steady_state(self.liouvillian(drive))

    def point(self, drive: DriveSpec) -> SpectrumPoint:
        return _observe(self.solve(drive), self.params, drive, self._obs)


@lru_cache(maxsize=16)
def cavity_qd_system(params: SystemParams, n_fock: int = 6, basis: str = "traveling") -> CavityQDSystem:
    return CavityQDSystem(params, n_fock, basis)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("WGM_CQED_THREADS", "1") or 1)
    return max(1, int(threads))


class SweepPointError(CQEDError):
    def __init__(self, index, drive, cause):
        self.index = index
        self.drive = drive
        super().__init__(f"solve failed at grid index {index} ({drive}): {cause}")


def _solve_grid(system: CavityQDSystem, drives: list, threads: int | None) -> list:
    def job(item):
        i, d = item
        try:
            return system.point(d)
        except CQEDError as exc:
            raise SweepPointError(i, d, exc) from exc

    items = list(enumerate(drives))
    n = resolve_threads(threads)
    if n == 1:
        return [job(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(job, items))


# --- feature extraction ---------------------------------------------------------

@dataclass(frozen=True)
class PeakReport:
    """Local maxima of a sampled line, refined by three-point quadratic interpolation."""

    positions: np.ndarray
    heights: np.ndarray
    prominences: np.ndarray
    indices: np.ndarray
    dominant: tuple = ()
    splitting: float | None = None

    @property
    def count(self) -> int:
        return int(self.positions.size)


def _parabola_vertex(x, y, i):
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    B = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    C = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom
    if A >= 0:
        return x1, y1
    xv = -B / (2 * A)
    if not x0 <= xv <= x2:
        return x1, y1
    return xv, C - B * B / (4 * A)


def extract_peaks(x, y, min_prominence: float = 0.0) -> PeakReport:
    """Find peaks of ``y(x)`` and the separation of the two highest ones.

    ``min_prominence`` is relative to the peak-to-peak range of ``y``.
    Fewer than two peaks leaves ``splitting`` as ``None``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 5 or x.shape != y.shape:
        raise ValueError("need at least 5 samples with matching shapes")
    span = float(np.ptp(y))
    idx, props = find_peaks(y, prominence=(min_prominence * span if span > 0 else None))
    if span == 0:
        idx = np.array([], dtype=int)
    prom = props.get("prominences", np.zeros(idx.size))
    pos, hts = [], []
    for i in idx:
        xv, yv = _parabola_vertex(x, y, i)
        pos.append(xv)
        hts.append(yv)
    pos, hts = np.array(pos, dtype=float), np.array(hts, dtype=float)
    dominant, splitting = (), None
    if pos.size >= 2:
        top = np.sort(np.argsort(hts, kind="stable")[-2:])
        dominant = tuple(int(t) for t in top)
        splitting = float(abs(pos[top[1]] - pos[top[0]]))
    return PeakReport(pos, hts, np.asarray(prom, dtype=float), idx, dominant, splitting)


def extract_dips(x, y, min_prominence: float = 0.0) -> PeakReport:
    """Peaks of ``1 - y``; heights are reported as dip depths."""
    return extract_peaks(x, 1.0 - np.asarray(y, dtype=float), min_prominence)


@dataclass(frozen=True)
class DoubletFit:
    kappa_T: float
    gamma_beta: float
    kappa_e: float
    center: float
    stderr: np.ndarray

    @property
    def linewidth(self) -> float:
        """Full width at half maximum of each standing-wave resonance (rad/s)."""
        return 2 * self.kappa_T

    @property
    def splitting(self) -> float:
        return 2 * self.gamma_beta


def doublet_lineshape(detuning, kappa_T, gamma_beta, kappa_e, center):
    """Transmission of a backscattering-split cavity doublet with no emitter."""
    d = np.asarray(detuning) - center
    lor = 1 / (1j * (d + gamma_beta) + kappa_T) + 1 / (1j * (d - gamma_beta) + kappa_T)
    return np.abs(1 - kappa_e * lor) ** 2


def fit_doublet(detuning, T) -> DoubletFit:
    """Least-squares fit of :func:`doublet_lineshape` to a transmission scan (rad/s axis)."""
    x = np.asarray(detuning, dtype=float)
    T = np.asarray(T, dtype=float)
    scale = float(np.ptp(x)) / 20 or 1.0
    dips = extract_dips(x, T)
    if dips.count >= 2:
        a, b = dips.positions[list(dips.dominant)]
        center0, gb0 = 0.5 * (a + b), 0.5 * abs(b - a)
    else:
        center0, gb0 = float(x[np.argmin(T)]), scale / 10
    depth = 1 - float(T.min())
    k0 = scale / 2
    # half-depth width of the deepest dip as a first guess for kappa_T
    below = x[T < 1 - depth / 2]
    if below.size > 1:
        k0 = max(min(float(below.max() - below.min()) / 4, 2 * gb0 or scale), scale / 100)
    ke0 = max(depth * k0 / 2, 1e-6 * k0)
    p0 = np.array([k0, gb0, ke0, center0]) / scale
    popt, pcov = curve_fit(
        lambda d, kt, gb, ke, c0: doublet_lineshape(d, kt, gb, ke, c0),
        x / scale, T, p0=p0, bounds=([0, 0, 0, -np.inf], [np.inf, np.inf, np.inf, np.inf]),
        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=20000,
    )
    err = np.sqrt(np.clip(np.diag(pcov), 0, None)) * scale
    kt, gb, ke, c0 = popt * scale
    return DoubletFit(float(kt), float(gb), float(ke), float(c0), err)


# --- sweep containers -----------------------------------------------------------

@dataclass
class LineFeatures:
    """Spectral features of one scan line (all frequencies in rad/s)."""

    r_peaks: PeakReport
    t_dips: PeakReport
    peak_delta_R: float
    splitting: float | None
    n_cav_bare: float | None = None
    p_dropped: float | None = None
    max_truncation: float = 0.0
    truncation_flag: bool = False

    def splitting_ghz(self) -> float | None:
        return None if self.splitting is None else self.splitting / TWO_PI / 1e9


@dataclass
class SweepResult:
    """Gridded spectra.  Arrays are shaped ``(n_outer, n_laser)``.

    ``laser_axis`` holds the swept laser coordinate: the laser-cavity
    detuning for :func:`scan_laser` and :func:`power_sweep`, the
    laser-exciton detuning (``exciton_detuning``) for :func:`map_cavity_tuning`.
    """

    params: SystemParams
    kind: str
    laser_axis_name: str
    laser_axis: np.ndarray
    outer_axis_name: str
    outer_axis: np.ndarray
    points: list
    n_fock: int
    lines: list = field(default_factory=list)

    def _grid(self, attr):
        n_out, n_l = self.outer_axis.size, self.laser_axis.size
        return np.array([getattr(p, attr) for p in self.points], dtype=float).reshape(n_out, n_l)

    @property
    def shape(self):
        return (self.outer_axis.size, self.laser_axis.size)

    @property
    def T(self):
        return self._grid("T")

    @property
    def R(self):
        return self._grid("R")

    @property
    def T_total(self):
        return self._grid("T_total")

    @property
    def R_total(self):
        return self._grid("R_total")

    @property
    def exciton_population(self):
        return self._grid("exciton_population")

    @property
    def n_intracavity(self):
        return self._grid("n_intracavity")

    @property
    def balance_error(self):
        return self._grid("balance_error")

    @property
    def truncation(self):
        return np.array([p.truncation for p in self.points]).reshape(*self.shape, 2)

    def point(self, i_outer: int, i_laser: int) -> SpectrumPoint:
        return self.points[i_outer * self.laser_axis.size + i_laser]

    def line(self, i_outer: int) -> list:
        n = self.laser_axis.size
        return self.points[i_outer * n:(i_outer + 1) * n]


def _check_grid(grid, name, min_points=3) -> np.ndarray:
    arr = np.asarray(grid, dtype=float).ravel()
    if arr.size < min_points:
        raise ValueError(f"{name} needs at least {min_points} points")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} must be strictly increasing")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _line_features(x, pts, prominence, gate) -> LineFeatures:
    T = np.array([p.T for p in pts])
    R = np.array([p.R for p in pts])
    rp = extract_peaks(x, R, prominence)
    td = extract_dips(x, T, prominence)
    trunc = max(max(p.truncation) for p in pts)
    return LineFeatures(rp, td, float(R.max()), rp.splitting, max_truncation=trunc,
                        truncation_flag=bool(trunc > gate))


# --- sweeps -----------------------------------------------------------------------

def scan_laser(params: SystemParams, drive: DriveSpec, detuning_grid, n_fock: int = 6,
               basis: str = "traveling", threads: int | None = None,
               prominence: float = 0.02) -> SweepResult:
    """Sweep the laser across the cavity at fixed cavity-exciton detuning.

    ``detuning_grid`` holds laser detunings (cavity minus laser, rad/s).
    """
    grid = _check_grid(detuning_grid, "detuning grid")
    system = cavity_qd_system(params, n_fock, basis)
    drives = [drive.with_laser(float(x)) for x in grid]
    pts = _solve_grid(system, drives, threads)
    res = SweepResult(params, "laser", "laser_detuning", grid, "cavity_exciton_detuning",
                      np.array([drive.cavity_exciton_detuning]), pts, n_fock)
    if grid.size >= 5:
        res.lines.append(_line_features(grid, pts, prominence, TRUNCATION_GATE))
    return res


def map_cavity_tuning(params: SystemParams, drive: DriveSpec, cavity_grid, laser_grid,
                      n_fock: int = 6, basis: str = "traveling", threads: int | None = None,
                      prominence: float = 0.02) -> SweepResult:
    """Spectra versus laser-exciton and cavity-exciton detuning.

    ``cavity_grid`` holds cavity-exciton detunings (exciton minus cavity) and
    ``laser_grid`` exciton detunings (exciton minus laser), both in rad/s.
    """
    cav = np.asarray(cavity_grid, dtype=float).ravel()
    if cav.size > 1:
        cav = _check_grid(cav, "cavity grid", 2)
    las = _check_grid(laser_grid, "laser grid")
    system = cavity_qd_system(params, n_fock, basis)
    drives = [DriveSpec(drive.input_power, float(dal - dca), float(dal)) for dca in cav for dal in las]
    pts = _solve_grid(system, drives, threads)
    res = SweepResult(params, "map", "exciton_detuning", las, "cavity_exciton_detuning", cav, pts, n_fock)
    if las.size >= 5:
        for i in range(cav.size):
            res.lines.append(_line_features(las, res.line(i), prominence, TRUNCATION_GATE))
    return res


def power_sweep(params: SystemParams, powers, laser_grid, cavity_exciton_detuning: float = 0.0,
                n_fock: int = 6, basis: str = "traveling", threads: int | None = None,
                prominence: float = 0.02, gate: float = TRUNCATION_GATE) -> SweepResult:
    """Reflection spectra versus input power at fixed cavity-exciton detuning.

    Lines whose largest truncation residual exceeds ``gate`` are flagged,
    not dropped.
    """
    pw = _check_grid(powers, "power list", 1)
    if not np.all(pw > 0):
        raise ValueError("powers must be positive")
    las = _check_grid(laser_grid, "laser grid")
    system = cavity_qd_system(params, n_fock, basis)
    drives = [DriveSpec.tuned(float(p), float(x), cavity_exciton_detuning) for p in pw for x in las]
    pts = _solve_grid(system, drives, threads)
    res = SweepResult(params, "power", "laser_detuning", las, "input_power", pw, pts, n_fock)
    for i, p in enumerate(pw):
        feat = _line_features(las, res.line(i), prominence, gate) if las.size >= 5 else None
        bare = bare_cavity_photon_number(params, DriveSpec(float(p), doublet_resonance(params), 0.0))
        if feat is not None:
            feat.n_cav_bare = bare.n_cav
            feat.p_dropped = bare.p_dropped
            res.lines.append(feat)
    return res


def bare_reference(params: SystemParams, laser_grid, prominence: float = 0.02) -> LineFeatures:
    """Reflection features of the emitter-free cavity (linear, drive independent)."""
    x = _check_grid(laser_grid, "laser grid", 5)
    bare = params.replace(g_tw=0.0)
    T, R = [], []
    for d in x:
        b = bare_cavity_photon_number(bare, DriveSpec(1.0, float(d), 0.0))
        E = math.sqrt(DriveSpec(1.0).photon_flux(params.lambda0))
        root = math.sqrt(2 * params.kappa_e)
        T.append(abs(1 - root * b.alpha_cw / E) ** 2)
        R.append(abs(root * b.alpha_ccw / E) ** 2)
    rp = extract_peaks(x, np.array(R), prominence)
    td = extract_dips(x, np.array(T), prominence)
    return LineFeatures(rp, td, float(max(R)), rp.splitting)


# --- anti-crossing analysis ----------------------------------------------------------

@dataclass(frozen=True)
class AntiCrossing:
    """Gap between the resonances straddling the bare exciton line, per cavity detuning.

    ``gaps`` is NaN where no prominent resonance sits on one side of the
    exciton line.  The crossing is "avoided" when the smallest gap exceeds
    the bare doublet splitting by more than ``margin``.
    """

    cavity_detuning: np.ndarray
    gaps: np.ndarray
    min_gap: float
    min_detuning: float
    reference_splitting: float
    margin: float

    @property
    def avoided(self) -> bool:
        return bool(np.isfinite(self.min_gap) and self.min_gap > (1 + self.margin) * self.reference_splitting)


def straddle_gap(positions, center: float = 0.0) -> float:
    pos = np.asarray(positions, dtype=float)
    above, below = pos[pos > center], pos[pos < center]
    if above.size == 0 or below.size == 0:
        return float("nan")
    return float(above.min() - below.max())


def anticrossing(result: SweepResult, signal: str = "T", prominence: float = 0.3,
                 margin: float = 0.1) -> AntiCrossing:
    """Locate the minimum polariton gap of a cavity-tuning map.

    Resonances are transmission dips (``signal="T"``) or reflection peaks
    (``"R"``) whose prominence is at least ``prominence`` times the line's
    range.  The reference is the bare doublet splitting ``2 gamma_beta``.
    """
    if result.kind != "map":
        raise ValueError("anti-crossing analysis needs a cavity-tuning map")
    x = result.laser_axis
    gaps = []
    for i in range(result.outer_axis.size):
        if signal == "T":
            feats = extract_dips(x, result.T[i], prominence)
        elif signal == "R":
            feats = extract_peaks(x, result.R[i], prominence)
        else:
            raise ValueError("signal must be 'T' or 'R'")
        gaps.append(straddle_gap(feats.positions))
    gaps = np.array(gaps)
    if np.all(np.isnan(gaps)):
        mg, md = float("nan"), float("nan")
    else:
        j = int(np.nanargmin(gaps))
        mg, md = float(gaps[j]), float(result.outer_axis[j])
    return AntiCrossing(result.outer_axis.copy(), gaps, mg, md, 2 * result.params.gamma_beta, margin)
