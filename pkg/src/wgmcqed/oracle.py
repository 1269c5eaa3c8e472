"""Weak-drive linear response of the two cavity modes and the exciton coherence.

Closing the Heisenberg equations with ``<sigma_z> = -1`` gives a 3x3 linear
system for the mean fields ``(alpha_cw, alpha_ccw, s)``.  This path builds no
operators and no Liouvillian, so agreement with the master-equation solver
is an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import SystemParams, critical_numbers


@dataclass(frozen=True)
class LinearResponse:
    """Mean-field amplitudes normalized to the drive amplitude (``E = 1``)."""

    laser_detuning: np.ndarray
    exciton_detuning: np.ndarray
    alpha_cw: np.ndarray
    alpha_ccw: np.ndarray
    coherence: np.ndarray
    T: np.ndarray
    R: np.ndarray
    residual: float
    valid: bool | None = None
    n_cav: float | None = None


def _system_matrix(params: SystemParams, dcl: float, dal: float) -> np.ndarray:
    g = params.coupling
    ep, em = np.exp(0.5j * params.xi), np.exp(-0.5j * params.xi)
    k = 1j * dcl + params.kappa_T
    gb = 1j * params.gamma_beta
    return np.array([
        [k, gb, 1j * g * ep],
        [gb, k, 1j * g * em],
        [1j * g * em, 1j * g * ep, 1j * dal + params.gamma_perp],
    ])


def weak_drive_response(params: SystemParams, laser_detuning, exciton_detuning,
                        n_cav: float | None = None) -> LinearResponse:
    """Transmission and reflection in the linear (single-excitation) limit.

    ``laser_detuning`` and ``exciton_detuning`` broadcast against each other.
    If the bare-cavity photon number ``n_cav`` of the intended drive is
    given, ``valid`` reports whether it stays below a tenth of the
    saturation photon number.
    """
    dcl, dal = np.broadcast_arrays(np.asarray(laser_detuning, float), np.asarray(exciton_detuning, float))
    shape = dcl.shape
    dcl, dal = dcl.ravel(), dal.ravel()
    amp = np.empty((dcl.size, 3), dtype=np.complex128)
    b = np.array([np.sqrt(2 * params.kappa_e), 0, 0], dtype=np.complex128)
    residual = 0.0
    for i, (x, y) in enumerate(zip(dcl, dal)):
        A = _system_matrix(params, x, y)
        if np.linalg.cond(A) > 1e14:
            raise ParameterError(f"linear-response system singular at detunings ({x}, {y})")
        amp[i] = np.linalg.solve(A, b)
        residual = max(residual, float(np.abs(A @ amp[i] - b).max()))
    root = np.sqrt(2 * params.kappa_e)
    T = np.abs(1 - root * amp[:, 0]) ** 2
    R = np.abs(root * amp[:, 1]) ** 2
    valid = None
    if n_cav is not None:
        valid = bool(n_cav <= 0.1 * critical_numbers(params)[1])
    return LinearResponse(
        dcl.reshape(shape), dal.reshape(shape),
        amp[:, 0].reshape(shape), amp[:, 1].reshape(shape), amp[:, 2].reshape(shape),
        T.reshape(shape), R.reshape(shape), residual, valid, n_cav,
    )


def polariton_modes(params: SystemParams, laser_detuning: float = 0.0,
                    exciton_detuning: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Normal modes of the undriven linear system as ``(frequencies, damping rates)``.

    Mean fields evolve as ``exp(-(i*omega + Gamma) t)``, so each eigenvalue of
    the system matrix is ``Gamma + i*omega`` with ``omega`` measured in the
    same transition-minus-laser convention as the detunings.  Sorted by
    frequency.
    """
    ev = np.linalg.eigvals(_system_matrix(params, laser_detuning, exciton_detuning))
    order = np.argsort(ev.imag)
    return ev.imag[order], ev.real[order]
