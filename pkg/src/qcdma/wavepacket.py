"""Photon-wavepackets on a uniform frequency grid.

Everything is dimensionless: the spectral half-bandwidth ``delta`` sets the
frequency unit and ``1/delta`` (the pulse duration) the time unit. The
forward transform to time uses the kernel ``exp(-i w t)`` with a symmetric
``1/sqrt(2 pi)`` factor, and the carrier ``exp(-i w0 t)`` is kept in the
time samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-9


class GridMismatchError(ValueError):
    """Two objects live on incompatible discretizations."""


class DegenerateSuperpositionError(ValueError):
    """A linear combination of wavepackets has (numerically) zero norm."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency samples centred on ``omega0``.

    The window is ``[omega0 - span_sigmas*delta, omega0 + span_sigmas*delta]``
    with both end points sampled.
    """

    omega0: float = 100.0
    delta: float = 1.0
    span_sigmas: float = 10.0
    n_samples: int = 8192

    def __post_init__(self):
        if not _is_power_of_two(int(self.n_samples)):
            raise ValueError(f"n_samples must be a power of two, got {self.n_samples}")
        if not (self.delta > 0 and self.span_sigmas > 0):
            raise ValueError("delta and span_sigmas must be positive")
        if not math.isfinite(self.omega0):
            raise ValueError("omega0 must be finite")

    @property
    def d_omega(self) -> float:
        return 2.0 * self.span_sigmas * self.delta / (self.n_samples - 1)

    @property
    def omega_min(self) -> float:
        return self.omega0 - self.span_sigmas * self.delta

    @property
    def omegas(self) -> np.ndarray:
        return self.omega_min + self.d_omega * np.arange(self.n_samples)

    def d_t(self, oversample: int = 1) -> float:
        """Time step of the conjugate grid produced by :func:`to_time`."""
        return 2.0 * math.pi / (self.n_samples * oversample * self.d_omega)

    @property
    def pulse_duration(self) -> float:
        return 1.0 / self.delta

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "delta": self.delta,
            "span_sigmas": self.span_sigmas,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True, eq=False)
class SpectralWavepacket:
    grid: FrequencyGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.grid.n_samples,):
            raise GridMismatchError(
                f"expected {self.grid.n_samples} samples, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        norm = l2_norm(amps, self.grid.d_omega)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"wavepacket is not normalized (norm = {norm!r})")

    @property
    def energy_density(self) -> np.ndarray:
        """Per-sample energy ``|xi|^2 d_omega``."""
        return np.abs(self.amplitudes) ** 2 * self.grid.d_omega

    def with_amplitudes(self, amplitudes: np.ndarray) -> "SpectralWavepacket":
        return SpectralWavepacket(self.grid, amplitudes)


@dataclass(frozen=True, eq=False)
class TemporalWavepacket:
    t_samples: np.ndarray
    amplitudes: np.ndarray
    d_t: float

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return l2_norm(self.amplitudes, self.d_t)


def l2_norm(values: np.ndarray, step: float) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * step))


def _check_same_grid(a: SpectralWavepacket, b: SpectralWavepacket) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def gaussian_spectral(grid: FrequencyGrid, t0: float = 0.0) -> SpectralWavepacket:
    """Gaussian spectral wavepacket peaked in time at ``t0``.

    The analytic samples are renormalized on the grid, which absorbs the
    (tiny) truncation of the tails.
    """
    if not math.isfinite(t0):
        raise ValueError("t0 must be finite")
    w = grid.omegas
    d = grid.delta
    amps = (
        (2.0 * math.pi * d * d) ** -0.25
        * np.exp(-((w - grid.omega0) ** 2) / (4.0 * d * d))
        * np.exp(1j * w * t0)
        * np.exp(-0.5j * grid.omega0 * t0)
    )
    amps = amps / l2_norm(amps, grid.d_omega)
    return SpectralWavepacket(grid, amps)


def time_axis(grid: FrequencyGrid, oversample: int = 1) -> np.ndarray:
    """Centered time samples ``k*d_t`` for ``k`` in ``[-K/2, K/2)``."""
    k_total = grid.n_samples * oversample
    return grid.d_t(oversample) * np.arange(-k_total // 2, k_total // 2)


def to_time(wp: SpectralWavepacket, oversample: int = 1) -> TemporalWavepacket:
    """Discrete version of ``xi(t) = (2 pi)^-1/2 * int xi(w) exp(-i w t) dw``.

    With ``oversample > 1`` the spectrum is zero padded, which refines the
    time step without changing the (periodic) window ``2 pi / d_omega``.
    """
    return spectrum_to_time(wp.grid, wp.amplitudes, oversample)


def spectrum_to_time(grid: FrequencyGrid, spectrum: np.ndarray, oversample: int = 1) -> TemporalWavepacket:
    """:func:`to_time` for any spectral array (e.g. an unnormalized field mean)."""
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    k_total = grid.n_samples * oversample
    t = time_axis(grid, oversample)
    x = np.fft.fftshift(np.fft.fft(np.asarray(spectrum, dtype=np.complex128), n=k_total))
    amps = grid.d_omega / math.sqrt(2.0 * math.pi) * np.exp(-1j * grid.omega_min * t) * x
    return TemporalWavepacket(t, amps, grid.d_t(oversample))


def to_frequency(tw: TemporalWavepacket, grid: FrequencyGrid) -> np.ndarray:
    """Inverse of :func:`to_time`; returns spectral samples on ``grid``."""
    k_total = tw.t_samples.size
    if k_total % grid.n_samples or not math.isclose(
        tw.d_t, grid.d_t(k_total // grid.n_samples), rel_tol=1e-12
    ):
        raise GridMismatchError("time samples are not conjugate to this frequency grid")
    demod = tw.amplitudes * np.exp(1j * grid.omega_min * tw.t_samples)
    x = np.fft.ifft(np.fft.ifftshift(demod)) * k_total
    return (tw.d_t / math.sqrt(2.0 * math.pi) * x)[: grid.n_samples]


def amplitude_at(wp: SpectralWavepacket, times) -> np.ndarray:
    """Temporal amplitude at arbitrary times by direct summation."""
    return spectrum_at(wp.grid, wp.amplitudes, times)


def spectrum_at(grid: FrequencyGrid, spectrum: np.ndarray, times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    phase = np.exp(-1j * np.outer(t, grid.omegas))
    return grid.d_omega / math.sqrt(2.0 * math.pi) * (phase @ np.asarray(spectrum, dtype=np.complex128))


def delay(wp: SpectralWavepacket, tau: float) -> SpectralWavepacket:
    """Shift the pulse by ``tau`` in time: ``xi(t) -> xi(t - tau)``."""
    if tau == 0.0:
        return wp
    return wp.with_amplitudes(wp.amplitudes * np.exp(1j * wp.grid.omegas * tau))


def inner_product(a: SpectralWavepacket, b: SpectralWavepacket) -> complex:
    """``<a|b> = sum conj(a) b d_omega``."""
    _check_same_grid(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.d_omega)


def superpose(
    terms: Iterable[tuple[complex, SpectralWavepacket]],
) -> tuple[SpectralWavepacket, float]:
    """Normalized linear combination and the norm it had before rescaling.

    For a time-bin qubit ``b1*xi1 + b2*xi2`` with orthogonal ``xi1, xi2`` the
    returned norm is ``sqrt(|b1|^2 + |b2|^2)``.
    """
    terms = list(terms)
    if not terms:
        raise DegenerateSuperpositionError("no terms to superpose")
    grid = terms[0][1].grid
    total = np.zeros(grid.n_samples, dtype=np.complex128)
    for coeff, wp in terms:
        _check_same_grid(terms[0][1], wp)
        total += complex(coeff) * wp.amplitudes
    norm = l2_norm(total, grid.d_omega)
    if norm < 1e-12:
        raise DegenerateSuperpositionError(f"superposition has norm {norm:.3e}")
    return SpectralWavepacket(grid, total / norm), norm


def effective_duration(tw: TemporalWavepacket) -> float:
    """Inverse-participation-ratio width ``(sum p dt)^2 / sum p^2 dt``.

    For a Gaussian intensity ``exp(-2 t^2/tau_p^2)`` this equals
    ``sqrt(pi) * tau_p``; for a flat pulse it is the window length.
    """
    p = tw.intensity
    num = (np.sum(p) * tw.d_t) ** 2
    den = np.sum(p * p) * tw.d_t
    if den <= 0.0:
        raise ValueError("effective duration of an all-zero trace is undefined")
    return float(num / den)


def same_grid(wavepackets: Sequence[SpectralWavepacket]) -> FrequencyGrid:
    grids = {wp.grid for wp in wavepackets}
    if len(grids) != 1:
        raise GridMismatchError("wavepackets do not share one frequency grid")
    return grids.pop()
