"""Receiver intensities for Glauber, Fock and declared-field pure inputs.

Operators never appear explicitly; every engine works with the closed-form
consequence on wavepackets. A transmitter's photons sit in the wavepacket
``xi_s``; after the sender's encoder, the coupler and receiver ``r``'s decoder
(code ``d(r)``) they occupy ``xi_s^{e_s d_d(r)}``.

* Glauber inputs add amplitudes: ``I_r = |sum_s B_rs alpha_s xi_s^{..}(t)|^2``.
* Fock inputs add intensities: ``I_r = sum_s n_s |B_rs|^2 |xi_s^{..}(t)|^2``.
* Declared-field inputs use the general coupler law with interference term
  ``sum_{s != s'} Re(conj(B_rs) B_rs' conj(E_s) E_s')``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .codes import ChipPartition, Code, CodeMismatchError
from .coupler import CouplerMatrix
from .encoder import encode, encode_decode
from .wavepacket import (
    GridMismatchError,
    SpectralWavepacket,
    amplitude_at,
    delay,
    inner_product,
    spectrum_at,
    spectrum_to_time,
)


class WrongEngineError(ValueError):
    """An engine was asked to handle a transmitter kind it does not model."""


class NetworkValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Glauber:
    alpha: complex = 1.0

    @property
    def mean_intensity(self) -> float:
        return abs(complex(self.alpha)) ** 2


@dataclass(frozen=True)
class Fock:
    n: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"photon number must be a non-negative integer, got {self.n}")

    @property
    def mean_intensity(self) -> float:
        return float(self.n)


@dataclass(frozen=True, eq=False)
class GenericPure:
    """Pure input described only by its mean intensity and field expectation.

    ``field_mean`` is the spectral field expectation ``<a(w)>`` on the
    wavepacket's grid, or ``None`` for states whose field mean vanishes
    (number states, squeezed vacuum-like states). It is never inferred.
    """

    mean_intensity: float
    field_mean: np.ndarray | None = None


StateKind = Union[Glauber, Fock, GenericPure]


@dataclass(frozen=True, eq=False)
class TransmitterSpec:
    kind: StateKind
    wavepacket: SpectralWavepacket
    code: Code
    t_offset: float = 0.0

    @property
    def mean_intensity(self) -> float:
        return float(self.kind.mean_intensity)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    coupler: CouplerMatrix
    transmitters: tuple
    decode_assignment: tuple
    partition: ChipPartition

    def __post_init__(self):
        txs = tuple(self.transmitters)
        dec = tuple(int(d) for d in self.decode_assignment)
        object.__setattr__(self, "transmitters", txs)
        object.__setattr__(self, "decode_assignment", dec)
        m = self.coupler.m
        if len(txs) != m:
            raise NetworkValidationError(f"{m}-port coupler needs {m} transmitters, got {len(txs)}")
        if len(dec) != m:
            raise NetworkValidationError(f"need one decode code index per receiver ({m})")
        if any(not 0 <= d < m for d in dec):
            raise NetworkValidationError(f"decode assignment {dec} out of range")
        for s, tx in enumerate(txs):
            if tx.wavepacket.grid != self.partition.grid:
                raise GridMismatchError(f"transmitter {s} is not on the partition grid")
            if tx.code.n_chips != self.partition.n_chips:
                raise CodeMismatchError(f"transmitter {s} code length != {self.partition.n_chips}")
            fm = getattr(tx.kind, "field_mean", None)
            if fm is not None and np.shape(fm) != (self.partition.grid.n_samples,):
                raise GridMismatchError(f"transmitter {s} field mean is not on the grid")
        families = {type(tx.kind) for tx in txs}
        if len(families) > 1:
            names = sorted(f.__name__ for f in families)
            raise NetworkValidationError(f"mixed transmitter kinds {names} are not supported")

    @property
    def m(self) -> int:
        return self.coupler.m

    @property
    def family(self) -> type:
        return type(self.transmitters[0].kind)


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    """Intensities ``values[i, :]`` of ``receivers[i]`` on a shared time grid."""

    times: np.ndarray
    values: np.ndarray
    receivers: tuple = (0,)
    d_t: float | None = None

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if np.any(vals < 0):
            raise ValueError("intensities must be non-negative")
        object.__setattr__(self, "values", vals)

    def energy(self) -> np.ndarray:
        """Integrated intensity per row (requires a uniform grid)."""
        if self.d_t is None:
            raise ValueError("trace was evaluated at scattered times; no integral available")
        return self.values.sum(axis=1) * self.d_t

    def normalized(self, reference_peak: float) -> "IntensityTrace":
        return IntensityTrace(self.times, self.values / reference_peak, self.receivers, self.d_t)


def _evaluate(wp: SpectralWavepacket, times=None, oversample: int = 1):
    return _evaluate_spectrum(wp.grid, wp.amplitudes, times, oversample)


def _evaluate_spectrum(grid, spectrum, times=None, oversample: int = 1):
    if times is None:
        tw = spectrum_to_time(grid, spectrum, oversample)
        return tw.t_samples, tw.amplitudes, tw.d_t
    t = np.atleast_1d(np.asarray(times, dtype=float))
    return t, spectrum_at(grid, spectrum, t), None


def peak_reference(wp: SpectralWavepacket, t0: float = 0.0) -> float:
    """``|xi(t0)|^2`` of an unencoded reference pulse (for peak normalization)."""
    return float(np.abs(amplitude_at(wp, t0)[0]) ** 2)


def received_wavepacket(net: NetworkSpec, s: int, r: int) -> SpectralWavepacket:
    """``xi_s^{e_s d_d(r)}`` shifted by the sender's launch offset."""
    tx = net.transmitters[s]
    dec_code = net.transmitters[net.decode_assignment[r]].code
    wp = encode_decode(tx.wavepacket, net.partition, tx.code, dec_code)
    return delay(wp, tx.t_offset)


def _received_field(net: NetworkSpec, s: int, r: int) -> np.ndarray | None:
    tx = net.transmitters[s]
    fm = tx.kind.field_mean
    if fm is None:
        return None
    theta_s = tx.code.phases[net.partition.chip_index]
    theta_d = net.transmitters[net.decode_assignment[r]].code.phases[net.partition.chip_index]
    omegas = net.partition.grid.omegas
    return np.asarray(fm) * np.exp(-1j * theta_s + 1j * theta_d + 1j * omegas * tx.t_offset)


def _require(net: NetworkSpec, family: type, engine: str) -> None:
    for s, tx in enumerate(net.transmitters):
        if not isinstance(tx.kind, family):
            raise WrongEngineError(
                f"{engine} engine cannot handle transmitter {s} of kind {type(tx.kind).__name__}"
            )


def single_source_intensity(
    tx: TransmitterSpec, partition: ChipPartition, times=None, oversample: int = 1
) -> IntensityTrace:
    """``I(t) = mean_intensity * |xi^e(t - t_offset)|^2`` for an isolated sender."""
    wp = delay(encode(tx.wavepacket, partition, tx.code), tx.t_offset)
    t, amp, d_t = _evaluate(wp, times, oversample)
    return IntensityTrace(t, tx.mean_intensity * np.abs(amp) ** 2, (0,), d_t)


def glauber_receiver_trace(
    net: NetworkSpec, r: int, times=None, oversample: int = 1
) -> tuple[np.ndarray, IntensityTrace]:
    """Complex amplitude ``A_r(t)`` and intensity ``|A_r(t)|^2`` at receiver ``r``."""
    _require(net, Glauber, "Glauber")
    amp_total = None
    for s, tx in enumerate(net.transmitters):
        t, amp, d_t = _evaluate(received_wavepacket(net, s, r), times, oversample)
        term = net.coupler.entries[r, s] * complex(tx.kind.alpha) * amp
        amp_total = term if amp_total is None else amp_total + term
    return amp_total, IntensityTrace(t, np.abs(amp_total) ** 2, (r,), d_t)


def fock_receiver_trace(net: NetworkSpec, r: int, times=None, oversample: int = 1) -> IntensityTrace:
    """Incoherent sum ``sum_s n_s |B_rs|^2 |xi_s^{e_s d}(t)|^2``."""
    _require(net, Fock, "Fock")
    total = None
    for s, tx in enumerate(net.transmitters):
        t, amp, d_t = _evaluate(received_wavepacket(net, s, r), times, oversample)
        term = tx.kind.n * abs(net.coupler.entries[r, s]) ** 2 * np.abs(amp) ** 2
        total = term if total is None else total + term
    return IntensityTrace(t, total, (r,), d_t)


def coupler_output_intensity_general(
    intensities: np.ndarray, fields: np.ndarray | None, coupler: CouplerMatrix
) -> np.ndarray:
    """Output intensities of every port from per-input ``I_s(t)`` and ``E_s(t)``.

    ``intensities`` and ``fields`` have shape ``(M, T)``; ``fields=None``
    declares every field mean zero, leaving the incoherent sum.
    """
    i_in = np.atleast_2d(np.asarray(intensities, dtype=float))
    b = coupler.entries
    if i_in.shape[0] != coupler.m:
        raise GridMismatchError(f"expected {coupler.m} input traces, got {i_in.shape[0]}")
    out = (np.abs(b) ** 2) @ i_in
    if fields is None:
        return out
    e_in = np.atleast_2d(np.asarray(fields, dtype=np.complex128))
    if e_in.shape != i_in.shape:
        raise GridMismatchError("intensity and field traces are on different time grids")
    # sum_{s,s'} conj(B_rs E_s) B_rs' E_s' minus its diagonal
    coherent = np.abs(b @ e_in) ** 2
    diagonal = (np.abs(b) ** 2) @ (np.abs(e_in) ** 2)
    return out + coherent - diagonal


def generic_receiver_trace(
    net: NetworkSpec, r: int, times=None, oversample: int = 1
) -> IntensityTrace:
    """Receiver ``r`` for ``GenericPure`` inputs via the general coupler law."""
    _require(net, GenericPure, "generic")
    intens, fields = [], []
    grid = net.partition.grid
    for s, tx in enumerate(net.transmitters):
        t, amp, d_t = _evaluate(received_wavepacket(net, s, r), times, oversample)
        intens.append(tx.mean_intensity * np.abs(amp) ** 2)
        fm = _received_field(net, s, r)
        fields.append(
            np.zeros_like(amp) if fm is None else _evaluate_spectrum(grid, fm, times, oversample)[1]
        )
    row = coupler_output_intensity_general(np.array(intens), np.array(fields), net.coupler)[r]
    return IntensityTrace(t, np.maximum(row, 0.0), (r,), d_t)


def receiver_trace(net: NetworkSpec, r: int, times=None, oversample: int = 1) -> IntensityTrace:
    """Dispatch to the engine matching the network's transmitter family."""
    family = net.family
    if family is Glauber:
        return glauber_receiver_trace(net, r, times, oversample)[1]
    if family is Fock:
        return fock_receiver_trace(net, r, times, oversample)
    return generic_receiver_trace(net, r, times, oversample)


def all_receiver_traces(net: NetworkSpec, times=None, oversample: int = 1) -> IntensityTrace:
    rows = [receiver_trace(net, r, times, oversample) for r in range(net.m)]
    return IntensityTrace(rows[0].times, np.vstack([x.values for x in rows]),
                          tuple(range(net.m)), rows[0].d_t)


@dataclass(frozen=True)
class TwoPhotonOutput:
    """Coupler output for one photon into each port of a 2 x 2 coupler.

    ``coefficients`` are the amplitudes of the four (unnormalized) terms:
    both photons at port 1, photon 1 at port 1 and photon 2 at port 2, the
    swapped assignment, and both at port 2.
    """

    coefficients: dict = field(default_factory=dict)
    overlap: complex = 0j
    normalization: float = 1.0


def two_user_fock_output(net: NetworkSpec) -> TwoPhotonOutput:
    if net.m != 2:
        raise NetworkValidationError("two-user output needs exactly 2 transmitters")
    _require(net, Fock, "two-photon")
    if any(tx.kind.n != 1 for tx in net.transmitters):
        raise NetworkValidationError("two-user output is defined for single photons only")
    b = net.coupler.entries
    coeffs = {
        "both_at_1": complex(b[0, 0] * b[0, 1]),
        "direct": complex(b[0, 0] * b[1, 1]),
        "swapped": complex(b[1, 0] * b[0, 1]),
        "both_at_2": complex(b[1, 0] * b[1, 1]),
    }
    t1, t2 = net.transmitters
    e1 = encode(t1.wavepacket, net.partition, t1.code)
    e2 = encode(t2.wavepacket, net.partition, t2.code)
    ov = inner_product(e1, e2)
    return TwoPhotonOutput(coeffs, ov, two_photon_normalization(ov))


def two_photon_normalization(overlap: complex) -> float:
    """Norm ``sqrt(1 + |<xi_1|xi_2>|^2)`` of ``a^dag_xi1 a^dag_xi2 |0>`` in one port."""
    return math.sqrt(1.0 + abs(overlap) ** 2)


def hom_coincidence(coupler: CouplerMatrix, xi1: SpectralWavepacket, xi2: SpectralWavepacket) -> float:
    """Probability of one photon in each output port of a 2 x 2 coupler."""
    if coupler.m != 2:
        raise ValueError("HOM coincidence is defined for a 2 x 2 coupler")
    b = coupler.entries
    direct = b[0, 0] * b[1, 1]
    swapped = b[1, 0] * b[0, 1]
    ov2 = abs(inner_product(xi1, xi2)) ** 2
    p = abs(direct) ** 2 + abs(swapped) ** 2 + 2.0 * (direct * np.conj(swapped)).real * ov2
    return float(p)


def network_energy(net: NetworkSpec) -> float:
    """``sum_r int I_r dt`` over the full (periodic) time window."""
    traces = all_receiver_traces(net)
    return float(np.sum(traces.energy()))


def input_energy(transmitters: Sequence[TransmitterSpec]) -> float:
    return float(sum(tx.mean_intensity for tx in transmitters))
