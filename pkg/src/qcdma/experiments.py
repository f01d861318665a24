"""Scenario runners and Monte-Carlo statistics.

Every random draw comes from ``codes.stream(seed, *keys)`` with keys that
name the trial (and the role of the draw inside it), so results do not
depend on how trials are spread over worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .codes import (
    ChipPartition,
    Code,
    gaussian_quantile_partition,
    random_binary_code,
    stream,
    walsh_hadamard_code,
)
from .coupler import CouplerMatrix, make_coupler
from .encoder import encode, encode_decode
from .qstate import (
    Fock,
    Glauber,
    IntensityTrace,
    NetworkSpec,
    TransmitterSpec,
    all_receiver_traces,
    input_energy,
    peak_reference,
    receiver_trace,
)
from .wavepacket import (
    FrequencyGrid,
    SpectralWavepacket,
    amplitude_at,
    delay,
    effective_duration,
    gaussian_spectral,
    to_time,
)

THREADS_ENV = "QCDMA_THREADS"


class ConfigurationError(ValueError):
    """A scenario is internally inconsistent."""


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def parallel_map(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool; order is preserved."""
    threads = thread_count() if threads is None else max(1, int(threads))
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


# --------------------------------------------------------------------------
# On-off keying


@dataclass(frozen=True)
class OokScenario:
    """Synchronous (or randomly delayed) on-off keyed transmission.

    ``bits[s]`` is user ``s``'s sequence. ``bit_period`` is in units of the
    pulse duration and defaults to ``4 * n_chips``. Receiver ``r`` decodes
    with user ``r``'s code.
    """

    bits: tuple
    n_chips: int = 63
    bit_period: float | None = None
    code_kind: str = "random"
    code_seed: int = 0
    walsh_indices: tuple | None = None
    state_kind: str = "fock"
    coupler_kind: str = "balanced2x2"
    async_offsets: bool = False
    seed: int = 0
    allow_overlap: bool = False
    oversample: int = 4
    grid: FrequencyGrid = field(default_factory=FrequencyGrid)

    def __post_init__(self):
        bits = tuple(tuple(int(b) for b in row) for row in self.bits)
        object.__setattr__(self, "bits", bits)
        if not bits or not bits[0]:
            raise ConfigurationError("need at least one user with at least one bit")
        if len({len(row) for row in bits}) != 1:
            raise ConfigurationError("all bit sequences must have the same length")
        if any(b not in (0, 1) for row in bits for b in row):
            raise ConfigurationError("bits must be 0 or 1")
        if self.state_kind not in ("glauber", "fock"):
            raise ConfigurationError(f"unknown state kind {self.state_kind!r}")
        if self.code_kind not in ("random", "walsh"):
            raise ConfigurationError(f"unknown code kind {self.code_kind!r}")
        if self.code_kind == "walsh":
            idx = self.walsh_indices
            if idx is None:
                idx = tuple(range(1, self.n_users + 1))
            idx = tuple(int(i) for i in idx)
            if len(idx) != self.n_users:
                raise ConfigurationError("one Walsh index per user required")
            object.__setattr__(self, "walsh_indices", idx)
        if self.n_chips < 1:
            raise ConfigurationError("n_chips must be >= 1")
        if self.bit_period is not None and not self.bit_period > 0:
            raise ConfigurationError("bit_period must be positive")
        if self.oversample < 1:
            raise ConfigurationError("oversample must be >= 1")

    @property
    def n_users(self) -> int:
        return len(self.bits)

    @property
    def n_bits(self) -> int:
        return len(self.bits[0])

    @property
    def period(self) -> float:
        """Bit period in time units."""
        tp = self.grid.pulse_duration
        return 4.0 * self.n_chips * tp if self.bit_period is None else self.bit_period * tp

    def codes(self) -> list[Code]:
        if self.code_kind == "walsh":
            return [walsh_hadamard_code(self.n_chips, i) for i in self.walsh_indices]
        return [
            random_binary_code(self.n_chips, stream(self.code_seed, s), f"user{s}")
            for s in range(self.n_users)
        ]

    def offsets(self) -> np.ndarray:
        """Launch delays; user 0 is the time reference."""
        if not self.async_offsets:
            return np.zeros(self.n_users)
        rng = stream(self.seed, 0xA5)
        off = rng.uniform(0.0, self.period, size=self.n_users)
        off[0] = 0.0
        return off


@dataclass(frozen=True, eq=False)
class OokResult:
    trace: IntensityTrace
    slot_peaks: np.ndarray
    slot_energies: np.ndarray
    offsets: np.ndarray
    codes: tuple
    reference_peak: float
    period: float
    launched_energy: float

    @property
    def captured_energy(self) -> float:
        """Energy inside the trace window; spectral chip edges give slowly decaying tails."""
        return float(np.sum(self.trace.energy()))


def _pulse_samples(wp: SpectralWavepacket, centre: float, n_global: int, oversample: int) -> np.ndarray:
    """Samples of ``wp(t - centre)`` at ``t = j*d_t``, ``j = 0..n_global-1``.

    The fractional part of the shift is applied spectrally and the integer
    part by indexing, so the pulse is exact on the global clock while only
    one FFT window (centred on the pulse) is used.
    """
    d_t = wp.grid.d_t(oversample)
    m = int(math.floor(centre / d_t))
    tw = to_time(delay(wp, centre - m * d_t), oversample)
    k_total = tw.amplitudes.size
    out = np.zeros(n_global, dtype=np.complex128)
    # global j <-> local k = j - m, local index k sits at position k + K/2
    lo = max(0, m - k_total // 2)
    hi = min(n_global, m + k_total // 2)
    if hi > lo:
        out[lo:hi] = tw.amplitudes[lo - m + k_total // 2: hi - m + k_total // 2]
    return out


def run_ook(s: OokScenario) -> OokResult:
    """Per-receiver intensity over the whole bit sequence.

    Bit one launches ``alpha = 1`` (Glauber) or ``n = 1`` (Fock) in the user's
    encoded Gaussian pulse centred on its slot; bit zero is vacuum. Slot
    peaks are sampled at the intended user's slot centre and normalized by
    the unencoded peak ``|xi(t0)|^2``.
    """
    try:
        coupler = make_coupler(s.coupler_kind, s.n_users)
    except ValueError as exc:
        raise ConfigurationError(f"{s.n_users} users: {exc}") from None
    grid = s.grid
    base = gaussian_spectral(grid)
    partition = gaussian_quantile_partition(grid, s.n_chips)
    codes = s.codes()
    offsets = s.offsets()
    period = s.period

    if not s.allow_overlap:
        for u, c in enumerate(codes):
            width = effective_duration(to_time(encode(base, partition, c), s.oversample))
            if period < width:
                raise ConfigurationError(
                    f"bit period {period:.4g} is shorter than user {u}'s spread pulse ({width:.4g})"
                )

    d_t = grid.d_t(s.oversample)
    span = s.n_bits * period + float(np.max(offsets))
    n_global = int(math.ceil(span / d_t))
    times = d_t * np.arange(n_global)
    centres = [[(k + 0.5) * period + offsets[u] for k in range(s.n_bits)] for u in range(s.n_users)]

    def receiver(r: int):
        dec = codes[r]
        amp = np.zeros(n_global, dtype=np.complex128)
        inten = np.zeros(n_global)
        peak_amp = np.zeros(s.n_bits, dtype=np.complex128)
        peak_int = np.zeros(s.n_bits)
        sample_t = np.array(centres[r])
        for u in range(s.n_users):
            wp = encode_decode(base, partition, codes[u], dec)
            b = coupler.entries[r, u]
            for k in range(s.n_bits):
                if not s.bits[u][k]:
                    continue
                pulse = _pulse_samples(wp, centres[u][k], n_global, s.oversample)
                at_peaks = amplitude_at(delay(wp, centres[u][k]), sample_t)
                if s.state_kind == "glauber":
                    amp += b * pulse
                    peak_amp += b * at_peaks
                else:
                    inten += abs(b) ** 2 * np.abs(pulse) ** 2
                    peak_int += abs(b) ** 2 * np.abs(at_peaks) ** 2
        if s.state_kind == "glauber":
            return np.abs(amp) ** 2, np.abs(peak_amp) ** 2
        return inten, peak_int

    rows = parallel_map(receiver, range(s.n_users))
    ref = peak_reference(base)
    values = np.vstack([row[0] for row in rows])
    peaks = np.vstack([row[1] for row in rows]) / ref

    slot = np.minimum((times // period).astype(np.int64), s.n_bits - 1)
    energies = np.zeros((s.n_users, s.n_bits))
    for r in range(s.n_users):
        energies[r] = np.bincount(slot, weights=values[r], minlength=s.n_bits) * d_t

    trace = IntensityTrace(times, values, tuple(range(s.n_users)), d_t)
    launched = float(sum(sum(row) for row in s.bits))
    return OokResult(trace, peaks, energies, offsets, tuple(codes), ref, period, launched)


# --------------------------------------------------------------------------
# Monte-Carlo statistics


def _chip_amplitudes(wp: SpectralWavepacket, partition: ChipPartition, t0: float) -> np.ndarray:
    """Per-chip contributions ``A_l`` to ``xi(t0)``, so ``xi^e(t0) = sum_l m_l A_l``."""
    grid = wp.grid
    terms = grid.d_omega / math.sqrt(2.0 * math.pi) * wp.amplitudes * np.exp(-1j * grid.omegas * t0)
    return np.add.reduceat(terms, partition.edges[:-1])


@dataclass(frozen=True)
class PeakStats:
    """Statistics of the encoded peak and of the mis-decoded residual at ``t0``.

    ``ratio_*`` describe ``|xi^e(t0)|^2 / |xi(t0)|^2``. ``ratio_nominal`` is
    ``1/Nc``; ``ratio_exact`` is the expectation for the actual chips,
    ``sum_l |A_l|^2 / |sum_l A_l|^2``, which tends to ``1/Nc`` only when every
    chip contributes equally to the peak. ``x_*`` describe
    ``xi^{e_j d_k}(t0) / |xi(t0)|`` for independent code pairs.
    """

    n_chips: int
    trials: int
    seed: int
    ratio_mean: float
    ratio_se: float
    ratio_nominal: float
    ratio_exact: float
    x_mean_re: float
    x_mean_im: float
    x_se_re: float
    x_se_im: float
    x_var_re: float
    x_var_im: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def mc_peak_stats(
    n_chips: int,
    trials: int,
    seed: int,
    grid: FrequencyGrid | None = None,
    t0: float = 0.0,
    threads: int | None = None,
) -> PeakStats:
    """Random-code statistics of the encoded peak at ``t0``.

    Trial ``i`` draws its encoding code from ``stream(seed, i, 0)`` and the
    pair ``(e_j, d_k)`` from ``stream(seed, i, 1)`` and ``stream(seed, i, 2)``.
    """
    if trials < 100:
        raise ConfigurationError("mc_peak_stats needs at least 100 trials")
    grid = grid or FrequencyGrid()
    wp = gaussian_spectral(grid, t0)
    partition = gaussian_quantile_partition(grid, n_chips)
    xi0 = complex(amplitude_at(wp, t0)[0])
    ref = abs(xi0) ** 2
    # evaluate at t0 by direct summation against a cached kernel
    kernel = grid.d_omega / math.sqrt(2.0 * math.pi) * np.exp(-1j * grid.omegas * t0)

    def trial(i: int):
        e = random_binary_code(n_chips, stream(seed, i, 0))
        cj = random_binary_code(n_chips, stream(seed, i, 1))
        ck = random_binary_code(n_chips, stream(seed, i, 2))
        ratio = abs(kernel @ encode(wp, partition, e).amplitudes) ** 2 / ref
        x = (kernel @ encode_decode(wp, partition, cj, ck).amplitudes) / abs(xi0)
        return ratio, x

    out = parallel_map(trial, range(trials), threads)
    ratios = np.array([o[0] for o in out])
    xs = np.array([o[1] for o in out], dtype=np.complex128)
    a = _chip_amplitudes(wp, partition, t0)
    r_mean, r_se = _mean_se(ratios)
    re_mean, re_se = _mean_se(xs.real)
    im_mean, im_se = _mean_se(xs.imag)
    return PeakStats(
        n_chips=n_chips,
        trials=trials,
        seed=seed,
        ratio_mean=r_mean,
        ratio_se=r_se,
        ratio_nominal=1.0 / n_chips,
        ratio_exact=float(np.sum(np.abs(a) ** 2) / abs(np.sum(a)) ** 2),
        x_mean_re=re_mean,
        x_mean_im=im_mean,
        x_se_re=re_se,
        x_se_im=im_se,
        x_var_re=float(np.var(xs.real, ddof=1)),
        x_var_im=float(np.var(xs.imag, ddof=1)),
    )


@dataclass(frozen=True)
class ReceiverMean:
    """Normalized ``I_r(t0) / |xi(t0)|^2`` of both receivers when both users send one."""

    n_chips: int
    trials: int
    seed: int
    state_kind: str
    i1_mean: float
    i1_se: float
    i2_mean: float
    i2_se: float
    nominal: float
    exact: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def two_user_network(
    partition: ChipPartition,
    wp: SpectralWavepacket,
    c1: Code,
    c2: Code,
    state_kind: str = "glauber",
    coupler: CouplerMatrix | None = None,
) -> NetworkSpec:
    """Both users send bit one through a balanced 2 x 2 coupler; receiver r decodes user r."""
    if state_kind not in ("glauber", "fock"):
        raise ConfigurationError(f"unknown state kind {state_kind!r}")
    kind = Glauber(1.0) if state_kind == "glauber" else Fock(1)
    coupler = coupler or make_coupler("balanced2x2")
    txs = (TransmitterSpec(kind, wp, c1), TransmitterSpec(kind, wp, c2))
    return NetworkSpec(coupler, txs, (0, 1), partition)


def mc_receiver_mean(
    n_chips: int,
    trials: int,
    seed: int,
    state_kind: str = "glauber",
    grid: FrequencyGrid | None = None,
    t0: float = 0.0,
    threads: int | None = None,
) -> ReceiverMean:
    """Mean receiver intensities at ``t0`` over independent code pairs.

    Trial ``i`` draws user codes from ``stream(seed, i, 1)`` and
    ``stream(seed, i, 2)`` and evaluates the full two-user network.
    """
    grid = grid or FrequencyGrid()
    wp = gaussian_spectral(grid, t0)
    partition = gaussian_quantile_partition(grid, n_chips)
    ref = peak_reference(wp, t0)
    coupler = make_coupler("balanced2x2")

    def trial(i: int):
        c1 = random_binary_code(n_chips, stream(seed, i, 1))
        c2 = random_binary_code(n_chips, stream(seed, i, 2))
        net = two_user_network(partition, wp, c1, c2, state_kind, coupler)
        return [receiver_trace(net, r, times=[t0]).values[0, 0] / ref for r in (0, 1)]

    vals = np.array(parallel_map(trial, range(trials), threads))
    m1, s1 = _mean_se(vals[:, 0])
    m2, s2 = _mean_se(vals[:, 1])
    a = _chip_amplitudes(wp, partition, t0)
    exact_residual = float(np.sum(np.abs(a) ** 2) / abs(np.sum(a)) ** 2)
    return ReceiverMean(
        n_chips=n_chips,
        trials=trials,
        seed=seed,
        state_kind=state_kind,
        i1_mean=m1,
        i1_se=s1,
        i2_mean=m2,
        i2_se=s2,
        nominal=0.5 * (1.0 + 1.0 / n_chips),
        exact=0.5 * (1.0 + exact_residual),
    )


def spreading_factor(
    wp: SpectralWavepacket, code: Code, partition: ChipPartition, oversample: int = 1
) -> float:
    """Effective duration of the encoded pulse relative to the unencoded one."""
    if not code.is_binary:
        raise ValueError("spreading factor is defined for binary codes")
    before = effective_duration(to_time(wp, oversample))
    after = effective_duration(to_time(encode(wp, partition, code), oversample))
    return after / before


def spreading_samples(
    n_chips: int, seeds: Sequence[int], grid: FrequencyGrid | None = None, threads: int | None = None
) -> np.ndarray:
    grid = grid or FrequencyGrid()
    wp = gaussian_spectral(grid)
    partition = gaussian_quantile_partition(grid, n_chips)
    return np.array(
        parallel_map(
            lambda sd: spreading_factor(wp, random_binary_code(n_chips, stream(sd)), partition),
            seeds,
            threads,
        )
    )


def energy_check(net: NetworkSpec) -> float:
    """``|sum_r int I_r dt - sum_s mean intensity_s|`` over the full window."""
    traces = all_receiver_traces(net)
    return abs(float(np.sum(traces.energy())) - input_energy(net.transmitters))
