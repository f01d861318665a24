"""Equal-energy spectral chips, binary phase codes and the masks they induce."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .wavepacket import FrequencyGrid, SpectralWavepacket, gaussian_spectral

SCHEMA_VERSION = 1

# Cumulative sums carry rounding error; a boundary whose left-hand energy
# equals k/Nc analytically must not slip by one sample.
_CUM_TOL = 1e-12


class PartitionResolutionError(ValueError):
    """The frequency grid is too coarse for the requested number of chips."""


class CodeMismatchError(ValueError):
    """Code length does not match its partition or partner code."""


@dataclass(frozen=True, eq=False)
class ChipPartition:
    """Contiguous chips ``[edges[k], edges[k+1])`` of sample indices.

    ``chip_energies`` are the energies actually realized on the grid by the
    wavepacket the partition was built for.
    """

    grid: FrequencyGrid
    edges: np.ndarray
    chip_energies: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64)
        if edges[0] != 0 or edges[-1] != self.grid.n_samples:
            raise ValueError("partition must span the whole grid window")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("chip edges must be strictly increasing")
        energies = np.asarray(self.chip_energies, dtype=float)
        if energies.shape != (edges.size - 1,):
            raise ValueError("one energy per chip required")
        edges.setflags(write=False)
        energies.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "chip_energies", energies)

    @property
    def n_chips(self) -> int:
        return self.edges.size - 1

    @property
    def boundaries(self) -> np.ndarray:
        """Chip boundary frequencies Omega_0 .. Omega_Nc (left-closed chips)."""
        return self.grid.omega_min + self.grid.d_omega * self.edges.astype(float)

    @property
    def chip_index(self) -> np.ndarray:
        """Chip number of every grid sample."""
        return np.repeat(np.arange(self.n_chips), np.diff(self.edges))

    def max_energy_deviation(self) -> float:
        return float(np.max(np.abs(self.chip_energies - 1.0 / self.n_chips)))

    def orthogonality_bound(self) -> float:
        """Upper bound on |<xi^ej|xi^ek>| for codes orthogonal as sequences."""
        return self.n_chips * self.max_energy_deviation()

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "partition",
            "n_chips": self.n_chips,
            "grid": self.grid.to_dict(),
            "edges": [int(e) for e in self.edges],
            "boundaries": [float(b) for b in self.boundaries],
            "chip_energies": [float(e) for e in self.chip_energies],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChipPartition":
        return cls(FrequencyGrid(**doc["grid"]), doc["edges"], doc["chip_energies"])


def _check_resolution(grid: FrequencyGrid, n_chips: int) -> None:
    if n_chips < 1:
        raise PartitionResolutionError(f"need at least one chip, got {n_chips}")
    if grid.n_samples < 16 * n_chips:
        raise PartitionResolutionError(
            f"{grid.n_samples} samples cannot resolve {n_chips} chips "
            f"(need >= {16 * n_chips})"
        )


def _energies(energy: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return np.add.reduceat(energy, edges[:-1])


def partition_equal_energy(wp: SpectralWavepacket, n_chips: int) -> ChipPartition:
    """Split the spectrum into ``n_chips`` chips of (nearly) equal energy.

    Boundary ``k`` is the first sample whose preceding cumulative energy
    reaches ``k/n_chips``; that sample opens chip ``k``.
    """
    grid = wp.grid
    _check_resolution(grid, n_chips)
    energy = wp.energy_density
    preceding = np.concatenate(([0.0], np.cumsum(energy)))
    targets = np.arange(1, n_chips) / n_chips - _CUM_TOL
    inner = np.searchsorted(preceding, targets, side="left")
    edges = np.concatenate(([0], inner, [grid.n_samples]))
    if np.any(np.diff(edges) <= 0):
        raise PartitionResolutionError("two chip boundaries collapsed onto one sample")
    return ChipPartition(grid, edges, _energies(energy, edges))


def gaussian_quantile_partition(grid: FrequencyGrid, n_chips: int) -> ChipPartition:
    """Chip boundaries at the normal quantiles ``omega0 + delta*ppf(k/Nc)``.

    ``|xi|^2`` of the Gaussian wavepacket is a normal density of standard
    deviation ``delta``, so these are the exact equal-energy boundaries,
    snapped to the nearest sample.
    """
    _check_resolution(grid, n_chips)
    q = norm.ppf(np.arange(1, n_chips) / n_chips)
    omega = grid.omega0 + grid.delta * q
    inner = np.rint((omega - grid.omega_min) / grid.d_omega).astype(np.int64)
    edges = np.concatenate(([0], inner, [grid.n_samples]))
    if np.any(np.diff(edges) <= 0):
        raise PartitionResolutionError("two chip boundaries collapsed onto one sample")
    energy = gaussian_spectral(grid).energy_density
    return ChipPartition(grid, edges, _energies(energy, edges))


@dataclass(frozen=True, eq=False)
class Code:
    """Per-chip phases. Binary codes use {0, pi}; any real phase is allowed."""

    phases: np.ndarray
    label: str = ""

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float).reshape(-1)
        if phases.size < 1:
            raise ValueError("a code needs at least one chip")
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @property
    def n_chips(self) -> int:
        return self.phases.size

    @property
    def is_binary(self) -> bool:
        r = np.mod(self.phases, 2.0 * math.pi)
        return bool(np.all((np.abs(r) < 1e-12) | (np.abs(r - math.pi) < 1e-12)
                           | (np.abs(r - 2.0 * math.pi) < 1e-12)))

    @property
    def multipliers(self) -> np.ndarray:
        """Spectral wavepacket multipliers ``exp(-i theta_l)`` (exactly +-1 if binary)."""
        if self.is_binary:
            r = np.mod(self.phases, 2.0 * math.pi)
            return np.where(np.abs(r - math.pi) < 1e-12, -1.0, 1.0).astype(np.complex128)
        return np.exp(-1j * self.phases)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "code",
            "label": self.label,
            "n_chips": self.n_chips,
            "phases_over_pi": [float(p / math.pi) for p in self.phases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Code":
        phases = np.asarray(doc["phases_over_pi"], dtype=float) * math.pi
        if "n_chips" in doc and int(doc["n_chips"]) != phases.size:
            raise CodeMismatchError("n_chips disagrees with the phase list")
        return cls(phases, doc.get("label", ""))


@dataclass(frozen=True, eq=False)
class PhaseMask:
    grid: FrequencyGrid
    theta: np.ndarray


def zero_code(n_chips: int) -> Code:
    return Code(np.zeros(n_chips), "zero")


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent PCG64 stream for ``(seed, *keys)``.

    The keys are numpy's ``SeedSequence`` spawn key, so e.g. trial ``i`` of a
    Monte-Carlo run with ``seed`` always draws from ``stream(seed, i)``
    whatever order or thread the trials run in.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=keys)))


def random_binary_code(n_chips: int, seed, label: str | None = None) -> Code:
    """i.i.d. uniform {0, pi} phases. ``seed`` is an int or a Generator."""
    if n_chips < 1:
        raise ValueError("n_chips must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed))
    bits = rng.integers(0, 2, size=n_chips)
    if label is None:
        label = f"random(seed={seed})" if not isinstance(seed, np.random.Generator) else "random"
    return Code(math.pi * bits, label)


def sylvester_hadamard(order: int) -> np.ndarray:
    """Sylvester Hadamard matrix ``H_2n = [[H, H], [H, -H]]`` starting from ``[1]``."""
    if order < 1 or order & (order - 1):
        raise ValueError(f"Sylvester order must be a power of two, got {order}")
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


def walsh_hadamard_code(n_chips: int, index: int) -> Code:
    h = sylvester_hadamard(n_chips)
    if not 0 <= index < n_chips:
        raise ValueError(f"Walsh index {index} out of range for length {n_chips}")
    return Code(np.where(h[index] < 0, math.pi, 0.0), f"walsh({n_chips},{index})")


def code_inner_product(cj: Code, ck: Code) -> complex:
    """``<c_j|c_k> = sum_l exp(-i(theta_k(l) - theta_j(l)))``."""
    if cj.n_chips != ck.n_chips:
        raise CodeMismatchError(f"lengths differ: {cj.n_chips} vs {ck.n_chips}")
    mj, mk = cj.multipliers, ck.multipliers
    if cj.is_binary and ck.is_binary:
        return complex(int(np.sum(mj.real.astype(np.int64) * mk.real.astype(np.int64))))
    return complex(np.sum(np.conj(mj) * mk))


def mask_from_code(partition: ChipPartition, code: Code) -> PhaseMask:
    """Piecewise-constant ``theta(omega)`` taking the code phase of each chip."""
    if code.n_chips != partition.n_chips:
        raise CodeMismatchError(
            f"code has {code.n_chips} chips, partition has {partition.n_chips}"
        )
    theta = code.phases[partition.chip_index]
    theta.setflags(write=False)
    return PhaseMask(partition.grid, theta)
