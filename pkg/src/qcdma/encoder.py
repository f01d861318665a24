"""Spectral phase-shifting encoder/decoder acting on wavepackets."""

from __future__ import annotations

import enum
import math

import numpy as np

from .codes import ChipPartition, Code, CodeMismatchError, PhaseMask, mask_from_code
from .wavepacket import GridMismatchError, SpectralWavepacket, inner_product


class Direction(enum.Enum):
    ENCODE = -1  # xi(w) * exp(-i theta(w))
    DECODE = +1  # xi(w) * exp(+i theta(w))


def apply_mask(
    wp: SpectralWavepacket, mask: PhaseMask, direction: Direction
) -> SpectralWavepacket:
    if mask.grid != wp.grid:
        raise GridMismatchError("mask and wavepacket are on different grids")
    factor = np.exp(1j * direction.value * mask.theta)
    return wp.with_amplitudes(wp.amplitudes * factor)


def encode(wp: SpectralWavepacket, partition: ChipPartition, code: Code) -> SpectralWavepacket:
    return apply_mask(wp, mask_from_code(partition, code), Direction.ENCODE)


def decode(wp: SpectralWavepacket, partition: ChipPartition, code: Code) -> SpectralWavepacket:
    return apply_mask(wp, mask_from_code(partition, code), Direction.DECODE)


def encode_decode(
    wp: SpectralWavepacket, partition: ChipPartition, enc: Code, dec: Code
) -> SpectralWavepacket:
    """``xi^{e d}``: encode with ``enc``, then decode with ``dec``."""
    return decode(encode(wp, partition, enc), partition, dec)


def compose_codes(cj: Code, ck: Code) -> Code:
    """Single code equivalent to encoding by ``cj`` then decoding by ``ck``.

    Chip phases are ``(theta_j - theta_k) mod 2 pi``; binary inputs give a
    binary result.
    """
    if cj.n_chips != ck.n_chips:
        raise CodeMismatchError(f"lengths differ: {cj.n_chips} vs {ck.n_chips}")
    diff = np.mod(cj.phases - ck.phases, 2.0 * math.pi)
    if cj.is_binary and ck.is_binary:
        diff = np.where(np.abs(diff - math.pi) < 1e-9, math.pi, 0.0)
    else:
        diff = np.where(np.abs(diff - 2.0 * math.pi) < 1e-12, 0.0, diff)
    return Code(diff, f"({cj.label})*({ck.label})^-1")


def cross_inner_after_coding(
    xi_j: SpectralWavepacket,
    c_j: Code,
    xi_k: SpectralWavepacket,
    c_k: Code,
    partition: ChipPartition,
) -> tuple[complex, complex]:
    """Both sides of ``<xi_j^{e_j d_k}|xi_k> = <xi_j^{e_j}|xi_k^{e_k}>``.

    Left: encode ``xi_j`` by ``c_j``, decode by ``c_k``, project on raw ``xi_k``.
    Right: encode each with its own code and take the inner product.
    """
    left = inner_product(encode_decode(xi_j, partition, c_j, c_k), xi_k)
    right = inner_product(encode(xi_j, partition, c_j), encode(xi_k, partition, c_k))
    return left, right
