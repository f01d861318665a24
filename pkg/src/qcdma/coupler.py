"""Lossless M x M star-coupler matrices.

Rows index output ports (receivers), columns index input ports (senders):
``a'_r = sum_s B[r, s] a_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codes import sylvester_hadamard

SCHEMA_VERSION = 1
UNITARITY_TOL = 1e-12


class NonUnitaryError(ValueError):
    def __init__(self, residual: float):
        super().__init__(f"coupler matrix is not unitary (max|B^H B - I| = {residual:.3e})")
        self.residual = residual


def unitarity_residual(entries: np.ndarray) -> float:
    b = np.asarray(entries, dtype=np.complex128)
    return float(np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))))


@dataclass(frozen=True, eq=False)
class CouplerMatrix:
    entries: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        b = np.array(self.entries, dtype=np.complex128)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] < 1:
            raise ValueError(f"coupler must be a non-empty square matrix, got shape {b.shape}")
        residual = unitarity_residual(b)
        if not residual < UNITARITY_TOL:
            raise NonUnitaryError(residual)
        b.setflags(write=False)
        object.__setattr__(self, "entries", b)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def residual(self) -> float:
        return unitarity_residual(self.entries)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "coupler",
            "label": self.label,
            "m": self.m,
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
            "unitarity_residual": self.residual,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CouplerMatrix":
        raw = np.asarray(doc["entries"], dtype=float)
        if raw.ndim != 3 or raw.shape[-1] != 2:
            raise ValueError("entries must be an M x M list of [re, im] pairs")
        return cls(raw[..., 0] + 1j * raw[..., 1], doc.get("label", "custom"))


def balanced_2x2() -> CouplerMatrix:
    s = 1.0 / math.sqrt(2.0)
    return CouplerMatrix(np.array([[s, s], [-s, s]]), "balanced2x2")


def dft_coupler(m: int) -> CouplerMatrix:
    """``B[j, k] = gamma^(j k) / sqrt(M)`` with ``gamma = exp(-2 pi i / M)``."""
    if m < 1:
        raise ValueError("M must be >= 1")
    jk = np.outer(np.arange(m), np.arange(m)) % m
    return CouplerMatrix(np.exp(-2j * math.pi * jk / m) / math.sqrt(m), f"dft({m})")


def hadamard_coupler(m: int) -> CouplerMatrix:
    return CouplerMatrix(sylvester_hadamard(m) / math.sqrt(m), f"hadamard({m})")


def rephase(b: CouplerMatrix, row_phases, col_phases) -> CouplerMatrix:
    """``B'[j, k] = exp(i phi_j) exp(i phi_k) B[j, k]``; unitary for any phases."""
    rows = np.asarray(row_phases, dtype=float)
    cols = np.asarray(col_phases, dtype=float)
    if rows.shape != (b.m,) or cols.shape != (b.m,):
        raise ValueError(f"need {b.m} row and {b.m} column phases")
    entries = np.exp(1j * rows)[:, None] * b.entries * np.exp(1j * cols)[None, :]
    return CouplerMatrix(entries, f"rephased {b.label}")


def custom(entries) -> CouplerMatrix:
    return CouplerMatrix(entries, "custom")


def make_coupler(kind: str, m: int = 2) -> CouplerMatrix:
    if kind == "balanced2x2":
        if m != 2:
            raise ValueError("balanced2x2 is a 2-port coupler")
        return balanced_2x2()
    if kind == "dft":
        return dft_coupler(m)
    if kind == "hadamard":
        return hadamard_coupler(m)
    raise ValueError(f"unknown coupler kind {kind!r}")
