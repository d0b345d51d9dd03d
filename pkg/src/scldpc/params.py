"""Parameters of circulant-based spatially-coupled (SC) LDPC codes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class SCCodeParams:
    """The (gamma, kappa, z, L, m) tuple describing an SC code.

    gamma : int
        Rows of the base matrix; column weight of the block code when the
        base is all-one.  Must be >= 3.
    kappa : int
        Columns of the base matrix; row weight of the block code.  Must
        exceed gamma.
    z : int
        Circulant (lifting) size, >= 2.
    L : int
        Coupling length, i.e. number of replicas, >= 1.
    m : int
        Coupling memory: the base matrix is split into m + 1 component
        matrices stacked with a one-block-row stagger per replica.
    """

    gamma: int
    kappa: int
    z: int
    L: int
    m: int

    def __post_init__(self):
        if self.gamma < 3:
            raise ValueError(f"gamma must be >= 3, got {self.gamma}")
        if self.kappa <= self.gamma:
            raise ValueError(f"kappa must exceed gamma, got kappa={self.kappa}")
        if self.z < 2:
            raise ValueError(f"z must be >= 2, got {self.z}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.m >= self.L:
            # Structure stays well defined; coupling is degenerate in the
            # sense that no column block overlaps all others.
            warnings.warn(
                f"m={self.m} >= L={self.L}: memory exceeds coupling length",
                stacklevel=2,
            )

    @property
    def n_entries(self) -> int:
        """Number of base-matrix positions (all-one base)."""
        return self.gamma * self.kappa

    @property
    def proto_shape(self) -> tuple[int, int]:
        """Shape of the SC protograph matrix."""
        return ((self.m + self.L) * self.gamma, self.L * self.kappa)


def code_length(params: SCCodeParams) -> int:
    """Code length kappa * z * L of the lifted SC code."""
    return params.kappa * params.z * params.L


def design_rate(params: SCCodeParams) -> Fraction:
    """Design rate 1 - (m + L) * gamma / (L * kappa), as an exact fraction.

    Counts all check rows as independent, so this is a lower bound on the
    true rate of the lifted code.
    """
    return 1 - Fraction((params.m + params.L) * params.gamma, params.L * params.kappa)
