"""Shifted and scaled monomial bases ``((x - z) / h) ** beta``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np


def multi_indices(m: int, d: int = 2) -> np.ndarray:
    """Exponents with ``|beta| <= m``, graded by degree, ``x1`` powers descending."""
    if d != 2:
        raise NotImplementedError("only planar bases are supported")
    if m < 0:
        raise ValueError("degree must be non-negative")
    return np.array([(k - j, j) for k in range(m + 1) for j in range(k + 1)], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class PolyBasis:
    m: int
    z: np.ndarray
    h: float
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).reshape(self.d))
        if not self.h > 0:
            raise ValueError("basis scale h must be positive")

    @cached_property
    def exponents(self) -> np.ndarray:
        return multi_indices(self.m, self.d)

    @property
    def Q(self) -> int:
        return comb(self.m + self.d, self.d)

    def shifted(self, z) -> PolyBasis:
        return PolyBasis(self.m, z, self.h, self.d)

    def _scaled(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        s = (np.atleast_2d(x) - self.z) / self.h
        return s, single

    def eval(self, x) -> np.ndarray:
        s, single = self._scaled(x)
        e = self.exponents
        out = s[:, 0, None] ** e[:, 0] * s[:, 1, None] ** e[:, 1]
        return out[0] if single else out

    def gradient(self, x) -> np.ndarray:
        """Array of shape ``(n, Q, 2)`` (or ``(Q, 2)`` for a single point)."""
        s, single = self._scaled(x)
        e = self.exponents
        p1 = s[:, 0, None] ** e[:, 0]
        p2 = s[:, 1, None] ** e[:, 1]
        d1 = _dpow(s[:, 0], e[:, 0], 1)
        d2 = _dpow(s[:, 1], e[:, 1], 1)
        out = np.stack([d1 * p2, p1 * d2], axis=-1) / self.h
        return out[0] if single else out

    def laplacian(self, x) -> np.ndarray:
        s, single = self._scaled(x)
        e = self.exponents
        p1 = s[:, 0, None] ** e[:, 0]
        p2 = s[:, 1, None] ** e[:, 1]
        out = (_dpow(s[:, 0], e[:, 0], 2) * p2 + p1 * _dpow(s[:, 1], e[:, 1], 2)) / self.h**2
        return out[0] if single else out


def _dpow(s: np.ndarray, e: np.ndarray, order: int) -> np.ndarray:
    """``d^order/ds^order s**e`` for each exponent, zero where ``e < order``."""
    coef = np.ones_like(e, dtype=float)
    for i in range(order):
        coef = coef * (e - i)
    powers = s[:, None] ** np.maximum(e - order, 0)
    return np.where(e >= order, coef * powers, 0.0)


def eval_basis(basis: PolyBasis, x) -> np.ndarray:
    return basis.eval(x)


def eval_gradient(basis: PolyBasis, x) -> np.ndarray:
    return basis.gradient(x)


def eval_laplacian(basis: PolyBasis, x) -> np.ndarray:
    return basis.laplacian(x)
