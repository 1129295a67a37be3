# -*- coding: utf-8 -*-

import numpy as np


def stereographic_ratio(num, den) -> np.ndarray:
    """Unit vector for w = num / den, valid at zeros (den != 0) and poles (num != 0) alike."""
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    cross = num * np.conj(den)
    a = np.abs(num) ** 2
    b = np.abs(den) ** 2
    total = a + b
    return np.stack([2.0 * cross.real, 2.0 * cross.imag, b - a], axis=-1) / total[..., None]


def stereographic(w) -> np.ndarray:
    """n = (2 Re w, 2 Im w, 1 - |w|^2) / (1 + |w|^2); infinity maps to -e3."""
    w = np.asarray(w, dtype=complex)
    big = ~np.isfinite(w) | (np.abs(w) > 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(big, 1.0 / np.where(np.isfinite(w), w, np.inf), 0.0)
    num = np.where(big, 1.0, w)
    den = np.where(big, inv, 1.0)
    return stereographic_ratio(num, den)


def inverse_stereographic(n) -> np.ndarray:
    """w = (n1 + i n2) / (1 + n3), complex infinity at n = -e3."""
    n = np.asarray(n, dtype=float)
    denom = 1.0 + n[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (n[..., 0] + 1j * n[..., 1]) / denom
    return np.where(denom > 0.0, w, complex(np.inf, 0.0))
