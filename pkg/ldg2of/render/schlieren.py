# -*- coding: utf-8 -*-

##
## Crossed-polarizer textures. One pixel per grid node, row 0 at the bottom.
## Gray textures are written as 8-bit grayscale PNG, hue textures as 8-bit RGB.
##

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from matplotlib import colors
from PIL import Image

from ldg2of.grid.fields import DirectorField, GridField
from ldg2of.tensor.qtensor import eigendecompose

logger = logging.getLogger(__name__)

PLANAR_TOL = 1e-12
UNDEFINED_GRAY = 0.5
MAX_UNDEFINED_FRACTION = 0.01


@dataclass
class Texture:
    """pixels: (ny, nx, 3) RGB in [0, 1]; intensity is NaN outside the domain
    and at nodes without a planar angle."""
    pixels: np.ndarray
    intensity: np.ndarray
    undefined: int
    active: int
    colormap: str = "gray"

    @property
    def undefined_fraction(self) -> float:
        return self.undefined / self.active if self.active else 0.0


def director_of(fld: GridField) -> np.ndarray:
    """Node directors; principal eigenvectors for Q-tensor fields."""
    if isinstance(fld, DirectorField):
        return fld.values
    n = np.zeros(fld.grid.shape + (3,))
    act = fld.grid.active
    n[act] = eigendecompose(fld.values[act]).principal
    return n


def schlieren_intensity(n: np.ndarray) -> np.ndarray:
    """4 [n1 n2 / (n1^2 + n2^2)]^2, NaN where n1 = n2 = 0."""
    n1, n2 = n[..., 0], n[..., 1]
    planar = n1 * n1 + n2 * n2
    ok = planar > PLANAR_TOL
    return np.where(ok, 4.0 * (n1 * n2 / np.where(ok, planar, 1.0)) ** 2, np.nan)


def render(fld: GridField, colormap: str = "gray") -> Texture:
    grid = fld.grid
    n = director_of(fld)
    act = grid.active
    intensity = np.where(act, schlieren_intensity(n), np.nan)
    undefined = act & np.isnan(intensity)

    if colormap == "hue":
        hue = (np.arctan2(n[..., 1], n[..., 0]) % (2.0 * np.pi)) / (2.0 * np.pi)
        hsv = np.stack([hue, np.ones_like(hue), np.ones_like(hue)], axis=-1)
        pixels = colors.hsv_to_rgb(hsv)
    elif colormap == "gray":
        pixels = np.repeat(np.nan_to_num(intensity)[..., None], 3, axis=-1)
    else:
        raise ValueError(f"unknown colormap '{colormap}'")
    pixels[undefined] = UNDEFINED_GRAY
    pixels[~act] = 0.0
    count = int(undefined.sum())
    if count:
        logger.warning(f"{count} nodes have no planar angle and are drawn gray")
    return Texture(pixels=np.clip(pixels, 0.0, 1.0), intensity=intensity, undefined=count, active=int(act.sum()),
                   colormap=colormap)


def write_png(path: Union[str, Path], texture: Texture) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.round(texture.pixels * 255.0).astype(np.uint8)[::-1]
    if texture.colormap == "gray":
        img = Image.fromarray(np.ascontiguousarray(data[..., 0]))
    else:
        img = Image.fromarray(np.ascontiguousarray(data))
    img.save(path, format="PNG")
    logger.info(f"Wrote {texture.pixels.shape[1]}x{texture.pixels.shape[0]} texture to {path}")
    return path
