"""Dependency-free heatmap rendering to binary PGM/PPM images.

The default "ember" ramp is a hand-sampled perceptually-uniform-style
gradient (dark purple through orange to pale yellow). Masked cells
render black. Image comments record the colormap and the source field
extremes, so files stay self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# anchor colors, linearly interpolated over [0, 1]
_RAMPS = {
    "ember": [
        (0.0, (13, 8, 70)),
        (0.25, (84, 15, 109)),
        (0.5, (187, 55, 84)),
        (0.75, (249, 140, 10)),
        (1.0, (252, 255, 164)),
    ],
}


@dataclass
class HeatmapImage:
    width: int
    height: int
    pixels: np.ndarray  # (H, W) uint8 for gray, (H, W, 3) for color
    vmin: float
    vmax: float
    colormap: str

    @property
    def grayscale(self) -> bool:
        return self.pixels.ndim == 2


def _normalize(values: np.ndarray, valid: np.ndarray) -> tuple[np.ndarray, float, float]:
    vals = np.asarray(values, dtype=float)
    if np.any(valid):
        vmin = float(vals[valid].min())
        vmax = float(vals[valid].max())
    else:
        vmin = vmax = 0.0
    if vmax > vmin:
        unit = (vals - vmin) / (vmax - vmin)
    else:
        unit = np.full_like(vals, 0.5)
    return np.clip(unit, 0.0, 1.0), vmin, vmax


def _apply_ramp(unit: np.ndarray, name: str) -> np.ndarray:
    stops = _RAMPS[name]
    pos = np.array([p for p, _ in stops])
    rgb = np.array([c for _, c in stops], dtype=float)
    out = np.empty(unit.shape + (3,), dtype=np.uint8)
    for ch in range(3):
        out[..., ch] = np.rint(np.interp(unit, pos, rgb[:, ch])).astype(np.uint8)
    return out


def render_heatmap(values: np.ndarray, valid: np.ndarray | None = None,
                   colormap: str = "ember", upscale: int = 1) -> HeatmapImage:
    """Map a 2-D field to pixels; each cell becomes an upscale x upscale block."""
    values = np.asarray(values, dtype=float)
    if valid is None:
        valid = np.ones(values.shape, dtype=bool)
    valid = np.asarray(valid, dtype=bool)
    if upscale < 1:
        raise ConfigError("upscale must be a positive integer")
    if colormap != "gray" and colormap not in _RAMPS:
        raise ConfigError(f"unknown colormap {colormap!r}")
    unit, vmin, vmax = _normalize(values, valid)
    if colormap == "gray":
        pixels = np.rint(unit * 255).astype(np.uint8)
        pixels[~valid] = 0
    else:
        pixels = _apply_ramp(unit, colormap)
        pixels[~valid] = (0, 0, 0)
    pixels = np.repeat(np.repeat(pixels, upscale, axis=0), upscale, axis=1)
    height, width = pixels.shape[:2]
    return HeatmapImage(width, height, pixels, vmin, vmax, colormap)


def write_pnm(image: HeatmapImage, path) -> None:
    """Binary PGM (grayscale) or PPM (color) with metadata comments."""
    magic = b"P5" if image.grayscale else b"P6"
    header = b"\n".join([
        magic,
        f"# colormap={image.colormap} min={image.vmin!r} max={image.vmax!r}".encode(),
        f"{image.width} {image.height}".encode(),
        b"255",
        b"",
    ])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(image.pixels.tobytes())


def read_pnm_header(path) -> dict:
    """Parse magic, comment metadata, and dimensions (for tests/tools)."""
    with open(path, "rb") as fh:
        data = fh.read()
    lines = data.split(b"\n", 4)
    magic = lines[0].decode()
    comment = lines[1].decode()
    width, height = (int(x) for x in lines[2].split())
    meta = {}
    for tok in comment.lstrip("# ").split():
        key, _, val = tok.partition("=")
        meta[key] = val
    return {"magic": magic, "width": width, "height": height,
            "maxval": int(lines[3]), "meta": meta,
            "pixels": lines[4]}
