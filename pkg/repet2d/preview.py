"""PNG previews of matrices: one square per cell, fixed palette, optional caption."""

import logging
from typing import Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from repet2d.core2d import Matrix2D
from repet2d.errors import BadParam

logger = logging.getLogger(__name__)

PALETTE = [
    (255, 255, 255),
    (33, 33, 33),
    (229, 57, 53),
    (30, 136, 229),
    (67, 160, 71),
    (251, 192, 45),
    (142, 36, 170),
    (0, 172, 193),
]
GRID = (200, 200, 200)
CAPTION_HEIGHT = 24


def _font():
    try:
        return ImageFont.truetype('/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf', 13)
    except OSError:
        return ImageFont.load_default()


def render(M: Matrix2D, scale: int = 8, caption: Optional[str] = None) -> Image.Image:
    '''
    Business: draw a matrix as a PNG-ready image
    Args: M - matrix; symbol id i takes PALETTE[i % len(PALETTE)]
          scale - pixels per cell side
          caption - text drawn under the grid
    Returns: RGB PIL image
    '''
    if scale < 1:
        raise BadParam(f"scale must be >= 1, got {scale}")
    colors = np.array(PALETTE, dtype=np.uint8)[M.data % len(PALETTE)]
    pixels = np.repeat(np.repeat(colors, scale, axis=0), scale, axis=1)
    grid = Image.fromarray(pixels, 'RGB')
    if scale >= 6:
        draw = ImageDraw.Draw(grid)
        for i in range(1, M.rows):
            draw.line([(0, i * scale), (M.cols * scale, i * scale)], fill=GRID)
        for j in range(1, M.cols):
            draw.line([(j * scale, 0), (j * scale, M.rows * scale)], fill=GRID)
    if not caption:
        return grid
    img = Image.new('RGB', (grid.width, grid.height + CAPTION_HEIGHT), color='white')
    img.paste(grid, (0, 0))
    ImageDraw.Draw(img).text((4, grid.height + 5), caption, fill='black', font=_font())
    return img


def save_preview(M: Matrix2D, path: str, scale: int = 8, caption: Optional[str] = None) -> Tuple[int, int]:
    img = render(M, scale, caption)
    img.save(path, 'PNG')
    logger.info("preview %dx%d written to %s", img.width, img.height, path)
    return img.width, img.height
