"""The whole pipeline through one entry point, with caching.

Writes a synthetic pair to disk, then lets `run_pipeline` handle color
matching, flow estimation and rendering. The second call returns instantly
from the content-addressed cache. To explore the same pair interactively:

    flowview serve --a demos/output/pair_left.png --b demos/output/pair_right.png

and open http://127.0.0.1:8008/ (builds the same cache).
"""

import logging
import time
from pathlib import Path

import numpy as np
from scipy import ndimage

from flowview import PairConfig, run_pipeline, save_image
from flowview.raster import Image

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)
logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


def make_pair(n=128, seed=3):
    rng = np.random.default_rng(seed)
    tex = np.zeros((n, n))
    for sigma, amp in ((1.0, 1.0), (4.0, 4.0), (12.0, 8.0)):
        tex += amp * ndimage.gaussian_filter(rng.standard_normal((n, n)), sigma, mode="wrap")
    tex = (tex - tex.min()) / (tex.max() - tex.min())
    moved = np.clip(np.real(np.fft.ifft2(
        ndimage.fourier_shift(np.fft.fft2(tex), (1.5, 3.0)))), 0, 1)

    def to_img(v, gamma=1.0):
        u8 = np.floor((v ** gamma) * 255.0 + 0.5).astype(np.uint8)
        return Image.from_array(np.repeat(u8[:, :, None], 3, axis=2))

    # the second frame also carries a tone drift for colorfix to undo
    return to_img(tex), to_img(moved, gamma=1.25)


def main():
    left, right = make_pair()
    save_image(left, OUT / "pair_left.png")
    save_image(right, OUT / "pair_right.png")

    config = PairConfig(path1=OUT / "pair_left.png", path2=OUT / "pair_right.png")

    t0 = time.time()
    view = run_pipeline(config, a=0.5)
    print(f"first run (computes flow): {time.time() - t0:.2f}s")
    save_image(view.image, OUT / "pipeline_midpoint.png")

    t0 = time.time()
    run_pipeline(config, a=0.25)
    print(f"second run (cache hit):    {time.time() - t0:.2f}s")
    print(f"wrote pair_*.png and pipeline_midpoint.png to {OUT}")


if __name__ == "__main__":
    main()
