"""Golden fixtures for the pixelate and blur baselines.

The fixtures are compared bit for bit, so they are computed with scalar
Python floats in a fixed arithmetic order:

  pixelate: tile mean = first + (sum of (x - first) in row-major order) / n
  blur:     weights w_t = exp((-0.5 / r^2) * t^2) for |t| <= ceil(3 r), divided
            by their left-to-right sum; each output is x_0 w_0 plus
            (x_-t + x_t) w_t for t from the half-width down to 1; rows
            (axis 0) first, then columns; half-sample symmetric borders.

Each fixture is cross-checked against an independent library result
(numpy block means, scipy.ndimage.gaussian_filter with mode='reflect').
Those differ by at most an ulp or two because numpy's vectorized exp and
pairwise sums round differently. Files are raw float64 LE.
"""
import math
import pathlib

import numpy as np
from scipy import ndimage

out = pathlib.Path(__file__).resolve().parents[2] / "tests" / "data"
out.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(20240917)


def pixelate(img, block):
    h, w = len(img), len(img[0])
    res = [[0.0] * w for _ in range(h)]
    for by in range(0, h, block):
        for bx in range(0, w, block):
            ys = range(by, min(h, by + block))
            xs = range(bx, min(w, bx + block))
            first = img[by][bx]
            s = 0.0
            for y in ys:
                for x in xs:
                    s += img[y][x] - first
            mean = first + s / (len(ys) * len(xs))
            for y in ys:
                for x in xs:
                    res[y][x] = mean
    return res


def reflect(p, n):
    period = 2 * n
    m = p % period
    return period - 1 - m if m >= n else m


def kernel(r):
    half = math.ceil(3 * r)
    coef = -0.5 / (r * r)
    w = [math.exp(coef * float(t * t)) for t in range(half + 1)]
    total = 0.0
    for t in range(-half, half + 1):
        total += w[abs(t)]
    return [v / total for v in w]


def correlate(line, w):
    n, half = len(line), len(w) - 1
    res = []
    for i in range(n):
        acc = line[i] * w[0]
        for t in range(half, 0, -1):
            acc += (line[reflect(i - t, n)] + line[reflect(i + t, n)]) * w[t]
        res.append(acc)
    return res


def blur(img, r):
    w = kernel(r)
    h, wd = len(img), len(img[0])
    cols = [correlate([img[y][x] for y in range(h)], w) for x in range(wd)]
    tmp = [[cols[x][y] for x in range(wd)] for y in range(h)]
    return [correlate(row, w) for row in tmp]


def save(name, arr):
    np.asarray(arr, dtype="<f8").tofile(out / name)


def block_means(img, block):
    res = np.empty_like(img)
    for by in range(0, img.shape[0], block):
        for bx in range(0, img.shape[1], block):
            res[by:by + block, bx:bx + block] = img[by:by + block, bx:bx + block].mean()
    return res


img = rng.random((11, 7))
rows = img.tolist()
save("baseline_input_11x7.f64", img)

pix = np.array(pixelate(rows, 3))
assert np.max(np.abs(pix - block_means(img, 3))) < 1e-15
save("baseline_pixelate3_11x7.f64", pix)

for r, tag in ((1.5, "1p5"), (0.7, "0p7"), (2.0, "2p0")):
    b = np.array(blur(rows, r))
    ref = ndimage.gaussian_filter(img, sigma=r, mode="reflect", radius=math.ceil(3 * r))
    assert np.max(np.abs(b - ref)) < 1e-15, tag
    save(f"baseline_blur{tag}_11x7.f64", b)
