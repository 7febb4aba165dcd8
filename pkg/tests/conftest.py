import numpy as np
import pytest


def central_fd_gradient(fn, x0, step, indices=None):
    """Central finite differences of a scalar function over a flat vector."""
    x0 = np.asarray(x0, dtype=float)
    idxs = range(len(x0)) if indices is None else indices
    grad = {}
    for i in idxs:
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (fn(xp) - fn(xm)) / (2.0 * step)
    return grad


def max_rel_gradient_error(fn, grad_vec, x0, step, indices=None, floor=1e-9):
    """Worst relative mismatch between analytic and FD gradient entries."""
    fd = central_fd_gradient(fn, x0, step, indices)
    worst = 0.0
    for i, g_fd in fd.items():
        g_an = grad_vec[i]
        denom = max(abs(g_fd), abs(g_an))
        if denom < floor:
            continue
        worst = max(worst, abs(g_fd - g_an) / denom)
    return worst


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rigid_transform_state(state, rotation, translation):
    out = state.copy()
    for mid in out.positions:
        out.positions[mid] = out.positions[mid] @ rotation.T + translation
        out.ref_dirs[mid] = out.ref_dirs[mid] @ rotation.T
    return out
