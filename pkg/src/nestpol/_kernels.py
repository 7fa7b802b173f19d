"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Every kernel exists twice: ``<name>_numpy`` (vectorised numpy) and, when numba
is importable, ``<name>_numba`` (``@njit`` loops).  The public name ``<name>``
is bound to the numba variant unless the environment variable
``NESTPOL_DISABLE_NUMBA`` is set to a truthy value or numba is missing.

Both variants take contiguous float64/complex128 arrays and return new arrays;
callers in :mod:`nestpol.chebyshev` and :mod:`nestpol.fastsum` do the dtype
coercion.
"""

import os

import numpy as np

KERNEL_INVERSE = 0  # 1/(y - x)
KERNEL_LOG = 1  # log|y - x|
KERNEL_HELMHOLTZ = 2  # exp(i kappa |y - x|) / |y - x|

# the second barycentric form is abandoned once its denominator has cancelled by
# this factor; beyond it the quotient error grows like eps * Lambda(x)^2
CANCELLATION_LIMIT = 1e12

_TRUTHY = {"1", "true", "yes", "on"}
JIT_DISABLED = os.environ.get("NESTPOL_DISABLE_NUMBA", "").strip().lower() in _TRUTHY

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

BACKEND = "numba" if (HAS_NUMBA and not JIT_DISABLED) else "numpy"


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def _exact_ratio(num, den):
    # num / den via the conjugate after a power-of-two rescale; equal operands give exactly 1
    _, exp = np.frexp(np.maximum(np.abs(den.real), np.abs(den.imag)))
    nr, ni = np.ldexp(num.real, -exp), np.ldexp(num.imag, -exp)
    dr, di = np.ldexp(den.real, -exp), np.ldexp(den.imag, -exp)
    # separate real ufuncs: numpy's complex multiply may fuse and break the cancellation
    norm = dr * dr + di * di
    out = np.empty(num.shape, dtype=np.complex128)
    out.real = (nr * dr + ni * di) / norm
    out.imag = (ni * dr - nr * di) / norm
    return out


def _node_scale(nodes, weights):
    # c with c * w_k = 1 / prod_{j != k} (x_k - x_j); ties the stored weights to the node polynomial
    others = nodes[0] - nodes[1:]
    return 1.0 / (weights[0] * np.prod(others)) if others.size else 1.0 / weights[0]


def barycentric_eval_numpy(x, nodes, weights, values, tol):
    diff = x[:, None] - nodes[None, :]
    hit = np.abs(diff) <= tol
    any_hit = hit.any(axis=1)
    diff = np.where(hit, 1.0, diff)
    t = weights[None, :] / diff
    num = (t * values[None, :]).sum(axis=1)
    den = t.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        # same reduction for numerator and denominator, so constants are reproduced exactly
        out = _exact_ratio(num, den)
    lost = ~(np.abs(den) * CANCELLATION_LIMIT > np.abs(t).sum(axis=1)) & ~any_hit
    if lost.any():
        # first form on the shifted samples v - v_0: error eps * Lambda(x) * |v - v_0|, constants stay exact
        rows = np.nonzero(lost)[0]
        shifted = (t[rows] * (values - values[0])[None, :]).sum(axis=1)
        node_poly = np.prod(diff[rows], axis=1)
        out[rows] = values[0] + _node_scale(nodes, weights) * node_poly * shifted
    if any_hit.any():
        rows = np.nonzero(any_hit)[0]
        out[rows] = values[np.argmax(hit[rows], axis=1)]
    return out


def lebesgue_function_numpy(x, nodes, weights):
    diff = x[:, None] - nodes[None, :]
    hit = diff == 0.0
    diff = np.where(hit, 1.0, diff)
    t = weights[None, :] / diff
    out = np.abs(t).sum(axis=1) / np.abs(t.sum(axis=1))
    out[hit.any(axis=1)] = 1.0
    return out


def lagrange_matrix_numpy(x, nodes, weights):
    diff = x[:, None] - nodes[None, :]
    hit = diff == 0.0
    diff = np.where(hit, 1.0, diff)
    t = weights[None, :] / diff
    out = t / t.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        out[rows] = hit[rows].astype(np.float64)
    return out


def _kernel_values_numpy(d, kernel_id, kappa):
    # d = y - x, with zero entries masked by the caller
    if kernel_id == KERNEL_INVERSE:
        return (1.0 / d).astype(np.complex128)
    r = np.abs(d)
    if kernel_id == KERNEL_LOG:
        return np.log(r).astype(np.complex128)
    return np.exp(1j * kappa * r) / r


def direct_sum_numpy(targets, sources, masses, kernel_id, kappa, chunk=1024):
    out = np.zeros(targets.shape[0], dtype=np.complex128)
    for start in range(0, targets.shape[0], chunk):
        y = targets[start:start + chunk]
        d = y[:, None] - sources[None, :]
        zero = d == 0.0
        g = _kernel_values_numpy(np.where(zero, 1.0, d), kernel_id, kappa)
        g[zero] = 0.0
        out[start:start + chunk] = g @ masses
    return out


# --------------------------------------------------------------------------
# loop implementations (compiled by numba when available)
# --------------------------------------------------------------------------


def _barycentric_eval_loops(x, nodes, weights, values, tol):
    n = nodes.shape[0]
    out = np.empty(x.shape[0], dtype=np.complex128)
    prod = 1.0
    for j in range(1, n):
        prod *= nodes[0] - nodes[j]
    scale = 1.0 / (weights[0] * prod)
    for k in range(x.shape[0]):
        xk = x[k]
        hit = -1
        for j in range(n):
            if abs(xk - nodes[j]) <= tol:
                hit = j
                break
        if hit >= 0:
            out[k] = values[hit]
            continue
        num = 0.0 + 0.0j
        den = 0.0 + 0.0j
        size = 0.0
        for j in range(n):
            t = weights[j] / (xk - nodes[j])
            num += t * values[j]
            den += t
            size += abs(t)
        if abs(den) * CANCELLATION_LIMIT > size:
            out[k] = num / den
        else:
            shifted = 0.0 + 0.0j
            node_poly = 1.0 + 0.0j
            for j in range(n):
                shifted += weights[j] / (xk - nodes[j]) * (values[j] - values[0])
                node_poly *= xk - nodes[j]
            out[k] = values[0] + scale * node_poly * shifted
    return out


def _lebesgue_function_loops(x, nodes, weights):
    n = nodes.shape[0]
    out = np.empty(x.shape[0], dtype=np.float64)
    for k in range(x.shape[0]):
        s_abs = 0.0
        s = 0.0
        on_node = False
        for j in range(n):
            d = x[k] - nodes[j]
            if d == 0.0:
                on_node = True
                break
            t = weights[j] / d
            s_abs += abs(t)
            s += t
        out[k] = 1.0 if on_node else s_abs / abs(s)
    return out


def _lagrange_matrix_loops(x, nodes, weights):
    n = nodes.shape[0]
    out = np.zeros((x.shape[0], n), dtype=np.float64)
    for k in range(x.shape[0]):
        hit = -1
        for j in range(n):
            if x[k] == nodes[j]:
                hit = j
                break
        if hit >= 0:
            out[k, hit] = 1.0
            continue
        s = 0.0
        for j in range(n):
            t = weights[j] / (x[k] - nodes[j])
            out[k, j] = t
            s += t
        for j in range(n):
            out[k, j] /= s
    return out


def _direct_sum_loops(targets, sources, masses, kernel_id, kappa):
    out = np.zeros(targets.shape[0], dtype=np.complex128)
    for i in range(targets.shape[0]):
        acc = 0.0 + 0.0j
        y = targets[i]
        for j in range(sources.shape[0]):
            d = y - sources[j]
            if d == 0.0:
                continue
            if kernel_id == 0:
                acc += masses[j] / d
            elif kernel_id == 1:
                acc += masses[j] * np.log(abs(d))
            else:
                r = abs(d)
                acc += masses[j] * np.exp(1j * kappa * r) / r
        out[i] = acc
    return out


if HAS_NUMBA:
    _njit = numba.njit(cache=True)
    barycentric_eval_numba = _njit(_barycentric_eval_loops)
    lebesgue_function_numba = _njit(_lebesgue_function_loops)
    lagrange_matrix_numba = _njit(_lagrange_matrix_loops)
    direct_sum_numba = _njit(_direct_sum_loops)
else:  # pragma: no cover
    barycentric_eval_numba = None
    lebesgue_function_numba = None
    lagrange_matrix_numba = None
    direct_sum_numba = None


def _direct_sum_numba_entry(targets, sources, masses, kernel_id, kappa, chunk=None):
    return direct_sum_numba(targets, sources, masses, kernel_id, float(kappa))


if BACKEND == "numba":
    barycentric_eval = barycentric_eval_numba
    lebesgue_function = lebesgue_function_numba
    lagrange_matrix = lagrange_matrix_numba
    direct_sum = _direct_sum_numba_entry
else:
    barycentric_eval = barycentric_eval_numpy
    lebesgue_function = lebesgue_function_numpy
    lagrange_matrix = lagrange_matrix_numpy
    direct_sum = direct_sum_numpy

VARIANTS = {
    "numpy": {
        "barycentric_eval": barycentric_eval_numpy,
        "lebesgue_function": lebesgue_function_numpy,
        "lagrange_matrix": lagrange_matrix_numpy,
        "direct_sum": direct_sum_numpy,
    },
}
if HAS_NUMBA:
    VARIANTS["numba"] = {
        "barycentric_eval": barycentric_eval_numba,
        "lebesgue_function": lebesgue_function_numba,
        "lagrange_matrix": lagrange_matrix_numba,
        "direct_sum": _direct_sum_numba_entry,
    }
