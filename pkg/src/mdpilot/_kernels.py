"""Hot numeric kernels: JIT-compiled with numba, with a NumPy fallback.

Backend selection happens once at import time from the environment
variable ``MDPILOT_KERNELS``:

* unset or ``numba`` — compile the kernels with ``numba.njit`` (falls
  back silently to NumPy if numba cannot be imported),
* ``numpy`` — run the interpreted/vectorized fallback path.

The random streams are xoshiro256** on uint64 state vectors (see
``rng.py`` for the scalar twin).  Simulation kernels run the *same
source* under both backends, so episode and rollout results are
bit-identical across backends; the convolution/dense kernels have a
vectorized NumPy variant instead (agreement within float32 tolerance).

``benchmarks/bench_kernels.py`` compares the two backends.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

_requested = os.environ.get("MDPILOT_KERNELS", "").strip().lower()
if _requested in ("", "numba", "jit"):
    try:
        from numba import njit as _njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False
        if _requested:
            raise
elif _requested in ("numpy", "python"):
    _HAVE_NUMBA = False
else:
    raise RuntimeError(f"MDPILOT_KERNELS must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if _HAVE_NUMBA else "numpy"

if _HAVE_NUMBA:

    def _jit(fn):
        return _njit(cache=True, nogil=True)(fn)

else:

    def _jit(fn):
        return fn


@contextmanager
def _quiet():
    # scalar uint64 wrap-around and float32 exp overflow are intended
    with np.errstate(over="ignore"):
        yield


# ---------------------------------------------------------------------------
# xoshiro256** on uint64[4] state arrays (twin of rng.Xoshiro256)
# ---------------------------------------------------------------------------

_U5 = np.uint64(5)
_U7 = np.uint64(7)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U19 = np.uint64(19)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_U45 = np.uint64(45)
_U57 = np.uint64(57)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 2.0**-53


@_jit
def _xo_next(st):
    s0 = st[0]
    s1 = st[1]
    s2 = st[2]
    s3 = st[3]
    r = s1 * _U5
    r = ((r << _U7) | (r >> _U57)) * _U9
    t = s1 << _U17
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = (s3 << _U45) | (s3 >> _U19)
    st[0] = s0
    st[1] = s1
    st[2] = s2
    st[3] = s3
    return r


@_jit
def _xo_u01(st):
    return (_xo_next(st) >> _U11) * _INV53


@_jit
def _xo_randint(st, n):
    i = int(_xo_u01(st) * n)
    if i >= n:
        i = n - 1
    return i


@_jit
def _mix64(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


@_jit
def _seed_state(seed, st):
    z = seed
    for i in range(4):
        z = z + _GOLDEN
        st[i] = _mix64(z)
    if st[0] | st[1] | st[2] | st[3] == np.uint64(0):
        st[0] = np.uint64(1)


@_jit
def _derive2(seed, index):
    # twin of rng.derive_seed(seed, index) for one index
    return _mix64(_mix64(seed) ^ _mix64(index + _GOLDEN))


# ---------------------------------------------------------------------------
# Tabular MDP kernels (CSR transition layout, see mdp.ExplicitMdp)
# ---------------------------------------------------------------------------


@_jit
def _sample_outcome(out_ptr, out_cdf, slot, u):
    j = out_ptr[slot]
    last = out_ptr[slot + 1] - 1
    while j < last and u > out_cdf[j]:
        j += 1
    return j


@_jit
def _tab_episode(
    out_ptr,
    out_succ,
    out_cdf,
    out_reward,
    absorbing,
    term_reward,
    pol_ptr,
    pol_slots,
    s0,
    hcap,
    st,
):
    s = s0
    total = 0.0
    steps = 0
    for _ in range(hcap):
        if absorbing[s]:
            break
        lo = pol_ptr[s]
        k = pol_ptr[s + 1] - lo
        if k == 1:
            slot = pol_slots[lo]
        else:
            slot = pol_slots[lo + _xo_randint(st, k)]
        j = _sample_outcome(out_ptr, out_cdf, slot, _xo_u01(st))
        total += out_reward[j]
        s = out_succ[j]
        steps += 1
    total += term_reward[s]
    return s, steps, total


@_jit
def _tab_episode_batch(
    out_ptr,
    out_succ,
    out_cdf,
    out_reward,
    absorbing,
    term_reward,
    outcome_class,
    pol_ptr,
    pol_slots,
    s0,
    hcap,
    n_eps,
    master_seed,
    rewards,
    outcomes,
    steps_out,
):
    st = np.empty(4, np.uint64)
    for ep in range(n_eps):
        _seed_state(_derive2(master_seed, np.uint64(ep)), st)
        s, steps, total = _tab_episode(
            out_ptr,
            out_succ,
            out_cdf,
            out_reward,
            absorbing,
            term_reward,
            pol_ptr,
            pol_slots,
            s0,
            hcap,
            st,
        )
        rewards[ep] = total
        outcomes[ep] = outcome_class[s]
        steps_out[ep] = steps


@_jit
def _tab_rollout_uniform(
    act_ptr,
    out_ptr,
    out_succ,
    out_cdf,
    out_reward,
    absorbing,
    term_reward,
    unsafe,
    s0,
    depth,
    n,
    safe_only,
    floor,
    st,
):
    total = 0.0
    n_safe = 0
    for _ in range(n):
        s = s0
        acc = 0.0
        ok = not unsafe[s]
        for _d in range(depth):
            if absorbing[s]:
                break
            lo = act_ptr[s]
            k = act_ptr[s + 1] - lo
            if k == 1:
                slot = lo
            else:
                slot = lo + _xo_randint(st, k)
            j = _sample_outcome(out_ptr, out_cdf, slot, _xo_u01(st))
            acc += out_reward[j]
            s = out_succ[j]
            if unsafe[s]:
                ok = False
        acc += term_reward[s]
        if ok or not safe_only:
            total += acc
            n_safe += 1
    if n_safe == 0:
        return floor, 0
    return total / n_safe, n_safe


# ---------------------------------------------------------------------------
# Pac-Man kernels (generative: neighbour table + food bitmap)
# ---------------------------------------------------------------------------


@_jit
def _pac_rollout(
    neigh,
    food0,
    pac0,
    gpos0,
    gdir0,
    depth,
    n,
    safe_only,
    floor,
    st,
):
    n_ghosts = gpos0.shape[0]
    food = np.empty_like(food0)
    gpos = np.empty_like(gpos0)
    gdir = np.empty_like(gdir0)
    legal = np.empty(4, np.int64)
    total = 0.0
    n_safe = 0
    for _ in range(n):
        for i in range(food0.shape[0]):
            food[i] = food0[i]
        for g in range(n_ghosts):
            gpos[g] = gpos0[g]
            gdir[g] = gdir0[g]
        pac = pac0
        npills = 0
        for i in range(food.shape[0]):
            npills += food[i]
        acc = 0.0
        lost = False
        won = False
        for _d in range(depth):
            if lost or won:
                break
            nl = 0
            for d in range(4):
                if neigh[pac, d] >= 0:
                    legal[nl] = d
                    nl += 1
            if nl == 0:
                break  # boxed-in: absorbing draw
            if nl == 1:
                d = legal[0]
            else:
                d = legal[_xo_randint(st, nl)]
            new_pac = neigh[pac, d]
            for g in range(n_ghosts):
                gp = gpos[g]
                gd = gdir[g]
                rev = (gd + 2) % 4 if gd >= 0 else -1
                nlg = 0
                for dd in range(4):
                    if dd != rev and neigh[gp, dd] >= 0:
                        legal[nlg] = dd
                        nlg += 1
                if nlg == 0:
                    if rev >= 0 and neigh[gp, rev] >= 0:
                        gmove = rev
                    else:
                        gmove = -1
                elif nlg == 1:
                    gmove = legal[0]
                else:
                    gmove = legal[_xo_randint(st, nlg)]
                if gmove >= 0:
                    ng = neigh[gp, gmove]
                    if ng == new_pac or (ng == pac and new_pac == gp):
                        lost = True
                    gpos[g] = ng
                    gdir[g] = gmove
                elif gp == new_pac:
                    lost = True
            acc += -1.0
            if not lost:
                if food[new_pac] == 1:
                    food[new_pac] = 0
                    npills -= 1
                    acc += 10.0
                if npills == 0:
                    won = True
            pac = new_pac
        if lost:
            acc += -500.0
        elif won:
            acc += 500.0
        if (not lost) or (not safe_only):
            total += acc
            n_safe += 1
    if n_safe == 0:
        return floor, 0
    return total / n_safe, n_safe


# ---------------------------------------------------------------------------
# Neural network forward-pass kernels (float32)
# ---------------------------------------------------------------------------


def _conv2d_3x3_src(x, w, b, relu):
    n_ch, height, width = x.shape
    n_f = w.shape[0]
    out = np.empty((n_f, height, width), np.float32)
    for f in range(n_f):
        for i in range(height):
            for j in range(width):
                acc = b[f]
                for c in range(n_ch):
                    for di in range(3):
                        ii = i + di - 1
                        if ii < 0 or ii >= height:
                            continue
                        for dj in range(3):
                            jj = j + dj - 1
                            if jj < 0 or jj >= width:
                                continue
                            acc += w[f, c, di, dj] * x[c, ii, jj]
                if relu and acc < np.float32(0.0):
                    acc = np.float32(0.0)
                out[f, i, j] = acc
    return out


def _conv2d_3x3_np(x, w, b, relu):
    n_ch, height, width = x.shape
    padded = np.zeros((n_ch, height + 2, width + 2), np.float32)
    padded[:, 1:-1, 1:-1] = x
    out = np.repeat(b[:, None], height * width, axis=1).reshape(-1, height, width).copy()
    for di in range(3):
        for dj in range(3):
            window = padded[:, di : di + height, dj : dj + width]
            out += np.einsum("fc,chw->fhw", w[:, :, di, dj], window)
    if relu:
        np.maximum(out, np.float32(0.0), out=out)
    return out


def _dense_src(x, w, b, act):
    m, n = w.shape
    out = np.empty(m, np.float32)
    for i in range(m):
        acc = b[i]
        for j in range(n):
            acc += w[i, j] * x[j]
        if act == 1:
            if acc < np.float32(0.0):
                acc = np.float32(0.0)
        elif act == 2:
            acc = np.float32(1.0) / (np.float32(1.0) + np.exp(-acc))
        out[i] = acc
    return out


def _dense_np(x, w, b, act):
    out = w @ x + b
    if act == 1:
        np.maximum(out, np.float32(0.0), out=out)
    elif act == 2:
        out = np.float32(1.0) / (np.float32(1.0) + np.exp(-out))
    return out


if _HAVE_NUMBA:
    _conv2d_impl = _jit(_conv2d_3x3_src)
    _dense_impl = _jit(_dense_src)
else:
    _conv2d_impl = _conv2d_3x3_np
    _dense_impl = _dense_np


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------


def xo_next(state: np.ndarray) -> int:
    with _quiet():
        return int(_xo_next(state))


def tab_episode(tab, pol_ptr, pol_slots, s0, hcap, state):
    with _quiet():
        return _tab_episode(
            tab.out_ptr,
            tab.out_succ,
            tab.out_cdf,
            tab.out_reward,
            tab.absorbing,
            tab.term_reward,
            pol_ptr,
            pol_slots,
            s0,
            hcap,
            state,
        )


def tab_episode_batch(tab, pol_ptr, pol_slots, s0, hcap, n_eps, master_seed):
    rewards = np.empty(n_eps, np.float64)
    outcomes = np.empty(n_eps, np.int8)
    steps = np.empty(n_eps, np.int64)
    with _quiet():
        _tab_episode_batch(
            tab.out_ptr,
            tab.out_succ,
            tab.out_cdf,
            tab.out_reward,
            tab.absorbing,
            tab.term_reward,
            tab.outcome_class,
            pol_ptr,
            pol_slots,
            s0,
            hcap,
            n_eps,
            np.uint64(master_seed),
            rewards,
            outcomes,
            steps,
        )
    return rewards, outcomes, steps


def tab_rollout_uniform(tab, s0, depth, n, safe_only, floor, state):
    with _quiet():
        return _tab_rollout_uniform(
            tab.act_ptr,
            tab.out_ptr,
            tab.out_succ,
            tab.out_cdf,
            tab.out_reward,
            tab.absorbing,
            tab.term_reward,
            tab.unsafe,
            s0,
            depth,
            n,
            safe_only,
            floor,
            state,
        )


def pac_rollout(neigh, food, pac, gpos, gdir, depth, n, safe_only, floor, state):
    with _quiet():
        return _pac_rollout(neigh, food, pac, gpos, gdir, depth, n, safe_only, floor, state)


def conv2d_3x3(x, w, b, relu):
    """'same'-padded stride-1 3x3 convolution over a (C, H, W) float32 tensor."""
    with _quiet():
        return _conv2d_impl(x, w, b, relu)


def dense_forward(x, w, b, act):
    """Dense layer y = W x + b with activation code 0=linear, 1=relu, 2=sigmoid."""
    with _quiet():
        return _dense_impl(x, w, b, act)
