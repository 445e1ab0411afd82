"""Brute-force references and the finite-difference gradient checker.

Everything in this module is deliberately dumb: nested loops and direct
per-element formula transcriptions that can be audited by eye. The
library must agree with these, never the other way round. None of it
imports library internals; only public contracts.
"""
import numpy as np

import lfsr.numcore as nc


# ----------------------------------------------------------- convolution

def conv2d_loops(x, w, b=None, stride=1, pad=0):
    """Cross-correlation of [B,C,H,W] with [Co,Ci,k,k], zero padding."""
    bsz, c, h, wd = x.shape
    co, ci, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    out = np.zeros((bsz, co, ho, wo), dtype=np.float64)
    for bb in range(bsz):
        for o in range(co):
            for y in range(ho):
                for xx in range(wo):
                    s = 0.0
                    for i in range(ci):
                        for ky in range(k):
                            for kx in range(k):
                                s += w[o, i, ky, kx] * xp[bb, i, y * stride + ky, xx * stride + kx]
                    out[bb, o, y, xx] = s + (b[o] if b is not None else 0.0)
    return out


def conv3d_loops(x, w, b=None, pad=(0, 0, 0)):
    """Stride-1 cross-correlation of [C,D,H,W] with [Co,Ci,kd,kh,kw]."""
    c, d, h, wd = x.shape
    co, ci, kd, kh, kw = w.shape
    pd, ph, pw = pad
    xp = np.pad(x, ((0, 0), (pd, pd), (ph, ph), (pw, pw)))
    do, ho, wo = d + 2 * pd - kd + 1, h + 2 * ph - kh + 1, wd + 2 * pw - kw + 1
    out = np.zeros((co, do, ho, wo), dtype=np.float64)
    for o in range(co):
        for z in range(do):
            for y in range(ho):
                for xx in range(wo):
                    s = 0.0
                    for i in range(ci):
                        for dz in range(kd):
                            for dy in range(kh):
                                for dx in range(kw):
                                    s += w[o, i, dz, dy, dx] * xp[i, z + dz, y + dy, xx + dx]
                    out[o, z, y, xx] = s + (b[o] if b is not None else 0.0)
    return out


# ------------------------------------------------------------ resampling

def keys_weight(t):
    """Keys cubic kernel, a = -0.5."""
    t = abs(float(t))
    if t < 1.0:
        return 1.5 * t**3 - 2.5 * t**2 + 1.0
    if t < 2.0:
        return -0.5 * t**3 + 2.5 * t**2 - 4.0 * t + 2.0
    return 0.0


def bicubic_1d_loops(vec, scale, offset=0.0):
    """Resample one axis: half-pixel centers, 4 Keys taps, clamped to the
    edges, weights renormalized to sum 1."""
    n = len(vec)
    n_out = int(np.floor(n * scale + 0.5))
    out = np.zeros(n_out, dtype=np.float64)
    for i in range(n_out):
        src = (i + 0.5) / scale - 0.5 + offset
        base = int(np.floor(src))
        taps, ws = [], []
        for off in (-1, 0, 1, 2):
            taps.append(min(max(base + off, 0), n - 1))
            ws.append(keys_weight(src - (base + off)))
        ws = np.array(ws) / np.sum(ws)
        out[i] = sum(wv * vec[t] for wv, t in zip(ws, taps))
    return out


def bicubic_resize_loops(img, scale):
    """[C,H,W] resized by scale on both spatial axes, rows then columns
    (separable, so the order is irrelevant)."""
    c, h, w = img.shape
    rows = np.stack([
        np.stack([bicubic_1d_loops(img[ch, y, :], scale) for y in range(h)])
        for ch in range(c)
    ])
    wo = rows.shape[2]
    out = np.stack([
        np.stack([bicubic_1d_loops(rows[ch, :, x], scale) for x in range(wo)], axis=1)
        for ch in range(c)
    ])
    return out


# ----------------------------------------------------------- patch algebra

def unfold_loops(x, k, stride, pad):
    """Patches of [C,H,W] as rows [N, C*k*k] in row-major scan order,
    feature order (channel, ky, kx), zero padding."""
    c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    rows = np.zeros((ho * wo, c * k * k), dtype=np.float64)
    for y in range(ho):
        for xx in range(wo):
            f = 0
            for ch in range(c):
                for ky in range(k):
                    for kx in range(k):
                        rows[y * wo + xx, f] = xp[ch, y * stride + ky, xx * stride + kx]
                        f += 1
    return rows


def fold_loops(rows, k, stride, pad, h, w):
    """Scatter rows back onto a [C,h,w] canvas, averaging overlaps."""
    n, d = rows.shape
    c = d // (k * k)
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    acc = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    cnt = np.zeros((h + 2 * pad, w + 2 * pad), dtype=np.float64)
    for y in range(ho):
        for xx in range(wo):
            f = 0
            for ch in range(c):
                for ky in range(k):
                    for kx in range(k):
                        acc[ch, y * stride + ky, xx * stride + kx] += rows[y * wo + xx, f]
                        f += 1
            cnt[y * stride : y * stride + k, xx * stride : xx * stride + k] += 1.0
    cnt = np.maximum(cnt, 1.0)
    out = acc / cnt
    return out[:, pad : pad + h, pad : pad + w]


# ------------------------------------------------------------- attention

def relevance_loops(q_feat, k_feat, eps=1e-12):
    """Cosine similarity of every 3x3 (stride 1, pad 1) patch pair."""
    q_rows = unfold_loops(q_feat, 3, 1, 1)
    k_rows = unfold_loops(k_feat, 3, 1, 1)
    nq = q_rows.shape[0]
    nk = k_rows.shape[0]
    rel = np.zeros((nq, nk), dtype=np.float64)
    for i in range(nq):
        qi = q_rows[i] / max(np.linalg.norm(q_rows[i]), eps)
        for j in range(nk):
            kj = k_rows[j] / max(np.linalg.norm(k_rows[j]), eps)
            rel[i, j] = float(qi @ kj)
    return rel


# --------------------------------------------------------------- metrics

def epi_loss_loops(pred, gt):
    """Average over every EPI of the mean absolute difference between the
    forward-difference gradients of pred and gt, both EPI axes pooled.

    Horizontal EPIs fix (v, y) and vary (u, x); vertical EPIs fix (u, x)
    and vary (v, y).
    """
    u, v, h, w, _ = pred.shape
    means = []
    for vv in range(v):
        for y in range(h):
            p, g = pred[:, vv, y, :, :], gt[:, vv, y, :, :]
            vals = np.concatenate([
                np.abs(np.diff(p, axis=0) - np.diff(g, axis=0)).ravel(),
                np.abs(np.diff(p, axis=1) - np.diff(g, axis=1)).ravel(),
            ])
            means.append(vals.mean())
    for uu in range(u):
        for x in range(w):
            p, g = pred[uu, :, :, x, :], gt[uu, :, :, x, :]
            vals = np.concatenate([
                np.abs(np.diff(p, axis=0) - np.diff(g, axis=0)).ravel(),
                np.abs(np.diff(p, axis=1) - np.diff(g, axis=1)).ravel(),
            ])
            means.append(vals.mean())
    return float(np.mean(means))


def psnr_loops(a, b, peak=1.0):
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))
    if mse == 0.0:
        return 100.0
    return min(10.0 * np.log10(peak * peak / mse), 100.0)


# ---------------------------------------------------- gradient checking

def fd_gradcheck(make_loss, params, h=1e-5, samples=None, seed=0):
    """Worst relative error between analytic gradients and central
    differences.

    make_loss must rebuild the whole forward pass on every call so a
    perturbed parameter is actually felt. samples caps how many entries
    are probed per tensor (all entries when None); the probe locations
    are drawn from a fixed-seed generator so failures reproduce.
    """
    for p in params:
        p.grad = None
    with nc.DiffRecord() as rec:
        loss = make_loss()
        nc.backward(loss, rec)
    grads = []
    for p in params:
        assert p.grad is not None, "parameter missing from the graph"
        grads.append(p.grad.copy())
        p.grad = None
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, g in zip(params, grads):
        size = p.data.size
        if samples is None or samples >= size:
            sel = np.arange(size)
        else:
            sel = rng.choice(size, size=samples, replace=False)
        for flat in sel:
            idx = np.unravel_index(int(flat), p.data.shape)
            keep = p.data[idx]
            p.data[idx] = keep + h
            lp = make_loss().item()
            p.data[idx] = keep - h
            lm = make_loss().item()
            p.data[idx] = keep
            fd = (lp - lm) / (2.0 * h)
            rel = abs(fd - g[idx]) / max(1.0, abs(fd), abs(g[idx]))
            worst = max(worst, rel)
    return worst


def projection_loss(out, proj):
    """Fixed random projection of a tensor to a scalar; a weighted sum
    exposes sign errors that a plain mean would cancel."""
    return nc.sum_(nc.mul(out, proj))
