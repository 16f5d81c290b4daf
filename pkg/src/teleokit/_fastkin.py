"""JIT-compiled forward-kinematics walk (numba).

Importing this module fails cleanly when numba is unavailable; the
caller falls back to the numpy walk with identical arithmetic.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def point_jacs(jchild, jtype, jaxis, affects, link_ids, pts, tree_pos, tree_rot, out):
    """Positional point Jacobians (m, 3, n); revolute columns are axis x r."""
    n = out.shape[2]
    m = pts.shape[0]
    for j in range(n):
        child = jchild[j]
        R = tree_rot[child]
        ax = jaxis[j]
        wx = R[0, 0] * ax[0] + R[0, 1] * ax[1] + R[0, 2] * ax[2]
        wy = R[1, 0] * ax[0] + R[1, 1] * ax[1] + R[1, 2] * ax[2]
        wz = R[2, 0] * ax[0] + R[2, 1] * ax[1] + R[2, 2] * ax[2]
        px = tree_pos[child, 0]
        py = tree_pos[child, 1]
        pz = tree_pos[child, 2]
        revolute = jtype[j] == 0
        for s in range(m):
            if not affects[j, link_ids[s]]:
                continue
            if revolute:
                rx = pts[s, 0] - px
                ry = pts[s, 1] - py
                rz = pts[s, 2] - pz
                out[s, 0, j] = wy * rz - wz * ry
                out[s, 1, j] = wz * rx - wx * rz
                out[s, 2, j] = wx * ry - wy * rx
            else:
                out[s, 0, j] = wx
                out[s, 1, j] = wy
                out[s, 2, j] = wz


@njit(cache=True)
def pair_cost_grad(centers, radii, pairs_i, pairs_j, floor, weights):
    """Summed floored surface distance; fills per-sphere gradient weights."""
    total = 0.0
    for p in range(pairs_i.shape[0]):
        a = pairs_i[p]
        b = pairs_j[p]
        dx = centers[a, 0] - centers[b, 0]
        dy = centers[a, 1] - centers[b, 1]
        dz = centers[a, 2] - centers[b, 2]
        d = np.sqrt(dx * dx + dy * dy + dz * dz)
        gap = d - radii[a] - radii[b]
        if gap <= floor:
            total += floor
            continue
        total += gap
        inv = 1.0 / d
        ux = dx * inv
        uy = dy * inv
        uz = dz * inv
        weights[a, 0] += ux
        weights[a, 1] += uy
        weights[a, 2] += uz
        weights[b, 0] -= ux
        weights[b, 1] -= uy
        weights[b, 2] -= uz
    return total


@njit(cache=True)
def fk_walk(topo, lpj, jparent, jtype, jaxis, jor_pos, jor_rot, jskew, jskew2, full_q, pos, rot, root):
    rot[root, 0, 0] = 1.0
    rot[root, 1, 1] = 1.0
    rot[root, 2, 2] = 1.0
    n = full_q.shape[0]
    for idx in range(1, topo.shape[0]):
        l = topo[idx]
        j = lpj[l]
        p = jparent[j]
        Rp = rot[p]
        Rpre = Rp @ jor_rot[j]
        ppre = pos[p] + Rp @ jor_pos[j]
        t = jtype[j]
        if t == 0 and j < n:  # revolute
            q = full_q[j]
            s = np.sin(q)
            c = 1.0 - np.cos(q)
            Rm = np.eye(3) + s * jskew[j] + c * jskew2[j]
            rot[l] = Rpre @ Rm
            pos[l] = ppre
        elif t == 1 and j < n:  # prismatic
            rot[l] = Rpre
            pos[l] = ppre + full_q[j] * (Rpre @ jaxis[j])
        else:  # fixed
            rot[l] = Rpre
            pos[l] = ppre
