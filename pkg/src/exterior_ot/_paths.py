"""Dense Dijkstra for the greatest solution of the slackness system.

Unknowns are ``u = -psi`` on free cells and ``v = phi`` on sources, with
constraints ``u >= 0``, ``u_y >= v_x - c_xy`` for every pair and
``v_x >= u_y + c_xy`` on plan arcs. The least solution is a longest-path
problem; reweighting by a known feasible solution ``(u0, v0)`` makes every
reduced weight nonnegative, so a Dijkstra pass computes it.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def reduced_dijkstra(u0, v0, ykeys, xkeys, table, arc_ptr, arc_x, arc_c):
    """Shortest reduced distances from the super source; returns ``(dist_y, dist_x, ok)``.

    ``ok`` is False if a reduced weight came out negative, meaning ``(u0, v0)``
    was not feasible.
    """
    ny = u0.size
    nx = v0.size
    inf = np.inf
    dy = u0.copy()
    dx = np.full(nx, inf)
    done_y = np.zeros(ny, np.bool_)
    done_x = np.zeros(nx, np.bool_)
    for _ in range(ny + nx):
        best = inf
        kind = -1
        idx = -1
        for y in range(ny):
            if not done_y[y] and dy[y] < best:
                best = dy[y]
                kind = 0
                idx = y
        for x in range(nx):
            if not done_x[x] and dx[x] < best:
                best = dx[x]
                kind = 1
                idx = x
        if kind < 0:
            break
        if kind == 0:
            done_y[idx] = True
            for a in range(arc_ptr[idx], arc_ptr[idx + 1]):
                x = arc_x[a]
                w = v0[x] - u0[idx] - arc_c[a]
                if w < 0:
                    return dy, dx, False
                if best + w < dx[x]:
                    dx[x] = best + w
        else:
            done_x[idx] = True
            kx = xkeys[idx]
            for y in range(ny):
                if done_y[y]:
                    continue
                k = table[ykeys[y] - kx]
                if k == inf:
                    continue
                w = u0[y] - v0[idx] + k
                if w < 0:
                    return dy, dx, False
                if best + w < dy[y]:
                    dy[y] = best + w
    return dy, dx, True
