"""Independent reference computations used by the tests."""
import numpy as np


def brute_crossings(vertices):
    """All proper segment intersections by direct 2x2 solves."""
    v = np.asarray(vertices, float)
    n = len(v)
    out = []
    for i in range(n):
        a0, a1 = v[i], v[(i + 1) % n]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            b0, b1 = v[j], v[(j + 1) % n]
            m = np.column_stack([a1 - a0, b0 - b1])
            det = np.linalg.det(m)
            if abs(det) < 1e-15:
                continue
            s, t = np.linalg.solve(m, b0 - a0)
            if 0 <= s < 1 and 0 <= t < 1:
                out.append(a0 + s * (a1 - a0))
    return out


def ray_winding(vertices, p):
    """Signed crossings of the horizontal ray from p to the right."""
    v = np.asarray(vertices, float) - np.asarray(p, float)
    w = 0
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        if (a[1] <= 0) != (b[1] <= 0):
            x = a[0] - a[1] * (b[0] - a[0]) / (b[1] - a[1])
            if x > 0:
                w += 1 if b[1] > a[1] else -1
    return w


def angle_winding(vertices, p):
    z = np.asarray(vertices, float) @ np.array([1, 1j]) - complex(*p)
    return int(round(np.sum(np.angle(np.roll(z, -1) / z)) / (2 * np.pi)))


def turning(vertices):
    v = np.asarray(vertices, float)
    d = np.roll(v, -1, axis=0) - v
    z = d[:, 0] + 1j * d[:, 1]
    return int(round(np.sum(np.angle(np.roll(z, -1) / z)) / (2 * np.pi)))
