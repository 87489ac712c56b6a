"""Reference lid-driven cavity solutions (streamfunction/vorticity, finite differences).

Independent of the Rust solver: explicit SSP-RK3 vorticity transport with
second-order central differences, a DST-based streamfunction solve and a
second-order wall-vorticity closure. Runs to steady state and prints the
probes used by the cavity acceptance check.

usage: python3 tools/cavity_oracle.py N RE [RE ...] [--wall thom|jensen]
"""
import argparse
import numpy as np
from scipy.fft import dstn, idstn


def poisson_dirichlet(rhs, h):
    # -lap(psi) = rhs on interior nodes, psi = 0 on the boundary
    n = rhs.shape[0] + 1
    k = np.arange(1, n)
    lam = (2 - 2 * np.cos(np.pi * k / n)) / h**2
    denom = lam[:, None] + lam[None, :]
    return idstn(dstn(rhs, type=1) / denom, type=1)


def wall_vorticity(psi, w, h, lid, scheme):
    if scheme == "thom":
        w[:, 0] = -2 * psi[:, 1] / h**2
        w[:, -1] = -2 * (psi[:, -2] + h * lid) / h**2
        w[0, :] = -2 * psi[1, :] / h**2
        w[-1, :] = -2 * psi[-2, :] / h**2
    else:
        w[:, 0] = -(8 * psi[:, 1] - psi[:, 2]) / (2 * h**2)
        w[:, -1] = -(8 * psi[:, -2] - psi[:, -3]) / (2 * h**2) - 3 * lid / h
        w[0, :] = -(8 * psi[1, :] - psi[2, :]) / (2 * h**2)
        w[-1, :] = -(8 * psi[-2, :] - psi[-3, :]) / (2 * h**2)
    w[0, 0] = w[-1, 0] = w[0, -1] = w[-1, -1] = 0.0


def rhs_of(w, psi, h, nu):
    # arrays indexed [i, j] = (x, y); interior update only
    u = (psi[1:-1, 2:] - psi[1:-1, :-2]) / (2 * h)
    v = -(psi[2:, 1:-1] - psi[:-2, 1:-1]) / (2 * h)
    wx = (w[2:, 1:-1] - w[:-2, 1:-1]) / (2 * h)
    wy = (w[1:-1, 2:] - w[1:-1, :-2]) / (2 * h)
    lap = (w[2:, 1:-1] + w[:-2, 1:-1] + w[1:-1, 2:] + w[1:-1, :-2] - 4 * w[1:-1, 1:-1]) / h**2
    return -u * wx - v * wy + nu * lap


def solve(n, re, scheme, tol=1e-7, max_time=400.0):
    h = 1.0 / n
    nu = 1.0 / re
    w = np.zeros((n + 1, n + 1))
    psi = np.zeros_like(w)
    dt = 0.9 * min(h / 1.0, 0.25 * h * h / nu)

    def closure(wf):
        p = np.zeros_like(wf)
        p[1:-1, 1:-1] = poisson_dirichlet(wf[1:-1, 1:-1], h)
        wall_vorticity(p, wf, h, 1.0, scheme)
        return p

    psi = closure(w)
    t = 0.0
    check = max(1, int(0.5 / dt))
    step = 0
    while t < max_time:
        w0 = w.copy()
        w1 = w0.copy()
        w1[1:-1, 1:-1] += dt * rhs_of(w0, psi, h, nu)
        p1 = closure(w1)
        w2 = w0.copy()
        w2[1:-1, 1:-1] = 0.75 * w0[1:-1, 1:-1] + 0.25 * (w1[1:-1, 1:-1] + dt * rhs_of(w1, p1, h, nu))
        p2 = closure(w2)
        w[1:-1, 1:-1] = w0[1:-1, 1:-1] / 3 + 2 / 3 * (w2[1:-1, 1:-1] + dt * rhs_of(w2, p2, h, nu))
        psi = closure(w)
        t += dt
        step += 1
        if step % check == 0:
            change = np.abs(w - w0).max() / dt / max(np.abs(w).max(), 1e-30)
            if change < tol:
                break
    return w, psi, t


def probes(w, psi, n):
    h = 1.0 / n
    mid = n // 2
    # u = dpsi/dy along x = 1/2, v = -dpsi/dx along y = 1/2 (node values)
    u = np.gradient(psi[mid, :], h, edge_order=2)
    v = -np.gradient(psi[:, mid], h, edge_order=2)
    u[-1] = 1.0
    u[0] = 0.0
    v[0] = v[-1] = 0.0
    return {
        "lid_mid_vorticity": -w[mid, -1],
        "u_min": u.min(),
        "v_max": v.max(),
        "v_min": v.min(),
    }


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("n", type=int)
    ap.add_argument("re", type=float, nargs="+")
    ap.add_argument("--wall", default="jensen", choices=["thom", "jensen"])
    a = ap.parse_args()
    for re in a.re:
        w, psi, t = solve(a.n, re, a.wall)
        p = probes(w, psi, a.n)
        print(f"n={a.n} re={re:g} wall={a.wall} t={t:.1f} " + " ".join(f"{k}={v:.5f}" for k, v in p.items()), flush=True)
