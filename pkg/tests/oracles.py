"""Independent reference computations used as test oracles.

Nothing here imports the package's numerical code; each function is a
direct, slow transcription of a definition.
"""

import math

import numpy as np


# -- Haar ------------------------------------------------------------------


def haar_phi(u):
    return 1.0 if 0.0 <= u < 1.0 else 0.0


def haar_psi(u):
    if 0.0 <= u < 0.5:
        return 1.0
    if 0.5 <= u < 1.0:
        return -1.0
    return 0.0


def haar_atom(j, orientation, k1, k2, x, y):
    """Tensor-product atom with the closed-edge rule: coordinate 1.0 joins the last tile."""
    s = 2 ** j
    ux, uy = s * x - k1, s * y - k2
    # closed right/top edge belongs to the last tile
    if x == 1.0 and k1 == s - 1:
        ux = 1.0 - 1e-12
    if y == 1.0 and k2 == s - 1:
        uy = 1.0 - 1e-12
    fx = haar_psi if orientation in ("H", "D") else haar_phi
    fy = haar_psi if orientation in ("V", "D") else haar_phi
    return s * fx(ux) * fy(uy)


def haar_atom_list(J, j0=0):
    atoms = [(j0, "SCALING", a, b) for a in range(2 ** j0) for b in range(2 ** j0)]
    for j in range(j0, J):
        for o in ("H", "V", "D"):
            atoms += [(j, o, a, b) for a in range(2 ** j) for b in range(2 ** j)]
    return atoms


def midpoint_gram(J, level):
    """Gram matrix of the basis by midpoint quadrature, evaluated atom by atom."""
    atoms = haar_atom_list(J)
    n = 2 ** level
    c = (np.arange(n) + 0.5) / n
    vals = np.array([[haar_atom(*a, x, y) for x in c for y in c] for a in atoms])
    return vals @ vals.T / n ** 2


# -- optimisation ----------------------------------------------------------


def proximal_gradient_lasso(X, y, omega, mu_hat, lam, iters=200000, tol=1e-13):
    """FISTA on -(1/mu_hat) * BT loglik + lam * ||w||_1, unpenalized intercept.

    ``X`` is the standardized design without the intercept column.
    """
    M, K = X.shape
    A = np.column_stack([np.ones(M), X])
    beta = np.zeros(K + 1)
    beta[0] = math.log(y.sum() / omega.sum())
    z = beta.copy()
    t = 1.0

    def f(b):
        eta = A @ b
        return -(y @ eta - omega @ np.exp(eta)) / mu_hat

    def grad(b):
        return -A.T @ (y - omega * np.exp(A @ b)) / mu_hat

    step = 1.0
    for _ in range(iters):
        g = grad(z)
        fz = f(z)
        while True:
            cand = z - step * g
            cand[1:] = np.sign(cand[1:]) * np.maximum(np.abs(cand[1:]) - step * lam, 0.0)
            d = cand - z
            if f(cand) <= fz + g @ d + d @ d / (2 * step) + 1e-15:
                break
            step *= 0.5
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        z = cand + (t - 1) / t_new * (cand - beta)
        if np.max(np.abs(cand - beta)) < tol:
            beta = cand
            break
        beta, t = cand, t_new
    return beta


def scad_exact(theta, lam, tau):
    t = abs(theta)
    if t <= lam:
        return lam * t
    if t <= tau * lam:
        return (2 * tau * lam * t - t * t - lam * lam) / (2 * (tau - 1))
    return (tau + 1) * lam * lam / 2


def scad_grid_argmin(u, a, lam, tau, lo=None, hi=None, n=400001, refine=True):
    """Brute-force minimizer of a/2 (w - u)^2 + SCAD(w) on a fine grid, refined once."""
    lo = -abs(u) - 1.0 if lo is None else lo
    hi = abs(u) + 1.0 if hi is None else hi
    grid = np.linspace(lo, hi, n)
    t = np.abs(grid)
    pen = np.where(t <= lam, lam * t,
                   np.where(t <= tau * lam, (2 * tau * lam * t - t * t - lam * lam) / (2 * (tau - 1)),
                            (tau + 1) * lam * lam / 2))
    obj = 0.5 * a * (grid - u) ** 2 + pen
    i = int(np.argmin(obj))
    h = grid[1] - grid[0]
    if refine:
        return scad_grid_argmin(u, a, lam, tau, grid[i] - 2 * h, grid[i] + 2 * h, 4001, refine=False)
    return grid[i]


# -- metrics ---------------------------------------------------------------


def rmspe_direct(beta_hat_fns, beta_fns, G):
    total, count = 0.0, 0
    for gx in range(G):
        for gy in range(G):
            x, y = (gx + 0.5) / G, (gy + 0.5) / G
            for bh, b in zip(beta_hat_fns, beta_fns):
                total += (bh(x, y) - b(x, y)) ** 2
                count += 1
    return math.sqrt(total / count)
