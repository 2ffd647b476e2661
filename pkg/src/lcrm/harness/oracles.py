"""Closed-form reference solutions for the benchmark scenarios."""

import numpy as np
from scipy.special import erfc, erfcx


def oracle_expanding_sphere(t, R0, v, gamma0):
    """Concentration on a sphere growing at constant radial speed: area dilution only."""
    R = R0 + v * np.asarray(t, dtype=float)
    if np.any(R <= 0):
        raise ValueError("sphere radius must stay positive")
    return gamma0 * (R0 / R) ** 2


def oracle_sphere_diffusion(theta, t, D_s, R):
    """Diffusion of ``(1 - cos theta)/2`` on a sphere (decay of the l=1 mode)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    return 0.5 * (1.0 - np.exp(-2.0 * D_s * np.asarray(t) / R ** 2) * np.cos(theta))


def oracle_bulk_adsorption(r, t, k_a, D, R, C_inf, sign=1.0):
    """Short-time bulk profile around a drop adsorbing at rate ``k_a C_s``.

    Written as published: the relative deviation is
    ``(k_a sqrt(pi D t)/D) / (1 + sqrt(pi D t)/R (1 + k_a R/D)) * (r/R) * erfc((r-R)/(2 sqrt(D t)))``.
    ``sign=-1`` gives depletion, which is the physical direction for
    adsorption out of the bulk (the published form adds it).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < R) or t <= 0:
        raise ValueError("need r >= R and t > 0")
    if k_a == 0:
        return np.full_like(r, C_inf)
    s = np.sqrt(np.pi * D * t)
    amp = (k_a * s / D) / (1.0 + s / R * (1.0 + k_a * R / D))
    rel = amp * (r / R) * erfc((r - R) / (2.0 * np.sqrt(D * t)))
    return C_inf * (1.0 + sign * rel)


def exact_bulk_adsorption(r, t, k_a, D, R, C_inf):
    """Exact linear solution: ``D dC/dr = k_a C`` at ``r = R`` and ``C -> C_inf`` far away.

    With ``w = r (C - C_inf) / C_inf`` and ``H = 1/R + k_a/D``,
    ``w = -(k_a R / (D H)) [erfc(x/q) - exp(H x + H^2 D t) erfc(x/q + H sqrt(D t))]``
    where ``x = r - R`` and ``q = 2 sqrt(D t)``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < R) or t <= 0:
        raise ValueError("need r >= R and t > 0")
    x = r - R
    q = 2.0 * np.sqrt(D * t)
    H = 1.0 / R + k_a / D
    a = x / q
    b = a + H * np.sqrt(D * t)
    # exp(Hx + H^2 D t) erfc(b) = exp(-a^2) erfcx(b), which never overflows
    w = -(k_a * R / (D * H)) * (erfc(a) - np.exp(-a * a) * erfcx(b))
    return C_inf * (1.0 + w / r)


def oracle_ygb(sigma_s, beta_s, R, L_z, mu_G, mu_L):
    """Migration speed of a drop in a linear tension gradient ``sigma_s beta_s / L_z``."""
    for name, v in (("sigma_s", sigma_s), ("R", R), ("L_z", L_z), ("mu_G", mu_G), ("mu_L", mu_L)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    if beta_s < 0:
        raise ValueError("beta_s must be non-negative")
    return 2.0 * sigma_s * beta_s * R / (L_z * (9.0 * mu_G + 6.0 * mu_L))


def l1_error(measured, oracle):
    """Mean absolute difference of two equal-length sample sets."""
    a = np.asarray(measured, dtype=float).ravel()
    b = np.asarray(oracle, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"sample sets differ in length ({a.size} vs {b.size})")
    if a.size == 0:
        raise ValueError("need at least one sample")
    return float(np.mean(np.abs(a - b)))


def linf_error(measured, oracle):
    a = np.asarray(measured, dtype=float).ravel()
    b = np.asarray(oracle, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"sample sets differ in length ({a.size} vs {b.size})")
    return float(np.max(np.abs(a - b)))


def convergence_orders(resolutions, errors):
    """Observed orders ``log(e_i/e_{i+1}) / log(n_{i+1}/n_i)`` between consecutive runs."""
    if len(resolutions) < 2:
        return []
    n = np.asarray(resolutions, dtype=float)
    e = np.asarray(errors, dtype=float)
    return [float(np.log(e[i] / e[i + 1]) / np.log(n[i + 1] / n[i])) for i in range(len(n) - 1)]
