"""Fit a Drude + 2-Lorentz permittivity to the tabulated silver optical constants.

Reads ag_johnson_christy.csv (wavelength_nm,n,k), fits over 295-1100 nm with
relative complex residuals and writes ag_drude_lorentz_fit.csv, the golden
file the Rust tests compare against. Time convention exp(+i w t): Im(eps) <= 0.

    python3 fit_ag_drude_lorentz.py
"""
import numpy as np
from scipy.optimize import least_squares

HBAR = 6.582119569e-16  # eV s
C0 = 2.99792458e8

data = np.loadtxt("ag_johnson_christy.csv", delimiter=",", skiprows=1)
lam = data[:, 0]
eps_tab = np.conj((data[:, 1] + 1j * data[:, 2]) ** 2)
keep = (lam >= 295) & (lam <= 1100)
lam, eps_tab = lam[keep], eps_tab[keep]
w = 2 * np.pi * C0 / (lam * 1e-9)
N_LORENTZ = 2


def model(p, w):
    einf, wp, gd = p[:3]
    e = einf - wp**2 / (w**2 - 1j * gd * w)
    for i in range(N_LORENTZ):
        s, w0, g = p[3 + 3 * i : 6 + 3 * i]
        e = e + s * w0**2 / (w0**2 - w**2 + 1j * g * w)
    return e


def residual(p):
    r = (model(p, w) - eps_tab) / abs(eps_tab)
    return np.concatenate([r.real, r.imag])


rng = np.random.default_rng(0)
best = None
for _ in range(300):
    p0 = [rng.uniform(1, 5), 9.0 / HBAR * rng.uniform(0.9, 1.1), 0.02 / HBAR * rng.uniform(0.5, 3)]
    for _ in range(N_LORENTZ):
        p0 += [rng.uniform(0.1, 3), rng.uniform(3.8, 6) / HBAR, rng.uniform(0.1, 2) / HBAR]
    lb = [1.0, 0, 0] + [0, 0, 0.05 / HBAR] * N_LORENTZ
    try:
        r = least_squares(residual, p0, bounds=(lb, np.inf), x_scale=np.abs(p0), max_nfev=4000)
    except Exception:
        continue
    if best is None or r.cost < best.cost:
        best = r

p = best.x
rel = abs(model(p, w) - eps_tab) / abs(eps_tab)
print("rms relative residual", np.sqrt((rel**2).mean()), "max", rel.max())
print("parameters (rad/s):", repr(p))

grid = np.arange(300.0, 1000.0 + 1e-9, 5.0)
eg = model(p, 2 * np.pi * C0 / (grid * 1e-9))
with open("ag_drude_lorentz_fit.csv", "w") as f:
    f.write("wavelength_nm,eps_re,eps_im\n")
    for L, e in zip(grid, eg):
        f.write(f"{L:.1f},{e.real:.10e},{e.imag:.10e}\n")
