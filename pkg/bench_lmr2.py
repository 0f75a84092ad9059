import time
import numpy as np
from silvar.link import lmr, _lmr_dp, _lmr_cd, _pav

# spec examples
print("feasible:", lmr([1, 2, 3], [0.1, 0.5, 0.9]).values)
print("[0.5,0.5]:", lmr([0, 1], [1, 0]).values)
print("[0.5,1.5]:", lmr([0, 1], [0, 2]).values)

# cross-validate DP against long-run CD on small random instances
rng = np.random.default_rng(0)
worst = 0.0
for trial in range(400):
    k = rng.integers(1, 30)
    x = np.sort(rng.normal(0, 2, k))
    x = np.unique(x)
    k = x.size
    if k < 2:
        continue
    y = rng.normal(0, 2, k)
    w = rng.integers(1, 4, k).astype(float)
    dx = np.diff(x)
    fit_dp = _lmr_dp(y, w, dx)
    d0 = np.clip(np.diff(_pav(y.copy(), w.copy())), 0, dx)
    g1, sweeps, kkt, conv = _lmr_cd(y, w, dx, float(_pav(y.copy(), w.copy())[0]), d0, 1e-12, 200000)
    fit_cd = g1 + np.concatenate(([0.0], np.cumsum(d0)))
    err = np.max(np.abs(fit_dp - fit_cd))
    worst = max(worst, err)
    # feasibility of DP output
    dd = np.diff(fit_dp)
    assert np.all(dd >= -1e-12) and np.all(dd - dx <= 1e-12), (dd, dx)
print("max |DP - CD(1e-12)| over 400 small instances:", worst)

def bench(k, noise=0.1, label=""):
    rng = np.random.default_rng(7)
    x = rng.normal(0, 1.5, k)
    x_true = 0.9 * x + 0.2 * rng.normal(size=k)
    y = np.maximum(x_true, 0) + noise * rng.normal(size=k)
    t0 = time.perf_counter()
    link = lmr(x, y)
    t1 = time.perf_counter()
    print(f"{label} k={k}: lmr total {t1-t0:.4f}s")
    return x, y, link

bench(32000, label="clipped+noise")
x, y, link = bench(40000, label="clipped+noise")
rng = np.random.default_rng(1)
x = np.sort(rng.normal(0, 2, 32000))
t0 = time.perf_counter(); lmr(x, 3 * x); print(f"steep 32k: {time.perf_counter()-t0:.4f}s")
t0 = time.perf_counter(); lmr(x, rng.normal(size=32000)); print(f"noise 32k: {time.perf_counter()-t0:.4f}s")
t0 = time.perf_counter(); lmr(x, np.sin(x) + 0.05*rng.normal(size=32000)); print(f"sin 32k: {time.perf_counter()-t0:.4f}s")

# KKT certificate actually reached?
ux, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
w = counts.astype(float); ybar = np.bincount(inv, weights=rng.normal(size=32000))/w
dx = np.diff(ux)
fitted = _lmr_dp(ybar, w, dx)
d = np.clip(np.diff(fitted), 0, dx)
g1, sweeps, kkt, conv = _lmr_cd(ybar, w, dx, float(fitted[0]), d, 1e-8, 10000)
print(f"certificate on 32k noise: sweeps={sweeps} kkt={kkt:.2e} converged={conv}")
