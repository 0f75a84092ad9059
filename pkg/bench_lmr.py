import time

import numpy as np

from silvar.link import lmr, _lmr_cd

# spec examples
f = lmr([1, 2, 3], [0.1, 0.5, 0.9])
print("feasible fixed point:", f.values)
f = lmr([0, 1], [1, 0])
print("[0.5,0.5]:", f.values)
f = lmr([0, 1], [0, 2])
print("[0.5,1.5]:", f.values)

# warm-up compile
_ = lmr(np.random.randn(100), np.random.randn(100))


def bench(k, noise=0.1, warm=None, label=""):
    rng = np.random.default_rng(7)
    x = rng.normal(0, 1.5, k)
    x_true = 0.9 * x + 0.2 * rng.normal(size=k)
    y = np.maximum(x_true, 0) + noise * rng.normal(size=k)
    t0 = time.perf_counter()
    link = lmr(x, y, init_values=warm(np.sort(x)) if warm else None)
    t1 = time.perf_counter()
    # measure sweeps by rerunning the kernel manually
    ux, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    w = counts.astype(float)
    ybar = np.bincount(inv, weights=y) / w
    dx = np.diff(ux)
    from silvar.link import _pav
    if warm is None:
        iso = _pav(ybar.copy(), w.copy())
        d = np.minimum(np.diff(iso), dx)
        g1 = float(iso[0])
    else:
        init = warm(ux)
        d = np.clip(np.diff(init), 0, dx)
        g1 = float(init[0])
    t2 = time.perf_counter()
    g1o, sweeps, kkt, conv = _lmr_cd(ybar, w, dx, g1, d, 1e-8, 10000)
    t3 = time.perf_counter()
    print(f"{label} k={k}: {t1-t0:.3f}s total, kernel {t3-t2:.3f}s, sweeps={sweeps}, kkt={kkt:.2e}, conv={conv}")
    return link


link = bench(32000, label="cold 32k")
# warm start: previous solver iteration's link (close to current)
link2 = bench(32000, warm=lambda ux: link.evaluate(ux), label="warm 32k")
bench(2000, label="cold 2k")
bench(200, label="cold 200")

# pathological smooth monotone data (Lipschitz binds everywhere)
rng = np.random.default_rng(1)
x = np.sort(rng.normal(0, 2, 32000))
y = 3 * x  # slope 3 >> 1, upper bound binds everywhere
t0 = time.perf_counter()
link = lmr(x, y)
print(f"steep linear 32k: {time.perf_counter()-t0:.3f}s")

# pure noise
y = rng.normal(size=32000)
t0 = time.perf_counter()
link = lmr(x, y)
print(f"pure noise 32k: {time.perf_counter()-t0:.3f}s")
