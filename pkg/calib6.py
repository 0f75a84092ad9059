import time
import numpy as np
from silvar import *
from silvar.evaluation import synthetic_link

t_all = time.time()
spec = SyntheticSpec(m=20, p=20, n=2000, sparsity=0.1, rank=2, link_kind="clipped_linear", noise_std=0.1, seed=20260809)
data, A0, L0, link0 = synthesize(spec)
split = SplitSpec(1600, 200, 200, shuffle_seed=None)
solver = SolverConfig(max_iters=200, rel_tol=1e-5)

t0 = time.time()
reg = RegularizerConfig(0.03, 0.03)
model, report = fit(data.subset(np.arange(1600)), reg, solver)
print(f"single fit: {time.time()-t0:.1f}s, iters={report.iterations}, converged={report.converged}")

# small grid around plausible optimum
grid = GridSpec((-8, -6, -4, -2, 0))
t0 = time.time()
res = grid_search(data, split, grid, RegularizerConfig(0.1, 0.1), solver, workers=4)
print(f"grid 25 cells (4 workers): {time.time()-t0:.1f}s")
print("best lambdas:", res.best_lambda_sparse, res.best_lambda_lowrank, "test rmse:", res.test_rmse)
for c in res.table:
    print(f"  l1={c.lambda_sparse:8.4f} l2={c.lambda_lowrank:8.4f} val={c.val_rmse:.4f} iters={c.iterations} conv={c.converged}")

prec, rec, f1 = support_metrics(res.model.A, A0, 0.1)
print(f"support vs A0 at thr 0.1: precision={prec:.3f} recall={rec:.3f} f1={f1:.3f}")
prec, rec, f1 = support_metrics(res.model.A, A0, 0.05)
print(f"at thr 0.05: p={prec:.3f} r={rec:.3f} f1={f1:.3f}")

# link recovery: compare learned link to g0 over 5-95 pct of training abscissae
train = data.subset(np.arange(1600))
Xs = res.model.standardization.apply(train.X)
theta = (res.model.A + res.model.L) @ Xs
lo, hi = np.percentile(theta.ravel(), [5, 95])
grid_t = np.linspace(lo, hi, 512)
err = rmse(res.model.link.evaluate(grid_t), link0.evaluate(grid_t))
print(f"link rmse over [{lo:.2f},{hi:.2f}]: {err:.4f}")

# identity GLM baseline grid
t0 = time.time()
res_glm = grid_search(data, split, grid, RegularizerConfig(0.1, 0.1), solver, workers=4, fixed_link=FixedLink("identity"))
print(f"glm grid: {time.time()-t0:.1f}s  best=({res_glm.best_lambda_sparse}, {res_glm.best_lambda_lowrank}) test rmse: {res_glm.test_rmse}")
print(f"SILVar {res.test_rmse:.4f} < GLM {res_glm.test_rmse:.4f}: {res.test_rmse < res_glm.test_rmse}")
print(f"TOTAL {time.time()-t_all:.1f}s")
