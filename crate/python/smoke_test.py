"""Quick end-to-end check of the rbgr_py extension module."""

import math

import rbgr_py


def check_piecewise():
    dens = rbgr_py.PiecewiseDensity([("lower", 0.0, -0.5, 0.0, 0.3)], ("normal", 0.0, 1.0))
    draws = dens.sample(20000, seed=3)
    assert all(math.isfinite(v) for v in draws)
    total = sum(math.exp(dens.logpdf(-6.0 + 12.0 * i / 4000)) * 12.0 / 4000 for i in range(4000))
    assert abs(total - 1.0) < 1e-3, total
    assert abs(sum(dens.weights()) - 1.0) < 1e-9
    print("piecewise ok:", dens, "log_norm", round(dens.log_norm, 4))


def check_pipeline():
    sim = rbgr_py.simulate(n=80, p=5, q=2, sparsity=0.2, seed=7)
    fit = rbgr_py.fit(sim.y, sim.x, iters=300, burnin=100, thin=2, seed=11)
    assert (fit.p, fit.q, fit.num_draws) == (5, 2, 100)
    pip = fit.pip()
    assert all(0.0 <= v <= 1.0 for plane in pip for row in plane for v in row)
    trace = fit.trace(0)
    assert len(trace["t"]) == 100
    edges = fit.population_edges(c0=0.5)
    net = fit.individual_network(sim.x[0], c1=0.5)
    assert len(net["epp"]) == 5
    again = rbgr_py.fit(sim.y, sim.x, iters=300, burnin=100, thin=2, seed=11, threads=2)
    assert again.alpha_hat() == fit.alpha_hat()
    metrics = sim.evaluate(fit)
    print("pipeline ok:", fit, len(edges), "population edges, support", sim.support)
    print("  metrics:", {k: v for k, v in metrics.items() if v is not None})
    print("  geweke converged:", fit.geweke()["converged"])


def check_metrics():
    assert rbgr_py.roc_auc([0.9, 0.8, 0.2, 0.1], [True, True, False, False]) == 1.0
    assert rbgr_py.mcc([True, False, True, False], [True, False, True, False]) == 1.0
    assert rbgr_py.fdr_cutoff([0.99, 0.98, 0.4, 0.1], 0.05) > 0.4
    h = rbgr_py.h_score([math.sin(1.7 * i) for i in range(200)])
    assert 0.0 <= h <= 1.0
    try:
        rbgr_py.fit([[1.0, 2.0]], [[1.0]])
    except ValueError as e:
        print("metrics ok; bad input raises:", e)
    else:
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    check_piecewise()
    check_metrics()
    check_pipeline()
    print("smoke test passed")
