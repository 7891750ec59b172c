"""Smoke test for the qmlbench Python extension."""

import math
import tempfile
from pathlib import Path

import qmlbench


def check_circuit():
    c = qmlbench.Circuit.template("strongly_entangling", 2, n_layers=1, seed=0)
    params = [0.1 * (i + 1) for i in range(c.n_params)]
    probs = c.probabilities([], params)
    assert abs(sum(probs) - 1.0) < 1e-12
    obs = [(1.0, "ZI"), (0.5, "XX")]
    value, adj = c.gradient([], params, obs)
    _, shift = c.gradient([], params, obs, method="parameter_shift")
    assert abs(value - c.expectation([], params, obs)) < 1e-12
    assert max(abs(a - b) for a, b in zip(adj, shift)) < 1e-8
    h = 1e-6
    for k in range(c.n_params):
        up = list(params)
        dn = list(params)
        up[k] += h
        dn[k] -= h
        fd = (c.expectation([], up, obs) - c.expectation([], dn, obs)) / (2 * h)
        assert abs(fd - adj[k]) < 1e-6, (k, fd, adj[k])


def check_models():
    ds = qmlbench.linearly_separable(2, 60, seed=3)
    assert ds.n_features == 2 and len(ds) == 60
    svc = qmlbench.Model.fit("svc", ds.x_train, ds.y_train, {"C": 10.0, "gamma": 1.0})
    acc = svc.accuracy(ds.x_test, ds.y_test)
    assert acc > 0.8, acc
    iqp = qmlbench.Model.fit("iqp_kernel", ds.x_train, ds.y_train)
    g = iqp.gram(ds.x_test[:5])
    assert all(abs(g[i][i] - 1.0) < 1e-9 for i in range(5))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "iqp.json"
        iqp.save(path)
        back = qmlbench.Model.load(path)
        assert back.decision_function(ds.x_test) == iqp.decision_function(ds.x_test)
        stem = ds.write(tmp)
        again = qmlbench.Dataset.read(Path(tmp) / f"{stem}_train.csv")
        assert again.x_test == ds.x_test
    assert qmlbench.gram_difference(g, g) == 0.0
    assert "data_reuploading" in qmlbench.model_names()
    assert len(qmlbench.grid("svc", 2)) > 1


def check_bias():
    q, c = qmlbench.bias_sim(n_researchers=2000, n_candidates=20, seed=1)
    mean_q = sum(q) / len(q)
    mean_c = sum(c) / len(c)
    assert mean_q > mean_c, (mean_q, mean_c)
    assert not math.isnan(mean_q)


if __name__ == "__main__":
    check_circuit()
    check_models()
    check_bias()
    print("python smoke test passed")
