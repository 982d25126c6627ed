import json
import math
import pathlib

import pytest

import faasprov

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"
DESK = DATA / "desk"


def load(name):
    return json.loads((DESK / name).read_text())


def graph(labels, edges):
    return {
        "vertices": [{"id": f"v{i}", "label": l} for i, l in enumerate(labels)],
        "edges": [[f"v{a}", f"v{b}"] for a, b in edges],
    }


def test_exec_time_and_cost():
    f = {"id": "f", "base_exec_time": 0.1, "cpu_scaling_exponent": 1.0}
    assert faasprov.exec_time(f, {"mem_mb": 512, "cpus": 2}) == pytest.approx(0.05)
    cfg = {"replicas": 30, "mem_mb": 2048, "cpus": 2}
    assert faasprov.monthly_cost(cfg, 0.000017) == pytest.approx(2643.84)


def test_softmax():
    p = faasprov.softmax([1000.0, 1000.0, -1000.0])
    assert sum(p) == pytest.approx(1.0, abs=1e-12)
    assert p[0] == pytest.approx(0.5)


def test_graph_edit_distance():
    path = graph(["A", "B", "C"], [(0, 1), (1, 2)])
    tri = graph(["A", "B", "C"], [(0, 1), (1, 2), (2, 0)])
    assert faasprov.approx_ged(path, path) == 0
    assert faasprov.exact_ged(path, tri) == 1
    assert faasprov.approx_ged(path, tri) == faasprov.approx_ged(tri, path)
    big = graph(list("ABCDEFG"), [])
    with pytest.raises(faasprov.FaasprovError) as err:
        faasprov.exact_ged(big, path)
    assert err.value.code == "TooLarge"


def test_simulate_one_request():
    pipeline = {"id": "p", "functions": ["f"], "deadline_s": 5, "target_rate": 1}
    f = {"id": "f", "base_exec_time": 1.0, "init_time": 0.5}
    cluster = {"nodes": [{"cpus": 4, "mem_mb": 8192}]}
    out = faasprov.simulate(pipeline, [f], {"f": {"replicas": 1, "mem_mb": 512, "cpus": 1}}, cluster,
                            {"rate": 1, "duration_s": 1, "arrival_kind": "uniform"})
    assert out["requests"] == 1
    assert out["pct_values"] == [pytest.approx(1.5)]
    assert out["meets_slo"]


def test_train_predict_select():
    samples = []
    for mem, cpus in [(256, 0.5), (512, 1), (1024, 1.5), (2048, 2)]:
        for rate in range(5, 101, 5):
            samples.append((mem, cpus, float(rate), 5 if rate <= 50 else 10))
    result = faasprov.train(samples, hidden=[8], epochs=150, seed=1)
    assert len(result["history"]) == 150
    assert result["train_size"] + result["held_out_size"] == len(samples)
    model = result["model"]
    low = faasprov.predict(model, 512, 1, 10)
    assert low["replicas"] == 5
    assert math.isclose(sum(low["probabilities"]), 1.0, abs_tol=1e-9)

    suite = load("suite.json")
    report = faasprov.select_configuration(suite, "W3", {"kmeans": model}, load("catalog.json"),
                                           load("cluster.json"), rate=5, base_dir=str(DESK))
    assert report["functions"][0]["configuration"]["replicas"] in (5, 10)


def test_errors_surface_as_exceptions():
    with pytest.raises(faasprov.FaasprovError) as err:
        faasprov.train([(512, 1, 10.0, 5)] * 4, epochs=1)
    assert err.value.code == "DegenerateDataset"
    with pytest.raises(faasprov.FaasprovError):
        faasprov.run_experiment(str(DATA / "missing.json"))
