import numpy as np
import pytest

from spic.aggregators import build_da, build_dad, build_identity
from spic.learn import (
    Adam,
    ModelParams,
    TrainConfig,
    forward,
    grad_check,
    init_params,
    load_params,
    loss_and_grad,
    save_params,
    train,
)
from spic.propagation import appnp_propagate

import helpers


def test_linear_identity_aggregator_identity_head():
    g = helpers.random_graph(8, 0.3, seed=0, d=3, c=3)
    params = ModelParams(variant="LINEAR", k=4, beta=0.0, omega_f=np.eye(3))
    logits = forward("LINEAR", build_identity(g), g.features, params)
    np.testing.assert_array_equal(logits, g.features)


def test_relu_noop_makes_all_depth_variants_linear():
    g = helpers.random_graph(12, 0.3, seed=1, d=4, c=3)
    x = np.abs(g.features)
    agg = build_da(g)
    rng = np.random.default_rng(2)
    wf = rng.standard_normal((4, 3))
    k = 3
    lin = forward("LINEAR", agg, x, ModelParams(variant="LINEAR", k=k, beta=0.0, omega_f=wf))
    eye = np.eye(4)
    relu1 = forward("RELU1", agg, x, ModelParams(variant="RELU1", k=k, beta=0.0,
                                                 omega_p=eye, omega_f=wf))
    general = forward("GENERAL", agg, x, ModelParams(variant="GENERAL", k=k, beta=0.0,
                                                     omega_p=eye, omega_r=eye, omega_f=wf))
    assert np.abs(relu1 - lin).max() <= 1e-12
    assert np.abs(general - lin).max() <= 1e-12


def test_w_matches_general_when_relu_inactive_free():
    g = helpers.random_graph(10, 0.3, seed=3, d=4, c=2)
    x = np.abs(g.features)
    agg = build_da(g)
    rng = np.random.default_rng(4)
    wp = np.abs(rng.standard_normal((4, 5)))
    wr = np.abs(rng.standard_normal((5, 5)))
    wf = rng.standard_normal((5, 2))
    w = forward("W", agg, x, ModelParams(variant="W", k=1, beta=0.0,
                                         omega_p=wp, omega_r=wr, omega_f=wf))
    gen = forward("GENERAL", agg, x, ModelParams(variant="GENERAL", k=1, beta=0.0,
                                                 omega_p=wp, omega_r=wr, omega_f=wf))
    np.testing.assert_allclose(w, gen, atol=1e-12)


def test_zero_head_gives_log_class_count_loss():
    g = helpers.random_graph(9, 0.3, seed=5, d=3, c=4)
    labels = np.random.default_rng(5).integers(0, 4, size=9)
    params = ModelParams(variant="LINEAR", k=2, beta=0.0, omega_f=np.zeros((3, 4)))
    mask = np.ones(9, dtype=bool)
    loss, _ = loss_and_grad("LINEAR", build_dad(g), g.features, labels, mask, params)
    assert abs(loss - np.log(4.0)) <= 1e-12


def test_linear_head_gradient_closed_form():
    g = helpers.random_graph(14, 0.25, seed=6, d=4, c=3)
    labels = np.random.default_rng(6).integers(0, 3, size=14)
    mask = np.zeros(14, dtype=bool)
    mask[:9] = True
    agg = build_dad(g)
    wf = np.random.default_rng(7).standard_normal((4, 3))
    params = ModelParams(variant="LINEAR", k=2, beta=0.0, omega_f=wf)
    _, grads = loss_and_grad("LINEAR", agg, g.features, labels, mask, params)

    emb = helpers.dense_power_apply(agg, g.features, 2)
    z = emb[mask] @ wf
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    y = np.eye(3)[labels[mask]]
    want = emb[mask].T @ (p - y) / mask.sum()
    np.testing.assert_allclose(grads["omega_f"], want, atol=1e-12)


def test_loss_requires_train_nodes():
    g = helpers.random_graph(6, 0.4, seed=8, d=3, c=2)
    params = init_params("LINEAR", 3, 2, k=2, seed=0)
    with pytest.raises(ValueError, match="empty train mask"):
        loss_and_grad("LINEAR", build_dad(g), g.features, np.zeros(6, dtype=np.int64),
                      np.zeros(6, dtype=bool), params)


def test_grad_check_linear():
    assert grad_check("LINEAR", seed=0) <= 1e-6


def test_grad_check_relu1():
    assert grad_check("RELU1", seed=1) <= 1e-4


def test_grad_check_general_k3():
    assert grad_check("GENERAL", dims=(16, 6, 3, 3), seed=2) <= 1e-4


def test_grad_check_w():
    assert grad_check("W", seed=3) <= 1e-4


def test_grad_check_poly_k3():
    assert grad_check("POLY", dims=(16, 6, 3, 3), seed=4) <= 1e-5


def test_grad_check_multilabel():
    assert grad_check("GENERAL", seed=5, multilabel=True) <= 1e-4
    assert grad_check("LINEAR", seed=6, multilabel=True) <= 1e-6


def test_grad_check_rejects_large_instances():
    with pytest.raises(ValueError, match="n"):
        grad_check("LINEAR", dims=(64, 4, 2, 2))


def test_scale_absorption():
    g = helpers.random_graph(10, 0.3, seed=9, d=4, c=3)
    agg = build_dad(g)
    wf = np.random.default_rng(9).standard_normal((4, 3))
    base = forward("LINEAR", agg, g.features, ModelParams(variant="LINEAR", k=2, beta=0.0, omega_f=wf))
    s = 7.5
    x_scaled = g.features.copy()
    x_scaled[:, 1] *= s
    wf_scaled = wf.copy()
    wf_scaled[1] /= s
    scaled = forward("LINEAR", agg, x_scaled,
                     ModelParams(variant="LINEAR", k=2, beta=0.0, omega_f=wf_scaled))
    assert np.abs(scaled - base).max() <= 1e-12 * max(1.0, np.abs(base).max())


def test_poly_with_teleport_coefficients_matches_appnp():
    g = helpers.random_graph(15, 0.25, seed=10, d=4, c=2)
    agg = build_dad(g)
    alpha, big_k = 0.2, 3
    theta = np.array([alpha * (1 - alpha) ** i for i in range(big_k)] + [(1 - alpha) ** big_k])
    wf = np.random.default_rng(10).standard_normal((4, 2))
    poly_logits = forward("POLY", agg, g.features,
                          ModelParams(variant="POLY", k=big_k, beta=0.0, omega_f=wf, theta=theta))
    appnp_logits = appnp_propagate(agg, g.features, alpha, big_k).values @ wf
    assert np.abs(poly_logits - appnp_logits).max() <= 1e-10


def test_train_separates_two_triangles():
    g = helpers.two_triangles()
    params, report = train("LINEAR", build_dad(g), g, TrainConfig(epochs=100, seed=0), k=2)
    assert report.samples == [1.0]
    assert report.metric == "accuracy"
    assert params.variant == "LINEAR"


def test_train_is_deterministic():
    g = helpers.two_triangles()
    _, a = train("GENERAL", build_dad(g), g, TrainConfig(epochs=30, seed=4), k=2, hidden=8)
    _, b = train("GENERAL", build_dad(g), g, TrainConfig(epochs=30, seed=4), k=2, hidden=8)
    assert a.samples == b.samples
    assert a.mean == b.mean
    assert a.val_metric == b.val_metric


def test_train_divergence_names_epoch():
    g = helpers.two_triangles()
    with pytest.raises(ValueError, match="diverged.*epoch"):
        train("LINEAR", build_dad(g), g, TrainConfig(lr=1e300, epochs=10, seed=0), k=2)


def test_train_requires_masks():
    g = helpers.two_triangles()
    no_train = helpers.build_graph(6, [(0, 1)], labels=g.labels,
                                   roles=np.array(["none"] * 6, dtype="<U5"), num_classes=2)
    with pytest.raises(ValueError, match="train"):
        train("LINEAR", build_dad(no_train), no_train, TrainConfig(epochs=5), k=2)
    roles = np.array(["train", "train", "val", "val", "none", "none"], dtype="<U5")
    no_test = helpers.build_graph(6, [(0, 1), (2, 3)], labels=g.labels, roles=roles, num_classes=2)
    with pytest.raises(ValueError, match="test"):
        train("LINEAR", build_dad(no_test), no_test, TrainConfig(epochs=5), k=2)


def test_train_without_val_keeps_final_epoch():
    g = helpers.two_triangles()
    roles = g.roles.copy()
    roles[roles == "val"] = "none"
    g2 = helpers.build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)],
                             features=g.features, labels=g.labels, roles=roles, num_classes=2)
    # With no validation nodes the fully trained (final-epoch) parameters
    # must win; early-epoch parameters score 0.5 on this toy.
    _, report = train("LINEAR", build_dad(g2), g2, TrainConfig(epochs=100, seed=0), k=2)
    assert report.samples == [1.0]
    assert np.isnan(report.val_metric)


def test_train_appnp_alpha_path():
    g = helpers.two_triangles()
    _, report = train("LINEAR", build_dad(g), g, TrainConfig(epochs=60, seed=0), k=3,
                      appnp_alpha=0.1)
    assert 0.0 <= report.mean <= 1.0


def test_init_params_bounds_and_theta():
    p = init_params("GENERAL", 16, 3, k=2, hidden=9, seed=0)
    assert np.abs(p.omega_p).max() <= 1.0 / 4.0
    assert np.abs(p.omega_r).max() <= 1.0 / 3.0
    assert np.abs(p.omega_f).max() <= 1.0 / 3.0
    q = init_params("POLY", 5, 2, k=3, seed=0)
    np.testing.assert_array_equal(q.theta, np.full(4, 0.25))
    a = init_params("W", 6, 2, k=2, seed=3)
    b = init_params("W", 6, 2, k=2, seed=3)
    np.testing.assert_array_equal(a.omega_p, b.omega_p)
    np.testing.assert_array_equal(a.omega_r, b.omega_r)


def test_model_params_validation():
    with pytest.raises(ValueError, match="variant"):
        ModelParams(variant="CUBIC", k=1, beta=0.0, omega_f=np.eye(2)).validate()
    with pytest.raises(ValueError, match="omega_p"):
        ModelParams(variant="LINEAR", k=1, beta=0.0, omega_f=np.eye(2),
                    omega_p=np.eye(2)).validate()
    with pytest.raises(ValueError, match="k"):
        ModelParams(variant="RELU1", k=0, beta=0.0, omega_p=np.eye(2),
                    omega_f=np.eye(2)).validate()
    with pytest.raises(ValueError, match="theta"):
        ModelParams(variant="POLY", k=2, beta=0.0, omega_f=np.eye(2),
                    theta=np.ones(2)).validate()
    with pytest.raises(ValueError, match="omega_r"):
        ModelParams(variant="GENERAL", k=1, beta=0.0, omega_p=np.eye(2),
                    omega_f=np.eye(2)).validate()
    with pytest.raises(ValueError, match="match omega_p"):
        ModelParams(variant="GENERAL", k=1, beta=0.0, omega_p=np.ones((3, 4)),
                    omega_r=np.ones((4, 5)), omega_f=np.ones((5, 2))).validate()


def test_train_config_validation():
    with pytest.raises(ValueError, match="epochs"):
        TrainConfig(epochs=0).validate()
    with pytest.raises(ValueError, match="runs"):
        TrainConfig(runs=0).validate()
    with pytest.raises(ValueError, match="lr"):
        TrainConfig(lr=0.0).validate()
    with pytest.raises(ValueError, match="metric"):
        TrainConfig(metric="f2").validate()


def test_metric_graph_mismatch():
    g = helpers.two_triangles()
    with pytest.raises(ValueError, match="multilabel"):
        train("LINEAR", build_dad(g), g, TrainConfig(epochs=5, metric="micro_f1"), k=2)
    ml = helpers.build_graph(6, [(0, 1), (1, 2), (3, 4)],
                             labels=np.random.default_rng(0).integers(0, 2, size=(6, 3)).astype(np.int64),
                             roles=g.roles, num_classes=3)
    with pytest.raises(ValueError, match="single-label"):
        train("LINEAR", build_dad(ml), ml, TrainConfig(epochs=5, metric="accuracy"), k=2)


def test_multilabel_training_reports_micro_f1():
    rng = np.random.default_rng(11)
    g = helpers.build_graph(12, [(i, i + 1) for i in range(11)],
                            labels=rng.integers(0, 2, size=(12, 3)).astype(np.int64),
                            roles=np.array(["train"] * 6 + ["val"] * 3 + ["test"] * 3, dtype="<U5"),
                            num_classes=3)
    _, report = train("LINEAR", build_dad(g), g, TrainConfig(epochs=20, seed=0), k=2)
    assert report.metric == "micro_f1"
    assert 0.0 <= report.mean <= 1.0


def test_adam_matches_reference_formula():
    rng = np.random.default_rng(12)
    w = rng.standard_normal((3, 2))
    params = {"omega_f": w.copy()}
    config = TrainConfig(lr=0.05)
    opt = Adam(params, config)
    g1 = rng.standard_normal((3, 2))
    g2 = rng.standard_normal((3, 2))
    opt.step(params, {"omega_f": g1})
    opt.step(params, {"omega_f": g2})

    m = np.zeros_like(w)
    v = np.zeros_like(w)
    ref = w.copy()
    for t, grad in enumerate((g1, g2), start=1):
        m = 0.9 * m + 0.1 * grad
        v = 0.999 * v + 0.001 * grad**2
        mhat = m / (1 - 0.9**t)
        vhat = v / (1 - 0.999**t)
        ref -= 0.05 * mhat / (np.sqrt(vhat) + 1e-8)
    np.testing.assert_allclose(params["omega_f"], ref, atol=1e-15)


def test_save_load_round_trip(tmp_path):
    for variant, kwargs in (("LINEAR", {}), ("GENERAL", {"hidden": 7}), ("POLY", {})):
        p = init_params(variant, 6, 3, k=2, beta=1.0, seed=13, **kwargs)
        path = tmp_path / f"{variant}.npz"
        save_params(p, path)
        q = load_params(path)
        assert q.variant == p.variant and q.k == p.k and q.beta == p.beta
        for name, value in p.trainable().items():
            np.testing.assert_array_equal(q.trainable()[name], value)


def test_load_rejects_unknown_format(tmp_path):
    p = init_params("LINEAR", 4, 2, k=1, seed=0)
    path = tmp_path / "p.npz"
    save_params(p, path)
    import json
    import zipfile

    with np.load(path) as data:
        arrays = {name: data[name] for name in data.files}
    arrays["__manifest__"] = np.array(json.dumps({"format": 2, "variant": "LINEAR", "k": 1,
                                                  "beta": 0.0, "normalize": None}))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    with pytest.raises(ValueError, match="format"):
        load_params(path)
