import ernet


def test_mask_sampling_and_flow():
    arch = ernet.fc_chain([8, 8, 4], 0.0, 1.0)
    plan = ernet.make_plan("uniform", arch, 0.5)
    mask = ernet.sample_mask(arch, plan, 7)
    assert 0 < mask.nnz_total() < 8 * 8 + 8 * 4
    repaired, report = ernet.repair_random_addition(arch, mask, 7)
    assert ernet.flow_flags(arch, repaired) == 0


def test_network_roundtrip_and_forward():
    arch = ernet.fc_chain([3, 5, 2], 0.0, 1.0)
    net = ernet.random_target(arch, 11, 1.0)
    text = net.to_json()
    again = ernet.MaskedNetwork.from_json(text)
    x = [0.1, 0.5, 0.9]
    assert net.forward(x) == again.forward(x)


def test_wlt_construction():
    arch = ernet.fc_chain([3, 4, 2], 0.0, 1.0)
    target = ernet.random_target(arch, 3, 1.0)
    plan = ernet.make_plan("uniform", arch, 0.5)
    q = ernet.compute_q(target, plan, 0.1)
    assert q[-1] == 1 and all(v >= 1 for v in q)
    ticket, report = ernet.construct_wlt_fc(target, plan, 0.1, 5)
    if report["success"]:
        assert report["max_error"] <= 1e-9


def test_probe_lower_bound():
    res = ernet.probe_lower_bound(0.5, 1, 0.05, [4], 200, 1)
    assert abs(res["points"][0]["analytic"] - 0.68359375) < 1e-12
