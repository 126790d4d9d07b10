import numpy as np
import pytest

from hqer.errors import ConfigError
from hqer.sim import LAYOUTS, ScenarioSpec, emit_table, read_table, run_scenario, table_grid


def spec(**kw):
    d = dict(model="location_shift", error_law="normal", n=2000, levels=[0.5], replicates=3, seed=7,
             methods=[dict(name="HQER", gamma=0.5)])
    d.update(kw)
    return ScenarioSpec.from_dict(d)


def test_spec_round_trip():
    s = spec(methods=[dict(name="QR"), dict(name="kth", k=1.5), dict(name="HQER", gamma=0.3)])
    assert ScenarioSpec.from_dict(s.to_dict()) == s


@pytest.mark.parametrize("kw", [dict(n=15), dict(levels=[1.2]), dict(replicates=0), dict(model="ar1"),
                                dict(methods=[dict(name="HQER")]), dict(level_kind="beta"),
                                dict(methods=[])])
def test_spec_rejects(kw):
    with pytest.raises(ConfigError):
        spec(**kw)


def test_deterministic_single_replicate():
    a = run_scenario(spec(replicates=1))
    b = run_scenario(spec(replicates=1))
    assert a.to_csv() == b.to_csv()


def test_workers_do_not_change_result():
    s = spec(replicates=4)
    assert run_scenario(s, workers=1).to_csv() == run_scenario(s, workers=3).to_csv()


def test_target_uses_matched_level():
    r = run_scenario(spec(levels=[0.8], replicates=2))
    c = r.cells[0]
    assert c.target[1] == 90.0
    assert c.target[0] == pytest.approx(15 + 0.8416212335729143, abs=1e-9)


@pytest.mark.slow
def test_location_shift_slope_consistent():
    r = run_scenario(spec(n=10000, replicates=200, levels=[0.5], level_kind="tau"), workers=4)
    assert abs(r.cells[0].mean_beta[1] - 90) / 90 < 0.005


@pytest.mark.slow
def test_median_variance_scale_location():
    s = ScenarioSpec.from_dict(dict(model="scale_location", error_law="normal", n=10000, levels=[0.5],
                                    replicates=500, seed=11, methods=[dict(name="QR")]))
    c = run_scenario(s, workers=4).cells[0]
    assert c.asymptotic_var[0] == pytest.approx(np.pi / 2)
    assert c.relative_gap[0] <= 0.10


def test_table2_cells():
    t = read_table(emit_table(table_grid("table2"), "table2"))
    assert t[("QR", "0.55")] == 0.636
    assert t[("ER", "0.55")] == 0.996


def test_table3_kth():
    t = read_table(emit_table(table_grid("table3"), "table3"))
    assert t[("kthER", "0.55")] == pytest.approx(0.874, abs=0.01)


def test_table4_qr():
    t = read_table(emit_table(table_grid("table4"), "table4"))
    assert t[("QR", "0.55")] == pytest.approx(0.477, abs=0.001)


def test_missing_cells_are_na():
    text = emit_table({("QR", 0.55): 0.5}, "table2")
    assert "NA" in text
    assert read_table(text)[("ER", "0.55")] is None


def test_table8_layout():
    rows = [dict(alpha=0.6, gamma=0.9, beta=[15.1, 89.9], sd=[0.1, 0.2]),
            dict(alpha=0.1, gamma=0.3, beta=None, sd=None)]
    text = emit_table(rows, "table8")
    t = read_table(text)
    assert t[("optimal_gamma", "0.60")] == 0.9
    assert t[("beta1", "0.10")] is None


def test_unknown_layout():
    with pytest.raises(ConfigError):
        table_grid("table9")
    assert set(LAYOUTS) == {"table2", "table3", "table4", "table5", "table6"}
