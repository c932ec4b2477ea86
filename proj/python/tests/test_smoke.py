import math

import pytest

import dabid


def test_formulas():
    assert dabid.hourly_solar(0) == pytest.approx(0.08, abs=1e-12)
    assert dabid.hourly_wind(12.0) == 0.0
    assert dabid.hourly_consumption(0.002, -2.0) == pytest.approx(0.2, abs=1e-12)
    assert dabid.clear_bid(1.0, 100.0, "buy", 100.0)
    assert not dabid.clear_bid(1.0, 100.0, "sell", 99.0)
    with pytest.raises(ValueError):
        dabid.hourly_solar(9)


def test_dataset_is_deterministic():
    a = dabid.generate_dataset(seed=5, days=400)
    b = dabid.generate_dataset(seed=5, days=400)
    assert a.num_days == 400
    assert a.content_hash() == b.content_hash()
    split = a.split()
    assert split["train"][0] == 0
    assert split["test"][1] == 400


def test_env_step():
    data = dabid.generate_dataset(seed=2, days=400)
    env = dabid.MarketEnv(data, {"battery_capacity": "1.5"})
    obs = env.reset(40, 3)
    assert len(obs) == 141
    assert env.battery_level == pytest.approx(0.75, abs=0.5)
    obs, reward, terminal = env.step([0.0] * 96)
    assert len(obs) == 141 and math.isfinite(reward) and not terminal
    with pytest.raises(ValueError):
        env.step([0.0] * 95)
    assert dabid.MarketEnv(data, include_weather=False).reset(40, 3).__len__() == 69


def test_optimizers():
    r = dabid.cmaes_maximize(lambda x: -float((x**2).sum()), 3, generations=60, seed=1)
    assert float((r["mean"] ** 2).sum()) < 1e-6
    assert dabid.default_population(100) == 17
    adv = dabid.compute_gae([1.0, 2.0], [0.5, 0.5], [False, True], 0.0, 0.0, 0.9)
    assert adv == [0.5, 1.5]


def test_pipeline(tmp_path):
    config = {"days": "730", "seeds": "0", "generations": "2", "test_days": "30"}
    data = dabid.prepare_dataset(config)
    optimized, initial = dabid.optimize(data, config, "timing", tmp_path)
    assert optimized["name"] == "timing" and len(optimized["incomes"]) == 1
    dabid.evaluate_zero_action(data, config, tmp_path)
    report = dabid.report(data, config, tmp_path)
    assert [r["name"] for r in report["rows"]][-1] == "zero_action"
    assert (tmp_path / "report" / "balances.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    with pytest.raises(FileNotFoundError):
        dabid.report(data, config, tmp_path / "empty")
