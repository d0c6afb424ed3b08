import json
from fractions import Fraction

import pytest

from eth2game import cli
from eth2game.config import ConfigError, RunConfig, apply_env, from_dict, load, to_dict
from eth2game.game_core import LeakMode


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# -- config -----------------------------------------------------------------


def test_defaults_round_trip():
    cfg = RunConfig()
    assert from_dict(to_dict(cfg)) == cfg


def test_round_trip_with_fractions(tmp_path):
    data = {
        "incentive_model": {"network": {"n_validators": 1000}, "costs": {"years": "7/2"}, "tips": [5, "1/3"]},
        "game_core": {"n_agents": 5, "gamma_threshold": "1/4", "leak_mode": "on", "cost_per_epoch": 0.5},
        "slot_simulator": {"epochs": 10, "seed": 9, "attester_cooperate": "3/4"},
    }
    cfg = from_dict(data)
    assert cfg.game.gamma_threshold == Fraction(1, 4)
    assert cfg.game.cost_per_epoch == Fraction(1, 2)
    assert cfg.game.leak_mode is LeakMode.FORCED_ON
    assert cfg.game.incentive_params.network.total_staked == 1000 * 32 * 10**9
    path = tmp_path / "c.json"
    path.write_text(json.dumps(to_dict(cfg)))
    assert load(path, environ={}) == cfg


@pytest.mark.parametrize("data, path", [
    ({"game_core": {"n_agent": 4}}, "$.game_core.n_agent"),
    ({"extra": {}}, "$.extra"),
    ({"incentive_model": {"weights": {"w_src": 1}}}, "$.incentive_model.weights.w_src"),
    ({"incentive_model": {"bonus": 1}}, "$.incentive_model.bonus"),
    ({"game_core": {"n_agents": "four"}}, "$.game_core.n_agents"),
    ({"game_core": {"leak_mode": "sometimes"}}, "$.game_core.leak_mode"),
])
def test_config_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as exc:
        from_dict(data)
    assert exc.value.path == path


def test_env_override():
    data = apply_env({"game_core": {"n_agents": 3}},
                     {"ETH2GAME_GAME_CORE__N_AGENTS": "6",
                      "ETH2GAME_INCENTIVE_MODEL__NETWORK__N_VALIDATORS": "1000",
                      "OTHER": "x"})
    cfg = from_dict(data)
    assert cfg.game.n_agents == 6
    assert cfg.game.incentive_params.network.n_validators == 1000


def test_invalid_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load(p, environ={})


# -- CLI --------------------------------------------------------------------


def test_rewards_table(capsys):
    code, out, _ = run(["rewards"], capsys)
    assert code == 0
    assert "505.96" in out


def test_rewards_json_carries_manifest(capsys):
    code, out, _ = run(["rewards", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["manifest"]["subcommand"] == "rewards"
    assert from_dict(doc["manifest"]["config"]) == RunConfig()


def test_equilibrium_json(capsys):
    code, out, _ = run(["equilibrium", "--n-agents", "3", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["bne"]["bne_verdict"] is True
    assert doc["dominance"]["dominance"] == "strict"


def test_equilibrium_bruteforce_same_verdicts(capsys):
    _, a, _ = run(["equilibrium", "--n-agents", "4", "--format", "csv"], capsys)
    _, b, _ = run(["equilibrium", "--n-agents", "4", "--format", "csv", "--brute-force"], capsys)
    assert a == b


def test_simulate_repeatable(capsys, tmp_path):
    argv = ["simulate", "--n-agents", "3", "--epochs", "6", "--seed", "4", "--format", "json"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    assert json.loads(a)["manifest"]["seed"] == 4
    trace = tmp_path / "t.csv"
    code, _, _ = run(["simulate", "--epochs", "3", "--trace", str(trace)], capsys)
    assert code == 0
    assert trace.read_text().startswith("epoch,finalized,leak_active,leak_during")


def test_out_flag(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(["rewards", "--format", "csv", "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert target.read_text().startswith("quantity,gwei")


def test_sweep_grid_forms(capsys):
    code, out, _ = run(["sweep", "--n-agents", "3", "--axis", "cost_per_epoch", "--grid", "0:1000:3",
                        "--format", "csv"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) == 4
    assert cli.parse_grid("1,2/3") == [1, Fraction(2, 3)]
    assert cli.parse_grid("") == []


@pytest.mark.parametrize("argv, code", [
    (["sweep"], 2),
    (["sweep", "--axis", "cost_per_epoch", "--grid", "a:b"], 2),
    (["equilibrium", "--n-agents", "1"], 2),
    (["simulate", "--epochs", "0"], 2),
    (["simulate", "--attester-cooperate", "2"], 4),
])
def test_exit_codes(argv, code, capsys):
    assert run(argv, capsys)[0] == code


def test_argparse_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code == 2


def test_config_and_domain_exit_codes(tmp_path, capsys):
    bad_key = tmp_path / "k.json"
    bad_key.write_text(json.dumps({"game_core": {"n_agent": 4}}))
    code, _, err = run(["rewards", "--config", str(bad_key)], capsys)
    assert code == 3 and "$.game_core.n_agent" in err
    bad_value = tmp_path / "v.json"
    bad_value.write_text(json.dumps({"incentive_model": {"network": {"n_validators": 0}}}))
    code, _, err = run(["rewards", "--config", str(bad_value)], capsys)
    assert code == 4 and "n_validators" in err
