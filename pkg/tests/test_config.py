import json

import pytest

from lwsim import cli
from lwsim.config import OPTIONS, ConfigError, ScenarioConfig, dump_file, parse_and_validate, to_flat


def test_defaults():
    cfg = parse_and_validate({})
    assert cfg.scenario == "baseline"
    assert (cfg.lwa, cfg.lwip) == (0, 0)
    assert cfg.poll_interval == 100_000
    assert cfg.rate_bps == 64_000 and cfg.packet_bytes == 600
    assert cfg.stop == 4_825_000_000
    assert cfg.split_modulus == 2


@pytest.mark.parametrize("scenario,modes", [("baseline", (0, 0)), ("lwa", (1, 0)), ("lwip", (0, 1))])
def test_presets(scenario, modes):
    cfg = parse_and_validate({"scenario": scenario})
    assert (cfg.lwa, cfg.lwip) == modes


def test_cli_overrides_file_overrides_preset(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"scenario": "lwa", "pdcp.lwa_mode": 2, "pdcp.split_modulus": 3}))
    cfg = parse_and_validate({"lwa_mode": 1}, f)
    assert (cfg.lwa, cfg.split_modulus) == (1, 3)


def test_unknown_key_is_named(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"pdcp.lwa_mod": 1}))
    with pytest.raises(ConfigError, match="pdcp.lwa_mod"):
        parse_and_validate({}, f)


def test_lwip_with_split_is_rejected():
    with pytest.raises(ConfigError, match="lwa-mode"):
        parse_and_validate({"scenario": "lwip", "lwa_mode": 1})


@pytest.mark.parametrize("values", [{"split_modulus": 1}, {"scenario": "baseline", "lwa_mode": 1},
                                    {"role": "enb"}, {"role": "sta"}, {"peer": "nohost"},
                                    {"rate_bps": "7"}])
def test_invalid_values(values):
    with pytest.raises(ConfigError):
        parse_and_validate(values)


def test_dump_and_reload_round_trips_every_option(tmp_path):
    cfg = parse_and_validate({
        "scenario": "lwa", "lwa_mode": 2, "lwip_mode": 0, "split_modulus": 5, "poll_interval": "250us",
        "pdcp_overhead": 40, "rbid": 4, "rate_bps": "128k", "packet_bytes": 400, "start": "1ms",
        "duration": "2s", "lte_rate": "50M", "lte_delay": "7ms", "xw_rate": "100M", "xw_delay": "3ms",
        "wifi_rate": "11M", "wifi_delay": "2ms", "wifi_framing": 50, "t_reordering": "40ms",
        "tunnel_local": "11.0.0.9", "tunnel_remote": "11.0.0.200", "seed": 9,
        "free_running_poll": True, "out_dir": "x", "role": "enb", "peer": "127.0.0.1:9",
        "listen": 7, "pacing": "real", "pacing_factor": 0.5, "idle_timeout": "2s"})
    flat = to_flat(cfg)
    assert set(flat) == {o.key for o in OPTIONS}
    assert all(v is not None for v in flat.values())
    path = tmp_path / "out.json"
    dump_file(cfg, path)
    assert parse_and_validate({}, path) == cfg


def test_cli_config_error_exit_code(capsys):
    assert cli.main(["--scenario", "lwip", "--lwa-mode", "1"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_dump_config(tmp_path):
    out = tmp_path / "eff.json"
    assert cli.main(["--scenario", "lwa", "--t-reordering", "40ms", "--dump-config", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["ue.t_reordering"] == "40ms"
    assert data["pdcp.lwa_mode"] is None
    assert parse_and_validate({}, out).lwa == 1


def test_cli_run_writes_outputs(tmp_path, capsys):
    assert cli.main(["--scenario", "baseline", "--out", str(tmp_path)]) == 0
    assert "Flow 1 (1.0.0.2:49153 -> 7.0.0.2:5000)" in capsys.readouterr().out
    names = {p.name for p in tmp_path.iterdir()}
    assert {"summary.json", "flows.txt", "deliveries.csv", "ue_stream.csv", "lte.pcap", "xw.pcap",
            "air.pcap", "config.json"} <= names


def test_every_field_has_an_option():
    from dataclasses import fields
    assert {f.name for f in fields(ScenarioConfig)} == {o.attr for o in OPTIONS}
