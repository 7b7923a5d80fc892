import csv
import io
import os
import subprocess
import sys
import time

import pytest

from ilpshape import cli
from ilpshape.config import load_config, parse_config, resolve
from ilpshape.errors import ConfigError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_replay_table(capsys):
    code, out, _ = run(capsys, "replay", "--trace", "nest_like", "--config", "lowlat.cfg")
    assert code == 0
    assert "baseline_rate             346.040000" in out
    assert "#   delay = constant 0.05" in out


def test_replay_csv_single_row(capsys):
    code, out, _ = run(capsys, "replay", "--trace", "sense_like", "--preset", "high-latency", "--seed", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert 0 <= float(rows[0]["overhead_rate"]) <= 1500
    assert rows[0]["seed"] == "3"


def test_replay_to_file(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "replay", "--trace", "empty", "--preset", "low-latency", "--format", "csv", "--out", str(target))
    assert code == 0 and out == ""
    assert "2540.000000" in target.read_text()


def test_fixed_seed_is_byte_identical(capsys):
    argv = ("replay", "--trace", "sense_like", "--delay", "uniform 0 0.6", "--size", "truncnorm 125 30 50 200", "--seed", "11")
    first = run(capsys, *argv)[1]
    assert run(capsys, *argv)[1] == first
    assert run(capsys, "replay", "--trace", "sense_like")[1] == run(capsys, "replay", "--trace", "sense_like")[1]


def test_missing_trace_exits_2(capsys):
    code, _, err = run(capsys, "replay", "--trace", "/no/such/file.csv")
    assert code == 2 and "error" in err


def test_malformed_trace_exits_2(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0.0,10\n0.0,oops\n")
    code, _, err = run(capsys, "replay", "--trace", str(p))
    assert code == 2 and ":2:" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("replay",),
        ("replay", "--trace", "x", "--seed", "abc"),
        ("sweep", "--trace", "empty", "--param", "d_low", "--values", "a,b"),
        ("bogus",),
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_config_errors_exit_1(capsys, tmp_path):
    assert run(capsys, "replay", "--trace", "empty", "--delay", "truncnorm 1 1 0 2", "--preset", "low-latency")[0] == 1
    p = tmp_path / "c.cfg"
    p.write_text("delay = constant 0.05\nsize: 120\n")
    code, _, err = run(capsys, "replay", "--trace", "empty", "--config", str(p))
    assert code == 1 and "c.cfg:2" in err
    assert run(capsys, "replay", "--trace", "empty", "--config", str(tmp_path / "missing.cfg"))[0] == 1


def test_sweep_csv_trend(capsys):
    code, out, _ = run(
        capsys, "sweep", "--trace", "sense_like", "--preset", "high-latency", "--param", "d_high",
        "--values", "0.3,0.6,1.2", "--format", "csv",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["value"]) for r in rows] == [0.3, 0.6, 1.2]
    overhead = [float(r["overhead_rate"]) for r in rows]
    assert overhead[0] > overhead[1] > overhead[2]


def test_sweep_param_on_wrong_kind_exits_1(capsys):
    code, _, err = run(capsys, "sweep", "--trace", "empty", "--config", "lowlat.cfg", "--param", "d_low", "--values", "0.1")
    assert code == 1 and "config error" in err


def test_independence_report(capsys):
    code, out, _ = run(capsys, "independence", "--trace", "nest_like", "--seed", "4")
    assert code == 0
    assert "schedules_identical        True" in out
    assert "seed 4" in out
    assert "verdict                    independent" in out


def test_config_grammar():
    values = parse_config("# c\npreset = high-latency\nsize = constant 99   # trailing\nSEED=5\n")
    s = resolve(values)
    assert s.shaper.size_dist.params == (99.0,)
    assert s.shaper.delay_dist.params == (0.0, 0.6)
    assert s.shaper.rng_seed == 5
    assert load_config("highlat.cfg")["delay"] == "uniform 0 0.6"
    for bad in ["speed = 3\n", "delay = constant 0.05\n", "preset = medium\n", "preset = low-latency\nseed = -1\n", "preset = low-latency\nwire_overhead = x\n"]:
        with pytest.raises(ConfigError):
            resolve(parse_config(bad))


def _env():
    env = dict(os.environ)
    src = os.path.join(os.path.dirname(__file__), "..", "src")
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [os.path.abspath(src), env.get("PYTHONPATH")]))
    return env


def test_demo_round_trip_subprocess():
    env = _env()
    recv = subprocess.Popen(
        [sys.executable, "-m", "ilpshape", "demo", "recv", "--port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=env,
    )
    try:
        line = recv.stderr.readline()
        assert line.startswith("listening on ")
        port = line.strip().rsplit(":", 1)[1]
        send = subprocess.run(
            [sys.executable, "-m", "ilpshape", "demo", "send", "--port", port, "--delay", "constant 0.005", "--size", "constant 64"],
            input="hello\n" + "x" * 500 + "\n", capture_output=True, text=True, env=env, timeout=60,
        )
        assert send.returncode == 0, send.stderr
        out, err = recv.communicate(timeout=30)
    finally:
        recv.kill()
    assert recv.returncode == 0
    assert out == "hello\n" + "x" * 500 + "\n"
    assert "end of stream" in err


def test_demo_send_without_listener_exits_2():
    import socket

    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    start = time.monotonic()
    res = subprocess.run(
        [sys.executable, "-m", "ilpshape", "demo", "send", "--port", str(port)],
        input="", capture_output=True, text=True, env=_env(), timeout=60,
    )
    assert res.returncode == 2
    assert "cannot connect" in res.stderr
    assert time.monotonic() - start < 30
