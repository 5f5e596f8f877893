import json
import subprocess
import sys

import pytest

from ekelab import cli, margin
from ekelab.protocol import Transcript


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_run_dh_eke(tmp_path, capsys):
    assert run_cli("run", "--variant", "dh-eke", "--bits", 20, "--seed", 7, "--out", tmp_path) == 0
    assert "keys match" in capsys.readouterr().out
    outcome = json.loads((tmp_path / "outcome.json").read_text())
    assert outcome["keys_match"] and outcome["initiator"]["status"] == "COMPLETED"
    t = Transcript.load(tmp_path / "transcript.jsonl")
    assert len(t.messages) == 4 and t.params.q.bit_length() == 20


def test_run_nokey_worked_example(tmp_path, capsys):
    code = run_cli("run", "--variant", "nokey", "--q", 23, "--g", 5, "--key", 9, "--a", 5, "--b", 7, "--seed", 1, "--out", tmp_path)
    assert code == 0
    outcome = json.loads((tmp_path / "outcome.json").read_text())
    assert outcome["responder"]["exchange_key"] == "9"
    t = Transcript.load(tmp_path / "transcript.jsonl")
    assert [int(m.payload.hex(), 16) for m in t.messages] == [8, 12, 4]


@pytest.mark.parametrize("argv", [
    ["run", "--variant", "quantum-eke", "--seed", 1],
    ["run", "--variant", "dh-eke"],  # no seed
    ["run", "--variant", "dh-eke", "--seed", 1, "--q", 21, "--g", 2],
    ["run", "--variant", "dh-eke", "--seed", 1, "--q", 23],
    ["mitm", "--variant", "dh-eke", "--seed", 1],
    ["margin", "--profile", "no-such-profile"],
])
def test_config_errors_exit_2(tmp_path, argv):
    assert run_cli(*argv, "--out", tmp_path) == 2


def test_protocol_abort_exit_3(tmp_path):
    # a = 2 shares a factor with q - 1 = 22
    assert run_cli("run", "--variant", "nokey", "--q", 23, "--g", 5, "--a", 2, "--seed", 1, "--out", tmp_path) == 3


def test_run_then_attack_dh_eke(tmp_path, capsys):
    assert run_cli("run", "--variant", "dh-eke", "--bits", 20, "--seed", 3, "--password-bits", 12, "--out", tmp_path) == 0
    capsys.readouterr()
    assert run_cli("attack", tmp_path / "transcript.jsonl", "--seed", 3) == 0
    out = capsys.readouterr().out
    assert "dlogs=4096 guesses=4096 per_guess=1" in out
    assert "true password recovered" in out
    report = json.loads((tmp_path / "attack_report.json").read_text())
    assert report["recovered_count"] == 1 and report["dlog_calls"] == 4096


def test_attack_enc_nokey_and_simplified(tmp_path, capsys):
    enc, simp = tmp_path / "enc", tmp_path / "simp"
    assert run_cli("run", "--variant", "enc-nokey", "--seed", 5, "--out", enc) == 0
    assert run_cli("attack", "--seed", 5, "--out", enc) == 0
    report = json.loads((enc / "attack_report.json").read_text())
    assert report["dlog_calls"] <= 2 * 256
    assert run_cli("run", "--variant", "simplified-eke", "--seed", 5, "--out", simp) == 0
    capsys.readouterr()
    assert run_cli("attack", "--seed", 5, "--out", simp) == 0
    assert "recovered_count=256 space_size=256" in capsys.readouterr().out


def test_attack_enhanced_eke(tmp_path, capsys):
    assert run_cli("run", "--variant", "enhanced-eke", "--seed", 2, "--out", tmp_path) == 0
    capsys.readouterr()
    assert run_cli("attack", "--seed", 2, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "dlogs=256 " in out and "dlogs=0" in out


def test_attack_expectation_failure_exit_4(tmp_path):
    assert run_cli("run", "--variant", "dh-eke", "--seed", 4, "--out", tmp_path) == 0
    assert run_cli("attack", "--seed", 4, "--out", tmp_path, "--expect", "none") == 4
    words = tmp_path / "words.txt"
    words.write_text("alpha\nbeta\n")
    assert run_cli("attack", "--seed", 4, "--out", tmp_path, "--dictionary", words, "--expect", "recover") == 4


def test_attack_guard_and_missing_transcript(tmp_path):
    assert run_cli("run", "--variant", "dh-eke", "--seed", 4, "--out", tmp_path) == 0
    assert run_cli("attack", "--seed", 4, "--out", tmp_path, "--password-bits", 25) == 2
    assert run_cli("attack", tmp_path / "nothing.jsonl", "--seed", 4) == 2


def test_attack_rejects_variant_without_attack(tmp_path):
    assert run_cli("run", "--variant", "nokey", "--seed", 4, "--out", tmp_path) == 0
    assert run_cli("attack", "--seed", 4, "--out", tmp_path) == 2


def test_mitm_commands(tmp_path, capsys):
    assert run_cli("mitm", "--variant", "nokey", "--seed", 1, "--out", tmp_path) == 0
    assert "stolen key" in capsys.readouterr().out
    assert run_cli("mitm", "--variant", "enc-nokey", "--seed", 1, "--out", tmp_path, "--trials", 20) == 0
    report = json.loads((tmp_path / "mitm_report.json").read_text())
    assert report["success_rate"] == 0.0 and report["trials"] == 20
    assert run_cli("mitm", "--variant", "enc-nokey", "--seed", 1, "--out", tmp_path, "--give-eve-password") == 0
    assert json.loads((tmp_path / "mitm_report.json").read_text())["success_rate"] == 1.0
    assert run_cli("mitm", "--variant", "enc-nokey", "--seed", 1, "--out", tmp_path, "--relay") == 0
    assert run_cli("mitm", "--variant", "nokey", "--seed", 1, "--out", tmp_path, "--e", 2) == 2


@pytest.mark.parametrize("argv,bits", [
    (["--profile", "ion-trap", "--computers", 2, "--check-paper"], 40),
    (["--profile", "universal", "--computers", 2], 68),
    (["--profile", "ion-trap", "--fleet", "earth"], 88),
    (["--profile", "ion-trap", "--computers", 4, "--dlogs-per-guess", 2], 40),
])
def test_margin_examples(tmp_path, capsys, argv, bits):
    assert run_cli("margin", *argv, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert f"bits={bits}" in out
    assert json.loads((tmp_path / "margin_report.json").read_text())["required_bits"] == bits


def test_margin_check_paper_mismatch_exit_5(tmp_path, monkeypatch):
    broken = margin.ReferenceCheck("forced mismatch", "40", "41", False)
    real = margin.reference_checks
    monkeypatch.setattr(cli.mc, "reference_checks", lambda: real() + [broken])
    assert run_cli("margin", "--check-paper", "--out", tmp_path) == 5


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"variant": "nokey", "seed": 11, "bits": 16, "out": str(tmp_path / "from-config")}))
    assert run_cli("run", "--config", cfg) == 0
    t = Transcript.load(tmp_path / "from-config" / "transcript.jsonl")
    assert t.variant.value == "nokey" and t.params.q.bit_length() == 16
    assert run_cli("run", "--config", cfg, "--variant", "dh-eke", "--out", tmp_path / "flag") == 0
    assert Transcript.load(tmp_path / "flag" / "transcript.jsonl").variant.value == "dh-eke"
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run_cli("run", "--config", bad) == 2


def test_determinism(tmp_path):
    for d in ("one", "two"):
        out = tmp_path / d
        assert run_cli("run", "--variant", "enc-nokey", "--seed", 99, "--out", out) == 0
        assert run_cli("attack", "--seed", 99, "--out", out) == 0
    one, two = tmp_path / "one", tmp_path / "two"
    for name in ("transcript.jsonl", "transcript.meta.json", "outcome.json"):
        assert (one / name).read_bytes() == (two / name).read_bytes()
    r1, r2 = (json.loads((d / "attack_report.json").read_text()) for d in (one, two))
    r1.pop("wall_seconds"), r2.pop("wall_seconds")
    assert r1 == r2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ekelab", "margin", "--profile", "universal", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "bits=68" in proc.stdout
