"""Command line tests: output schemas, error diagnostics and determinism."""
import json

import numpy as np
import pytest

from otfslib import FrameConfig, PrefixKind, capacity, tx_power
from otfslib.cli import main


def _run(tmp_path, command, doc, name="exp", extra=()):
    cfg_path = tmp_path / f"{name}.json"
    out_path = tmp_path / f"{name}.csv"
    cfg_path.write_text(json.dumps(doc))
    code = main([command, "--config", str(cfg_path), "--out", str(out_path),
                 *extra])
    return code, out_path


BER_DOC = {
    "configs": [
        {"kind": "RCP", "M": 4, "N": 4, "L_cp": 2},
        {"kind": "FZS", "M": 4, "N": 4, "L_zs": 2},
    ],
    "snrs_db": [10.0],
    "detectors": ["mmse"],
    "n_frames": 20,
    "frames_per_channel": 4,
    "n_taps": 2,
    "k_max": 2,
}


class TestBerSweep:
    def test_csv_schema(self, tmp_path):
        code, out = _run(tmp_path, "ber_sweep", BER_DOC)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == ("config,M,N,Lcp,Lzs,detector,snr_db,"
                            "ber,ber_stderr,trials,seed")
        assert len(lines) == 3
        assert lines[1].startswith("RCP,4,4,2,0,mmse,")

    def test_sidecar_written(self, tmp_path):
        code, out = _run(tmp_path, "ber_sweep", BER_DOC, extra=["--seed", "9"])
        assert code == 0
        meta = json.loads((tmp_path / "exp.csv.meta.json").read_text())
        assert meta["command"] == "ber_sweep"
        assert meta["seed"] == 9
        assert meta["config"] == BER_DOC

    def test_rerun_is_byte_identical(self, tmp_path):
        _, out1 = _run(tmp_path, "ber_sweep", BER_DOC, name="a",
                       extra=["--seed", "4"])
        _, out2 = _run(tmp_path, "ber_sweep", BER_DOC, name="b",
                       extra=["--seed", "4"])
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_field_diagnostic(self, tmp_path, capsys):
        doc = {"configs": [{"kind": "RCP", "M": 4, "N": 4}]}
        code, _ = _run(tmp_path, "ber_sweep", doc)
        assert code == 2
        assert "snrs_db" in capsys.readouterr().err

    def test_bad_kind_diagnostic(self, tmp_path, capsys):
        doc = dict(BER_DOC, configs=[{"kind": "XXX", "M": 4, "N": 4}])
        code, _ = _run(tmp_path, "ber_sweep", doc)
        assert code == 2
        err = capsys.readouterr().err
        assert "configs[0].kind" in err and "XXX" in err

    def test_wrong_type_diagnostic(self, tmp_path, capsys):
        doc = dict(BER_DOC, snrs_db=[10.0, "loud"])
        code, _ = _run(tmp_path, "ber_sweep", doc)
        assert code == 2
        assert "snrs_db[1]" in capsys.readouterr().err


class TestTables:
    def test_capacity_matches_library(self, tmp_path):
        doc = {
            "configs": [{"kind": "RCP", "M": 32, "N": 32, "L_cp": 16},
                        {"kind": "FCP", "M": 32, "N": 32, "L_cp": 16}],
            "gamma_db": [0.0, 10.0],
        }
        code, out = _run(tmp_path, "capacity_table", doc)
        assert code == 0
        lines = out.read_text().strip().splitlines()[1:]
        assert len(lines) == 4
        for line in lines:
            parts = line.split(",")
            cfg = FrameConfig(PrefixKind(parts[0]), int(parts[1]),
                              int(parts[2]), L_cp=int(parts[3]),
                              L_zs=int(parts[4]))
            gamma = 10.0 ** (float(parts[5]) / 10.0)
            assert abs(float(parts[7]) - capacity(cfg, gamma)) < 1e-10

    def test_power_matches_library(self, tmp_path):
        doc = {
            "configs": [{"kind": "RFCP", "M": 2, "N": 2, "L_cp": 2}],
            "symbol_power": 2.0,
        }
        code, out = _run(tmp_path, "power_table", doc)
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        cfg = FrameConfig(PrefixKind.RFCP, 2, 2, L_cp=2)
        assert abs(float(row[6]) - tx_power(cfg, 2.0)) < 1e-12


class TestMatrixAndEquivalence:
    CHANNEL = {
        "taps": [
            {"gain_re": 1.0, "gain_im": 0.0, "delay": 0, "doppler": 0.0},
            {"gain_re": 0.5, "gain_im": 0.0, "delay": 1, "doppler": 1.0},
        ],
        "grid": "RCP",
    }

    def test_matrix_dump(self, tmp_path):
        doc = {"frame": {"kind": "RCP", "M": 2, "N": 2, "L_cp": 1},
               "channel": self.CHANNEL}
        code, out = _run(tmp_path, "matrix_dump", doc)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "row,col,re,im"
        assert len(lines) == 9  # two taps, one entry each in four rows

    def test_matrix_dump_guard_violation(self, tmp_path, capsys):
        doc = {"frame": {"kind": "RCP", "M": 2, "N": 2},
               "channel": self.CHANNEL}
        code, _ = _run(tmp_path, "matrix_dump", doc)
        assert code == 2
        assert "guard" in capsys.readouterr().err

    def test_equivalence_check(self, tmp_path):
        doc = {"frame": {"kind": "FCP", "M": 4, "N": 4, "L_cp": 2},
               "n_models": 3, "n_taps": 2, "k_max": 3}
        code, out = _run(tmp_path, "equivalence_check", doc)
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        assert float(row[6]) < 1e-10


class TestCirDump:
    def test_recovers_channel(self, tmp_path):
        doc = {
            "frame": {"kind": "RFCP", "M": 8, "N": 8, "L_cp": 3},
            "channel": {
                "taps": [
                    {"gain_re": 1.0, "gain_im": 0.0, "delay": 0,
                     "doppler": 0.0},
                    {"gain_re": 0.0, "gain_im": 0.5, "delay": 2,
                     "doppler": 1.0},
                ],
                "grid": "FCP",
            },
            "pilot": {"position": [0, 0], "guard_delay": 3,
                      "guard_doppler": 2},
        }
        code, out = _run(tmp_path, "cir_dump", doc)
        assert code == 0
        rows = [line.split(",") for line in
                out.read_text().strip().splitlines()[1:]]
        got = {(int(r[2]), float(r[3])): complex(float(r[0]), float(r[1]))
               for r in rows}
        assert abs(got[(0, 0.0)] - 1.0) < 1e-8
        assert abs(got[(2, 1.0)] - 0.5j) < 1e-8
        assert (tmp_path / "exp.csv.cir.json").exists()

    def test_requires_rfcp(self, tmp_path, capsys):
        doc = {"frame": {"kind": "RCP", "M": 8, "N": 8, "L_cp": 3},
               "channel": {"taps": [], "grid": "RCP"},
               "pilot": {"position": [0, 0]}}
        code, _ = _run(tmp_path, "cir_dump", doc)
        assert code == 2
        assert "RFCP" in capsys.readouterr().err


class TestTopLevelErrors:
    def test_unreadable_config(self, tmp_path, capsys):
        code = main(["ber_sweep", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o.csv")])
        assert code == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code = main(["ber_sweep", "--config", str(p),
                     "--out", str(tmp_path / "o.csv")])
        assert code == 2
        assert "valid JSON" in capsys.readouterr().err

    def test_non_object_config(self, tmp_path, capsys):
        p = tmp_path / "list.json"
        p.write_text("[1, 2]")
        code = main(["ber_sweep", "--config", str(p),
                     "--out", str(tmp_path / "o.csv")])
        assert code == 2
        assert "object" in capsys.readouterr().err

    def test_bad_threads(self, tmp_path, capsys):
        p = tmp_path / "ok.json"
        p.write_text(json.dumps(BER_DOC))
        code = main(["ber_sweep", "--config", str(p),
                     "--out", str(tmp_path / "o.csv"), "--threads", "0"])
        assert code == 2
        assert "threads" in capsys.readouterr().err
