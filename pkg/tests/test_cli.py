import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synclab.cli import EXIT_OK, EXIT_UNREACHABLE, EXIT_VALIDATION, main
from synclab.config import TrialConfig, parse_trial_config, serialize_trial_config
from synclab.core import (MotionKind, Role, TrialType, ValidationError,
                          complete_topology, ring_topology, validate_topology)
from synclab.dynamics import (ControllerKind, ControllerParams, DynamicsModel,
                              DynamicsParams, VirtualPlayerConfig)
from synclab.harness import dyad_leader_vp_follower


class TestConfigRoundTrip:
    def test_group_config_round_trips(self):
        cfg = TrialConfig(
            trial_type=TrialType.GROUP, duration_s=30.0, topology=ring_topology(5),
            roles={2: Role.LEADER},
            vp_configs={5: VirtualPlayerConfig(
                dynamics=DynamicsParams(model=DynamicsModel.HKB, omega=1.7),
                controller=ControllerParams(controller=ControllerKind.ADAPTIVE,
                                            mode=Role.LEADER, c=2.5, delta=0.8, k=1.1),
                signature_ref="Sample:free")})
        text = serialize_trial_config(cfg)
        assert parse_trial_config(text) == cfg

    def test_solo_config_round_trips(self):
        cfg = TrialConfig(trial_type=TrialType.SOLO, duration_s=61.5,
                          topology=validate_topology([[0]], TrialType.SOLO),
                          solo_owner="Sample", solo_kind=MotionKind.SINUSOIDAL)
        assert parse_trial_config(serialize_trial_config(cfg)) == cfg

    @given(st.integers(3, 7), st.floats(1.0, 120.0), st.integers(0, 1000))
    @settings(max_examples=40, deadline=None)
    def test_random_group_configs_round_trip(self, n, duration, seed):
        rng = np.random.default_rng(seed)
        m = rng.integers(0, 2, (n, n))
        np.fill_diagonal(m, 0)
        for row in range(n):
            if not m[row].any() and not m[:, row].any():
                m[row, (row + 1) % n] = 1
        topo = validate_topology(m, TrialType.GROUP)
        vp_index = int(rng.integers(1, n + 1))
        vps = {}
        if m[vp_index - 1].any():
            vps[vp_index] = VirtualPlayerConfig(
                dynamics=DynamicsParams(model="harmonic", a=float(rng.uniform(0, 2)),
                                        b=float(rng.uniform(0.5, 5))),
                controller=ControllerParams(controller="pd",
                                            kp=float(rng.uniform(0, 3)),
                                            ksigma=float(rng.uniform(0, 3))),
                signature_ref="X:free")
        cfg = TrialConfig(trial_type=TrialType.GROUP, duration_s=duration,
                          topology=topo, vp_configs=vps)
        assert parse_trial_config(serialize_trial_config(cfg)) == cfg

    def test_two_leaders_rejected_in_dyad(self):
        topo = validate_topology([[0, 1], [1, 0]], TrialType.DYADIC_HP_HP)
        with pytest.raises(ValidationError, match="one leader"):
            TrialConfig(trial_type=TrialType.DYADIC_HP_HP, duration_s=30.0,
                        topology=topo, roles={1: Role.LEADER, 2: Role.LEADER})

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError, match="unknown config key"):
            parse_trial_config("trial_type=group\nbogus=1\ntopology:\n0 1 1\n1 0 1\n1 1 0\n")


class TestCliValidation:
    def test_unknown_motion_kind_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["solo", "--player", "A", "--kind", "circular"])
        assert exc.value.code == 2  # argparse usage error

    def test_zero_duration_rejected(self, capsys):
        code = main(["solo", "--player", "A", "--kind", "free", "--duration", "0",
                     "--server", "127.0.0.1:1"])
        assert code == EXIT_VALIDATION

    def test_unreachable_server_exit_code(self, tmp_path):
        code = main(["solo", "--player", "A", "--kind", "free",
                     "--server", "127.0.0.1:1"])
        assert code == EXIT_UNREACHABLE

    def test_group_of_eight_rejected(self, tmp_path, capsys):
        topo_file = tmp_path / "topo.txt"
        m = np.ones((8, 8), dtype=int)
        np.fill_diagonal(m, 0)
        topo_file.write_text("\n".join(" ".join(map(str, row)) for row in m))
        code = main(["group", "--topology", str(topo_file), "--server", "127.0.0.1:1"])
        assert code == EXIT_VALIDATION
        assert "3..7" in capsys.readouterr().err

    def test_hp_vp_without_signature_rejected(self, capsys):
        code = main(["dyad", "--kind", "hp_vp", "--server", "127.0.0.1:1"])
        assert code == EXIT_VALIDATION
        assert "signature" in capsys.readouterr().err

    def test_missing_topology_file(self):
        code = main(["group", "--topology", "/nonexistent/t.txt",
                     "--server", "127.0.0.1:1"])
        assert code == EXIT_VALIDATION


class TestAnalyzeCommand:
    def test_analyze_dyad_files(self, tmp_path, capsys):
        result = dyad_leader_vp_follower(seed=0, duration_s=10.0)
        files = [str(p) for p in result.record.save(tmp_path) if p.suffix == ".txt"]
        code = main(["analyze", *files])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "rho_d" in out
        assert "eps" in out

    def test_analyze_meta_with_summary(self, tmp_path, capsys):
        result = dyad_leader_vp_follower(seed=0, duration_s=10.0)
        paths = result.record.save(tmp_path)
        meta = next(p for p in paths if p.name.endswith("meta.json"))
        summary = tmp_path / "summary.tsv"
        code = main(["analyze", "--meta", str(meta), "--summary", str(summary)])
        assert code == EXIT_OK
        lines = summary.read_text().strip().splitlines()
        assert any(line.startswith("rho_d\t") for line in lines)

    def test_analyze_group_with_topology_markers(self, tmp_path, capsys):
        from synclab.harness import run_group_trial
        result = run_group_trial(complete_topology(3), seed=0, duration_s=10.0)
        paths = result.record.save(tmp_path)
        meta = next(p for p in paths if p.name.endswith("meta.json"))
        code = main(["analyze", "--meta", str(meta)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "rho_g" in out
        assert "*" in out  # complete graph: every pair marked connected

    def test_analyze_nothing_given(self, capsys):
        assert main(["analyze"]) == EXIT_VALIDATION


class TestSignaturesCommand:
    def test_empty_store_listing(self, tmp_path, capsys):
        code = main(["signatures", "list", "--data-root", str(tmp_path)])
        assert code == EXIT_OK
        assert "no signatures" in capsys.readouterr().out

    def test_list_and_show_after_store(self, tmp_path, capsys):
        from synclab.records import TrialRecord, velocity_from_position
        from synclab.core import Trajectory
        from synclab.session import SignatureStore
        t = np.arange(101) / 10.0
        pos = Trajectory(0.0, 10.0, 5 + np.sin(2 * np.pi * 0.3 * t))
        rec = TrialRecord(trial_type=TrialType.SOLO, trial_number=1, duration_s=10.0,
                          record_rate_hz=10.0, topology=None, roles={},
                          positions={1: pos}, velocities={1: velocity_from_position(pos)},
                          labels={1: "Sample"}, solo_kind=MotionKind.FREE)
        SignatureStore(tmp_path / "signatures").store(rec)
        assert main(["signatures", "list", "--data-root", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "Sample" in out and "free" in out
        assert main(["signatures", "show", "--data-root", str(tmp_path),
                     "--owner", "Sample", "--kind", "free"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "101" in out

    def test_show_requires_owner_and_kind(self, capsys):
        assert main(["signatures", "show"]) == EXIT_VALIDATION


class TestVpDefaultReporting:
    def test_defaults_printed_for_unspecified_params(self, tmp_path, capsys):
        vp_file = tmp_path / "vp.txt"
        vp_file.write_text("model=hkb\ncontroller=pd\nmode=follower\nsignature=A:free\n")
        main(["dyad", "--kind", "hp_vp", "--vp", str(vp_file),
              "--server", "127.0.0.1:1"])
        out = capsys.readouterr().out
        assert "defaults used" in out
        assert "kp=" in out and "omega=" in out
