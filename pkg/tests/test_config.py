"""Tests for configuration loading and validation."""

from __future__ import annotations

import json

import pytest

from app.core.config import Config, ConfigError, Tolerances, load_config


class TestConfig:

    def test_defaults_are_valid(self):
        cfg = Config(q=0.5, m_max=40, guard=8)
        assert cfg.phi1_route in ("symbolic", "cm", "cocycle")
        assert cfg.tolerances.relation == 1e-12

    def test_q_out_of_range(self):
        with pytest.raises(ConfigError, match="q"):
            load_config(q=1.5)

    def test_guard_exceeds_m_max(self):
        with pytest.raises(ConfigError, match="guard"):
            load_config(m_max=10, guard=12)

    def test_guard_too_small(self):
        with pytest.raises(ConfigError):
            load_config(m_max=10, guard=1)

    def test_negative_cutoff(self):
        with pytest.raises(ConfigError):
            load_config(K=-1)

    def test_tolerances_positive(self):
        with pytest.raises(ValueError):
            Tolerances(relation=-1.0)
        with pytest.raises(ConfigError):
            load_config(tolerances={"index": 0.0})


class TestLoadConfig:

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"q": 0.2, "m_max": 30, "guard": 4, "K": 2}))
        cfg = load_config(path, q=0.7, K=None)
        assert cfg.q == 0.7
        assert cfg.K == 2
        assert cfg.m_max == 30

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{q: 0.2")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_unknown_route(self):
        with pytest.raises(ConfigError):
            load_config(phi1_route="dixmier")

    def test_cocycle_route_accepted(self):
        assert load_config(phi1_route="cocycle").phi1_route == "cocycle"
