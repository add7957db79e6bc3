import json

import pytest

from depthsr.config import (
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)
from depthsr.errors import ConfigError


class TestRoundTrip:
    def test_defaults_roundtrip_byte_identically(self, tmp_path):
        path1 = tmp_path / "a.json"
        path2 = tmp_path / "b.json"
        cfg = default_config()
        save_config(path1, cfg)
        save_config(path2, load_config(path1))
        assert path1.read_bytes() == path2.read_bytes()

    def test_tau_default_present_in_emitted_file(self, tmp_path):
        path = tmp_path / "c.json"
        save_config(path, default_config())
        data = json.loads(path.read_text())
        assert data["selection"]["tau"] == 0.14

    def test_hash_stable_and_sensitive(self, tmp_path):
        cfg = default_config()
        assert config_hash(cfg) == config_hash(default_config())
        data = config_to_dict(cfg)
        data["selection"]["tau"] = 0.15
        assert config_hash(config_from_dict(data)) != config_hash(cfg)

    def test_loaded_file_digest_matches_config_hash(self, tmp_path):
        import hashlib

        path = tmp_path / "c.json"
        cfg = default_config()
        save_config(path, cfg)
        assert hashlib.sha256(path.read_bytes()).hexdigest() == config_hash(cfg)


class TestStrictness:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="taau"):
            config_from_dict({"taau": 0.2})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="taau"):
            config_from_dict({"selection": {"taau": 0.2}})

    def test_unknown_degradation_key(self):
        with pytest.raises(ConfigError, match="blur_sigma"):
            config_from_dict({"degradation": {"blur_sigma": 0.5}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(path)

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"selection": {"tau": -1.0}})
        with pytest.raises(ConfigError):
            config_from_dict({"denoiser": {"kind": "transformer"}})
        with pytest.raises(ConfigError):
            config_from_dict({"schedule": {"kind": "cosine"}})


class TestPartialOverrides:
    def test_partial_sections_merge_with_defaults(self):
        cfg = config_from_dict({"selection": {"tau": 0.2}, "seed": 7})
        assert cfg.selection.tau == 0.2
        assert cfg.selection.rule == "simplified"
        assert cfg.seed == 7
        assert cfg.schedule.timesteps == 1000

    def test_blur_none_disables(self):
        cfg = config_from_dict({"degradation": {"blur": None}})
        assert cfg.degradation.blur is None

    def test_scene_overrides(self):
        cfg = config_from_dict(
            {"corpus": {"count": 3, "scene": {"width": 64, "height": 64, "layer_depths": None}}}
        )
        assert cfg.corpus.count == 3
        assert cfg.corpus.scene.width == 64
        assert cfg.corpus.scene.layer_depths is None
