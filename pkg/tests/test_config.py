from __future__ import annotations

import pytest

from toxaudit.config import AppConfig
from toxaudit.errors import ConfigError


def write_cfg(tmp_path, text):
    path = tmp_path / "app.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestAppConfig:
    def test_defaults_without_file(self):
        cfg = AppConfig()
        assert cfg.membership_threshold == 0.5
        assert cfg.train_fraction == 0.8
        assert cfg.max_features == 50_000
        assert cfg.learning_rate == 1e-4
        assert cfg.batch_size == 100
        assert cfg.class_weights == "balanced"
        assert cfg.power == -5.0

    def test_load_overrides(self, tmp_path):
        path = write_cfg(
            tmp_path,
            "# comment line\n"
            "learning_rate = 0.01\n"
            "epochs = 3\n"
            "include_error_rates = true\n"
            "class_weights = none\n"
            "subgroups = muslim, female\n",
        )
        cfg = AppConfig.load(path)
        assert cfg.learning_rate == 0.01
        assert cfg.epochs == 3
        assert cfg.include_error_rates is True
        assert cfg.class_weights == "none"
        assert cfg.subgroup_list() == ["muslim", "female"]

    def test_unknown_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "learning_rte = 0.01\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            AppConfig.load(path)

    def test_unparsable_value_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "epochs = three\n")
        with pytest.raises(ConfigError, match="line 1"):
            AppConfig.load(path)

    def test_bad_boolean_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "include_ctf = maybe\n")
        with pytest.raises(ConfigError, match="true/false"):
            AppConfig.load(path)

    def test_bad_class_weights_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "class_weights = heavy\n")
        with pytest.raises(ConfigError):
            AppConfig.load(path)

    def test_bad_fraction_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "train_fraction = 1.5\n")
        with pytest.raises(ConfigError):
            AppConfig.load(path)

    def test_train_config_conversion(self):
        cfg = AppConfig(learning_rate=0.02, epochs=7, class_weights="0.5,4.0", train_seed=9)
        tc = cfg.train_config()
        assert tc.learning_rate == 0.02
        assert tc.epochs == 7
        assert tc.class_weights == (0.5, 4.0)
        assert tc.seed == 9
        assert cfg.train_config(seed=123).seed == 123

    def test_score_config_conversion(self):
        sc = AppConfig(power=-2.0, min_subgroup_pos=5).score_config()
        assert sc.power == -2.0
        assert sc.min_subgroup_pos == 5
        assert sc.weight_overall == 0.25

    def test_clean_config_with_override_files(self, tmp_path):
        stop = tmp_path / "stop.txt"
        stop.write_text("alpha\nbeta\n", encoding="utf-8")
        contr = tmp_path / "contr.txt"
        contr.write_text("gonna=going to\n", encoding="utf-8")
        cfg = AppConfig(stopwords_file=str(stop), contractions_file=str(contr))
        cc = cfg.clean_config()
        assert cc.stopword_list == frozenset({"alpha", "beta"})
        assert cc.contraction_map == {"gonna": "going to"}

    def test_schema_overrides(self):
        schema = AppConfig(id_column="key", text_column="body").schema()
        assert schema.id_column == "key"
        assert schema.text_column == "body"

    def test_ctf_generator_from_file(self, tmp_path):
        subs = tmp_path / "subs.txt"
        subs.write_text("gay, straight\n", encoding="utf-8")
        cfg = AppConfig(ctf_substitutions_file=str(subs), ctf_max_tokens=6)
        gen = cfg.ctf_generator()
        assert gen.term_groups == (("gay", "straight"),)
        assert gen.max_tokens == 6
