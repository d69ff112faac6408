"""
Tests for turning model text into a runnable protocol and configuration.
"""

from pathlib import Path

import pytest

from popsim.common.errors import InputError
from popsim.simulation_domain.loading import ModelKind, load_model, read_text

CRN_TEXT = "A + B -> 2U\nA + U -> 2A\nB + U -> 2B\n"
PROTOCOL_TEXT = "A B -> U U\nA U -> A A\nB U -> B B\n"


class TestLoadModel:
    def test_protocol(self):
        model = load_model(ModelKind.PROTOCOL, PROTOCOL_TEXT, {"A": 6, "B": 4})
        assert model.crn is None
        assert model.config.as_dict() == {"A": 6, "B": 4, "U": 0}
        assert not model.protocol.is_compiled

    def test_crn_is_compiled_for_n(self):
        model = load_model(ModelKind.CRN, CRN_TEXT, {"A": 6, "B": 4}, n=10)
        assert model.crn is not None
        assert model.crn.volume == 10.0
        assert model.protocol.compiled is not None
        assert model.protocol.compiled.n == 10
        assert model.config.n == 10

    def test_crn_volume_override(self):
        model = load_model(ModelKind.CRN, CRN_TEXT, {"A": 6, "B": 4}, n=10, volume=2.5)
        assert model.protocol.compiled.volume == 2.5

    def test_crn_needs_n(self):
        with pytest.raises(InputError):
            load_model(ModelKind.CRN, CRN_TEXT, {"A": 6, "B": 4})

    def test_crn_n_must_match_counts(self):
        with pytest.raises(InputError):
            load_model(ModelKind.CRN, CRN_TEXT, {"A": 6, "B": 4}, n=12)

    def test_protocol_n_is_a_check(self):
        assert load_model(ModelKind.PROTOCOL, PROTOCOL_TEXT, {"A": 6, "B": 4}, n=10).config.n == 10
        with pytest.raises(InputError):
            load_model(ModelKind.PROTOCOL, PROTOCOL_TEXT, {"A": 6, "B": 4}, n=11)

    def test_protocol_rejects_volume(self):
        with pytest.raises(InputError):
            load_model(ModelKind.PROTOCOL, PROTOCOL_TEXT, {"A": 6, "B": 4}, volume=3.0)


class TestFiles:
    def test_kind_from_suffix(self):
        assert ModelKind.from_path(Path("model.crn")) is ModelKind.CRN
        assert ModelKind.from_path(Path("model.pp")) is ModelKind.PROTOCOL

    def test_read_text(self, tmp_path):
        path = tmp_path / "majority.pp"
        path.write_text(PROTOCOL_TEXT, encoding="utf-8")
        assert read_text(path) == PROTOCOL_TEXT

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            read_text(tmp_path / "missing.pp")
