import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdnverify.board import (add_component, counterfeit_components, dump_board, evaluation_board,
                             format_quantity, load_board, parse_board, parse_component, parse_quantity,
                             remove_component, save_board)
from pdnverify.circuit import ComponentSpec, network_impedance
from pdnverify.errors import ModelError, ParseError

MINIMAL = """\
[board]
name = "mini"

[pdn.1V8]
port_l = "1nH"

[component.C1]
pdn = "1V8"
value = "10uF"
esr = "5mohm"
esl = "3nH"

[config.one]
components = ["C1"]
"""


class TestQuantity:
    @pytest.mark.parametrize("text,unit,want", [
        ("10uF", "F", 1e-5), ("10µF", "F", 1e-5), ("100nF", "F", 1e-7), ("3.58mohm", "ohm", 3.58e-3),
        ("50ohm", "ohm", 50.0), ("50Ω", "ohm", 50.0), ("1GHz", "Hz", 1e9), ("476pH", "H", 4.76e-10),
        ("2.5", "H", 2.5), (0.01, "ohm", 0.01), (" 1 MHz ", "Hz", 1e6), ("1.5e3kHz", "Hz", 1.5e6),
    ])
    def test_parse(self, text, unit, want):
        assert parse_quantity(text, unit) == want

    @pytest.mark.parametrize("text,unit", [("10uH", "F"), ("10u", "F"), ("ten", "F"), ("1KHz", "Hz"),
                                           (True, "F"), ("", "ohm")])
    def test_reject(self, text, unit):
        with pytest.raises(ValueError):
            parse_quantity(text, unit)

    @given(st.floats(1e-15, 1e12), st.sampled_from(["F", "H", "ohm", "Hz"]))
    def test_format_roundtrip(self, v, unit):
        assert parse_quantity(format_quantity(v, unit), unit) == v

    def test_format_is_short(self):
        assert format_quantity(1e-5, "F") == "10uF"
        assert format_quantity(3.58e-3, "ohm") == "3.58mohm"
        assert format_quantity(1e9, "Hz") == "1GHz"


class TestEvaluationBoard:
    board = evaluation_board()

    def test_contents(self):
        b = self.board
        assert set(b.pdns) == {"1V8", "3V3"} and b.probe == "1V8"
        assert [c.id for c in b.components] == ["C19", "C20", "C30"] + [f"C{i}" for i in range(21, 27)]
        assert b.component("C30").pdn == "3V3"
        assert b.pdns["1V8"].peer == "3V3" and b.pdns["1V8"].k == 0.05
        assert list(b.configs) == ["bare", "2caps", "3caps", "5caps", "7caps", "9caps"]
        assert [len(b.configs[n]) for n in b.configs] == [0, 2, 3, 5, 7, 9]
        assert (b.sweep.f_start, b.sweep.f_stop, b.sweep.points) == (1e6, 1e9, 5000)
        assert b.z0 == 50.0

    def test_capacitor_values(self):
        values = {c.id: c.capacitance for c in self.board.components}
        assert all(values[i] == 10e-6 for i in ("C19", "C20", "C30"))
        assert all(values[f"C{i}"] == 0.1e-6 for i in range(21, 27))

    def test_models(self):
        m = self.board.model_for(config="3caps")
        assert [c.id for c in m.components] == ["C19", "C20"]
        assert [c.id for c in m.coupling.peer.components] == ["C30"]
        assert self.board.model_for(config="bare").is_bare

    def test_configs_nest(self):
        names = list(self.board.configs)
        for a, b in zip(names, names[1:]):
            assert set(self.board.configs[a]) < set(self.board.configs[b])

    def test_dump_parse_roundtrip(self):
        assert parse_board(dump_board(self.board)) == self.board


class TestParse:
    def test_minimal(self):
        b = parse_board(MINIMAL)
        assert b.name == "mini" and b.default_pdn == "1V8"
        assert b.component("C1").capacitance == 1e-5
        assert b.model_for(config="one").components[0].esl == 3e-9
        assert b.model_for().coupling is None

    def test_bytes_and_file(self, tmp_path):
        path = tmp_path / "b.toml"
        path.write_text(MINIMAL, encoding="utf-8")
        assert load_board(path) == parse_board(MINIMAL.encode()) == parse_board(MINIMAL)

    def test_save_roundtrip(self, tmp_path):
        b = parse_board(MINIMAL)
        save_board(b, tmp_path / "out.toml")
        assert load_board(tmp_path / "out.toml") == b

    def test_undeclared_pdn(self):
        text = MINIMAL + '\n[component.C9]\npdn = "2V5"\nvalue = "1uF"\n'
        with pytest.raises(ParseError) as err:
            parse_board(text)
        assert "C9" in str(err.value) and "2V5" in str(err.value)
        assert err.value.line == text.splitlines().index('pdn = "2V5"') + 1

    def test_unknown_key_has_section_and_line(self):
        text = MINIMAL.replace('esr = "5mohm"', 'esr = "5mohm"\ntolerance = 0.1')
        with pytest.raises(ParseError) as err:
            parse_board(text)
        assert err.value.section == "component.C1"
        assert err.value.line == text.splitlines().index("tolerance = 0.1") + 1
        assert "tolerance" in str(err.value)

    @pytest.mark.parametrize("old,new,fragment", [
        ('value = "10uF"', 'value = "10uH"', "expected unit F"),
        ('value = "10uF"', 'value = "-1uF"', "capacitance"),
        ('components = ["C1"]', 'components = ["C1", "C7"]', "C7"),
        ('components = ["C1"]', 'components = ["C1", "C1"]', "duplicate"),
        ('name = "mini"', 'name = "mini"\nprobe = "5V"', "5V"),
        ('port_l = "1nH"', 'coupling = { peer = "1V8" }', "itself"),
        ('port_l = "1nH"', 'coupling = { peer = "9V" }', "9V"),
        ('port_l = "1nH"', 'coupling = { peer = "1V8", k = 1.5 }', "k"),
        ('[board]', '[boards]', "unknown section"),
        ('[config.one]', '[config.one]\nextra = 1', "extra"),
    ])
    def test_errors(self, old, new, fragment):
        with pytest.raises(ParseError, match=fragment):
            parse_board(MINIMAL.replace(old, new))

    def test_invalid_toml_line(self):
        with pytest.raises(ParseError) as err:
            parse_board(MINIMAL + "\n[pdn\n")
        assert err.value.line == len(MINIMAL.splitlines()) + 2

    def test_missing_board(self):
        with pytest.raises(ParseError, match="board"):
            parse_board(MINIMAL.replace('[board]\nname = "mini"\n', ""))

    def test_sweep(self):
        b = parse_board(MINIMAL + '\n[sweep]\nf_start = "10MHz"\npoints = 11\nspacing = "logarithmic"\n')
        assert b.sweep.frequencies[0] == 1e7 and b.sweep.points == 11 and b.sweep.f_stop == 1e9
        with pytest.raises(ParseError, match="points"):
            parse_board(MINIMAL + '\n[sweep]\npoints = 1.5\n')
        with pytest.raises(ParseError):
            parse_board(MINIMAL + '\n[sweep]\nf_start = "2GHz"\n')


class TestEdits:
    board = evaluation_board()
    extra = ComponentSpec("C40", "1V8", 1e-6, 0.01, 0.5e-9)

    def test_add_remove_roundtrip(self):
        grown = add_component(self.board, self.extra, configs=["9caps"])
        assert grown.configs["9caps"][-1] == "C40"
        assert parse_board(dump_board(grown)) == grown
        assert remove_component(grown, "C40") == self.board

    def test_add_changes_response(self):
        grown = add_component(self.board, self.extra, configs=["2caps"])
        f = self.board.sweep
        before = network_impedance(self.board.model_for(config="2caps"), f)
        after = network_impedance(grown.model_for(config="2caps"), f)
        assert not np.allclose(before, after)

    def test_remove_strips_configs(self):
        b = remove_component(self.board, "C19")
        assert all("C19" not in ids for ids in b.configs.values())

    def test_errors(self):
        with pytest.raises(ModelError):
            add_component(self.board, self.board.components[0])
        with pytest.raises(ModelError):
            add_component(self.board, ComponentSpec("C41", "2V5", 1e-6))
        with pytest.raises(ModelError):
            add_component(self.board, self.extra, configs=["nope"])
        with pytest.raises(ModelError):
            remove_component(self.board, "C99")
        with pytest.raises(ModelError):
            self.board.configuration("nope")

    def test_counterfeit(self):
        fake = counterfeit_components(self.board, ["C19"], 10, 1.3)
        assert fake.component("C19").esl == pytest.approx(10 * self.board.component("C19").esl)
        assert fake.component("C19").esr == pytest.approx(1.3 * self.board.component("C19").esr)
        assert fake.component("C20") == self.board.component("C20")
        with pytest.raises(ModelError):
            counterfeit_components(self.board, ["C19"], 0, 1)


class TestComponentArg:
    def test_full(self):
        assert parse_component("C40:1V8:1uF:10mohm:0.5nH") == ComponentSpec("C40", "1V8", 1e-6, 0.01, 0.5e-9)

    def test_defaults(self):
        assert parse_component("C40:1V8:1uF") == ComponentSpec("C40", "1V8", 1e-6)

    @pytest.mark.parametrize("text", ["C40", "C40:1V8", "C40:1V8:1uF:1:2:3", "C40:1V8:1uH"])
    def test_bad(self, text):
        with pytest.raises(ValueError):
            parse_component(text)
