import math

import numpy as np
import pytest

from pdnverify.circuit import (ComponentSpec, Coupling, FrequencyGrid, PdnModel, branch_impedance,
                               coupled_reflected_impedance, loop_inductance, mutual_inductance,
                               network_impedance, resonance_frequency)
from pdnverify.errors import DomainError, ModelError, SingularityError


def single(spec, **kw):
    # a one-branch network: the "plane" is the part itself
    return PdnModel("P", plane_capacitance=spec.capacitance, plane_esr=spec.esr,
                    plane_esl=spec.esl, **kw)


class TestBranch:
    def test_pure_resistance_at_resonance(self):
        spec = ComponentSpec("C", "P", 0.1e-6, 0.05, 1e-9)
        f0 = 1 / (2 * math.pi * math.sqrt(1e-9 * 1e-7))
        z = branch_impedance(spec, f0)
        assert abs(z.real - 0.05) < 1e-15
        assert abs(z.imag) < 1e-9
        assert f0 == pytest.approx(15.915e6, rel=1e-4)

    def test_capacitive_regime(self):
        z = branch_impedance(ComponentSpec("C", "P", 10e-6, 0.01, 0.5e-9), 1e3)
        assert z.real == pytest.approx(0.01)
        assert z.imag == pytest.approx(-15.915, rel=1e-4)

    def test_ideal_capacitor(self):
        z = branch_impedance(ComponentSpec("C", "P", 0.1e-6), 1e6)
        assert z == pytest.approx(-1.5915j, rel=1e-4)

    def test_array_input(self):
        spec = ComponentSpec("C", "P", 1e-9, 0.1, 1e-9)
        f = np.array([1e6, 2e6])
        z = branch_impedance(spec, f)
        assert z.shape == (2,)
        assert z[1] == branch_impedance(spec, 2e6)

    @pytest.mark.parametrize("f", [0.0, -1.0, [1e6, 0.0]])
    def test_non_positive_frequency(self, f):
        with pytest.raises(DomainError):
            branch_impedance(ComponentSpec("C", "P", 1e-9), f)

    @pytest.mark.parametrize("kw", [dict(capacitance=0), dict(capacitance=-1e-9),
                                    dict(capacitance=1e-9, esr=-1), dict(capacitance=1e-9, esl=-1)])
    def test_invalid_component(self, kw):
        with pytest.raises(ModelError):
            ComponentSpec("C", "P", **kw)


class TestResonance:
    def test_values(self):
        assert resonance_frequency(1e-9, 10e-6) == pytest.approx(1.5915e6, rel=1e-4)
        assert resonance_frequency(1e-9, 0.1e-6) == pytest.approx(15.915e6, rel=1e-4)

    def test_doubling_c(self):
        assert resonance_frequency(2e-9, 2e-6) * math.sqrt(2) == pytest.approx(
            resonance_frequency(2e-9, 1e-6))

    @pytest.mark.parametrize("l,c", [(0, 1e-6), (1e-9, 0), (-1e-9, 1e-6)])
    def test_domain(self, l, c):
        with pytest.raises(DomainError):
            resonance_frequency(l, c)

    def test_component_property(self):
        assert ComponentSpec("C", "P", 1e-7, 0, 1e-9).resonance == resonance_frequency(1e-9, 1e-7)
        assert ComponentSpec("C", "P", 1e-7).resonance == math.inf


class TestGrid:
    def test_linear_endpoints(self):
        g = FrequencyGrid()
        f = g.frequencies
        assert f.size == 5000 and f[0] == 1e6 and f[-1] == 1e9
        assert np.all(np.diff(f) > 0)
        assert g.step == pytest.approx(999e6 / 4999)

    def test_log(self):
        f = FrequencyGrid(1e6, 1e9, 4, "logarithmic").frequencies
        assert f == pytest.approx([1e6, 1e7, 1e8, 1e9])
        assert f[0] == 1e6 and f[-1] == 1e9

    @pytest.mark.parametrize("args", [(0, 1e9), (1e6, 1e6), (1e6, 1e9, 1), (1e6, 1e9, 10, "cubic")])
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            FrequencyGrid(*args)


class TestNetwork:
    spec = ComponentSpec("C1", "P", 0.1e-6, 0.02, 0.8e-9)

    def test_single_branch_equals_branch(self):
        f = FrequencyGrid(1e6, 1e8, 101).frequencies
        # equal up to the rounding of 1 / (1 / z)
        assert network_impedance(single(self.spec), f) == pytest.approx(branch_impedance(self.spec, f),
                                                                        rel=1e-14)

    def test_identical_branches_halve(self):
        f = FrequencyGrid(1e6, 1e8, 101).frequencies
        m = single(self.spec, components=(ComponentSpec("C2", "P", 0.1e-6, 0.02, 0.8e-9),))
        assert network_impedance(m, f) == pytest.approx(branch_impedance(self.spec, f) / 2, rel=1e-12)

    def test_n_identical(self):
        f = np.array([3e6, 3e7])
        comps = tuple(ComponentSpec(f"C{i}", "P", 0.1e-6, 0.02, 0.8e-9) for i in range(4))
        m = single(self.spec, components=comps)
        assert network_impedance(m, f) == pytest.approx(branch_impedance(self.spec, f) / 5, rel=1e-12)

    def test_port_parasitics_in_series(self):
        f = np.array([1e6, 1e7, 1e8])
        m = single(self.spec, port_series_r=0.5, port_series_l=2e-9)
        want = 0.5 + 2j * math.pi * f * 2e-9 + branch_impedance(self.spec, f)
        assert network_impedance(m, f) == pytest.approx(want, rel=1e-12)

    def test_larger_capacitor_lowers_minimum(self):
        grid = FrequencyGrid(1e6, 1e8, 20000)
        f = grid.frequencies
        small = single(self.spec)
        both = small.with_components([ComponentSpec("Cbig", "P", 10e-6, 0.01, 1e-9)])
        lo_small = f[np.argmin(abs(network_impedance(small, grid)))]
        lo_both = f[np.argmin(abs(network_impedance(both, grid)))]
        assert lo_both < lo_small

    def test_removal_has_no_hidden_state(self):
        f = FrequencyGrid(1e6, 1e9, 500).frequencies
        extra = ComponentSpec("X", "P", 1e-6, 0.01, 1e-9)
        m = PdnModel("P", 0.1, 1e-9, components=(self.spec,))
        grown = m.with_components(m.components + (extra,))
        network_impedance(grown, f)
        shrunk = grown.with_components([self.spec])
        assert np.array_equal(network_impedance(shrunk, f), network_impedance(m, f))

    def test_finite_everywhere(self):
        m = PdnModel("P", 0, 0, components=(self.spec,))
        assert np.all(np.isfinite(network_impedance(m, FrequencyGrid(1e3, 1e10, 3000, "logarithmic"))))

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ModelError):
            PdnModel("P", components=(self.spec, self.spec))

    def test_plane_required(self):
        with pytest.raises(ModelError):
            PdnModel("P", plane_capacitance=0)

    def test_bare_defaults(self):
        m = PdnModel("P")
        assert m.is_bare
        assert (m.plane.capacitance, m.plane.esr, m.plane.esl) == (1e-9, 0.1, 5e-9)
        assert m.branches == (m.plane,)


class TestCoupling:
    peer = PdnModel("B", 0.01, 2e-9, 1e-9, 0.05, 0.3e-9)
    probed = PdnModel("A", 0.0, 1e-9, 0.5e-9, 0.05, 0.2e-9)

    def test_reflected_formula(self):
        assert coupled_reflected_impedance(1e-9, 1 + 0j, 159.155e6) == pytest.approx(1.0, rel=1e-5)
        assert coupled_reflected_impedance(0.0, 3 + 4j, 1e8) == 0

    def test_quadratic_in_m(self):
        a = coupled_reflected_impedance(1e-9, 2 + 1j, 1e8)
        b = coupled_reflected_impedance(2e-9, 2 + 1j, 1e8)
        assert b == pytest.approx(4 * a, rel=1e-12)

    def test_singular_peer(self):
        with pytest.raises(SingularityError):
            coupled_reflected_impedance(1e-9, 0j, 1e8)

    def test_k_zero_is_bit_identical(self):
        f = FrequencyGrid().frequencies
        coupled = PdnModel("A", 0.0, 1e-9, 0.5e-9, 0.05, 0.2e-9, coupling=Coupling(self.peer, 0.0))
        assert np.array_equal(network_impedance(coupled, f), network_impedance(self.probed, f))

    def test_mutual_inductance(self):
        coupled = PdnModel("A", 0.0, 1e-9, 0.5e-9, 0.05, 0.2e-9, coupling=Coupling(self.peer, 0.05))
        assert loop_inductance(self.probed) == pytest.approx(1.2e-9)
        assert loop_inductance(self.peer) == pytest.approx(2.3e-9)
        assert mutual_inductance(coupled) == pytest.approx(0.05 * math.sqrt(1.2e-9 * 2.3e-9))
        assert mutual_inductance(self.probed) == 0.0

    def test_coupled_adds_reflected_term(self):
        f = np.array([1e7, 1e8, 5e8])
        coupled = PdnModel("A", 0.0, 1e-9, 0.5e-9, 0.05, 0.2e-9, coupling=Coupling(self.peer, 0.05))
        m = mutual_inductance(coupled)
        want = network_impedance(self.probed, f) + (2 * math.pi * f * m) ** 2 / network_impedance(self.peer, f)
        assert network_impedance(coupled, f) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("k", [-0.1, 1.0, 1.5])
    def test_k_range(self, k):
        with pytest.raises(ModelError):
            Coupling(self.peer, k)
