import pytest

import noetherkit as nk
from noetherkit.legendre import (RegularityError, UnsupportedLagrangianError,
                                 hessian, legendre_transform, to_phase)
from noetherkit.sysdsl import parse

CROSS_TERM = """
system "cross"
params { }
coords { q1, q2 }
lagrangian = dq1*dq2
generator "shift" { delta { q1 = 1 } }
"""

PLAIN_OSC = """
system "plain_osc"
params { }
coords { q1 }
lagrangian = 1/2*dq1^2 - 1/2*q1^2
generator "time" { delta { } delta_t = 1 }
"""


class TestHessian:
    def test_galilei_diagonal(self, galilei):
        t = galilei.table
        m = t.sym("M")
        w, det = hessian(galilei)
        for i in range(3):
            for j in range(3):
                assert w[i][j] == (m if i == j else t.zero())
        assert det == m ** 3

    def test_magnetic_diagonal(self, magnetic):
        t = magnetic.table
        m = t.sym("M")
        w, det = hessian(magnetic)
        assert w[0][0] == m and w[1][1] == m
        assert w[0][1].is_zero() and w[1][0].is_zero()
        assert det == m ** 2

    def test_off_diagonal_quadratic_form(self):
        spec = parse(CROSS_TERM)
        t = spec.table
        w, det = hessian(spec)
        assert w[0][0].is_zero() and w[1][1].is_zero()
        assert w[0][1] == t.one() and w[1][0] == t.one()
        assert det == t.const(-1)


class TestLegendreTransform:
    def test_galilei_hamiltonian(self, galilei):
        ps = legendre_transform(galilei)
        t = galilei.table
        m = t.sym("M")
        want = sum((t.sym(p) ** 2 / (2 * m) for p in t.momenta), t.zero())
        assert ps.hamiltonian == want

    def test_magnetic_hamiltonian(self, magnetic):
        ps = legendre_transform(magnetic)
        t = magnetic.table
        m, e, c, b = t.syms("M", "e", "c", "B")
        q1, q2 = t.sym("q1"), t.sym("q2")
        a = (-(b / 2) * q2, (b / 2) * q1)
        want = t.zero()
        for i, p in enumerate(t.momenta):
            want = want + (t.sym(p) - (e / c) * a[i]) ** 2 / (2 * m)
        assert ps.hamiltonian == want

    def test_harmonic_oscillator(self):
        spec = parse(PLAIN_OSC)
        ps = legendre_transform(spec)
        t = spec.table
        assert ps.hamiltonian == t.sym("p1") ** 2 / 2 + t.sym("q1") ** 2 / 2

    def test_hamilton_first_equation(self, magnetic):
        ps = legendre_transform(magnetic)
        t = magnetic.table
        for pname, dq in zip(t.momenta, ps.inverse_velocity_map):
            assert ps.hamiltonian.diff(pname) == dq

    def test_momentum_round_trip(self, magnetic):
        ps = legendre_transform(magnetic)
        t = magnetic.table
        bindings = dict(zip(t.velocities, ps.inverse_velocity_map))
        for i, pname in enumerate(t.momenta):
            assert ps.momenta[i].subs(bindings) == t.sym(pname)

    def test_legendre_involution(self, magnetic):
        # p.dq - H with the momenta substituted back reproduces the Lagrangian.
        ps = legendre_transform(magnetic)
        t = magnetic.table
        e = t.zero()
        for pname, dq in zip(t.momenta, t.velocities):
            e = e + t.sym(pname) * t.sym(dq)
        e = e - ps.hamiltonian
        back = e.subs(dict(zip(t.momenta, ps.momenta)))
        assert back == magnetic.lagrangian

    def test_hamiltonian_hessian_is_inverse(self, magnetic):
        ps = legendre_transform(magnetic)
        t = magnetic.table
        n = len(t.coords)
        h_pp = [[ps.hamiltonian.diff(t.momenta[i]).diff(t.momenta[j])
                 for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                acc = t.zero()
                for k in range(n):
                    acc = acc + ps.hessian[i][k] * h_pp[k][j]
                assert acc == (t.one() if i == j else t.zero())


class TestToPhase:
    def test_momentum_definition(self, galilei):
        ps = legendre_transform(galilei)
        t = galilei.table
        assert to_phase(t.sym("M") * t.sym("dq1"), ps) == t.sym("p1")

    def test_phase_space_lagrangian(self, magnetic):
        ps = legendre_transform(magnetic)
        t = magnetic.table
        want = t.zero()
        for pname in t.momenta:
            want = want + t.sym(pname) * ps.hamiltonian.diff(pname)
        want = want - ps.hamiltonian
        assert to_phase(magnetic.lagrangian, ps) == want
        assert ps.lagrangian_phase == want

    def test_coordinate_unchanged(self, galilei):
        ps = legendre_transform(galilei)
        q1 = galilei.table.sym("q1")
        assert to_phase(q1, ps) == q1

    def test_rejects_momentum_input(self, galilei):
        ps = legendre_transform(galilei)
        with pytest.raises(ValueError):
            to_phase(galilei.table.sym("p1"), ps)


class TestErrors:
    def test_singular_hessian(self):
        text = CROSS_TERM.replace("dq1*dq2", "1/2*(dq1 + dq2)^2")
        with pytest.raises(RegularityError, match="singular"):
            legendre_transform(parse(text))

    def test_velocity_cubed_unsupported(self):
        text = PLAIN_OSC.replace("1/2*dq1^2 - 1/2*q1^2", "dq1^3")
        with pytest.raises(UnsupportedLagrangianError):
            legendre_transform(parse(text))

    def test_unsigned_parameter_not_certified(self):
        text = """
        system "unsigned"
        params { M }
        coords { q1 }
        lagrangian = M/2*dq1^2
        generator "shift" { delta { q1 = 1 } }
        """
        with pytest.raises(RegularityError, match="declare"):
            legendre_transform(parse(text))

    def test_coordinate_dependent_determinant_unsupported(self):
        text = PLAIN_OSC.replace("1/2*dq1^2 - 1/2*q1^2", "1/2*q1^2*dq1^2")
        with pytest.raises(UnsupportedLagrangianError):
            legendre_transform(parse(text))
