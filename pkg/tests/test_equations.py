import math
import pytest
from aircombat.ppomcts import equations

def test_dump_lists_every_equation():
    lines = equations.dumpEquations()
    assert len(lines) == len(equations.AircraftEquations) \
            + len(equations.MissileEquations) \
            + len(equations.GeometryEquations) \
            + len(equations.GuidanceEquations)
    assert all(' = ' in s for s in lines)

def test_aircraft_rates_level_flight():
    rates = equations.aircraftRates(0,0,1000,300,0,0,0,1,0,9.8)
    assert rates == pytest.approx([300,0,0,0,0,0],abs=1e-12)

def test_geometry_of_diagonal_range():
    rng,beta,eps,beta_dot,eps_dot = equations.geometry(1000,1000,0,0,0,0)
    assert rng == pytest.approx(math.sqrt(2)*1000)
    assert beta == pytest.approx(math.pi/4)
    assert eps == pytest.approx(0.0)
    assert beta_dot == 0 and eps_dot == 0

def test_drag_force():
    assert equations.dragForce(900,0.607,0.0324,0.9) == \
            pytest.approx(0.5*0.607*900**2*0.0324*0.9,rel=1e-12)
