import numpy as np
import pytest

from conftest import dense_pmax
from helios.errors import DegenerateCurve, ParseError, SchemaError
from helios.mpp import MppConfig, batch_mpp_csv, find_mpp, golden_section_max
from helios.pv_model import STC, EnvConditions, solve_output_current

# mpmath dense scan at 25 C, 500 W/m2 (scripts/golden_values.py)
GOLDEN_HALF_SUN = (25.8835345729, 3.77308131462, 97.6606806531)


def test_stc_matches_reported_point(params):
    r = find_mpp(params, STC)
    assert r.p_max == pytest.approx(200.017, rel=0.01)
    assert abs(r.v_mp - 26.4) <= 0.3
    assert r.i_mp == pytest.approx(7.5764, rel=0.01)
    assert r.p_max == r.v_mp * r.i_mp
    assert r.solver_evals > 0


def test_dark_is_degenerate(params):
    with pytest.raises(DegenerateCurve):
        find_mpp(params, EnvConditions(298.15, 0.0))


def test_half_sun_golden(params):
    r = find_mpp(params, EnvConditions(298.15, 500.0))
    assert r.p_max == pytest.approx(GOLDEN_HALF_SUN[2], abs=1e-3)
    assert r.v_mp == pytest.approx(GOLDEN_HALF_SUN[0], abs=5e-3)


def test_refined_point_dominates_bracket(params):
    cfg = MppConfig()
    r = find_mpp(params, STC, cfg)
    # neighbouring grid voltages of the coarse sweep
    from helios.pv_model import open_circuit_voltage

    grid = np.linspace(0, open_circuit_voltage(params, STC), cfg.coarse_points)
    p_grid = grid * solve_output_current(params, STC, grid)
    assert r.p_max >= p_grid.max()


def test_oracle_equivalence_random_conditions(params):
    rng = np.random.default_rng(7)
    for _ in range(20):
        env = EnvConditions.from_celsius(rng.uniform(15, 40), rng.uniform(200, 1090))
        _, _, p_dense = dense_pmax(params, env.t_k, env.g)
        assert find_mpp(params, env).p_max == pytest.approx(p_dense, abs=1e-3)


def test_monotone_in_irradiance(params):
    p = [find_mpp(params, EnvConditions(298.15, g)).p_max for g in (200, 400, 600, 800, 1000)]
    assert all(b > a for a, b in zip(p, p[1:]))


@pytest.mark.parametrize("t_c", [15.0, 25.0, 40.0])
@pytest.mark.parametrize("g", [200.0, 645.0, 1090.0])
def test_inside_nameplate(params, t_c, g):
    env = EnvConditions.from_celsius(t_c, g)
    r = find_mpp(params, env)
    assert r.i_mp < solve_output_current(params, env, 0.0)
    if g <= params.g_ref:
        assert r.i_mp < params.isc_ref
    assert r.v_mp < params.voc_ref


def test_golden_section_on_parabola():
    x, fx, evals = golden_section_max(lambda x: -((x - 1.2345) ** 2), 0.0, 3.0, 1e-8)
    assert x == pytest.approx(1.2345, abs=1e-8)
    assert evals > 10


def test_config_validation():
    with pytest.raises(ValueError):
        MppConfig(v_tol=0.0)


class TestBatch:
    def test_batch_csv(self, params):
        out = batch_mpp_csv(params, "t_C,g_Wm2\n25,1000\n30,800\n")
        lines = out.splitlines()
        assert lines[0] == "t_C,g_Wm2,v_mp_V,i_mp_A,p_max_W"
        assert len(lines) == 3
        assert float(lines[1].split(",")[4]) == pytest.approx(find_mpp(params, STC).p_max, rel=1e-15)

    def test_bad_header(self, params):
        with pytest.raises(SchemaError):
            batch_mpp_csv(params, "T,G\n25,1000\n")

    def test_bad_row_reports_line(self, params):
        with pytest.raises(ParseError, match="line 3"):
            batch_mpp_csv(params, "t_C,g_Wm2\n25,1000\n25,abc\n")

    def test_dark_row_names_condition(self, params):
        with pytest.raises(DegenerateCurve, match="g=0"):
            batch_mpp_csv(params, "t_C,g_Wm2\n25,0\n")
