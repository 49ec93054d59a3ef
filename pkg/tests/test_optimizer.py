import numpy as np
import pytest

from conftest import CACHE_DIR, EX1_DC, OUTER_15_16
from fecdesign import Infeasible
from fecdesign.channel import SnrPoint
from fecdesign.ensemble import InnerEnsemble
from fecdesign.optimizer import (ChartProvider, DesignPoint, DesignSpace,
                                 ParetoPoint, _objective, _quant_points,
                                 derive_pt, optimize_inner, pareto_sweep,
                                 solve_fixed, validate_design)

R_IN = 8.0 / 9.0
P_SC = 5.02e-3


def _point_from(lam, iq, pt, ptar, snr, l0):
    ens = InnerEnsemble.from_edge(lam, l0, EX1_DC, tol=1e-6)
    from fecdesign.ensemble import inner_complexity, total_complexity
    iters = int(np.ceil(iq - 1e-9))
    eta_i = inner_complexity(R_IN, EX1_DC, ens.nu, iters)
    return DesignPoint(snr=snr, outer=OUTER_15_16, ensemble=ens, iters=iters,
                       i_q=iq, eta_i=eta_i,
                       eta=total_complexity(eta_i, OUTER_15_16.r_sc),
                       pt=pt, p_target=ptar)


def test_solve_fixed_satisfies_all_constraints(cheap_charts, cheap_space, snr_ex1):
    lam, iq, pt, ptar = solve_fixed(cheap_charts, EX1_DC, 1.25, 0.1556,
                                    R_IN, P_SC, cheap_space)
    assert lam[1] == pytest.approx(1.25 / EX1_DC)
    assert lam[1:].sum() == pytest.approx(1.0, abs=1e-6)
    assert np.all(lam >= 0)
    assert 0 < pt < snr_ex1.p0
    assert iq > 0
    point = _point_from(lam, iq, pt, ptar, snr_ex1, 0.1556)
    validate_design(point, cheap_charts, cheap_space, R_IN)


def test_solve_fixed_deterministic(cheap_charts, cheap_space):
    a = solve_fixed(cheap_charts, EX1_DC, 1.25, 0.1556, R_IN, P_SC, cheap_space)
    b = solve_fixed(cheap_charts, EX1_DC, 1.25, 0.1556, R_IN, P_SC, cheap_space)
    assert np.array_equal(a[0], b[0])
    assert a[1:] == b[1:]


def test_looser_budget_never_costs_iterations(cheap_charts, cheap_space):
    _, iq_tight, pt_tight, _ = solve_fixed(cheap_charts, EX1_DC, 1.25, 0.1556,
                                           R_IN, P_SC, cheap_space)
    _, iq_loose, pt_loose, _ = solve_fixed(cheap_charts, EX1_DC, 1.25, 0.1556,
                                           R_IN, 2 * P_SC, cheap_space)
    assert pt_loose >= pt_tight * 0.99
    assert iq_loose <= iq_tight + 0.05


def test_infeasible_rate_raises(cheap_charts, cheap_space):
    with pytest.raises(Infeasible):
        solve_fixed(cheap_charts, EX1_DC, 1.25, 0.0, 0.995, P_SC, cheap_space)
    with pytest.raises(Infeasible):
        solve_fixed(cheap_charts, EX1_DC, 25.0, 0.0, R_IN, P_SC, cheap_space)
    with pytest.raises(Infeasible):
        solve_fixed(cheap_charts, EX1_DC, 1.25, 0.95, R_IN, P_SC, cheap_space)


def test_derive_pt_hits_budget(cheap_charts):
    from fecdesign.exitchart import message_to_bit_error
    lam = np.zeros(9)
    lam[1] = 1.25 / EX1_DC
    lam[3] = 0.4
    lam[4] = 1.0 - lam[1] - lam[3]
    pt, target = derive_pt(lam, 0.1556, EX1_DC, cheap_charts, P_SC, R_IN)
    assert message_to_bit_error(lam, 0.1556, EX1_DC, cheap_charts, pt) <= target * 1.01


def test_objective_convexity_smoke(cheap_charts, cheap_space):
    p0 = cheap_charts.snr.p0
    q = _quant_points(p0, p0 / 50, 200)
    degrees = np.arange(2, 9)
    fq = np.vstack([cheap_charts.interp(i, np.minimum(q, cheap_charts.grid[-1]))
                    for i in degrees])
    delta = (p0 - p0 / 50) / 200
    scale = 1.0 - 1.25 / EX1_DC
    rng = np.random.default_rng(0)
    for _ in range(20):
        x1 = rng.dirichlet(np.ones(7)) * scale
        x2 = rng.dirichlet(np.ones(7)) * scale
        v1, _ = _objective(x1, fq, q, delta, scale)
        v2, _ = _objective(x2, fq, q, delta, scale)
        vm, _ = _objective(0.5 * (x1 + x2), fq, q, delta, scale)
        assert vm <= 0.5 * (v1 + v2) + 1e-9


def test_objective_gradient_finite_difference(cheap_charts):
    p0 = cheap_charts.snr.p0
    q = _quant_points(p0, p0 / 50, 100)
    degrees = np.arange(2, 9)
    fq = np.vstack([cheap_charts.interp(i, np.minimum(q, cheap_charts.grid[-1]))
                    for i in degrees])
    delta = (p0 - p0 / 50) / 100
    scale = 1.0 - 1.25 / EX1_DC
    x = np.full(7, scale / 7)
    v, g = _objective(x, fq, q, delta, scale)
    eps = 1e-7
    for j in range(7):
        xp = x.copy()
        xp[j] += eps
        vp, _ = _objective(xp, fq, q, delta, scale)
        assert (vp - v) / eps == pytest.approx(g[j], rel=1e-3, abs=1e-6)


def test_optimize_inner_trivial_high_snr():
    snr = SnrPoint.from_db(12.0)
    space = DesignSpace(d_v_max=6, chart_samples=20000, chart_grid_points=15,
                        dc_bar_candidates=(24.0,), nu_values=(0.0,),
                        l0_values=(0.0, 0.4, 0.8))
    provider = ChartProvider(space, seed=5, cache_dir=CACHE_DIR)
    point = optimize_inner(snr, R_IN, OUTER_15_16, space, provider)
    assert point.iters <= 2
    assert point.eta_i < 5.0
    assert point.feasible


def test_chart_provider_cache(tmp_path, snr_ex1):
    space = DesignSpace(d_v_max=4, chart_samples=15000, chart_grid_points=8)
    a = ChartProvider(space, seed=1, cache_dir=str(tmp_path))(snr_ex1, 8.0, 0.5)
    files = list(tmp_path.glob("exit_*.json"))
    assert len(files) == 1
    b = ChartProvider(space, seed=1, cache_dir=str(tmp_path))(snr_ex1, 8.0, 0.5)
    assert np.array_equal(a.f, b.f)


def test_pareto_pruning(monkeypatch, snr_ex1):
    import fecdesign.optimizer as opt

    scripted = {5.0: 60.0, 5.5: 40.0, 6.0: 45.0, 6.5: 20.0}

    def fake_optimize(r_cat, snr, table, space, provider):
        if snr.es_n0_db not in scripted:
            raise Infeasible("off grid")
        eta_i = scripted[snr.es_n0_db]
        return DesignPoint(snr=snr, outer=OUTER_15_16, ensemble=None, iters=1,
                           i_q=1.0, eta_i=eta_i, eta=eta_i / 0.9375, pt=1e-3,
                           p_target=1e-3)

    monkeypatch.setattr(opt, "optimize_concat", fake_optimize)
    frontier = opt.pareto_sweep(5.0 / 6.0, [5.0, 5.5, 6.0, 6.5, 7.5],
                                [OUTER_15_16], DesignSpace(), None)
    etas = [p.eta_i for p in frontier]
    snrs = [p.snr_db for p in frontier]
    assert snrs == [5.0, 5.5, 6.5]  # 6.0 dominated by 5.5, 7.5 infeasible
    assert etas == sorted(etas, reverse=True)  # frontier monotone
    with pytest.raises(ValueError):
        pareto_sweep(5.0 / 6.0, [], [OUTER_15_16], DesignSpace(), None)


def test_design_space_validation():
    with pytest.raises(ValueError):
        DesignSpace(l0_step=0.05)
    space = DesignSpace(nu_values=(0.5, 1.0), l0_values=(0.0, 0.1))
    assert list(space.nu_candidates()) == [0.5, 1.0]
    assert list(space.l0_candidates(0.05)) == [0.0]
    assert all(d > 2.0 for d in space.dc_candidates(1.0))
