import math

import numpy as np
import pytest

from fkfp.grid import Field, make_grid
from fkfp.operators import OperatorParams
from fkfp.solver import InitialDataSpec, SolverConfig, SourceSpec, evolve
from fkfp.verify import (
    TestFamily,
    build_family,
    check_commutator,
    check_energy,
    check_gevrey_frequency,
    check_gevrey_weight,
    check_interpolation_eps,
    check_interpolation_product,
    edge_share,
)

G = make_grid(1, 12.0, 256)


@pytest.fixture(scope="module")
def family():
    return build_family(G)


def test_family_invariants(family):
    assert len(family) == 9
    band = G.n_per_axis // 8
    for name, u in family:
        assert np.abs(u.values).max() > 0
        if name.startswith("band"):
            c = np.fft.fftn(u.values)
            outside = np.abs(G.wavenumbers[0]) > band
            assert np.all(c[outside] == 0) or np.abs(c[outside]).max() < 1e-12 * np.abs(c).max()


def test_family_in_two_dims():
    fam = build_family(make_grid(2, 6.0, 32), seeds=(0,))
    assert len(fam) == 7
    assert all(u.values.shape == (32, 32) for _, u in fam)


def test_commutator_vanishes_without_weight(family):
    res = check_commutator(family, 0.6, 0.0)
    assert res.fitted_constant == 0.0 and res.verdict == "pass"


def test_commutator_rejects_nonpositive_order(family):
    with pytest.raises(ValueError):
        check_commutator(family, 0.0, 2.0)


def test_commutator_at_r_equal_2s(family):
    res = check_commutator(family, 0.6, 2.0)  # s = 0.3
    assert math.isfinite(res.fitted_constant) and res.fitted_constant > 0
    assert res.passed and res.confidence == "normal"
    assert res.extra["denominator"] == "||u||_{2,m}"
    assert check_commutator(family, 1.5, 2.0).extra["denominator"] == "||u||_{H^{r-1}_m}"


def test_commutator_dilation_consistency(family):
    ratios = {d["member"]: d["ratio"] for d in check_commutator(family, 1.0, 2.0).details}
    for a, b in [("0.5", "1"), ("1", "2"), ("2", "4")]:
        q = ratios[f"gauss-sigma{a}"] / ratios[f"gauss-sigma{b}"]
        assert 0.1 < q < 10


def test_interpolation_eps_trivial_and_finite(family):
    res = check_interpolation_eps(family, 1.0, 1.0, 1.0, eps_list=(1.0, 2.0))
    assert res.fitted_constant == 0.0 and res.passed
    res = check_interpolation_eps(family, 1.0, 1.0, 1.0, eps_list=(0.01,))
    assert 0 < res.fitted_constant < math.inf and res.passed
    with pytest.raises(ValueError):
        check_interpolation_eps(family, 0.0, 1.0, 1.0)


def test_interpolation_product_single_mode_is_one():
    g = make_grid(1, 4.0, 32)
    xi = 3 * math.pi / 4
    mode = g.field(lambda v: np.exp(1j * xi * v))
    fam = TestFamily(g, (("mode", mode),))
    res = check_interpolation_product(fam, 1.0, 0.0, 0.5)
    assert res.fitted_constant == pytest.approx(1.0, rel=1e-13)


def test_interpolation_product_family(family):
    res = check_interpolation_product(family, 1.0, 1.0, 0.5)
    assert res.passed and res.stability_ratio <= 100
    with pytest.raises(ValueError):
        check_interpolation_product(family, 1.0, 1.0, 0.0)


def test_under_resolved_family_is_low_confidence():
    fam = build_family(make_grid(1, 12.0, 8))
    res = check_commutator(fam, 0.6, 2.0)
    assert math.isfinite(res.fitted_constant)
    assert res.confidence == "low"


def test_edge_share():
    g = make_grid(1, 10.0, 64)
    assert edge_share(g.zeros()) == 0.0
    assert edge_share(g.field(lambda v: np.exp(-v * v / 2))) < 1e-12
    nyq = Field(g, (-1.0) ** np.arange(64))
    assert edge_share(nyq) == pytest.approx(1.0)


# trajectory checks -------------------------------------------------------------

def small_run(grid=make_grid(1, 10.0, 128), p=OperatorParams(0.5, 0.5), u0=InitialDataSpec("gaussian"), source=None, t_end=1.0):
    return evolve(grid, u0, SolverConfig(t_end=t_end), p, source)


def test_energy_zero_solution():
    res = check_energy(small_run(u0=InitialDataSpec("zero")))
    assert res.fitted_constant == 0.0 and res.verdict == "vacuous-pass"


def test_energy_at_gamma_zero_norm_nonincreasing():
    traj = small_run(p=OperatorParams(0.0, 0.5))
    l2 = [s.report.l2 for s in traj.samples]
    assert np.all(np.diff(l2) <= 0)
    res = check_energy(traj)
    assert res.passed and res.extra["growth_rate"] == 0.0


def test_energy_with_source_and_bound():
    src = SourceSpec("gaussian", amplitude=1.0, width=1.0)
    traj = small_run(source=src)
    res = check_energy(traj)
    assert res.passed and math.isfinite(res.extra["growth_rate"])
    assert check_energy(traj, b0_bound=res.fitted_constant * 0.5).verdict == "fail"


def test_gevrey_checks_on_zero_solution_are_vacuous():
    traj = small_run(u0=InitialDataSpec("zero"))
    assert check_gevrey_frequency(traj).verdict == "vacuous-pass"
    assert check_gevrey_weight(traj).verdict == "vacuous-pass"


def test_gevrey_checks_refuse_s_equal_one():
    traj = small_run(p=OperatorParams(0.0, 1.0), t_end=0.2)
    with pytest.raises(ValueError):
        check_gevrey_frequency(traj)
    with pytest.raises(ValueError):
        check_gevrey_weight(traj)


def test_gevrey_frequency_passes_on_smooth_data():
    res = check_gevrey_frequency(small_run())
    assert res.passed and res.stability_ratio <= 3
    assert res.extra["B1"] > 0
    assert all(row["t"] >= 0.05 for row in res.details)


def test_gevrey_weight_concentrated_data_is_small_and_passes():
    traj = small_run(u0=InitialDataSpec("gaussian", width=0.3), t_end=0.3)
    res = check_gevrey_weight(traj)
    assert res.passed
    assert res.fitted_constant < 1.0


def test_gevrey_weight_small_box_is_truncation_limited():
    traj = small_run(grid=make_grid(1, 2.0, 64), u0=InitialDataSpec("gaussian", width=1.0))
    assert check_gevrey_weight(traj).verdict == "truncation-limited"


def test_gevrey_weight_rejects_unknown_source_kind():
    traj = small_run(t_end=0.2)

    class Odd:
        kind = "polynomial"
        is_zero = False

    object.__setattr__(traj, "source", Odd())
    with pytest.raises(ValueError):
        check_gevrey_weight(traj)


def test_order_probe_at_s_075(ref_traj_s075):
    # the capped exponent 2 s~ = 1 passes; the uncapped 2 s = 1.5 is recorded alongside
    capped = check_gevrey_frequency(ref_traj_s075)
    uncapped = check_gevrey_frequency(ref_traj_s075, exponent=1.5)
    assert capped.passed
    assert math.isfinite(uncapped.stability_ratio)
    print(f"s=0.75 stability ratio: exponent 1.0 -> {capped.stability_ratio:.4f}, "
          f"exponent 1.5 -> {uncapped.stability_ratio:.4f}")


def test_check_result_serialises(family):
    d = check_commutator(family, 1.0, -1.0).to_dict()
    assert {"name", "fitted_constant", "stability_ratio", "verdict", "threshold", "details"} <= set(d)
