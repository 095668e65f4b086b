import numpy as np
import pytest

from gsloc import (
    DataError,
    LocalizerConfig,
    OutlierSpec,
    ReferencePoint,
    build_radio_map,
    centroid,
    cs_baseline,
    desk_scene,
    generate_online,
    generate_tensor,
    localize,
)
from gsloc.localization import GS_LAMBDA1, GS_LAMBDA2


@pytest.fixture(scope="module")
def campaign():
    scene = desk_scene(3, grid_rows=6, grid_cols=8, num_aps=10)
    tensor, rps = generate_tensor(scene, 8)
    radio_map = build_radio_map(tensor, rps)
    return scene, tensor, radio_map


def zero_noise_campaign(seed=4):
    scene = desk_scene(seed, grid_rows=6, grid_cols=8, num_aps=10,
                       shadowing_sigma_db=0.0)
    tensor, rps = generate_tensor(scene, 3)
    return scene, tensor, build_radio_map(tensor, rps)


# -- centroid -----------------------------------------------------------------

def test_centroid_one_hot_is_exact():
    rps = [ReferencePoint(0, 0.0, 0.0), ReferencePoint(1, 5.0, 1.0), ReferencePoint(2, 9.0, 2.0)]
    assert centroid(np.array([0.0, 1.0, 0.0]), rps) == (5.0, 1.0)


def test_centroid_midpoint_and_scale_invariance():
    rps = [ReferencePoint(0, 0.0, 0.0), ReferencePoint(1, 2.0, 0.0)]
    assert centroid(np.array([0.5, 0.5]), rps) == (1.0, 0.0)
    assert centroid(np.array([1.5, 1.5]), rps) == (1.0, 0.0)


def test_centroid_clips_negative_weights():
    rps = [ReferencePoint(0, 0.0, 0.0), ReferencePoint(1, 2.0, 0.0)]
    assert centroid(np.array([-3.0, 1.0]), rps) == (2.0, 0.0)
    with pytest.raises(DataError, match="centroid"):
        centroid(np.array([-1.0, -2.0]), rps)


# -- pipeline -----------------------------------------------------------------

def test_exact_fingerprint_replay_localizes_to_the_rp():
    scene, tensor, radio_map = zero_noise_campaign()
    rp = radio_map.rps[27]
    m = generate_online(scene, (rp.x, rp.y), rng_seed=1)
    cfg = LocalizerConfig(mode="gs", num_aps=6, k=5)
    result = localize(radio_map, tensor, m, cfg)
    err = np.hypot(result.position[0] - rp.x, result.position[1] - rp.y)
    assert err <= scene.spacing_ft / 2


def test_position_stays_inside_rp_bounding_box(campaign):
    scene, tensor, radio_map = campaign
    x0, y0, x1, y1 = scene.bounding_box()
    for t in range(5):
        m = generate_online(scene, (x1 * 0.9, y1 * 0.1), rng_seed=t)
        result = localize(radio_map, tensor, m, LocalizerConfig(num_aps=6, k=4))
        assert x0 <= result.position[0] <= x1
        assert y0 <= result.position[1] <= y1


def test_localize_is_deterministic(campaign):
    scene, tensor, radio_map = campaign
    m = generate_online(scene, (6.0, 6.0), rng_seed=9)
    cfg = LocalizerConfig(num_aps=6, k=4)
    a = localize(radio_map, tensor, m, cfg)
    b = localize(radio_map, tensor, m, cfg)
    assert abs(a.position[0] - b.position[0]) <= 1e-9
    assert abs(a.position[1] - b.position[1]) <= 1e-9


def test_k1_matches_manual_single_group_solve(campaign):
    scene, tensor, radio_map = campaign
    m = generate_online(scene, (8.0, 5.0), rng_seed=2)
    from gsloc.ap_selection import apply_selection, select_fisher
    from gsloc.solver import SglProblem, solve
    from gsloc.clustering import build_coverage, online_coverage, layered_cluster

    cfg = LocalizerConfig(num_aps=6, k=1)
    result = localize(radio_map, tensor, m, cfg)
    sel = select_fisher(tensor, 6)
    profile = build_coverage(tensor, cfg.gamma_dbm)
    grouping = layered_cluster(profile, online_coverage(m, cfg.gamma_dbm), 1)
    problem = SglProblem(
        design=apply_selection(sel, radio_map.psi),
        observation=apply_selection(sel, m.y),
        lambda1=GS_LAMBDA1,
        lambda2=GS_LAMBDA2,
        groups=grouping.groups,
        group_weights=grouping.weights,
        tolerance=cfg.solver_tolerance,
    )
    manual = solve(problem)
    assert np.abs(result.theta - manual.theta).max() <= 1e-9
    assert result.grouping.num_groups == 1


def test_mgs_clean_kappa_stays_below_threshold():
    scene, tensor, radio_map = zero_noise_campaign()
    rp = radio_map.rps[10]
    m = generate_online(scene, (rp.x, rp.y), rng_seed=3)
    result = localize(radio_map, tensor, m, LocalizerConfig(mode="mgs", num_aps=10, k=4))
    assert result.kappa is not None
    assert np.abs(result.kappa).max() < result.diagnostics["outlier_threshold_db"]
    assert result.detected_outlier_aps == ()


def test_mgs_flags_corrupted_aps():
    scene, tensor, radio_map = zero_noise_campaign()
    rp = radio_map.rps[20]
    spec = OutlierSpec(fraction_of_aps=0.2, magnitude_db=40.0, rng_seed=8)
    m = generate_online(scene, (rp.x, rp.y), outliers=spec, rng_seed=8)
    result = localize(
        radio_map, tensor, m,
        LocalizerConfig(mode="mgs", num_aps=10, k=4, lambda3=2.0),
    )
    assert set(m.corrupted_aps) <= set(result.detected_outlier_aps)


def test_mgs_and_gs_agree_without_outliers():
    scene, tensor, radio_map = zero_noise_campaign()
    rp = radio_map.rps[33]
    m = generate_online(scene, (rp.x, rp.y), rng_seed=5)
    gs = localize(radio_map, tensor, m, LocalizerConfig(mode="gs", num_aps=8, k=4))
    mgs = localize(
        radio_map, tensor, m,
        LocalizerConfig(mode="mgs", num_aps=8, k=4,
                        lambda1=GS_LAMBDA1, lambda2=GS_LAMBDA2),
    )
    assert np.hypot(gs.position[0] - mgs.position[0],
                    gs.position[1] - mgs.position[1]) <= 0.5


def test_cs_baseline_runs_without_tensor(campaign):
    scene, tensor, radio_map = campaign
    m = generate_online(scene, (5.0, 5.0), rng_seed=6)
    cfg = LocalizerConfig(mode="cs", ap_method="strongest", num_aps=6)
    result = cs_baseline(radio_map, m, cfg)
    assert result.grouping is None
    assert result.kappa is None
    x0, y0, x1, y1 = scene.bounding_box()
    assert x0 <= result.position[0] <= x1


def test_gs_without_tensor_is_an_error(campaign):
    _, _, radio_map = campaign
    m = generate_online(desk_scene(3, grid_rows=6, grid_cols=8, num_aps=10), (5.0, 5.0), rng_seed=1)
    with pytest.raises(DataError, match="tensor"):
        localize(radio_map, None, m, LocalizerConfig(mode="gs"))


def test_ap_universe_mismatch_is_an_error(campaign):
    scene, tensor, radio_map = campaign
    other = desk_scene(9, grid_rows=6, grid_cols=8, num_aps=11)
    m = generate_online(other, (5.0, 5.0), rng_seed=1)
    with pytest.raises(DataError, match="AP universe"):
        localize(radio_map, tensor, m, LocalizerConfig(num_aps=6))


def test_all_zero_theta_falls_back_to_nearest_rss(campaign):
    scene, tensor, radio_map = campaign
    m = generate_online(scene, (5.0, 5.0), rng_seed=7)
    # a lambda1 far above ||H^T y||_inf forces theta = 0
    cfg = LocalizerConfig(mode="gs", num_aps=6, k=4, lambda1=1e9, lambda2=0.0)
    result = localize(radio_map, tensor, m, cfg)
    assert result.diagnostics["fallback"] == "nearest-rss"
    x0, y0, x1, y1 = scene.bounding_box()
    assert x0 <= result.position[0] <= x1
    assert y0 <= result.position[1] <= y1


def test_config_validation():
    with pytest.raises(DataError):
        LocalizerConfig(mode="knn")
    with pytest.raises(DataError):
        LocalizerConfig(k=0)
    with pytest.raises(DataError):
        LocalizerConfig(lambda1=-1.0)
    with pytest.raises(DataError):
        LocalizerConfig(ap_method="entropy")
