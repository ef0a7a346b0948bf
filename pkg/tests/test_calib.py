import numpy as np
import pytest

import speclocus as sl
from speclocus import calib, errors
from speclocus.chroma import U_BASIS, geomean_chroma


def forward_truth(sensors):
    bc = sl.band_constants(sensors)
    return U_BASIS @ bc.w, U_BASIS @ (bc.e - bc.e_M)


def patch_logr_groups(sensors, patch_ids, temps):
    groups, tgroups = [], []
    for pid in patch_ids:
        s = sl.effective_reflectance(sl.colorchecker_reflectance(pid), sensors)
        rows = []
        for T in temps:
            f = sl.light_factors(sensors, T)
            rows.append(geomean_chroma(s * f).logr)
        groups.append(rows)
        tgroups.append(list(temps))
    return groups, tgroups


class TestLightChangeDirection:
    def test_recovers_analytic_direction(self, delta_sensors):
        temps = np.arange(5500.0, 10501.0, 500.0)
        groups, tgroups = patch_logr_groups(delta_sensors, range(1, 19), temps)
        xi_hat, diag = sl.light_change_direction(groups, temps=tgroups)
        bc = sl.band_constants(delta_sensors)
        e_dir = (bc.e - bc.e_M) / np.linalg.norm(bc.e - bc.e_M)
        v = np.asarray(diag["direction3"])
        # the line is recovered to 1e-9; the orientation follows the
        # hot-minus-cool convention, which points opposite to (e - e_M)
        assert abs(abs(v @ e_dir) - 1.0) < 1e-9
        drift_hot_cool = groups[0][-1] - groups[0][0]
        assert v @ drift_hot_cool > 0
        assert abs(np.linalg.norm(xi_hat) - 1.0) < 1e-12

    def test_eigenvalue_ratio_large_for_delta(self, delta_sensors):
        temps = np.arange(5500.0, 10501.0, 500.0)
        groups, tgroups = patch_logr_groups(delta_sensors, range(1, 19), temps)
        _, diag = sl.light_change_direction(groups, temps=tgroups)
        assert diag["eigenvalue_ratio"] > 100.0

    def test_identical_observations_degenerate(self):
        v = np.array([0.1, -0.2, 0.1])
        with pytest.raises(errors.DegenerateDataError):
            sl.light_change_direction([[v, v, v], [v, v]])

    def test_single_temperature_degenerate(self, delta_sensors):
        groups, tgroups = patch_logr_groups(delta_sensors, (1, 4), [6500.0])
        with pytest.raises(errors.DegenerateDataError):
            sl.light_change_direction(
                [[g[0], g[0]] for g in groups], temps=[[6500.0, 6500.0]] * 2)

    def test_isotropic_cloud_warns(self):
        rng = np.random.default_rng(11)
        groups = []
        for _ in range(4):
            pts = rng.normal(size=(30, 3))
            pts -= pts.mean(axis=1, keepdims=True)  # keep zero-sum like log r
            groups.append(list(pts))
        with pytest.warns(errors.IllConditionedWarning):
            sl.light_change_direction(groups)


class TestTwoLightSolve:
    def test_exact_recovery(self):
        eta = np.array([0.21, -0.43])
        xi = np.array([1800.0, 5200.0])
        xi_hat = xi / np.linalg.norm(xi)
        chi1 = eta + xi / 6500.0
        chi2 = eta + xi / 9500.0
        locus = sl.two_light_solve(chi1, 6500.0, chi2, 9500.0, xi_hat)
        assert np.max(np.abs(locus.eta - eta)) < 1e-12
        assert np.max(np.abs(locus.xi - xi)) < 1e-9  # xi carries Kelvin units
        assert locus.t_range == (6500.0, 9500.0)

    def test_sign_of_xi_hat_does_not_matter(self):
        eta = np.array([0.21, -0.43])
        xi = np.array([1800.0, 5200.0])
        xi_hat = xi / np.linalg.norm(xi)
        chi1, chi2 = eta + xi / 6500.0, eta + xi / 9500.0
        a = sl.two_light_solve(chi1, 6500.0, chi2, 9500.0, xi_hat)
        b = sl.two_light_solve(chi1, 6500.0, chi2, 9500.0, -xi_hat)
        assert np.allclose(a.eta, b.eta, atol=1e-15)
        assert np.allclose(a.xi, b.xi, atol=1e-12)

    def test_label_swap_symmetry(self):
        eta = np.array([-0.1, 0.3])
        xi = np.array([2500.0, 4000.0])
        xi_hat = xi / np.linalg.norm(xi)
        chi1, chi2 = eta + xi / 5000.0, eta + xi / 8000.0
        a = sl.two_light_solve(chi1, 5000.0, chi2, 8000.0, xi_hat)
        b = sl.two_light_solve(chi2, 8000.0, chi1, 5000.0, xi_hat)
        assert np.allclose(a.eta, b.eta, atol=1e-15)
        assert np.allclose(a.xi, b.xi, atol=1e-9)

    def test_equal_temperature_rejected(self):
        with pytest.raises(errors.SingularSystemError):
            sl.two_light_solve([0.0, 0.0], 6500.0, [0.1, 0.1], 6500.0, [1.0, 0.0])

    def test_coincident_lights_degenerate(self):
        chi = np.array([0.2, 0.1])
        with pytest.raises(errors.DegenerateDataError):
            sl.two_light_solve(chi, 5000.0, chi, 9000.0, np.array([1.0, 0.0]))

    def test_off_direction_warns(self):
        chi1 = np.array([0.0, 0.0])
        chi2 = np.array([0.0, 1.0])  # difference orthogonal-ish to xi_hat
        xi_hat = np.array([0.9397, 0.342])  # ~70 degrees away
        xi_hat = xi_hat / np.linalg.norm(xi_hat)
        with pytest.warns(errors.InconsistentDataWarning):
            sl.two_light_solve(chi1, 5000.0, chi2, 9000.0, xi_hat)


class TestLmsLineFit:
    def line_points(self, xs, slope=2.0, offset=1.0):
        xs = np.asarray(xs, dtype=float)
        return np.stack([xs, slope * xs + offset], axis=1)

    def test_exact_points_with_gross_outliers(self):
        pts = self.line_points(np.arange(10))
        bad = np.array([[2.0, 30.0], [5.0, -20.0], [8.0, 60.0]])
        all_pts = np.vstack([pts, bad])
        locus, outliers = sl.lms_line_fit(all_pts)
        assert sorted(outliers.tolist()) == [10, 11, 12]
        d = locus.xi / np.linalg.norm(locus.xi)
        res = (all_pts[:10, 1] - locus.eta[1]) * d[0] - (all_pts[:10, 0] - locus.eta[0]) * d[1]
        assert np.max(np.abs(res)) < 1e-9

    def test_two_points(self):
        locus, outliers = sl.lms_line_fit([[0.0, 0.0], [1.0, 1.0]])
        assert outliers.size == 0
        d = locus.xi / np.linalg.norm(locus.xi)
        assert abs(abs(d @ np.array([1.0, 1.0]) / np.sqrt(2)) - 1.0) < 1e-12

    def test_coincident_points_degenerate(self):
        with pytest.raises(errors.DegenerateDataError):
            sl.lms_line_fit([[1.0, 1.0]] * 5)

    def test_breakdown_45_percent(self):
        rng = np.random.default_rng(4)
        pts = self.line_points(np.arange(40))
        idx = rng.choice(40, size=18, replace=False)
        pts[idx] += rng.uniform(5.0, 40.0, size=(18, 2)) * np.sign(rng.normal(size=(18, 2)))
        clean = np.setdiff1d(np.arange(40), idx)
        locus, outliers = sl.lms_line_fit(pts)
        d = locus.xi / np.linalg.norm(locus.xi)
        res = (pts[clean, 1] - locus.eta[1]) * d[0] - (pts[clean, 0] - locus.eta[0]) * d[1]
        assert np.max(np.abs(res)) < 1e-6

    def test_planckian_lights_with_fluorescent_outliers(self, delta_sensors):
        temps = np.arange(4000.0, 10001.0, 500.0)
        chis = []
        for T in temps:
            chis.append(geomean_chroma(sl.light_factors(delta_sensors, T)).chi)
        chis = np.array(chis)
        eta_t, xi_t = forward_truth(delta_sensors)
        perp = np.array([-xi_t[1], xi_t[0]]) / np.linalg.norm(xi_t)
        fluor = chis[[2, 6, 10]] + 0.12 * perp  # far off the locus
        pts = np.vstack([chis, fluor])
        inv = np.concatenate([1.0 / temps, [np.nan] * 3])
        locus, outliers = sl.lms_line_fit(pts, inverse_temps=inv)
        assert {13, 14, 15} <= set(outliers.tolist())
        assert np.linalg.norm(locus.eta - eta_t) < 1e-6
        assert np.linalg.norm(locus.xi - xi_t) / np.linalg.norm(xi_t) < 1e-6

    def test_resolves_eta_xi_from_inverse_temps(self, delta_sensors):
        temps = np.arange(4500.0, 11001.0, 500.0)
        eta_t, xi_t = forward_truth(delta_sensors)
        pts = np.array([eta_t + xi_t / T for T in temps])
        locus, outliers = sl.lms_line_fit(pts, inverse_temps=1.0 / temps)
        assert outliers.size == 0 or np.max(np.abs(locus.eta - eta_t)) < 1e-9
        assert np.max(np.abs(locus.eta - eta_t)) < 1e-9
        assert np.max(np.abs(locus.xi - xi_t)) / np.linalg.norm(xi_t) < 1e-9
        assert locus.t_range == (4500.0, 11000.0)


class TestCalibrate:
    def test_delta_round_trip(self, delta_sensors, locus_delta):
        eta_t, xi_t = forward_truth(delta_sensors)
        assert np.linalg.norm(locus_delta.eta - eta_t) / np.linalg.norm(eta_t) < 1e-6
        assert np.linalg.norm(locus_delta.xi - xi_t) / np.linalg.norm(xi_t) < 1e-6
        assert locus_delta.t_range == (5500.0, 10500.0)

    def test_gaussian_round_trip_within_5_percent(self, gauss_sensors, locus_gauss):
        eta_t, xi_t = forward_truth(gauss_sensors)
        rel_eta = np.linalg.norm(locus_gauss.eta - eta_t) / np.linalg.norm(eta_t)
        rel_xi = np.linalg.norm(locus_gauss.xi - xi_t) / np.linalg.norm(xi_t)
        assert rel_eta < 0.05
        assert rel_xi < 0.05

    def test_lms_mode_with_many_lights(self, delta_sensors):
        eta_t, xi_t = forward_truth(delta_sensors)
        obs = sl.synthetic_observations(
            delta_sensors, light_temps=np.arange(4500.0, 10501.0, 1000.0))
        locus = sl.calibrate(obs, sensors=delta_sensors)
        assert locus.diagnostics["method"] == "lms"
        assert np.linalg.norm(locus.eta - eta_t) / np.linalg.norm(eta_t) < 1e-6
        assert np.linalg.norm(locus.xi - xi_t) / np.linalg.norm(xi_t) < 1e-6

    def test_intensity_invariance(self, delta_sensors, locus_delta):
        rng = np.random.default_rng(9)
        obs = sl.synthetic_observations(delta_sensors)
        scaled = [calib.CalibObservation(kind=o.kind, rgb=o.rgb * rng.uniform(0.2, 8.0),
                                         patch_id=o.patch_id, T=o.T, camera_id=o.camera_id)
                  for o in obs]
        locus = sl.calibrate(scaled, sensors=delta_sensors)
        assert np.max(np.abs(locus.eta - locus_delta.eta)) < 1e-9
        assert np.max(np.abs(locus.xi - locus_delta.xi)) / np.linalg.norm(locus_delta.xi) < 1e-9

    def test_no_known_lights_rejected(self, delta_sensors):
        obs = [o for o in sl.synthetic_observations(delta_sensors) if o.kind == "patch"]
        with pytest.raises(errors.InvalidArgumentError, match="unrecoverable"):
            sl.calibrate(obs, sensors=delta_sensors)

    def test_mixed_cameras_rejected(self, delta_sensors):
        obs = sl.synthetic_observations(delta_sensors, camera_id="cam-a")
        obs += sl.synthetic_observations(delta_sensors, camera_id="cam-b")
        with pytest.raises(errors.InvalidArgumentError, match="mix"):
            sl.calibrate(obs, sensors=delta_sensors)

    def test_grey_patch_light_path(self, delta_sensors, locus_delta):
        # lights seen through a flat grey patch: chromaticity nearly unchanged
        obs = sl.synthetic_observations(delta_sensors, grey_patch=22)
        locus = sl.calibrate(obs, sensors=delta_sensors)
        assert np.linalg.norm(locus.eta - locus_delta.eta) < 0.02

    def test_specular_point_membership(self, delta_sensors, locus_delta):
        # a purely specular pixel at temperature T sits on the locus line
        for T in (5700.0, 8200.0, 10100.0):
            chi = geomean_chroma(sl.light_factors(delta_sensors, T) * 0.37).chi
            assert np.max(np.abs(chi - locus_delta.point_at(T))) < 1e-6


class TestProfileIO:
    def test_round_trip_bit_exact(self, tmp_path, locus_delta):
        path = tmp_path / "cam.profile"
        sl.save_profile(path, locus_delta)
        back = sl.load_profile(path)
        assert np.array_equal(back.eta, locus_delta.eta)
        assert np.array_equal(back.xi, locus_delta.xi)
        assert back.t_range == locus_delta.t_range
        sl.save_profile(tmp_path / "again.profile", back)
        assert (tmp_path / "cam.profile").read_text() == (tmp_path / "again.profile").read_text()

    def test_rejects_wrong_format(self, tmp_path):
        p = tmp_path / "junk.profile"
        p.write_text("format: something-else\n")
        with pytest.raises(errors.InvalidArgumentError):
            sl.load_profile(p)

    def test_rejects_wrong_basis(self, tmp_path, locus_delta):
        p = tmp_path / "cam.profile"
        sl.save_profile(p, locus_delta)
        text = p.read_text().replace("u-canonical-1", "other-basis")
        p.write_text(text)
        with pytest.raises(errors.InvalidArgumentError, match="basis"):
            sl.load_profile(p)
