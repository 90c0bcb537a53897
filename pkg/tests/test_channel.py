import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cellbeam.channel import (
    LayoutSpec,
    ScenarioFormatError,
    apply_pathloss,
    bs_positions,
    build_correlation,
    generate_scenario,
    load_scenario,
    save_scenario,
    scenario_digest,
    validate_scenario,
    with_gamma,
)


class TestBuildCorrelation:
    def test_zero_spread_is_rank_one_steering(self):
        theta = 0.7
        r = build_correlation(theta, 0.0, 4)
        a = np.exp(1j * np.pi * np.arange(4) * math.sin(theta))
        assert_allclose(r, np.outer(a, a.conj()), atol=1e-12)
        vals = np.linalg.eigvalsh(r)
        assert_allclose(vals, [0.0, 0.0, 0.0, 4.0], atol=1e-9)

    def test_broadside_2x2_matches_formula(self):
        sig = math.radians(2.0)
        r = build_correlation(0.0, sig, 2)
        off = math.exp(-0.5 * (math.pi * sig) ** 2)
        assert_allclose(r, [[1.0, off], [off, 1.0]], atol=1e-12)
        assert np.abs(r.imag).max() <= 1e-15

    def test_oblique_is_psd_full_rank_unit_trace_rows(self):
        r = build_correlation(math.radians(30.0), math.radians(2.0), 4)
        assert np.abs(r - r.conj().T).max() <= 1e-14
        # Toeplitz: constant diagonals
        for k in range(1, 4):
            d = np.diagonal(r, offset=k)
            assert np.abs(d - d[0]).max() <= 1e-14
        vals = np.linalg.eigvalsh(r)
        assert vals[0] > 0
        assert_allclose(np.trace(r).real, 4.0, atol=1e-12)

    def test_requires_two_antennas(self):
        with pytest.raises(ValueError):
            build_correlation(0.0, 0.01, 1)


class TestApplyPathloss:
    def test_unit_distance(self, rng):
        r = build_correlation(0.1, 0.02, 3)
        assert_allclose(apply_pathloss(r, 1.0, -3.0), r)

    def test_reference_distance(self):
        r = np.eye(2, dtype=complex)
        out = apply_pathloss(r, 2000.0, -3.0)
        assert_allclose(out[0, 0].real, 1.25e-10, rtol=1e-12)

    def test_eigenvalues_scale(self):
        r = build_correlation(0.4, 0.03, 4)
        out = apply_pathloss(r, 7.0, -2.5)
        assert_allclose(np.linalg.eigvalsh(out), 7.0 ** -2.5 * np.linalg.eigvalsh(r),
                        atol=1e-15)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            apply_pathloss(np.eye(2), 0.0, -3.0)


class TestGenerateScenario:
    def test_two_cell_shapes_and_psd(self):
        s = generate_scenario(LayoutSpec("two-cell-line"), 2, 2, 4, 0.1, 1e-12, seed=7)
        assert s.R.shape == (2, 2, 2, 4, 4)
        validate_scenario(s)  # PSD, Hermitian, rank checks
        for n in range(2):
            for m in range(2):
                for i in range(2):
                    vals = np.linalg.eigvalsh(s.R[n, m, i])
                    assert vals[0] >= -1e-10 * vals[-1]

    def test_deterministic_under_seed(self):
        a = generate_scenario(LayoutSpec("two-cell-line"), 2, 2, 4, 0.1, 1e-12, seed=7)
        b = generate_scenario(LayoutSpec("two-cell-line"), 2, 2, 4, 0.1, 1e-12, seed=7)
        assert a == b
        c = generate_scenario(LayoutSpec("two-cell-line"), 2, 2, 4, 0.1, 1e-12, seed=8)
        assert a != c

    def test_hexagonal_seven_cells(self):
        s = generate_scenario(LayoutSpec("hexagonal-7"), 7, 2, 4, 0.1, 1e-12, seed=0)
        assert s.M == 7 and s.K == 2
        assert bs_positions(s.layout).shape == (7, 2)
        validate_scenario(s)

    def test_layout_cell_count_mismatch(self):
        with pytest.raises(ValueError):
            generate_scenario(LayoutSpec("two-cell-line"), 3, 2, 4, 0.1, 1e-12, seed=0)

    def test_own_cell_is_nearest_bs(self):
        s = generate_scenario(LayoutSpec("square-corners"), 4, 3, 4, 0.1, 1e-12, seed=2)
        for m in range(4):
            for i in range(3):
                dists = np.linalg.norm(s.bs_pos - s.user_pos[m, i], axis=1)
                assert np.argmin(dists) == m

    def test_guard_radius_respected(self):
        s = generate_scenario(LayoutSpec("two-cell-line"), 2, 50, 4, 0.1, 1e-12, seed=3)
        for m in range(2):
            d = np.linalg.norm(s.user_pos[m] - s.bs_pos[m], axis=1)
            assert d.min() >= 35.0
            assert d.max() <= 1000.0


class TestLayoutSpec:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            LayoutSpec("triangle")

    def test_rejects_positive_exponent(self):
        with pytest.raises(ValueError):
            LayoutSpec("two-cell-line", pathloss_exp=2.0)


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path, two_cell_scenario):
        path = tmp_path / "scenario.json"
        save_scenario(two_cell_scenario, path)
        loaded = load_scenario(path)
        assert loaded == two_cell_scenario
        assert np.array_equal(loaded.R, two_cell_scenario.R)
        assert scenario_digest(loaded) == scenario_digest(two_cell_scenario)

    def test_missing_gamma_is_schema_error(self, tmp_path, two_cell_scenario):
        path = tmp_path / "scenario.json"
        save_scenario(two_cell_scenario, path)
        doc = json.loads(path.read_text())
        del doc["gamma"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ScenarioFormatError, match="gamma"):
            load_scenario(path)

    def test_non_psd_matrix_rejected(self, tmp_path, two_cell_scenario):
        path = tmp_path / "scenario.json"
        save_scenario(two_cell_scenario, path)
        doc = json.loads(path.read_text())
        # flip the sign of one own-link diagonal entry
        doc["R"][0][0][0][1][1][0] = -abs(doc["R"][0][0][0][1][1][0]) - 1.0
        path.write_text(json.dumps(doc))
        with pytest.raises(ScenarioFormatError):
            load_scenario(path)

    def test_version_mismatch_rejected(self, tmp_path, two_cell_scenario):
        path = tmp_path / "scenario.json"
        save_scenario(two_cell_scenario, path)
        doc = json.loads(path.read_text())
        doc["version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ScenarioFormatError, match="version"):
            load_scenario(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioFormatError):
            load_scenario(path)


class TestWithGamma:
    def test_only_targets_change(self, two_cell_scenario):
        s2 = with_gamma(two_cell_scenario, 0.5)
        assert np.all(s2.gamma == 0.5)
        assert np.array_equal(s2.R, two_cell_scenario.R)
        assert np.array_equal(s2.sigma2, two_cell_scenario.sigma2)
