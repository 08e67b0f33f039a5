import numpy as np
import pytest

from hscube.colorimetry import (
    GAMMA_EXPONENT,
    GAMMA_KNEE,
    LABEL_CORRECTED_NUANCE_EX,
    LABEL_CORRECTED_SPECIM_IQ,
    XYZ_TO_LINEAR_RGB,
    CameraRangeSpec,
    XyzColor,
    builtin_cmf,
    builtin_d65,
    fold_correct_cmf,
    gamma_encode,
    gamma_encode_array,
    reconstruct_rgb_pixel,
    spectrum_to_xyz,
    xyz_to_linear_rgb,
)
from hscube.spectra import SampledSpectrum, trapz, trapz_values

NUANCE_RANGE = CameraRangeSpec(captured_min_nm=450.0, captured_max_nm=950.0)
SPECIM_RANGE = CameraRangeSpec(captured_min_nm=400.0, captured_max_nm=1000.0)

NUANCE_BANDS = np.arange(450.0, 951.0, 10.0)
SPECIM_BANDS = np.linspace(400.0, 1000.0, 204)


def flat_spectrum(bands, level=1.0):
    return SampledSpectrum(bands, np.full(bands.size, level))


class TestBuiltinTables:
    def test_luminance_peak_at_555(self):
        cmf = builtin_cmf()
        at_555 = cmf.y_bar.values[cmf.wavelengths_nm == 555.0][0]
        assert at_555 == pytest.approx(1.0, abs=1e-12)

    def test_channels_non_negative(self):
        cmf = builtin_cmf()
        for ch in (cmf.x_bar, cmf.y_bar, cmf.z_bar):
            assert np.all(ch.values >= 0)

    def test_xbar_tail_vanishes(self):
        cmf = builtin_cmf()
        assert cmf.x_bar.values[-1] < 1e-4

    def test_grid_span(self):
        cmf = builtin_cmf()
        assert cmf.wavelengths_nm[0] == 380.0
        assert cmf.wavelengths_nm[-1] == 830.0

    def test_d65_normalized_at_560(self):
        d65 = builtin_d65()
        at_560 = d65.spd.values[d65.spd.wavelengths_nm == 560.0][0]
        assert at_560 == pytest.approx(100.0, abs=1e-12)

    def test_d65_non_negative_and_aligned(self):
        d65 = builtin_d65()
        assert np.all(d65.spd.values >= 0)
        assert d65.spd.values.size == d65.spd.wavelengths_nm.size

    def test_d65_chromaticity_near_standard(self):
        # Sanity-check of the embedded tables against the published white point.
        cmf = builtin_cmf()
        d65 = builtin_d65()
        w = cmf.wavelengths_nm
        x = trapz_values(w, cmf.x_bar.values * d65.spd.values)
        y = trapz_values(w, cmf.y_bar.values * d65.spd.values)
        z = trapz_values(w, cmf.z_bar.values * d65.spd.values)
        total = x + y + z
        assert x / total == pytest.approx(0.31272, abs=5e-4)
        assert y / total == pytest.approx(0.32903, abs=5e-4)


class TestFoldCorrection:
    def test_doubles_at_boundary(self):
        cmf = builtin_cmf()
        corrected = fold_correct_cmf(cmf, NUANCE_RANGE)
        w = cmf.wavelengths_nm
        at = w == 450.0
        assert corrected.x_bar.values[at][0] == pytest.approx(
            2.0 * cmf.x_bar.values[at][0], rel=1e-12)
        assert corrected.label == LABEL_CORRECTED_NUANCE_EX

    def test_unchanged_beyond_fold_window(self):
        cmf = builtin_cmf()
        corrected = fold_correct_cmf(cmf, NUANCE_RANGE)
        w = cmf.wavelengths_nm
        beyond = w > 450.0 + (450.0 - 380.0)
        for orig, corr in ((cmf.x_bar, corrected.x_bar),
                           (cmf.y_bar, corrected.y_bar),
                           (cmf.z_bar, corrected.z_bar)):
            np.testing.assert_array_equal(corr.values[beyond], orig.values[beyond])

    def test_mirror_value_inside_window(self):
        cmf = builtin_cmf()
        corrected = fold_correct_cmf(cmf, SPECIM_RANGE)
        w = cmf.wavelengths_nm
        # 405 mirrors to 395 over the 400 boundary (both grid points).
        got = corrected.z_bar.values[w == 405.0][0]
        expected = cmf.z_bar.values[w == 405.0][0] + cmf.z_bar.values[w == 395.0][0]
        assert got == pytest.approx(expected, rel=1e-12)
        assert corrected.label == LABEL_CORRECTED_SPECIM_IQ

    @pytest.mark.parametrize("camera", [NUANCE_RANGE, SPECIM_RANGE])
    def test_fold_conserves_weight(self, camera):
        cmf = builtin_cmf()
        corrected = fold_correct_cmf(cmf, camera)
        w = cmf.wavelengths_nm
        tail = w >= camera.captured_min_nm
        for orig, corr in ((cmf.x_bar, corrected.x_bar),
                           (cmf.y_bar, corrected.y_bar),
                           (cmf.z_bar, corrected.z_bar)):
            full = trapz(orig)
            folded = float(trapz_values(w[tail], corr.values[tail]))
            assert folded == pytest.approx(full, rel=0.01)

    def test_no_missing_range_returns_input(self):
        cmf = builtin_cmf()
        camera = CameraRangeSpec(captured_min_nm=380.0, captured_max_nm=1000.0)
        assert fold_correct_cmf(cmf, camera) is cmf

    def test_correcting_a_corrected_set_rejected(self):
        corrected = fold_correct_cmf(builtin_cmf(), NUANCE_RANGE)
        with pytest.raises(ValueError):
            fold_correct_cmf(corrected, NUANCE_RANGE)


class TestSpectrumToXyz:
    def test_perfect_reflector_has_unit_luminance(self):
        xyz = spectrum_to_xyz(flat_spectrum(SPECIM_BANDS, 1.0),
                              builtin_cmf(), builtin_d65())
        assert xyz.y == pytest.approx(1.0, abs=1e-6)

    def test_zero_reflectance_is_black(self):
        xyz = spectrum_to_xyz(flat_spectrum(NUANCE_BANDS, 0.0),
                              builtin_cmf(), builtin_d65())
        assert (xyz.x, xyz.y, xyz.z) == (0.0, 0.0, 0.0)

    def test_half_reflector_scales_linearly(self):
        xyz = spectrum_to_xyz(flat_spectrum(NUANCE_BANDS, 0.5),
                              builtin_cmf(), builtin_d65())
        assert xyz.y == pytest.approx(0.5, abs=1e-6)

    def test_scaling_reflectance_scales_xyz(self):
        rng = np.random.default_rng(21)
        refl = rng.uniform(0, 1, SPECIM_BANDS.size)
        base = spectrum_to_xyz(SampledSpectrum(SPECIM_BANDS, refl),
                               builtin_cmf(), builtin_d65())
        scaled = spectrum_to_xyz(SampledSpectrum(SPECIM_BANDS, 0.37 * refl),
                                 builtin_cmf(), builtin_d65())
        for a, b in zip(base.as_array(), scaled.as_array()):
            assert b == pytest.approx(0.37 * a, rel=1e-12)

    def test_single_band_rejected(self):
        with pytest.raises(ValueError):
            spectrum_to_xyz(SampledSpectrum([550.0], [0.5]),
                            builtin_cmf(), builtin_d65())

    def test_corrected_normalizer_flag(self):
        # Default normalizer uses the original luminance curve; switching to
        # the corrected one pulls the flat-reflector Y back to exactly 1.
        corrected = fold_correct_cmf(builtin_cmf(), NUANCE_RANGE)
        spec = flat_spectrum(NUANCE_BANDS, 1.0)
        default = spectrum_to_xyz(spec, corrected, builtin_d65())
        toggled = spectrum_to_xyz(spec, corrected, builtin_d65(),
                                  normalize_with_corrected=True)
        assert default.y > 1.0
        assert toggled.y == pytest.approx(1.0, abs=1e-9)


class TestLinearRgb:
    def test_black(self):
        rgb, clipped = xyz_to_linear_rgb(XyzColor(0, 0, 0))
        assert rgb.as_array().tolist() == [0.0, 0.0, 0.0]
        assert rgb.linear
        assert clipped == 0

    def test_d65_white_point_maps_to_unit(self):
        rgb, _ = xyz_to_linear_rgb(XyzColor(0.95047, 1.0, 1.08883))
        np.testing.assert_allclose(rgb.as_array(), 1.0, atol=1e-3)

    def test_red_primary(self):
        xyz = np.array([0.4124, 0.2126, 0.0193])
        raw = XYZ_TO_LINEAR_RGB @ xyz
        assert raw[0] == pytest.approx(1.0, abs=5e-3)
        assert abs(raw[1]) < 5e-3 and abs(raw[2]) < 5e-3
        rgb, clipped = xyz_to_linear_rgb(XyzColor(*xyz))
        assert rgb.g == 0.0 or rgb.g < 5e-3
        assert clipped >= 0

    def test_clipping_counted(self):
        _, clipped = xyz_to_linear_rgb(XyzColor(1.0, 0.0, 0.0))
        assert clipped > 0


class TestGamma:
    def test_endpoints(self):
        assert gamma_encode(0.0) == 0.0
        assert gamma_encode(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_knee_branch_gap(self):
        lower = 12.92 * GAMMA_KNEE
        upper = 1.055 * GAMMA_KNEE**GAMMA_EXPONENT - 0.055
        assert lower == pytest.approx(0.040450, abs=1e-6)
        assert abs(upper - lower) < 5e-4

    def test_strictly_increasing(self):
        grid = np.linspace(0.0, 1.0, 10001)
        encoded = gamma_encode_array(grid)
        assert np.all(np.diff(encoded) > 0)

    def test_domain_checked(self):
        with pytest.raises(ValueError):
            gamma_encode(-0.01)
        with pytest.raises(ValueError):
            gamma_encode(1.01)


class TestReconstructPixel:
    def test_flat_specim_near_white(self):
        rgb, _ = reconstruct_rgb_pixel(flat_spectrum(SPECIM_BANDS, 1.0), SPECIM_RANGE)
        assert not rgb.linear
        for channel in rgb.as_array():
            assert 0.95 <= channel <= 1.0

    def test_cross_camera_consistency(self):
        nuance, _ = reconstruct_rgb_pixel(flat_spectrum(NUANCE_BANDS, 1.0), NUANCE_RANGE)
        specim, _ = reconstruct_rgb_pixel(flat_spectrum(SPECIM_BANDS, 1.0), SPECIM_RANGE)
        diff = np.abs(nuance.as_array() - specim.as_array())
        assert np.all(diff < 0.02)

    def test_uncorrected_shows_blue_deficit(self):
        nuance, _ = reconstruct_rgb_pixel(flat_spectrum(NUANCE_BANDS, 1.0),
                                          NUANCE_RANGE, correct=False)
        specim, _ = reconstruct_rgb_pixel(flat_spectrum(SPECIM_BANDS, 1.0),
                                          SPECIM_RANGE, correct=False)
        assert nuance.b < specim.b

    def test_zero_reflectance_is_black(self):
        rgb, clipped = reconstruct_rgb_pixel(flat_spectrum(NUANCE_BANDS, 0.0), NUANCE_RANGE)
        assert rgb.as_array().tolist() == [0.0, 0.0, 0.0]
        assert clipped == 0

    def test_deterministic(self):
        spec = flat_spectrum(SPECIM_BANDS, 0.42)
        a, _ = reconstruct_rgb_pixel(spec, SPECIM_RANGE)
        b, _ = reconstruct_rgb_pixel(spec, SPECIM_RANGE)
        assert a == b

    def test_gamma_preserves_channel_ordering(self):
        rng = np.random.default_rng(17)
        linear = rng.uniform(0, 1, (50, 3))
        encoded = gamma_encode_array(linear)
        np.testing.assert_array_equal(np.argmax(linear, axis=1),
                                      np.argmax(encoded, axis=1))

    def test_original_and_corrected_agree_outside_fold_window(self):
        # A synthetic spectrum supported only above the fold window sees no
        # difference between original and corrected observers.
        bands = np.arange(530.0, 831.0, 10.0)
        rng = np.random.default_rng(4)
        refl = rng.uniform(0, 1, bands.size)
        spec = SampledSpectrum(bands, refl)
        original = spectrum_to_xyz(spec, builtin_cmf(), builtin_d65())
        corrected_cmf = fold_correct_cmf(builtin_cmf(), NUANCE_RANGE)
        corrected = spectrum_to_xyz(spec, corrected_cmf, builtin_d65())
        np.testing.assert_allclose(original.as_array(), corrected.as_array(), rtol=1e-14)
