import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from h2raman.coherence import (
    CoherenceEnsemble,
    DelayScan,
    evolve,
    find_rephasing_maxima,
    init_ensemble,
    power_spectrum,
    retrieval_envelope,
    retrieved_amplitude,
    snap_to_rephasing_maximum,
    storage_factor,
)
from h2raman.spectroscopy import (
    C_CM_S,
    PopulationTable,
    boltzmann_populations,
    q_branch_frequency,
)

GAMMA_3BAR = 1e9  # amplitude decay rate at the lifetime-optimal pressure


@pytest.fixture(scope="module")
def room_populations(constants):
    return boltzmann_populations(constants, 295.0)


@pytest.fixture(scope="module")
def ensemble(room_populations, constants):
    # Ensembles are immutable snapshots, safe to share across examples.
    return init_ensemble(room_populations, constants, GAMMA_3BAR)


@pytest.fixture(scope="module")
def lossless(room_populations, constants):
    return init_ensemble(room_populations, constants, 0.0)


def single_j_ensemble(gamma=GAMMA_3BAR, j=1, constants=None):
    pops = PopulationTable(temperature=295.0, fractions={j: 1.0}, spin_weights={"even": 1.0, "odd": 3.0})
    return init_ensemble(pops, constants, gamma)


class TestInitEnsemble:
    def test_frequencies_follow_q_branch(self, ensemble, constants):
        for j in range(4):
            expected = 2 * np.pi * C_CM_S * q_branch_frequency(constants, j)
            assert ensemble.frequencies[j] == pytest.approx(expected, rel=1e-14)

    def test_amplitudes_proportional_to_population(self, ensemble, room_populations):
        # J=1 dominates; the 295 K amplitude ratio tracks the 0.66:0.13 split.
        ratio = abs(ensemble.amplitudes[1]) / abs(ensemble.amplitudes[0])
        expected = room_populations.fractions[1] / room_populations.fractions[0]
        assert ratio == pytest.approx(expected, rel=1e-14)
        assert 0.61 / 0.15 < ratio < 0.71 / 0.11

    def test_phases_start_at_zero(self, ensemble):
        for a in ensemble.amplitudes.values():
            assert a.imag == 0.0 and a.real >= 0.0

    def test_single_population_gives_single_channel(self, constants):
        ens = single_j_ensemble(constants=constants)
        assert set(ens.amplitudes) == {1}

    def test_excitation_bookkeeping_for_omitted_channels(self, ensemble, room_populations):
        # Dropping every channel but J=1 removes exactly the squared omitted
        # fractions from the total excitation.
        restricted = CoherenceEnsemble(
            amplitudes={1: ensemble.amplitudes[1]},
            frequencies={1: ensemble.frequencies[1]},
            gamma=ensemble.gamma,
        )
        omitted = sum(f**2 for j, f in room_populations.fractions.items() if j != 1)
        assert ensemble.excitation - restricted.excitation == pytest.approx(omitted, rel=1e-12)

    def test_empty_population_table_rejected(self):
        with pytest.raises(ValueError):
            PopulationTable(temperature=295.0, fractions={}, spin_weights={})

    def test_mismatched_keys_rejected(self):
        with pytest.raises(ValueError):
            CoherenceEnsemble(amplitudes={0: 1.0}, frequencies={1: 1.0}, gamma=0.0)


class TestEvolve:
    def test_zero_duration_is_identity(self, ensemble):
        out = evolve(ensemble, 0.0)
        for j in ensemble.amplitudes:
            assert out.amplitudes[j] == ensemble.amplitudes[j]

    def test_backward_evolution_rejected(self, ensemble):
        with pytest.raises(ValueError, match="backward"):
            evolve(ensemble, -1e-12)

    def test_single_channel_periodicity(self, constants):
        ens = single_j_ensemble(gamma=0.0, constants=constants)
        period = 2 * np.pi / ens.frequencies[1]
        out = evolve(ens, period)
        assert abs(out.amplitudes[1] - ens.amplitudes[1]) < 1e-12

    def test_full_ensemble_rephases_near_common_period(self, lossless):
        # The Q01(J) splittings are nearly equidistant (~5.9 cm^-1), so the
        # channels realign after about 1/(5.9 cm^-1 * c) ~ 5.7 ps.  Oracle:
        # direct summation over the exact channel frequencies.
        period = snap_to_rephasing_maximum(lossless, 5.67e-12, window=1.2e-12)
        assert period == pytest.approx(5.67e-12, abs=0.3e-12)
        evolved = evolve(lossless, period)
        s_now = abs(sum(evolved.amplitudes.values())) ** 2
        s_init = abs(sum(lossless.amplitudes.values())) ** 2
        assert s_now / s_init > 0.95
        # brute-force oracle for the same quantity
        brute = abs(
            sum(
                a * np.exp(-1j * lossless.frequencies[j] * period)
                for j, a in lossless.amplitudes.items()
            )
        ) ** 2
        assert s_now == pytest.approx(brute, rel=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(
        total=st.floats(min_value=0.0, max_value=2e-9),
        fraction=st.floats(min_value=0.5, max_value=1.0),
    )
    def test_group_action(self, ensemble, total, fraction):
        # Split so t1 + t2 is exactly representable (Sterbenz: t1 >= total/2
        # makes total - t1 exact); this isolates the operator composition
        # from rounding of the time argument itself, which at ~125 THz would
        # otherwise dominate the comparison.
        t1 = total * fraction
        t2 = total - t1
        assert t1 + t2 == total
        two_step = evolve(evolve(ensemble, t1), t2)
        one_step = evolve(ensemble, total)
        for j in ensemble.amplitudes:
            a, b = two_step.amplitudes[j], one_step.amplitudes[j]
            scale = max(abs(a), abs(b), 1e-300)
            assert abs(a - b) / scale < 1e-12
        assert two_step.t0 == pytest.approx(one_step.t0, rel=1e-12)

    def test_excitation_never_increases(self, ensemble):
        steps = [evolve(ensemble, k * 50e-12).excitation for k in range(5)]
        assert all(b < a for a, b in zip(steps, steps[1:]))


class TestRetrievalEnvelope:
    def test_zero_delay_equals_eta_r0(self, ensemble):
        delays = np.linspace(0.0, 50e-12, 600)
        scan = retrieval_envelope(ensemble, delays, eta_r0=0.45)
        assert scan.values[0] == 0.45

    def test_single_channel_is_pure_decay(self, constants):
        ens = single_j_ensemble(constants=constants)
        delays = np.linspace(0.0, 200e-12, 512)
        scan = retrieval_envelope(ens, delays, eta_r0=0.5)
        expected = 0.5 * np.exp(-2 * GAMMA_3BAR * delays)
        np.testing.assert_allclose(scan.values, expected, rtol=1e-12)

    def test_upper_bound_is_decaying_exponential(self, ensemble):
        delays = np.linspace(0.0, 300e-12, 2000)
        scan = retrieval_envelope(ensemble, delays, eta_r0=1.0)
        bound = np.exp(-2 * GAMMA_3BAR * delays)
        assert np.all(scan.values <= bound * (1 + 1e-12))

    def test_lossless_envelope_oscillates_with_recurrences(self, lossless):
        delays = np.linspace(0.0, 40e-12, 2000)
        scan = retrieval_envelope(lossless, delays)
        maxima = find_rephasing_maxima(scan, count=6)
        # principal recurrences every ~5.7 ps
        principal = [t for t in maxima.times if t > 1e-12]
        spacings = np.diff([0.0] + principal)
        assert np.all(np.abs(spacings - 5.67e-12) < 0.5e-12)

    def test_storage_time_scale_at_3bar(self, ensemble):
        # 1/e point of the slowly varying maximum locus ~ the 1 ns amplitude
        # lifetime scale (efficiency decays at 2 Gamma).  Sample one windowed
        # maximum per principal recurrence so secondary wiggles don't bias
        # the decay fit.
        delays = np.linspace(0.0, 2e-9, 8001)
        scan = retrieval_envelope(ensemble, delays)
        period = snap_to_rephasing_maximum(ensemble, 5.67e-12, window=1.2e-12)
        times, values = [], []
        k = 1
        while (k + 0.45) * period < scan.delays[-1]:
            sel = np.abs(scan.delays - k * period) < 0.45 * period
            i = np.argmax(scan.values[sel])
            times.append(scan.delays[sel][i])
            values.append(scan.values[sel][i])
            k += 1
        slope = np.polyfit(times, np.log(values), 1)[0]
        storage_amplitude = -2.0 / slope
        assert 0.2e-9 < storage_amplitude < 2e-9

    @settings(max_examples=15, deadline=None)
    @given(phi=st.floats(min_value=-np.pi, max_value=np.pi))
    def test_uniform_phase_preserved(self, ensemble, phi):
        rotated = CoherenceEnsemble(
            amplitudes={j: a * np.exp(1j * phi) for j, a in ensemble.amplitudes.items()},
            frequencies=ensemble.frequencies,
            gamma=ensemble.gamma,
        )
        delays = np.linspace(0.0, 30e-12, 400)
        base = retrieval_envelope(ensemble, delays)
        rot = retrieval_envelope(rotated, delays)
        np.testing.assert_allclose(rot.values, base.values, rtol=1e-12, atol=1e-15)
        t = 7.3e-12
        ratio = retrieved_amplitude(rotated, t) / retrieved_amplitude(ensemble, t)
        assert ratio == pytest.approx(np.exp(1j * phi), rel=1e-12)

    def test_delay_domain_checked(self, ensemble):
        with pytest.raises(ValueError):
            retrieval_envelope(ensemble, np.linspace(0.0, 3e-9, 300))
        with pytest.raises(ValueError):
            retrieval_envelope(ensemble, np.linspace(0.0, 1e-9, 300), eta_r0=1.5)

    def test_storage_factor_normalized(self, ensemble):
        assert storage_factor(ensemble, 0.0) == pytest.approx(1.0 + 0.0j)
        assert abs(storage_factor(ensemble, 16e-12)) < 1.0


class TestPowerSpectrum:
    def make_scan(self, ensemble, span=100e-12, n=2000):
        delays = np.linspace(0.0, span, n)
        return retrieval_envelope(ensemble, delays)

    def test_constant_scan_has_no_peaks(self):
        delays = np.linspace(0.0, 100e-12, 512)
        scan = DelayScan(delays=delays, values=np.full(512, 0.3))
        spec = power_spectrum(scan)
        assert spec.peaks == []
        assert spec.power.max() < 1e-20

    def test_two_tone_cosine_squared(self):
        nu0 = 10.0  # cm^-1
        delays = np.linspace(0.0, 100e-12, 2000)
        values = np.cos(np.pi * nu0 * C_CM_S * delays) ** 2
        scan = DelayScan(delays=delays, values=values)
        spec = power_spectrum(scan)
        assert len(spec.peaks) == 1
        assert spec.peaks[0][0] == pytest.approx(nu0, abs=0.05)

    def test_full_ensemble_reproduces_measured_beats(self, lossless):
        spec = power_spectrum(self.make_scan(lossless))
        for target in [5.9, 11.8, 17.6, 29.4, 35.3]:
            err = min(abs(f - target) for f, _ in spec.peaks)
            assert err < 0.15, f"peak near {target} off by {err}"

    def test_peak_positions_shift_invariant(self, lossless):
        delays = np.linspace(0.0, 100e-12, 2000)
        s1 = power_spectrum(retrieval_envelope(lossless, delays))
        s2 = power_spectrum(retrieval_envelope(lossless, delays + 5e-12))
        f1 = sorted(f for f, _ in s1.peaks)
        f2 = sorted(f for f, _ in s2.peaks)
        assert len(f1) == len(f2)
        np.testing.assert_allclose(f1, f2, atol=0.1)

    def test_power_nonnegative(self, ensemble):
        spec = power_spectrum(self.make_scan(ensemble))
        assert np.all(spec.power >= 0.0)

    def test_preconditions(self, ensemble):
        short = retrieval_envelope(ensemble, np.linspace(0.0, 100e-12, 128))
        with pytest.raises(ValueError, match="points"):
            power_spectrum(short)
        narrow = retrieval_envelope(ensemble, np.linspace(0.0, 10e-12, 512))
        with pytest.raises(ValueError, match="span"):
            power_spectrum(narrow)

    def test_nonuniform_grid_rejected(self):
        delays = np.array([0.0, 1e-12, 3e-12, 4e-12])
        with pytest.raises(ValueError, match="uniform"):
            DelayScan(delays=delays, values=np.zeros(4))


class TestRephasingMaxima:
    def test_monotone_scan_returns_only_start(self, constants):
        ens = single_j_ensemble(constants=constants)
        delays = np.linspace(0.0, 100e-12, 1000)
        scan = retrieval_envelope(ens, delays)
        result = find_rephasing_maxima(scan, count=3)
        assert result.times == [0.0]
        assert not result.complete

    def test_local_maximum_near_16ps_at_3bar(self, ensemble):
        from scipy.signal import find_peaks

        delays = np.linspace(0.0, 100e-12, 2000)
        scan = retrieval_envelope(ensemble, delays)
        idx, _ = find_peaks(scan.values)
        assert any(abs(scan.delays[i] - 16e-12) <= 1e-12 for i in idx)

    def test_top_maxima_are_principal_recurrences(self, ensemble):
        delays = np.linspace(0.0, 100e-12, 2000)
        scan = retrieval_envelope(ensemble, delays)
        result = find_rephasing_maxima(scan, count=16)
        assert result.complete
        assert result.times == sorted(result.times)
        assert result.times[0] == 0.0  # the in-phase start is the global maximum
        spacings = np.diff(result.times)
        assert np.all(np.abs(spacings - 5.67e-12) < 0.6e-12)

    def test_snap_finds_principal_maximum(self, ensemble):
        snapped = snap_to_rephasing_maximum(ensemble, 16e-12, window=2.5e-12)
        mod = abs(retrieved_amplitude(ensemble, snapped)) ** 2
        mod0 = abs(retrieved_amplitude(ensemble, 0.0)) ** 2
        assert mod / mod0 > 0.95
        assert abs(snapped - 17.0e-12) < 0.5e-12

    def test_count_validation(self, ensemble):
        delays = np.linspace(0.0, 20e-12, 400)
        scan = retrieval_envelope(ensemble, delays)
        with pytest.raises(ValueError, match="span"):
            find_rephasing_maxima(scan, count=10)


class TestDelayScanType:
    def test_values_must_be_efficiencies(self):
        delays = np.linspace(0.0, 1e-12, 8)
        with pytest.raises(ValueError, match="efficienc"):
            DelayScan(delays=delays, values=np.full(8, 1.5))

    def test_kind_checked(self):
        delays = np.linspace(0.0, 1e-12, 8)
        with pytest.raises(ValueError, match="kind"):
            DelayScan(delays=delays, values=np.zeros(8), kind="banana")
