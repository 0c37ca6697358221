use num_complex::Complex64;
use proptest::prelude::*;
use sfo_core::analysis::{bound_report, delay_bounds, pilot_regressor, sfo_std_bounds};
use sfo_core::estimation::{ls_sfo, tito_select, DelayTrack};
use sfo_core::ofdm::{build_pilot_grid, demodulate, modulate, FrameGrid, OfdmConfig};
use sfo_core::radar::{recenter_on_reference, RadarImage};

fn config(n: usize, m: usize, cp: usize, dn: usize, dm: usize) -> OfdmConfig {
    OfdmConfig {
        n_subcarriers: n,
        n_symbols: m,
        cp_len: cp,
        pilot_subc_spacing: dn.min(n),
        pilot_sym_spacing: dm.min(m),
        ..OfdmConfig::table1()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulation_round_trips_and_preserves_energy(
        n in 1usize..200, m in 1usize..6, cp in 0usize..40, seed in any::<u64>()
    ) {
        let cfg = config(n, m, cp.min(n), 1, 1);
        let mut state = seed;
        let frame = FrameGrid::from_fn(n, m, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let b = ((state >> 7) & 0xffff) as f64 / 65536.0 - 0.5;
            Complex64::new(a, b)
        });
        let stream = modulate(&frame, &cfg).unwrap();
        let back = demodulate(&stream, &cfg).unwrap();
        for (a, b) in frame.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
        let e_freq: f64 = frame.as_slice().iter().map(|c| c.norm_sqr()).sum();
        let n_cp = cfg.cp_len;
        let e_time: f64 = stream
            .samples
            .chunks(cfg.symbol_len())
            .map(|s| s[n_cp..].iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum();
        prop_assert!((e_freq - e_time).abs() <= 1e-10 * e_freq.max(1.0));
    }

    #[test]
    fn pilot_lattice_is_uniform_and_inside_the_frame(
        n in 1usize..5000, m in 1usize..300, dn in 1usize..64, dm in 1usize..64
    ) {
        let cfg = config(n, m, 0, dn, dm);
        let grid = build_pilot_grid(&cfg, 1).unwrap();
        let rows = (0..n).filter(|r| r % cfg.pilot_subc_spacing == 0).count();
        let syms = (0..m).filter(|s| s % cfg.pilot_sym_spacing == 0).count();
        prop_assert_eq!(grid.n_subcarriers(), rows);
        prop_assert_eq!(grid.n_symbols(), syms);
        prop_assert_eq!(cfg.n_pilot_subcarriers(), rows);
        prop_assert_eq!(cfg.n_pilot_symbols(), syms);
        prop_assert!(grid.subcarrier_rows.windows(2).all(|w| w[1] - w[0] == cfg.pilot_subc_spacing));
        prop_assert!(grid.values.as_slice().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ls_recovers_noiseless_linear_tracks(ppm in -2000.0f64..2000.0, len in 2usize..1500, offset in -1e-8f64..1e-8) {
        let cfg = OfdmConfig::table1();
        let delta = ppm * 1e-6;
        prop_assume!(delta.abs() > 1e-9);
        let track = DelayTrack::from_migrations((0..len).map(|k| offset + delta * pilot_regressor(k, &cfg)).collect());
        let est = ls_sfo(&track, len, &cfg).unwrap();
        prop_assert!((est / delta - 1.0).abs() < 1e-12, "{} vs {}", est, delta);
    }

    #[test]
    fn larger_epsilon_never_shortens_the_tito_prefix(
        steps in proptest::collection::vec(-3.0f64..3.0, 1..200), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0
    ) {
        let cfg = OfdmConfig::desk();
        let dmax = 1e-3;
        let unit = dmax * cfg.pilot_symbol_period();
        let mut acc = 0.0;
        let mut mig = vec![0.0];
        for s in &steps {
            acc += s * unit;
            mig.push(acc);
        }
        let track = DelayTrack::from_migrations(mig);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = tito_select(&track, dmax, lo, &cfg).unwrap();
        let b = tito_select(&track, dmax, hi, &cfg).unwrap();
        prop_assert!(a <= b);
        prop_assert!(a >= 2 && b <= track.len());
    }

    #[test]
    fn bound_report_composes_the_delay_and_slope_bounds(
        snr_db in -10.0f64..60.0, eta in 1usize..64, m_used in 2usize..1024
    ) {
        let cfg = OfdmConfig::table1();
        let snr = 10f64.powf(snr_db / 10.0);
        let r = bound_report(snr, eta, m_used, &cfg).unwrap();
        let (crlb, mle) = delay_bounds(snr, eta, &cfg).unwrap();
        prop_assert_eq!(r.sigma_delta_crlb, sfo_std_bounds(crlb, m_used, &cfg).unwrap());
        prop_assert_eq!(r.sigma_delta_mle, sfo_std_bounds(mle, m_used, &cfg).unwrap());
        prop_assert!(r.sigma_delta_crlb > 0.0 && r.sigma_delta_mle > 0.0);
    }

    #[test]
    fn rolling_then_recentering_restores_a_centred_image(dr in -20i64..20, dd in -20i64..20) {
        let (nr, nd) = (16usize, 12usize);
        let mut pixels: Vec<f64> = (0..nr * nd).map(|i| ((i * 37) % 11) as f64 * 0.01).collect();
        pixels[nd / 2] = 5.0;
        let img = RadarImage {
            pixels,
            n_range: nr,
            n_doppler: nd,
            range_axis: (0..nr).map(|r| r as f64).collect(),
            doppler_axis: (0..nd).map(|d| d as f64 - (nd / 2) as f64).collect(),
            window_kind: Default::default(),
            padding: Default::default(),
            lobe_half_width: (1.0, 1.0),
        };
        prop_assert_eq!(recenter_on_reference(&img.rolled(dr, dd)), img);
    }
}
