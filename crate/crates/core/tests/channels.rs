use cvqkd_core::modem::{awgn_channel, draw_states, Constellation, FsoParams};
use cvqkd_core::rng::rng_for;
use cvqkd_core::secrecy::{estimate_block, holevo_bound, mutual_info, Calibration, DEFAULT_CONFIDENCE};
use rand_distr::{Distribution, Normal};

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    (mean, xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn every_constellation_has_unit_energy() {
    let mut sources = vec![Constellation::gaussian(), Constellation::qpsk()];
    for (order, nu) in [(16, 0.0), (64, 0.05), (256, 0.02)] {
        sources.push(Constellation::qam(order, nu).unwrap());
    }
    for c in &sources {
        assert!((c.energy() - 1.0).abs() < 1e-12, "{:?}", c.kind());
        let x = draw_states(c, 400_000, &mut rng_for(2, &[])).unwrap();
        let e = x.iter().map(|v| v * v).sum::<f64>() / 200_000.0;
        assert!((e - 1.0).abs() < 0.01, "{:?}: empirical energy {e}", c.kind());
    }
}

#[test]
fn awgn_noise_is_white_across_quadratures() {
    let snr = 0.4;
    let x = draw_states(&Constellation::gaussian(), 2_000_000, &mut rng_for(3, &[0])).unwrap();
    let frame = awgn_channel(&x, snr, &mut rng_for(3, &[1])).unwrap();
    let z: Vec<f64> = frame.y.iter().zip(&x).map(|(y, x)| y - x).collect();
    let (i, q): (Vec<f64>, Vec<f64>) = z.chunks(2).map(|c| (c[0], c[1])).unzip();
    let (mi, vi) = mean_var(i.iter().copied());
    let (mq, vq) = mean_var(q.iter().copied());
    // σ_z² = 1/snr is split evenly over the two quadratures
    for v in [vi, vq] {
        assert!((v / (0.5 / snr) - 1.0).abs() < 0.01, "{v}");
    }
    let cov = i.iter().zip(&q).map(|(a, b)| (a - mi) * (b - mq)).sum::<f64>() / (i.len() as f64 - 1.0);
    assert!((cov / (vi * vq).sqrt()).abs() < 0.01);
    assert!((frame.empirical_snr() / snr - 1.0).abs() < 0.01);
}

#[test]
fn block_energy_concentrates_with_dimension() {
    // ‖x'‖²/d for Gaussian states has variance 1/(2d)
    let x = draw_states(&Constellation::gaussian(), 1 << 20, &mut rng_for(4, &[])).unwrap();
    let mut last = f64::INFINITY;
    for d in [1usize, 2, 4, 8, 32, 128] {
        let e = x.chunks(d).map(|b| b.iter().map(|v| v * v).sum::<f64>() / d as f64);
        let (_, var) = mean_var(e);
        assert!(var < last, "d = {d}: {var} ≥ {last}");
        assert!((var * 2.0 * d as f64 - 1.0).abs() < 0.1, "d = {d}: {var}");
        last = var;
    }
}

#[test]
fn scintillation_index_is_realised() {
    let fso = FsoParams { scint_index: 0.009, pointing_jitter: f64::INFINITY, mean_transmittance: 0.5, coherence_len: 2 };
    let mut rng = rng_for(5, &[]);
    let t: Vec<f64> = (0..400_000).map(|_| fso.draw_transmittance(&mut rng) / 0.5).collect();
    let (mean, var) = mean_var(t.iter().copied());
    assert!((mean - 1.0).abs() < 1e-3, "{mean}");
    assert!((var / (mean * mean) / 0.009 - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn pointing_and_scintillation_multiply() {
    // E[T] = T̄·E[I]·E[P] with E[P] = β/(β+1)
    let fso = FsoParams { scint_index: 0.01, pointing_jitter: 3.0, mean_transmittance: 0.8, coherence_len: 2 };
    let mut rng = rng_for(6, &[]);
    let t: Vec<f64> = (0..400_000).map(|_| fso.draw_transmittance(&mut rng)).collect();
    let (mean, _) = mean_var(t.iter().copied());
    assert!((mean / (0.8 * 0.75) - 1.0).abs() < 0.005, "{mean}");
    assert!(t.iter().all(|&v| v > 0.0 && v.is_finite()));
}

#[test]
fn estimation_recovers_a_lossy_heterodyne_channel() {
    // heterodyne link at T = 0.41 with ξ_Bob = 0.0045 over N_p = 10⁷ symbols
    let cal = Calibration::heterodyne(7.44, 0.4, 0.1);
    let (t, xi_bob, n) = (0.41, 0.0045, 10_000_000usize);
    let mut rng = rng_for(7, &[]);
    let x_law = Normal::new(0.0, cal.v_mod.sqrt()).unwrap();
    let noise = Normal::new(0.0, (cal.vacuum + cal.v_el + xi_bob).sqrt()).unwrap();
    let g = (cal.eta * t / 2.0).sqrt();
    let x: Vec<f64> = (0..n).map(|_| x_law.sample(&mut rng)).collect();
    let y: Vec<f64> = x.iter().map(|v| g * v + noise.sample(&mut rng)).collect();

    let est = estimate_block(&x, &y, &cal, DEFAULT_CONFIDENCE).unwrap();
    assert!((est.t_hat / t - 1.0).abs() < 0.002, "{est:?}");
    // residual variance has standard error 1.1·√(2/N) ≈ 5e-4
    assert!((est.xi_hat - xi_bob).abs() < 2.5e-3, "{est:?}");
    assert!(est.physical && est.t_worst < est.t_hat);

    let snr = cal.snr(t, xi_bob);
    assert!((mutual_info(snr) - 0.317).abs() < 1e-3);
    assert!(est.i_ab < mutual_info(snr) && est.i_ab > mutual_info(snr) - 0.01, "{est:?}");
    let chi_true = holevo_bound(t, 2.0 * xi_bob / (cal.eta * t), cal.v_mod, cal.eta, cal.v_el).unwrap();
    assert!(est.chi_be > chi_true - 1e-3 && est.chi_be < chi_true + 0.03, "{} vs {chi_true}", est.chi_be);
}
