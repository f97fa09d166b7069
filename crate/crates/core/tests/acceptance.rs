//! Acceptance criteria 1-8. Each test prints one `criterion N: PASS|FAIL`
//! line per checked item (visible with `--nocapture` or on failure) and
//! fails if any item fails.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use eot_sim::cli::{execute, Command};
use eot_sim::config::RunConfig;
use eot_sim::fdtd::{
    planar_stack_tr, run_transmission, DeviceStack, GridSpec, MonitorSpec, PolarizationBasis, RunOptions, SimulationGrid,
    SourceSpec,
};
use eot_sim::fdtd::run::wavelength_grid;
use eot_sim::io::read_csv;
use eot_sim::loss_chain::{
    ensemble_noise, ensemble_states, infer_gain, predicted_squeezing, propagate_chain, transmission_for_squeezing,
    LossChain, LossElement, SpatialModeEnsemble,
};
use eot_sim::materials::MaterialModel;
use eot_sim::quantum::{
    balanced_squeezed_state, closed_form_noise, intensity_difference_noise, noise_ratio_to_db, Arm,
    GaussianTwoModeState,
};
use eot_sim::scenarios::{
    angle_grid, near_infrared_monitors, near_infrared_source, AngleStatus, PolarizationSweep,
    MEASURED_DB_AT_MIN_TRANSMISSION, MIN_TRANSMISSION_REFERENCE, PROBE_WAVELENGTH_NM,
};

const FLUX: f64 = 1e6;
const GAINS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, 8.0];
const PHYSICALITY: f64 = -1e-9;

#[derive(Default)]
struct Report {
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: impl AsRef<str>) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {verdict} ({})", detail.as_ref());
        if !pass {
            self.failures.push(format!("{id}: {}", detail.as_ref()));
        }
    }

    fn finish(self) {
        assert!(self.failures.is_empty(), "failed: {:#?}", self.failures);
    }
}

fn eta_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Every state the quantum criteria produce, for the physicality check.
fn quantum_states() -> Vec<GaussianTwoModeState> {
    let mut states = Vec::new();
    for &g in &GAINS {
        for &eta in &eta_grid() {
            states.push(balanced_squeezed_state(eta, g).unwrap());
        }
    }
    let eta = transmission_for_squeezing(1.28, 4.0).unwrap();
    let chain = LossChain::new(vec![LossElement::new("eot", eta, Arm::Both).unwrap()], Vec::<String>::new()).unwrap();
    states.push(propagate_chain(&chain, 4.0).unwrap());
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..1000 {
        let eta = rng.random_range(0.01..=1.0);
        let g = rng.random_range(1.0..=10.0);
        states.push(balanced_squeezed_state(eta, g).unwrap());
    }
    states.extend(ensemble_states(&SpatialModeEnsemble::uniform(10_000, 0.36).unwrap(), 4.0).unwrap());
    states
}

#[test]
fn criterion_1_closed_form_matches_covariance_engine() {
    let mut r = Report::default();
    let start = Instant::now();
    let a = closed_form_noise(1.0, 4.0).unwrap();
    r.check("1 (eta=1, G=4)", (a - 0.25).abs() <= f64::EPSILON, format!("{a}"));
    let worst_zero = GAINS.iter().map(|&g| (closed_form_noise(0.0, g).unwrap() - 1.0).abs()).fold(0.0, f64::max);
    r.check("1 (eta=0)", worst_zero <= f64::EPSILON, format!("max |N - 1| = {worst_zero:e}"));
    let mut worst = 0.0f64;
    for &g in &GAINS {
        for &eta in &eta_grid() {
            let engine = intensity_difference_noise(&balanced_squeezed_state(eta, g).unwrap(), FLUX).unwrap();
            worst = worst.max((engine - closed_form_noise(eta, g).unwrap()).abs());
        }
    }
    r.check("1 (grid vs engine)", worst <= 1e-9, format!("max deviation {worst:e} over 505 points"));
    let t = start.elapsed();
    r.check("1 (runtime)", t < Duration::from_secs(1), format!("{t:?}"));
    r.finish();
}

#[test]
fn criterion_2_paper_scalar_by_inversion() {
    let mut r = Report::default();
    let start = Instant::now();
    let eta = transmission_for_squeezing(1.28, 4.0).unwrap();
    r.check("2 (eta = 0.340 +/- 0.005)", (eta - 0.340).abs() <= 0.005, format!("eta = {eta:.5}"));
    let residual = (eta - 0.36).abs();
    r.check("2 (vs 36% within 0.03)", residual <= 0.03, format!("model-vs-measured residual {residual:.4}"));
    let chain = LossChain::new(vec![LossElement::new("eot", eta, Arm::Both).unwrap()], Vec::<String>::new()).unwrap();
    let forward = predicted_squeezing(&chain, 4.0).unwrap();
    let engine = noise_ratio_to_db(intensity_difference_noise(&propagate_chain(&chain, 4.0).unwrap(), FLUX).unwrap()).unwrap();
    r.check(
        "2 (forward consistency)",
        (forward - 1.28).abs() < 1e-9 && (engine - 1.28).abs() < 1e-9,
        format!("closed form {forward:.12} dB, engine {engine:.12} dB"),
    );
    let t = start.elapsed();
    r.check("2 (runtime)", t < Duration::from_secs(1), format!("{t:?}"));
    r.finish();
}

#[test]
fn criterion_3_gain_inference_round_trip() {
    let mut r = Report::default();
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let eta = rng.random_range(0.01..=1.0);
        let g = rng.random_range(1.0..=10.0);
        let chain = LossChain::new(vec![LossElement::new("eot", eta, Arm::Both).unwrap()], Vec::<String>::new()).unwrap();
        let db = predicted_squeezing(&chain, g).unwrap();
        let back = infer_gain(db, eta).unwrap();
        worst = worst.max((back - g).abs());
    }
    r.check("3 (round trip)", worst <= 1e-9, format!("max |G' - G| = {worst:e} over 1000 samples"));
    let t = start.elapsed();
    r.check("3 (runtime)", t < Duration::from_secs(1), format!("{t:?}"));
    r.finish();
}

#[test]
fn criterion_4_multimode_conservation() {
    let mut r = Report::default();
    let start = Instant::now();
    let eta = 0.36;
    let ensemble = ensemble_noise(&SpatialModeEnsemble::uniform(10_000, eta).unwrap(), 4.0).unwrap();
    let single = noise_ratio_to_db(intensity_difference_noise(&balanced_squeezed_state(eta, 4.0).unwrap(), FLUX).unwrap()).unwrap();
    let d = (ensemble - single).abs();
    r.check("4 (10,000 modes vs single)", d <= 1e-12, format!("{ensemble} vs {single} dB, |d| = {d:e}"));
    let t = start.elapsed();
    r.check("4 (runtime)", t < Duration::from_secs(1), format!("{t:?}"));
    r.finish();
}

#[test]
fn criterion_5_fdtd_analytic_oracles() {
    let mut r = Report::default();
    let start = Instant::now();
    let opts = RunOptions::default();
    let planar = |stack: &DeviceStack| {
        SimulationGrid::for_stack(&GridSpec::uniform(10.0), stack).unwrap().laterally_uniform()
    };

    let vac = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::vacuum(), 50.0, MaterialModel::vacuum());
    let s = run_transmission(&vac, &planar(&vac), &SourceSpec::default(), &MonitorSpec::default(), &opts).unwrap();
    let worst = s.transmission.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    r.check("5a (vacuum T = 1 +/- 0.01)", worst <= 0.01, format!("max |T - 1| = {worst:.2e}"));

    let slab = DeviceStack::slab(MaterialModel::vacuum(), MaterialModel::constant_index("n2", 2.0), 100.0, MaterialModel::vacuum());
    let monitors = MonitorSpec {
        wavelengths_nm: wavelength_grid(500.0, 900.0, 10.0, &[]),
        field_map_depth_nm: None,
    };
    let s = run_transmission(&slab, &planar(&slab), &SourceSpec::default(), &monitors, &opts).unwrap();
    let mut worst = (0.0f64, 0.0);
    for (&l, &t) in s.wavelengths_nm.iter().zip(&s.transmission) {
        let (exact, _) = planar_stack_tr(&slab, l).unwrap();
        let rel = (t - exact).abs() / exact;
        if rel > worst.0 {
            worst = (rel, l);
        }
    }
    r.check(
        "5b (n = 2, 100 nm slab vs Airy, 2%)",
        worst.0 <= 0.02,
        format!("max relative error {:.3}% at {} nm", 100.0 * worst.0, worst.1),
    );

    let film = DeviceStack::default_eot().without_holes();
    let source = SourceSpec::broadband(300.0, 1000.0, 0.0);
    let monitors = MonitorSpec {
        wavelengths_nm: wavelength_grid(300.0, 1000.0, 10.0, &[]),
        field_map_depth_nm: None,
    };
    let s = run_transmission(&film, &planar(&film), &source, &monitors, &opts).unwrap();
    let (lmax, tmax) = s
        .wavelengths_nm
        .iter()
        .zip(&s.transmission)
        .fold((0.0, f64::NEG_INFINITY), |a, (&l, &t)| if t > a.1 { (l, t) } else { a });
    let (_, t_exact) = planar_stack_tr(&film, lmax).unwrap();
    r.check(
        "5c (bare 80 nm Ag T < 1% over 300-1000 nm)",
        tmax < 0.01,
        format!("max T = {tmax:.4} at {lmax} nm (transfer matrix {t_exact:.4})"),
    );

    let t = start.elapsed();
    r.check("5 (runtime <= 2 min)", t <= Duration::from_secs(120), format!("{:.1} s", t.as_secs_f64()));
    r.finish();
}

#[test]
fn criterion_6_eot_qualitative_reproduction() {
    let mut r = Report::default();
    let start = Instant::now();
    let stack = DeviceStack::default_eot();
    let grid = SimulationGrid::for_stack(&GridSpec::uniform(5.0), &stack).unwrap();
    let opts = RunOptions::default();

    let basis = PolarizationBasis::compute(&stack, &grid, &near_infrared_source(), &near_infrared_monitors(), &opts)
        .unwrap();
    let s60 = basis.spectrum(60.0);
    let peak = s60.peak_in(750.0, 870.0);
    r.check(
        "6a (peak in 750-870 nm at 60 deg, T >= 0.25)",
        peak.is_some_and(|(_, t)| t >= 0.25),
        format!("{peak:?}, converged = {}", basis.converged()),
    );

    // the same x/y superposition the sweep uses, read at the probe line
    let angles = angle_grid(5.0);
    let k = s60.wavelengths_nm.iter().position(|&l| l == PROBE_WAVELENGTH_NM).unwrap();
    let spectra: Vec<_> = angles.iter().map(|&a| basis.spectrum(a)).collect();
    let sweep = PolarizationSweep {
        transmission: spectra.iter().map(|s| s.transmission[k]).collect(),
        transmission_substrate: spectra.iter().map(|s| s.transmission_substrate[k]).collect(),
        status: vec![AngleStatus::Ok; angles.len()],
        angles_deg: angles,
        wavelength_nm: PROBE_WAVELENGTH_NM,
        config_hash: String::new(),
    };
    let (amax, tmax) = sweep.argmax().unwrap();
    let (amin, tmin) = sweep.argmin().unwrap();
    let contrast = sweep.contrast().unwrap();
    r.check(
        "6b (contrast Tmin/Tmax < 0.5 at 795 nm)",
        contrast < 0.5,
        format!("Tmin {tmin:.4} at {amin} deg, Tmax {tmax:.4} at {amax} deg, contrast {contrast:.3}"),
    );
    r.check("6c (argmax in [55, 75] deg)", (55.0..=75.0).contains(&amax), format!("argmax {amax} deg"));
    let t = start.elapsed();
    println!("criterion 6: runtime {:.0} s on {} worker(s)", t.as_secs_f64(), rayon::current_num_threads());
    r.finish();
}

fn determinism_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.grid = GridSpec::uniform(10.0);
    cfg.source = near_infrared_source().with_polarization(60.0);
    cfg.monitors.start_nm = 700.0;
    cfg.monitors.stop_nm = 900.0;
    cfg.monitors.step_nm = 10.0;
    cfg.run.max_time_fs = 60.0;
    cfg
}

#[test]
fn criterion_7_determinism() {
    let mut r = Report::default();
    let cfg = determinism_config();
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: usize, name: &str| {
        let out = dir.path().join(name);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        pool.install(|| execute(&Command::Spectrum, &cfg, &out)).unwrap();
        (
            std::fs::read(out.join("transmission.csv")).unwrap(),
            read_csv(&out.join("transmission.csv")).unwrap().1,
        )
    };
    let (a, rows1) = run(1, "w1a");
    let (b, _) = run(1, "w1b");
    r.check("7 (byte-identical CSV, 1 worker)", a == b, format!("{} bytes", a.len()));
    let mut worst = 0.0f64;
    for w in [2, 4] {
        let (_, rows) = run(w, &format!("w{w}"));
        for (x, y) in rows1.iter().flatten().zip(rows.iter().flatten()) {
            let scale = x.abs().max(y.abs());
            if scale > 0.0 {
                worst = worst.max((x - y).abs() / scale);
            }
        }
    }
    r.check("7 (1/2/4 workers agree to 1e-12)", worst <= 1e-12, format!("max relative difference {worst:e}"));
    r.finish();
}

#[test]
fn criterion_8_physicality_and_model_bounds() {
    let mut r = Report::default();
    let states = quantum_states();
    let worst = states.iter().map(|s| s.min_uncertainty_eigenvalue()).fold(f64::INFINITY, f64::min);
    r.check(
        "8 (cov + i Omega >= 0)",
        worst >= PHYSICALITY,
        format!("min eigenvalue {worst:e} over {} states", states.len()),
    );
    let mut in_bounds = true;
    for &g in &GAINS {
        for &eta in &eta_grid() {
            let n = closed_form_noise(eta, g).unwrap();
            in_bounds &= n >= 1.0 / g - 1e-15 && n <= 1.0 + 1e-15;
        }
    }
    r.check("8 (1/G <= N <= 1)", in_bounds, "505-point grid");
    // over all gains the model at 3% transmission spans [0, -10 log10(0.97)] dB
    let lo = noise_ratio_to_db(closed_form_noise(MIN_TRANSMISSION_REFERENCE, 1.0).unwrap()).unwrap();
    let hi = noise_ratio_to_db(1.0 - MIN_TRANSMISSION_REFERENCE).unwrap();
    let outside = !(lo..=hi).contains(&MEASURED_DB_AT_MIN_TRANSMISSION);
    let residual = (lo - MEASURED_DB_AT_MIN_TRANSMISSION).max(MEASURED_DB_AT_MIN_TRANSMISSION - hi);
    r.check(
        "8 (-0.2 dB at 3% outside model, residual >= 0.2 dB)",
        outside && residual >= 0.2,
        format!("model range [{lo:.4}, {hi:.4}] dB, residual {residual:.4} dB"),
    );
    r.finish();
}
