use paraweight::carleman::{
    apply_l, apply_p_para, bump, carleman_sides, gamma_sweep, log_spaced, mollification_constants,
    proof_ledger_probe, random_ensemble, single_mode_ensemble, Recipe,
};
use paraweight::spectral::{apply_delta, h_norm_sq, lip_norm, FieldSpec, NormMethod};
use paraweight::{
    CarlemanProbeConfig, CarlemanWeight, CoefficientMatrix, CoefficientSchedule, Cplx, Error, Modulus,
    SpaceTimeField, SpectralField, TimeGrid, TorusGrid,
};

// ∫ |r|^{1/2} ρ(r) dr and max_t |d/dt ∫ |t - r|^{1/2} ρ(r) dr|, mpmath at 20 digits.
const KINK_DIFF: f64 = 0.382_027_959_994_022;
const KINK_SLOPE: f64 = 0.906_354_267_346_52;

fn lip_config(gammas: Vec<f64>, tau_max: f64) -> CarlemanProbeConfig {
    let w = CarlemanWeight::build(&Modulus::lipschitz(), tau_max, 1e-12).unwrap();
    CarlemanProbeConfig::new(0.5, gammas, w, 1).unwrap()
}

#[test]
fn mollification_constants_of_a_square_root_kink() {
    let c = mollification_constants(|t: f64| (t - 0.5).abs().sqrt(), 1.0, &Modulus::sqrt(), &[2, 3, 4, 5, 6], 32)
        .unwrap();
    let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.c_diff), hi.max(x.c_diff)));
    assert!(hi <= 2.0 * lo);
    let (lo, hi) =
        c.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.c_derivative), hi.max(x.c_derivative)));
    assert!(hi <= 2.0 * lo);
    for x in &c {
        assert!((x.c_diff - KINK_DIFF).abs() < 2e-2 * KINK_DIFF, "{x:?}");
        assert!((x.c_derivative - KINK_SLOPE).abs() < 3e-2 * KINK_SLOPE, "{x:?}");
    }
}

#[test]
fn backward_heat_solution_is_annihilated() {
    let g = TorusGrid::new(1, 16).unwrap();
    let e = SpectralField::mode(&g, [2, 0]).unwrap();
    let a = CoefficientSchedule::Static(CoefficientMatrix::identity(&g));
    let residual = |m: usize| {
        let tg = TimeGrid::new(1.0, m).unwrap();
        let u = SpaceTimeField::separable(tg, |t| (-4.0 * (1.0 - t)).exp(), &e);
        let lu = apply_l(&u, &a, None, None).unwrap();
        (1..m - 1).map(|i| lu.slice(i).max_abs() / (4.0 * u.slice(i).max_abs())).fold(0.0, f64::max)
    };
    let (r1, r2) = (residual(257), residual(513));
    assert!(r1 < 16.0 * (1.0f64 / 256.0).powi(2), "{r1}");
    assert!(r2 < r1 / 3.5, "second order: {r1} -> {r2}");
    let zero = SpaceTimeField::zeros(TimeGrid::new(1.0, 64).unwrap(), &g);
    assert!(apply_l(&zero, &a, None, None).unwrap().slices().iter().all(|s| s.max_abs() == 0.0));
}

#[test]
fn lower_order_terms_enter_linearly() {
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let g = TorusGrid::new(1, 16).unwrap();
    let e = SpectralField::mode(&g, [1, 0]).unwrap();
    let u = SpaceTimeField::separable(tg, |_| 1.0, &e);
    let a = CoefficientSchedule::Static(CoefficientMatrix::identity(&g));
    let b = vec![SpaceTimeField::separable(tg, |_| 1.0, &SpectralField::constant(&g, Cplx::new(3.0, 0.0)))];
    let c = SpaceTimeField::separable(tg, |_| 1.0, &SpectralField::constant(&g, Cplx::new(5.0, 0.0)));
    let lu = apply_l(&u, &a, Some(&b), Some(&c)).unwrap();
    // -1 + 3i + 5 on the unit mode.
    let z = lu.slice(10).coeff([1, 0]);
    assert!((z.re - 4.0).abs() < 1e-12 && (z.im - 3.0).abs() < 1e-12, "{z}");
    let bad = TorusGrid::new(1, 32).unwrap();
    let a_bad = CoefficientSchedule::Static(CoefficientMatrix::identity(&bad));
    assert!(matches!(apply_l(&u, &a_bad, None, None), Err(Error::Config(_))));
}

#[test]
fn paraproduct_operator_matches_for_constant_coefficients() {
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let g = TorusGrid::new(2, 64).unwrap();
    let f = paraweight::spectral::random_field(&g, &FieldSpec::band_limited(0.5, 1.0), 3, 0);
    let u = SpaceTimeField::separable(tg, |t| bump(t, 1.0), &f);
    let c = SpectralField::constant(&g, Cplx::new(1.5, 0.0));
    let off = SpectralField::constant(&g, Cplx::new(0.25, 0.0));
    let a = CoefficientSchedule::Static(CoefficientMatrix::from_upper(vec![c.clone(), off, c], 1.0).unwrap());
    let cfg = lip_config(vec![1.0], 10.0);
    let l = apply_l(&u, &a, None, None).unwrap();
    let p = apply_p_para(&u, &a, &cfg).unwrap();
    for i in 0..64 {
        let scale = l.slice(i).max_coeff().max(1e-300);
        assert!(l.slice(i).sub(p.slice(i)).max_coeff() <= 1e-12 * scale.max(1.0), "slice {i}");
    }
}

fn para_defect_ratio(n: usize, coefficient: impl Fn(f64) -> f64) -> f64 {
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let g = TorusGrid::new(1, n).unwrap();
    let field = SpectralField::from_real_fn(&g, |x: [f64; 2]| coefficient(x[0]));
    let a = CoefficientSchedule::Static(CoefficientMatrix::scalar(&field, 1.0).unwrap());
    let f = SpectralField::from_real_fn(&g, |x: [f64; 2]| (1..24).map(|k| (k as f64 * x[0]).sin() / k as f64).sum());
    let u = SpaceTimeField::separable(tg, |t| bump(t, 1.0), &f);
    let cfg = lip_config(vec![1.0], 10.0);
    let d = apply_l(&u, &a, None, None).unwrap().sub(&apply_p_para(&u, &a, &cfg).unwrap());
    let lip = lip_norm(&field, NormMethod::Direct).unwrap().value;
    let i = 16;
    h_norm_sq(d.slice(i), -0.5).sqrt() / (lip * h_norm_sq(&u.slice(i).derivative(0), -0.5).sqrt())
}

#[test]
fn paraproduct_operator_defect_is_resolution_stable() {
    // Low-passes of 2 + sin x reproduce it, so the defect is rounding only.
    for n in [64, 128, 256] {
        assert!(para_defect_ratio(n, |x| 2.0 + x.sin()) <= 1e-12);
    }
    let rough = |x: f64| 2.0 + 0.5 * (1..32).map(|k| (k as f64 * x).cos() / (k * k) as f64).sum::<f64>();
    let ratios: Vec<f64> = [128, 256, 512].iter().map(|&n| para_defect_ratio(n, rough)).collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0), "{ratios:?}");
    for w in ratios.windows(2) {
        assert!(w[1] <= 1.25 * w[0], "{ratios:?}");
    }
}

#[test]
fn weighted_substitution_is_consistent() {
    let g = TorusGrid::new(1, 16).unwrap();
    let e = SpectralField::from_real_fn(&g, |x: [f64; 2]| x[0].sin() + 0.5 * (2.0 * x[0]).cos());
    let a = CoefficientSchedule::Static(CoefficientMatrix::identity(&g));
    let (gamma, horizon) = (2.0, 1.0);
    let w = CarlemanWeight::build(&Modulus::lipschitz(), 4.0, 1e-12).unwrap();
    let tg = TimeGrid::new(horizon, 32769).unwrap();
    let u = SpaceTimeField::separable(tg, |t| bump(t, horizon), &e);
    let lu = apply_l(&u, &a, None, None).unwrap();
    let big_phi: Vec<f64> = tg.times().map(|t| w.big_phi(gamma * (horizon - t)).unwrap() / gamma).collect();
    let v = SpaceTimeField::new(tg, (0..tg.len()).map(|i| u.slice(i).scale(big_phi[i].exp())).collect()).unwrap();
    let lv = apply_l(&v, &a, None, None).unwrap();
    let (mut direct, mut substituted) = (0.0, 0.0);
    for (i, t) in tg.times().enumerate() {
        if t > horizon / 2.0 {
            continue;
        }
        let dphi = w.phi_inv(gamma * (horizon - t)).unwrap();
        let weighted = lu.slice(i).l2_norm().powi(2) * (2.0 * big_phi[i]).exp();
        let carlest1 = lv.slice(i).add(&v.slice(i).scale(dphi)).l2_norm().powi(2);
        direct += tg.trapezoid(i) * weighted;
        substituted += tg.trapezoid(i) * carlest1;
    }
    assert!(((direct - substituted) / direct).abs() <= 1e-8, "{direct} vs {substituted}");
}

#[test]
fn single_mode_sweep_passes_with_identity_and_variable_coefficients() {
    let tg = TimeGrid::new(1.0, 512).unwrap();
    let g = TorusGrid::new(1, 64).unwrap();
    let ens = single_mode_ensemble(tg, &g, 1..=16).unwrap();
    let lip = lip_config(log_spaced(1.0, 64.0, 16), 64.0);
    let w = CarlemanWeight::build(&Modulus::log_lipschitz(), 6.4, 1e-10).unwrap();
    let loglip = CarlemanProbeConfig::new(0.5, log_spaced(0.4, 6.4, 16), w, 1).unwrap();
    for recipe in [Recipe::Identity, Recipe::ScalarTwoPlusSin] {
        let a = recipe.build(&g, tg).unwrap();
        for cfg in [&lip, &loglip] {
            let s = gamma_sweep(&ens, cfg, &a).unwrap();
            assert!(s.verdict.passed(), "{recipe}: {:?}", s.rows);
            assert_eq!(s.rows.len(), 16);
            assert!(s.ln_floor().is_finite() && s.floor() >= 1e-6);
        }
    }
}

#[test]
fn sweep_is_bitwise_reproducible() {
    let tg = TimeGrid::new(1.0, 128).unwrap();
    let g = TorusGrid::new(2, 16).unwrap();
    let a = Recipe::ScalarTwoPlusSin.build(&g, tg).unwrap();
    let cfg = lip_config(log_spaced(1.0, 8.0, 5), 10.0);
    let spec = FieldSpec::band_limited(0.5, 1.0);
    let run = || gamma_sweep(&random_ensemble(tg, &g, &spec, 6, 42), &cfg, &a).unwrap().to_csv();
    assert_eq!(run(), run());
}

#[test]
fn sides_reject_late_support() {
    let tg = TimeGrid::new(1.0, 128).unwrap();
    let g = TorusGrid::new(1, 16).unwrap();
    let e = SpectralField::mode(&g, [1, 0]).unwrap();
    let mid = SpaceTimeField::separable(tg, |t| bump(t - 0.25, 1.0), &e);
    let a = CoefficientSchedule::Static(CoefficientMatrix::identity(&g));
    let err = carleman_sides(&mid, 1.0, &lip_config(vec![1.0], 10.0), &a).unwrap_err();
    assert!(matches!(err, Error::Support { time, .. } if time > 0.5));
}

fn test_block(g: &TorusGrid, nu: i32) -> SpectralField {
    let u = SpectralField::from_real_fn(g, |x: [f64; 2]| {
        (1..40).map(|k| (k as f64 * x[0] + 0.3 * k as f64).cos() / k as f64).sum::<f64>()
    });
    apply_delta(&u, nu)
}

#[test]
fn ledger_holds_for_identity_coefficients() {
    let tg = TimeGrid::new(1.0, 1025).unwrap();
    let g = TorusGrid::new(1, 128).unwrap();
    let a = Recipe::Identity.build(&g, tg).unwrap();
    let cfg = lip_config(vec![4.0], 64.0);
    for nu in 0..=4 {
        let l = proof_ledger_probe(&test_block(&g, nu), nu, 4.0, &cfg, &a, tg).unwrap();
        assert!(l.all_hold(), "nu = {nu}: {:?}", l.failures());
        assert_eq!(l.epsilon, if nu == 0 { 0.5 } else { 4f64.powi(-nu) });
        if nu == 0 {
            assert_eq!(l.rows_named("low_block_bound").count(), 1);
        } else {
            assert!(l.rows_named("lower_frequency").count() > 0);
            assert!(l.constants["block_bound_c"] > 0.0);
        }
        // For a = Id the first two links of the positivity chain are equalities.
        for r in l.rows_named("block_integration_by_parts").chain(l.rows_named("block_positivity")) {
            assert!((r.lhs - r.rhs * if r.inequality == "block_positivity" { 2.0 } else { 1.0 }).abs() <= 1e-10 * r.lhs);
        }
        for r in l.rows_named("energy_identity") {
            assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.lhs.max(1e-300));
        }
        let csv = l.to_csv();
        assert!(csv.starts_with("inequality,time,lhs,rhs,holds\n"));
        assert!(csv.lines().any(|line| line.split(',').next().is_some_and(|n| n.ends_with("block_bound")) && line.split(',').nth(1) == Some("")));
    }
}

#[test]
fn ledger_holds_for_rough_and_variable_coefficients() {
    let tg = TimeGrid::new(1.0, 1025).unwrap();
    let g = TorusGrid::new(1, 128).unwrap();
    let cfg = lip_config(vec![4.0], 64.0);
    for recipe in ["scalar:2+sin", "rough-in-time:sqrt"] {
        let a = recipe.parse::<Recipe>().unwrap().build(&g, tg).unwrap();
        for nu in [0, 3, 4] {
            let l = proof_ledger_probe(&test_block(&g, nu), nu, 4.0, &cfg, &a, tg).unwrap();
            assert!(l.all_hold(), "{recipe}, nu = {nu}: {:?}", l.failures());
        }
    }
}

#[test]
fn ledger_of_zero_block_is_trivial() {
    let tg = TimeGrid::new(1.0, 257).unwrap();
    let g = TorusGrid::new(1, 64).unwrap();
    let a = Recipe::Identity.build(&g, tg).unwrap();
    let l = proof_ledger_probe(&SpectralField::zeros(&g), 2, 4.0, &lip_config(vec![4.0], 64.0), &a, tg).unwrap();
    assert!(l.all_hold());
    assert!(l.rows.iter().all(|r| r.time.is_none() && r.lhs == 0.0 && r.rhs == 0.0));
}

#[test]
fn ledger_rejects_non_blocks() {
    let tg = TimeGrid::new(1.0, 257).unwrap();
    let g = TorusGrid::new(1, 64).unwrap();
    let a = Recipe::Identity.build(&g, tg).unwrap();
    let cfg = lip_config(vec![4.0], 64.0);
    let low = SpectralField::mode(&g, [1, 0]).unwrap();
    assert!(matches!(proof_ledger_probe(&low, 3, 4.0, &cfg, &a, tg), Err(Error::NotABlock { nu: 3, .. })));
    let high = SpectralField::mode(&g, [20, 0]).unwrap();
    assert!(matches!(proof_ledger_probe(&high, 2, 4.0, &cfg, &a, tg), Err(Error::NotABlock { nu: 2, .. })));
}
