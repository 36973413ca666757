//! One function per subcommand. Each writes its artifacts under `out` and
//! returns an [`Outcome`] carrying the report and verdict.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use paraweight::carleman::{
    gamma_sweep, mollification_constants, proof_ledger_probe, random_ensemble, single_mode_ensemble,
    Recipe,
};
use paraweight::modulus::{check_weight_ode, weight_table_csv};
use paraweight::paraproduct::{
    find_positive_m, positivity_margin, probe, Coefficient, Inequality, PositivityEnsemble, ProbeEnsemble,
    ProbeReport, Verdict,
};
use paraweight::spectral::io::write_field;
use paraweight::spectral::random::derive_seed;
use paraweight::spectral::{apply_delta, bernstein_check, decompose, h_norm, random_field, support_leak, FieldSpec, NormMethod};
use paraweight::{CarlemanProbeConfig, CarlemanWeight, CoefficientMatrix, Error, SpectralField, TimeGrid, TorusGrid};

use crate::config::{RunConfig, ShiftChoice};
use crate::error::CliError;

/// Named fields accepted by `probe.field`.
pub const FIELD_NAMES: &[&str] = &["random", "sawtooth", "mode:<k>"];

/// Tolerances of the `lp` and `weights` verdicts.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;
pub const SUPPORT_TOL: f64 = 1e-14;
pub const ODE_TOL: f64 = 1e-5;
pub const CLOSED_FORM_TOL: f64 = 1e-8;

/// Largest admissible spread `max/min` of a mollification constant.
pub const MOLLIFY_SPREAD: f64 = 2.0;

/// Relative growth allowed across one resolution doubling.
pub const MAX_GROWTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub name: String,
    pub verdict: Verdict,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub report: Value,
}

fn write(out: &Path, name: &str, contents: &str, artifacts: &mut Vec<String>) -> Result<(), CliError> {
    fs::write(out.join(name), contents)?;
    artifacts.push(name.to_string());
    Ok(())
}

fn write_json(out: &Path, name: &str, v: &impl Serialize, artifacts: &mut Vec<String>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("report serializes");
    text.push('\n');
    write(out, name, &text, artifacts)
}

fn finish(name: &str, ok: bool, report: Value, out: &Path, mut artifacts: Vec<String>) -> Result<Outcome, CliError> {
    let verdict = Verdict::from_bool(ok);
    let mut report = report;
    report["verdict"] = json!(verdict);
    write_json(out, &format!("{name}.json"), &report, &mut artifacts)?;
    Ok(Outcome { name: name.to_string(), verdict, artifacts, report })
}

fn grid(cfg: &RunConfig) -> Result<TorusGrid, CliError> {
    TorusGrid::new(cfg.grid.dim, cfg.grid.n).map_err(|e| CliError::field("grid.N", e))
}

fn weight(cfg: &RunConfig) -> Result<CarlemanWeight, CliError> {
    CarlemanWeight::build(&cfg.modulus(), cfg.tau_max(), cfg.weight.tol).map_err(|e| match e {
        Error::InvalidModulus(_) => CliError::field("probe.modulus", e),
        other => CliError::field("weight.tau_max", other),
    })
}

/// `weights`: tabulate the weight and check its ODE.
pub fn weights(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let w = weight(cfg)?;
    let tau_max = cfg.tau_max();
    let table: Vec<f64> = (0..=100).map(|k| tau_max * k as f64 / 100.0).collect();
    let mut artifacts = Vec::new();
    write(out, "weights.csv", &weight_table_csv(&w, &table)?, &mut artifacts)?;
    let interior = &table[1..100];
    let ode = check_weight_ode(&w, interior, ODE_TOL)?;
    let closed_form = if cfg.probe.modulus == "lip" {
        let mut worst = 0.0f64;
        for &tau in interior {
            let exact = tau.exp_m1();
            worst = worst.max(((w.big_phi(tau)? - exact) / exact).abs());
        }
        Some(worst)
    } else {
        None
    };
    let ok = ode.within_tol && ode.nondecreasing && closed_form.is_none_or(|e| e <= CLOSED_FORM_TOL);
    let report = json!({
        "modulus": cfg.probe.modulus,
        "tau_max": tau_max,
        "knots": w.knot_count(),
        "ode_max_residual": ode.max_residual,
        "ode_tol": ODE_TOL,
        "second_derivative_nondecreasing": ode.nondecreasing,
        "closed_form_max_rel_error": closed_form,
    });
    finish("weights", ok, report, out, artifacts)
}

/// The field named by `probe.field`.
pub fn named_field(cfg: &RunConfig, g: &TorusGrid) -> Result<SpectralField, CliError> {
    let name = cfg.probe.field.as_str();
    match name {
        "random" => Ok(random_field(g, &FieldSpec::band_limited(0.5, 1.0).real(), cfg.ensemble.seed, 0)),
        "sawtooth" => {
            let top = g.n() / 2;
            Ok(SpectralField::from_real_fn(g, |x| (1..top).map(|k| (k as f64 * x[0]).sin() / k as f64).sum()))
        }
        _ => {
            let k = name
                .strip_prefix("mode:")
                .and_then(|k| k.parse::<i64>().ok())
                .ok_or_else(|| CliError::field("probe.field", format!("cannot parse `{name}`")))?;
            SpectralField::mode(g, [k, 0]).map_err(|e| CliError::field("probe.field", e))
        }
    }
}

/// `lp`: decompose the named field into blocks.
pub fn lp(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = grid(cfg)?;
    let u = named_field(cfg, &g)?;
    let s = cfg.probe.s;
    let d = decompose(&u, s);
    let scale = u.max_coeff().max(f64::MIN_POSITIVE);
    let reconstruction = d.reconstruct().sub(&u).max_coeff() / scale;
    let leak = d.blocks.iter().enumerate().map(|(k, b)| support_leak(b, k as i32)).fold(0.0, f64::max);
    let mut bernstein = 0.0f64;
    for (k, b) in d.blocks.iter().enumerate() {
        for axis in 0..g.dim() {
            let r = bernstein_check(b, k as i32, axis)?;
            bernstein = bernstein.max(r / 2f64.powi(k as i32 + 1));
        }
    }
    let direct = h_norm(&u, s, NormMethod::Direct);
    let mut artifacts = Vec::new();
    write(out, "lp_blocks.csv", &d.energies_csv(), &mut artifacts)?;
    let mut bytes = Vec::new();
    write_field(&u, &mut bytes)?;
    fs::write(out.join("lp_field.spf"), bytes)?;
    artifacts.push("lp_field.spf".into());
    let ok = reconstruction <= RECONSTRUCTION_TOL && leak <= SUPPORT_TOL && bernstein <= 1.0;
    let report = json!({
        "field": cfg.probe.field,
        "N": g.n(),
        "dim": g.dim(),
        "s": s,
        "blocks": d.blocks.len(),
        "reconstruction_rel_error": reconstruction,
        "max_support_leak": leak,
        "max_bernstein_ratio_over_bound": bernstein,
        "norm_ratio_lp_over_direct": h_norm(&u, s, NormMethod::Lp) / direct,
    });
    finish("lp", ok, report, out, artifacts)
}

fn static_matrix(cfg: &RunConfig, g: &TorusGrid) -> Result<(CoefficientMatrix, Coefficient), CliError> {
    match cfg.recipe() {
        Recipe::Identity => Ok((CoefficientMatrix::identity(g), Coefficient::fixed("identity", |_| 1.0))),
        Recipe::ScalarTwoPlusSin => {
            let a = SpectralField::from_real_fn(g, |x| 2.0 + x[0].sin());
            Ok((CoefficientMatrix::scalar(&a, 1.0)?, Coefficient::fixed("scalar:2+sin", |x| 2.0 + x[0].sin())))
        }
        Recipe::RoughInTime(_) => {
            Err(CliError::field("probe.coefficients", "paraproduct probes need a time-independent recipe"))
        }
    }
}

#[derive(Debug, Serialize)]
struct ParaReport {
    coefficients: String,
    m: u32,
    m_source: &'static str,
    positivity_margin: f64,
    lambda0: f64,
    threshold: Option<paraweight::paraproduct::PositivityThreshold>,
    probes: Vec<ProbeReport>,
}

/// `para`: positivity threshold, then the four paraproduct estimates on the
/// ladder `N/2, N`.
pub fn para(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = grid(cfg)?;
    let (a, coefficient) = static_matrix(cfg, &g)?;
    let ens = PositivityEnsemble::new(cfg.ensemble.size, cfg.ensemble.seed);
    let (m, source, threshold) = match cfg.probe.m {
        ShiftChoice::Fixed(m) => (m, "config", None),
        ShiftChoice::Named(_) => {
            let t = find_positive_m(&a, &ens, cfg.probe.m_max).map_err(CliError::Core)?;
            (t.m, "auto", Some(t))
        }
    };
    let coarse = TorusGrid::new(g.dim(), g.n() / 2).map_err(|e| CliError::field("grid.N", e))?;
    if m as i64 + 4 > coarse.k_max() as i64 {
        return Err(CliError::field("probe.m", format!("m = {m} needs m + 4 <= {} at N/2", coarse.k_max())));
    }
    let margin = positivity_margin(&a, m, &ens)?;
    let pe = ProbeEnsemble {
        size: cfg.ensemble.size,
        seed: cfg.ensemble.seed,
        u_spec: FieldSpec::band_limited(0.5, 1.0),
        coefficient,
    };
    let ns = [g.n() / 2, g.n()];
    let probes = Inequality::ALL
        .iter()
        .map(|&ineq| probe(ineq, m, cfg.probe.s, g.dim(), &ns, &pe))
        .collect::<Result<Vec<_>, _>>()?;
    let ok = margin >= a.lambda0() / 2.0 && probes.iter().all(|p| p.verdict.passed());
    let report = ParaReport {
        coefficients: cfg.probe.coefficients.clone(),
        m,
        m_source: source,
        positivity_margin: margin,
        lambda0: a.lambda0(),
        threshold,
        probes,
    };
    finish("para", ok, serde_json::to_value(report).expect("report serializes"), out, Vec::new())
}

/// `mollify`: the two mollification constants for `a(t) = μ(|t - T/2|)`.
pub fn mollify(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mu = cfg.modulus();
    let horizon = cfg.time.horizon;
    let nus: Vec<i32> = (cfg.mollify.nu_min..=cfg.mollify.nu_max).collect();
    let profile = |t: f64| mu.eval((t - horizon / 2.0).abs().min(1.0));
    let c = mollification_constants(profile, horizon, &mu, &nus, cfg.mollify.steps_per_width)
        .map_err(|e| CliError::field("mollify.steps_per_width", e))?;
    let spread = |f: &dyn Fn(&paraweight::carleman::MollificationConstants) -> f64| {
        let (lo, hi) = c.iter().map(f).fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi / lo
    };
    let diff_spread = spread(&|x| x.c_diff);
    let derivative_spread = spread(&|x| x.c_derivative);
    let ok = diff_spread <= MOLLIFY_SPREAD && derivative_spread <= MOLLIFY_SPREAD;
    let report = json!({
        "profile": format!("mu(|t - T/2|), mu = {}", cfg.probe.modulus),
        "T": horizon,
        "steps_per_width": cfg.mollify.steps_per_width,
        "constants": c,
        "c_diff_spread": diff_spread,
        "c_derivative_spread": derivative_spread,
        "max_spread": MOLLIFY_SPREAD,
    });
    finish("mollify", ok, report, out, Vec::new())
}

/// Time steps the narrowest ledger mollifier must span.
const LEDGER_STEPS_PER_WIDTH: f64 = 4.0;

/// Largest `ν <= k_max` whose width `4^{-ν}` spans enough time steps.
pub fn ledger_nu_max(time: &TimeGrid, g: &TorusGrid) -> i32 {
    let mut nu = 0;
    while nu < g.k_max() && 4f64.powi(-(nu + 1)) >= LEDGER_STEPS_PER_WIDTH * time.dt() {
        nu += 1;
    }
    nu
}

/// `carleman`: γ-sweep of the Carleman ratio plus the proof ledger on the
/// blocks of a seeded field.
pub fn carleman(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let g = grid(cfg)?;
    let time = TimeGrid::new(cfg.time.horizon, cfg.time.samples).map_err(|e| CliError::field("time.M", e))?;
    let w = weight(cfg)?;
    let m = match cfg.probe.m {
        ShiftChoice::Fixed(m) => m,
        ShiftChoice::Named(_) => 1,
    };
    let pcfg = CarlemanProbeConfig::new(cfg.probe.s, cfg.gammas(), w, m).map_err(|e| CliError::field("gamma.start", e))?;
    let recipe = cfg.recipe();
    let a = recipe.build(&g, time)?;
    let top = 16.min(g.n() as i64 / 2 - 1);
    let mut ens = single_mode_ensemble(time, &g, 1..=top)?;
    ens.extend(random_ensemble(time, &g, &FieldSpec::band_limited(0.25, 1.0), cfg.ensemble.size, cfg.ensemble.seed));
    let sweep = gamma_sweep(&ens, &pcfg, &a)?;
    let mut artifacts = Vec::new();
    write(out, "gamma_sweep.csv", &sweep.to_csv(), &mut artifacts)?;

    let gammas = cfg.gammas();
    let ledger_gamma = gammas[gammas.len() / 2];
    let base = random_field(&g, &FieldSpec::band_limited(1.0, 1.0).real(), derive_seed(cfg.ensemble.seed, 0x1ED), 0);
    let mut ledgers = Vec::new();
    let mut ledgers_ok = true;
    for nu in 0..=ledger_nu_max(&time, &g) {
        let l = proof_ledger_probe(&apply_delta(&base, nu), nu, ledger_gamma, &pcfg, &a, time)?;
        write(out, &format!("proof_ledger_nu{nu}.csv"), &l.to_csv(), &mut artifacts)?;
        ledgers_ok &= l.all_hold();
        ledgers.push(json!({
            "nu": nu,
            "epsilon": l.epsilon,
            "rows": l.rows.len(),
            "failures": l.failures().len(),
            "constants": l.constants,
        }));
    }
    let ok = sweep.verdict.passed() && ledgers_ok;
    let report = json!({
        "coefficients": recipe.to_string(),
        "recipe": recipe.description(time.len()),
        "modulus": cfg.probe.modulus,
        "s": cfg.probe.s,
        "m": m,
        "N": g.n(),
        "dim": g.dim(),
        "T": time.horizon(),
        "M": time.len(),
        "ensemble": ens.len(),
        "gamma0": sweep.gamma0,
        "min_c": sweep.floor(),
        "ln_min_c": sweep.ln_floor(),
        "sweep": sweep.rows,
        "sweep_verdict": sweep.verdict,
        "ledger_gamma": ledger_gamma,
        "ledgers": ledgers,
    });
    finish("carleman", ok, report, out, artifacts)
}
