//! Run configuration: flat TOML sections, every key optional.
//!
//! ```toml
//! [grid]
//! dim = 1
//! N = 256
//!
//! [time]
//! T = 1.0
//! M = 512
//!
//! [probe]
//! modulus = "lip"
//! s = 0.5
//! m = "auto"
//! coefficients = "identity"
//! field = "random"
//!
//! [ensemble]
//! size = 16
//! seed = 7
//!
//! [gamma]
//! start = 1.0
//! stop = 64.0
//! count = 16
//! spacing = "log"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use paraweight::carleman::{log_spaced, Recipe};
use paraweight::Modulus;

/// One offending configuration key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn field_error(field: &str, message: impl Into<String>) -> FieldError {
    FieldError { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftChoice {
    Fixed(u32),
    Named(String),
}

impl Default for ShiftChoice {
    fn default() -> Self {
        ShiftChoice::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 1, n: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "M")]
    pub samples: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { horizon: 1.0, samples: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub modulus: String,
    pub s: f64,
    pub m: ShiftChoice,
    pub m_max: u32,
    pub coefficients: String,
    pub field: String,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            modulus: "lip".into(),
            s: 0.5,
            m: ShiftChoice::default(),
            m_max: 8,
            coefficients: "identity".into(),
            field: "random".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub size: usize,
    pub seed: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { size: 16, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaSection {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: String,
}

impl Default for GammaSection {
    fn default() -> Self {
        Self { start: 1.0, stop: 64.0, count: 16, spacing: "log".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSection {
    /// Defaults to `gamma.stop * time.T`.
    pub tau_max: Option<f64>,
    pub tol: f64,
}

impl Default for WeightSection {
    fn default() -> Self {
        Self { tau_max: None, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifySection {
    pub nu_min: i32,
    pub nu_max: i32,
    pub steps_per_width: usize,
}

impl Default for MollifySection {
    fn default() -> Self {
        Self { nu_min: 2, nu_max: 6, steps_per_width: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub time: TimeSection,
    pub probe: ProbeSection,
    pub ensemble: EnsembleSection,
    pub gamma: GammaSection,
    pub weight: WeightSection,
    pub mollify: MollifySection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<FieldError>> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| vec![toml_error(&e)])?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Vec<FieldError>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![field_error("--config", format!("cannot read {}: {e}", path.display()))])?;
        Self::parse(&text)
    }

    /// Every violated constraint, in section order.
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                errs.push(field_error(field, msg));
            }
        };
        let g = &self.grid;
        check(g.dim == 1 || g.dim == 2, "grid.dim", format!("{} is not 1 or 2", g.dim));
        check(g.n >= 16 && g.n.is_power_of_two(), "grid.N", format!("{} is not a power of two >= 16", g.n));
        let t = &self.time;
        check(t.horizon > 0.0 && t.horizon.is_finite(), "time.T", format!("{} is not positive", t.horizon));
        check(t.samples >= 64, "time.M", format!("{} samples, need at least 64", t.samples));
        let p = &self.probe;
        if let Err(e) = Modulus::from_catalogue(&p.modulus) {
            check(false, "probe.modulus", e.to_string());
        }
        check(p.s > 0.0 && p.s < 1.0, "probe.s", format!("{} is outside (0, 1)", p.s));
        if let ShiftChoice::Named(name) = &p.m {
            check(name == "auto", "probe.m", format!("`{name}` is neither an integer nor \"auto\""));
        }
        if let Err(e) = p.coefficients.parse::<Recipe>() {
            check(false, "probe.coefficients", e.to_string());
        }
        check(
            crate::commands::FIELD_NAMES.iter().any(|f| f.split(':').next() == p.field.split(':').next()),
            "probe.field",
            format!("unknown field `{}`, expected one of {:?}", p.field, crate::commands::FIELD_NAMES),
        );
        check(self.ensemble.size >= 1, "ensemble.size", "must be at least 1".into());
        let gm = &self.gamma;
        check(gm.start > 0.0, "gamma.start", format!("{} is not positive", gm.start));
        check(gm.stop > gm.start, "gamma.stop", format!("{} is not above gamma.start", gm.stop));
        check(gm.count >= 2, "gamma.count", format!("{} values, need at least 2", gm.count));
        check(gm.spacing == "log", "gamma.spacing", format!("`{}` unsupported, only \"log\"", gm.spacing));
        if let Some(tm) = self.weight.tau_max {
            check(
                tm >= gm.stop * t.horizon,
                "weight.tau_max",
                format!("{tm} is below gamma.stop * time.T = {}", gm.stop * t.horizon),
            );
        }
        check(self.weight.tol > 0.0 && self.weight.tol < 1e-3, "weight.tol", format!("{} not in (0, 1e-3)", self.weight.tol));
        let ml = &self.mollify;
        check(ml.nu_min >= 1 && ml.nu_max >= ml.nu_min, "mollify.nu_max", "need 1 <= nu_min <= nu_max".into());
        check(ml.steps_per_width >= 4, "mollify.steps_per_width", "need at least 4".into());
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn recipe(&self) -> Recipe {
        self.probe.coefficients.parse().expect("validated recipe")
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::from_catalogue(&self.probe.modulus).expect("validated modulus")
    }

    pub fn tau_max(&self) -> f64 {
        self.weight.tau_max.unwrap_or(self.gamma.stop * self.time.horizon)
    }

    pub fn gammas(&self) -> Vec<f64> {
        log_spaced(self.gamma.start, self.gamma.stop, self.gamma.count)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn toml_error(e: &toml::de::Error) -> FieldError {
    let msg = e.message().to_string();
    // serde names the key in backticks for unknown and mistyped fields.
    let field = msg.split('`').nth(1).filter(|_| msg.contains("field")).unwrap_or("<toml>").to_string();
    FieldError { field, message: e.to_string().trim().replace('\n', " ") }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.probe.m = ShiftChoice::Fixed(3);
        c.weight.tau_max = Some(80.0);
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn diagnostics_name_fields() {
        let errs = RunConfig::parse("[grid]\nN = 100\n[probe]\ns = 1.5\nm = \"many\"\nmodulus = \"nope\"").unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["grid.N", "probe.modulus", "probe.s", "probe.m"]);
        let errs = RunConfig::parse("[grid]\nsize = 3").unwrap_err();
        assert_eq!(errs[0].field, "size");
        let errs = RunConfig::parse("[time]\nT = \"one\"").unwrap_err();
        assert!(errs[0].message.contains("T"), "{errs:?}");
    }
}
