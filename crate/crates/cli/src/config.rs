//! Per-command configuration files and their validation.
//!
//! Each command has its own schema; unknown keys are rejected. Command-line
//! flags override the file, and the merged result is checked before any
//! computation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use lkcharge::config::{BodySpec, ConeSpec};
use lkcharge::families::Term;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Invalid configuration; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// A scalar or a list in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Reads `path` (if any) into the schema of `command`.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> anyhow::Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if let Some(c) = table.remove("command") {
        match c.as_str() {
            Some(name) if name == command => {}
            _ => return Err(invalid(format!("config is for command {c}, not {command}"))),
        }
    }
    T::deserialize(table).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn positive(x: f64, what: &str) -> anyhow::Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {x}")))
    }
}

fn check_dims(d: usize, m: usize) -> anyhow::Result<()> {
    if d == 0 || d > 6 {
        return Err(invalid(format!("d must be in 1..=6, got {d}")));
    }
    if m > d {
        return Err(invalid(format!("m must not exceed d, got m={m}, d={d}")));
    }
    Ok(())
}

fn check_grid(n: usize) -> anyhow::Result<()> {
    if (16..=4096).contains(&n) {
        Ok(())
    } else {
        Err(invalid(format!("grid must be in 16..=4096, got {n}")))
    }
}

/// Density read from a `(cell index, value)` CSV on an explicit grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityCsv {
    pub path: PathBuf,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCase {
    ExtremalCharge,
    ZeroCharge,
    CorruptedExtremal,
    Density,
    ExtremalMixed,
    TrigMixed,
}

impl VerifyCase {
    pub const ALL: [(&'static str, VerifyCase); 6] = [
        ("extremal-charge", VerifyCase::ExtremalCharge),
        ("zero-charge", VerifyCase::ZeroCharge),
        ("corrupted-extremal", VerifyCase::CorruptedExtremal),
        ("density", VerifyCase::Density),
        ("extremal-mixed", VerifyCase::ExtremalMixed),
        ("trig-mixed", VerifyCase::TrigMixed),
    ];

    pub fn parse(s: &str) -> anyhow::Result<Self> {
        Self::ALL
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, c)| *c)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|(n, _)| *n).collect();
                invalid(format!("unknown case {s:?}; expected one of {}", names.join(", ")))
            })
    }

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, c)| *c == self).map(|(n, _)| *n).unwrap_or("?")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyFile {
    pub case: Option<String>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub h: Option<OneOrMany>,
    pub grid: Option<usize>,
    pub body: Option<BodySpec>,
    pub cone: Option<ConeSpec>,
    /// Built-in density terms for the `density` case.
    pub density: Option<Vec<Term>>,
    pub density_csv: Option<DensityCsv>,
    /// Number of random trigonometric polynomials for `trig-mixed`.
    pub count: Option<usize>,
    /// Terms per trigonometric polynomial.
    pub terms: Option<usize>,
    pub equality_tol: Option<f64>,
    pub slack_tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub case: VerifyCase,
    pub d: usize,
    pub m: usize,
    pub h: Vec<f64>,
    pub grid: usize,
    pub body: BodySpec,
    pub cone: ConeSpec,
    pub density: Option<Vec<Term>>,
    pub density_csv: Option<DensityCsv>,
    pub count: usize,
    pub terms: usize,
    pub equality_tol: f64,
    pub slack_tol: f64,
    pub seed: u64,
    /// Not serialized, so reports do not depend on where they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl VerifyFile {
    pub fn finish(self) -> anyhow::Result<VerifyConfig> {
        let case = VerifyCase::parse(self.case.as_deref().ok_or_else(|| invalid("missing key `case`"))?)?;
        let d = self.d.unwrap_or(2);
        let m = self.m.unwrap_or(0);
        check_dims(d, m)?;
        let h = self.h.map(|h| h.to_vec()).unwrap_or_else(|| vec![1.0]);
        if h.is_empty() {
            return Err(invalid("h list is empty"));
        }
        for x in &h {
            positive(*x, "h")?;
        }
        let grid = self.grid.unwrap_or(if d >= 3 { 96 } else { 256 });
        check_grid(grid)?;
        let cone = self.cone.clone().unwrap_or(ConeSpec::Orthant { m });
        let mixed = matches!(case, VerifyCase::ExtremalMixed | VerifyCase::TrigMixed);
        if mixed && self.body.is_some() {
            return Err(invalid("mixed cases use the cross-polytope body; remove `body`"));
        }
        if mixed && self.cone.is_some() {
            return Err(invalid("mixed cases use the orthant cone given by `m`; remove `cone`"));
        }
        if case == VerifyCase::ExtremalMixed && m > 1 {
            return Err(invalid("extremal-mixed needs m = 0 or 1"));
        }
        if let ConeSpec::Orthant { m: cm } = cone {
            if cm != m && self.m.is_some() {
                return Err(invalid(format!("cone orthant m = {cm} disagrees with m = {m}")));
            }
        }
        match case {
            VerifyCase::Density => {
                if self.density.is_some() == self.density_csv.is_some() {
                    return Err(invalid("the density case needs exactly one of `density` or `density_csv`"));
                }
            }
            _ => {
                if self.density.is_some() || self.density_csv.is_some() {
                    return Err(invalid(format!("`density` keys are only valid for the density case, not {}", case.name())));
                }
            }
        }
        if case != VerifyCase::TrigMixed && (self.count.is_some() || self.terms.is_some()) {
            return Err(invalid("`count` and `terms` are only valid for trig-mixed"));
        }
        let equality_tol = self.equality_tol.unwrap_or(1e-3);
        let slack_tol = self.slack_tol.unwrap_or(lkcharge::inequality::SLACK_TOL);
        positive(equality_tol, "equality_tol")?;
        positive(slack_tol, "slack_tol")?;
        let count = self.count.unwrap_or(20);
        let terms = self.terms.unwrap_or(3);
        if count == 0 || terms == 0 {
            return Err(invalid("count and terms must be positive"));
        }
        Ok(VerifyConfig {
            case,
            d,
            m,
            h,
            grid,
            body: self.body.unwrap_or_default(),
            cone,
            density: self.density,
            density_csv: self.density_csv,
            count,
            terms,
            equality_tol,
            slack_tol,
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingKind {
    Charge,
    Mixed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StechkinFile {
    pub setting: Option<SettingKind>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub body: Option<BodySpec>,
    pub cone: Option<ConeSpec>,
    pub n_min: Option<f64>,
    pub n_max: Option<f64>,
    pub n_points: Option<usize>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub delta_points: Option<usize>,
    pub sandwich_tol: Option<f64>,
    /// Scales `h` at which the extremal input is run.
    pub attained_h: Option<OneOrMany>,
    pub attained_tol: Option<f64>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StechkinConfig {
    pub setting: SettingKind,
    pub d: usize,
    pub m: usize,
    pub body: BodySpec,
    pub cone: ConeSpec,
    pub n_min: f64,
    pub n_max: f64,
    pub n_points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    pub sandwich_tol: f64,
    pub attained_h: Vec<f64>,
    pub attained_tol: f64,
    pub grid: usize,
    pub seed: u64,
    /// Not serialized, so reports do not depend on where they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

fn check_range(lo: f64, hi: f64, count: usize, what: &str) -> anyhow::Result<()> {
    positive(lo, &format!("{what}_min"))?;
    positive(hi, &format!("{what}_max"))?;
    if hi <= lo {
        return Err(invalid(format!("{what}_max must exceed {what}_min")));
    }
    if count < 2 {
        return Err(invalid(format!("{what}_points must be at least 2")));
    }
    Ok(())
}

impl StechkinFile {
    pub fn finish(self) -> anyhow::Result<StechkinConfig> {
        let setting = self.setting.unwrap_or(SettingKind::Charge);
        let d = self.d.unwrap_or(1);
        let m = self.m.unwrap_or(0);
        check_dims(d, m)?;
        if setting == SettingKind::Mixed && (self.body.is_some() || self.cone.is_some()) {
            return Err(invalid("the mixed setting fixes body and cone; remove `body` and `cone`"));
        }
        let n_min = self.n_min.unwrap_or(1e-2);
        let n_max = self.n_max.unwrap_or(1e2);
        let n_points = self.n_points.unwrap_or(41);
        check_range(n_min, n_max, n_points, "n")?;
        let delta_min = self.delta_min.unwrap_or(1e-3);
        let delta_max = self.delta_max.unwrap_or(1e1);
        let delta_points = self.delta_points.unwrap_or(9);
        check_range(delta_min, delta_max, delta_points, "delta")?;
        let sandwich_tol = self.sandwich_tol.unwrap_or(1e-6);
        positive(sandwich_tol, "sandwich_tol")?;
        let attained_h = self.attained_h.map(|h| h.to_vec()).unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
        for h in &attained_h {
            positive(*h, "attained_h")?;
        }
        if setting == SettingKind::Mixed && m > 1 && !attained_h.is_empty() {
            return Err(invalid("attained points need an extremal function; use m = 0 or 1, or attained_h = []"));
        }
        let attained_tol = self.attained_tol.unwrap_or(1e-3);
        positive(attained_tol, "attained_tol")?;
        let grid = self.grid.unwrap_or(if d >= 3 { 96 } else { 256 });
        check_grid(grid)?;
        Ok(StechkinConfig {
            setting,
            d,
            m,
            body: self.body.unwrap_or_default(),
            cone: self.cone.unwrap_or(ConeSpec::Orthant { m }),
            n_min,
            n_max,
            n_points,
            delta_min,
            delta_max,
            delta_points,
            sandwich_tol,
            attained_h,
            attained_tol,
            grid,
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverFile {
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub body: Option<BodySpec>,
    pub cone: Option<ConeSpec>,
    pub deltas: Option<OneOrMany>,
    pub grid: Option<usize>,
    /// Tolerance on `|worst / Ω - 1|`.
    pub hug_tol: Option<f64>,
    pub dump_fields: Option<bool>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoverConfig {
    pub d: usize,
    pub m: usize,
    pub body: BodySpec,
    pub cone: ConeSpec,
    pub deltas: Vec<f64>,
    pub grid: usize,
    pub hug_tol: f64,
    pub dump_fields: bool,
    pub seed: u64,
    /// Not serialized, so reports do not depend on where they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl RecoverFile {
    pub fn finish(self) -> anyhow::Result<RecoverConfig> {
        let d = self.d.unwrap_or(2);
        let m = self.m.unwrap_or(1);
        check_dims(d, m)?;
        let deltas = self.deltas.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.01, 0.1, 1.0]);
        if deltas.is_empty() {
            return Err(invalid("deltas is empty"));
        }
        for x in &deltas {
            positive(*x, "delta")?;
        }
        let grid = self.grid.unwrap_or(if d >= 3 { 96 } else { 256 });
        check_grid(grid)?;
        let hug_tol = self.hug_tol.unwrap_or(1e-3);
        positive(hug_tol, "hug_tol")?;
        let cone = self.cone.unwrap_or(ConeSpec::Orthant { m });
        if !matches!(cone, ConeSpec::Orthant { .. }) {
            return Err(invalid("recovery demos need an orthant cone"));
        }
        Ok(RecoverConfig {
            d,
            m,
            body: self.body.unwrap_or_default(),
            cone,
            deltas,
            grid,
            hug_tol,
            dump_fields: self.dump_fields.unwrap_or(true),
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessFile {
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpnessConfig {
    pub d: usize,
    pub m: usize,
    pub budget: usize,
    pub seed: u64,
    /// Not serialized, so reports do not depend on where they are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl SharpnessFile {
    pub fn finish(self) -> anyhow::Result<SharpnessConfig> {
        let d = self.d.unwrap_or(2);
        let m = self.m.unwrap_or(2);
        check_dims(d, m)?;
        let budget = self.budget.unwrap_or(2000);
        if budget < 20 {
            return Err(invalid("budget must be at least 20"));
        }
        Ok(SharpnessConfig {
            d,
            m,
            budget,
            seed: self.seed.unwrap_or(0),
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}
