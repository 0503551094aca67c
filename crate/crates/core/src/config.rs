//! TOML run configurations with dotted `key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibrate::{FitOptions, FreeParameter, Loss, ModelShape};
use crate::cascade::Population;
use crate::error::{Error, Result};
use crate::field::{DensityField, DensityMode};
use crate::solver::{
    solve_scalar, solve_system, GridSpec, InitialProfile, ScalarModel, SolutionField, SystemModel,
};
use crate::spectral::EigenProblem;
use crate::spline::InitialDensity;
use crate::stefan::{Classifier, StefanGrid, StefanModel};

/// A parsed configuration document before it is bound to a schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    table: toml::Table,
    /// Original text, kept while no override has been applied.
    text: Option<String>,
    source_name: String,
}

impl Document {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(&e, text, source_name))?;
        Ok(Self {
            table,
            text: Some(text.to_string()),
            source_name: source_name.to_string(),
        })
    }

    /// Read `path`, or start from an empty document when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text, &p.display().to_string())
            }
            None => Ok(Self {
                source_name: "<empty config>".into(),
                ..Self::default()
            }),
        }
    }

    pub fn table(&self) -> &toml::Table {
        &self.table
    }

    /// Apply `key.path=value`. The value is read as a TOML value when possible
    /// and as a bare string otherwise. Numeric segments index into arrays.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(Error::validation(format!("bad override key `{key}`")));
        }
        let value = parse_value(raw.trim());
        let segments: Vec<&str> = key.split('.').collect();
        set_path(&mut self.table, &segments, value, key)?;
        self.text = None;
        Ok(())
    }

    /// Set a dotted `key` to an already typed value.
    pub fn set_value(&mut self, key: &str, value: toml::Value) -> Result<()> {
        let segments: Vec<&str> = key.split('.').collect();
        set_path(&mut self.table, &segments, value, key)?;
        self.text = None;
        Ok(())
    }

    /// The resolved document as TOML text.
    pub fn render(&self) -> Result<String> {
        toml::to_string(&self.table).map_err(|e| Error::validation(format!("cannot render config: {e}")))
    }

    /// Bind the document to a schema. Unknown keys are rejected; errors carry
    /// the line of the offending key when the document is unmodified.
    pub fn bind<T: DeserializeOwned>(&self) -> Result<T> {
        match &self.text {
            Some(text) => toml::from_str(text).map_err(|e| toml_error(&e, text, &self.source_name)),
            None => {
                let text = self.render()?;
                let name = format!("{} (resolved)", self.source_name);
                toml::from_str(&text).map_err(|e| toml_error(&e, &text, &name))
            }
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    toml::from_str::<toml::Table>(&wrapped)
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, segments: &[&str], value: toml::Value, key: &str) -> Result<()> {
    let (head, rest) = segments.split_first().expect("non-empty key");
    if rest.is_empty() {
        table.insert((*head).to_string(), value);
        return Ok(());
    }
    let entry = table
        .entry((*head).to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    set_in_value(entry, rest, value, key)
}

fn set_in_value(target: &mut toml::Value, segments: &[&str], value: toml::Value, key: &str) -> Result<()> {
    match target {
        toml::Value::Table(t) => set_path(t, segments, value, key),
        toml::Value::Array(items) => {
            let (head, rest) = segments.split_first().expect("non-empty key");
            let idx: usize = head
                .parse()
                .map_err(|_| Error::validation(format!("`{key}`: `{head}` is not an array index")))?;
            let len = items.len();
            let slot = items
                .get_mut(idx)
                .ok_or_else(|| Error::validation(format!("`{key}`: index {idx} out of range (length {len})")))?;
            if rest.is_empty() {
                *slot = value;
                Ok(())
            } else {
                set_in_value(slot, rest, value, key)
            }
        }
        _ => Err(Error::validation(format!("`{key}` descends into a scalar value"))),
    }
}

fn toml_error(e: &toml::de::Error, text: &str, source_name: &str) -> Error {
    let mut line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    if let Some(field) = e
        .message()
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
    {
        let hit = text.lines().enumerate().skip(line.saturating_sub(1)).find(|(_, l)| {
            l.trim_start()
                .strip_prefix(field)
                .is_some_and(|r| r.trim_start().starts_with('='))
        });
        if let Some((i, _)) = hit {
            line = i + 1;
        }
    }
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        msg: e.message().to_string(),
    }
}

/// Initial data `phi(x)` for a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Flat-ended spline through `[x, value]` knots.
    Samples { points: Vec<[f64; 2]> },
    /// Spline through one column of a density CSV.
    Observed {
        path: PathBuf,
        #[serde(default = "default_mode")]
        mode: DensityMode,
        #[serde(default = "default_time")]
        time: f64,
    },
    Constant { value: f64 },
    /// `value` for `x <= until`, zero beyond.
    Step { value: f64, until: f64 },
    /// `amplitude cos(pi x / (2 length))` on `[0, length]`, zero beyond.
    Cosine { amplitude: f64, length: f64 },
    /// `amplitude exp(-((x - center) / width)^2)`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
}

fn default_mode() -> DensityMode {
    DensityMode::Ratio
}

fn default_time() -> f64 {
    1.0
}

/// A built initial profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Spline(InitialDensity),
    Constant(f64),
    Step { value: f64, until: f64 },
    Cosine { amplitude: f64, length: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
}

impl InitialConfig {
    pub fn build(&self) -> Result<Profile> {
        Ok(match self {
            InitialConfig::Samples { points } => {
                let knots: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                Profile::Spline(InitialDensity::build(&knots)?)
            }
            InitialConfig::Observed { path, mode, time } => {
                let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
                let field = DensityField::read_csv(file, *mode, &path.display().to_string())?;
                Profile::Spline(crate::calibrate::initial_from_observed(&field, *time)?)
            }
            InitialConfig::Constant { value } => Profile::Constant(*value),
            InitialConfig::Step { value, until } => Profile::Step {
                value: *value,
                until: *until,
            },
            InitialConfig::Cosine { amplitude, length } => {
                if !(*length > 0.0) {
                    return Err(Error::validation("cosine length must be positive"));
                }
                Profile::Cosine {
                    amplitude: *amplitude,
                    length: *length,
                }
            }
            InitialConfig::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::validation("gaussian width must be positive"));
                }
                Profile::Gaussian {
                    amplitude: *amplitude,
                    center: *center,
                    width: *width,
                }
            }
        })
    }
}

impl InitialProfile for Profile {
    fn value_at(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Profile::Spline(s) => return s.eval(x),
            Profile::Constant(v) => *v,
            Profile::Step { value, until } => {
                if x <= *until {
                    *value
                } else {
                    0.0
                }
            }
            Profile::Cosine { amplitude, length } => {
                if x <= *length {
                    amplitude * (std::f64::consts::FRAC_PI_2 * x / length).cos().max(0.0)
                } else {
                    0.0
                }
            }
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude * (-((x - center) / width).powi(2)).exp(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    /// `follower,followee` edge list.
    pub graph: PathBuf,
    /// `user_id,time_hours` adoption events.
    pub cascade: PathBuf,
    /// One source id per line.
    pub sources: PathBuf,
    pub times: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: DensityMode,
    #[serde(default)]
    pub population: Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// `user_id,distance` table, as written by `ingest`.
    pub distances: PathBuf,
    pub cascade: PathBuf,
    pub sources: PathBuf,
    pub times: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: DensityMode,
    #[serde(default)]
    pub population: Population,
}

/// Where to read a solution off as a density field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub distances: Vec<u32>,
    pub times: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: DensityMode,
    #[serde(default)]
    pub component: usize,
}

/// Exactly one of `scalar` or `system`; `initial` holds one entry per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub scalar: Option<ScalarModel>,
    pub system: Option<SystemModel>,
    pub grid: GridSpec,
    pub initial: Vec<InitialConfig>,
    pub sample: Option<SampleConfig>,
}

impl SolveConfig {
    pub fn solve(&self) -> Result<SolutionField> {
        let profiles = self
            .initial
            .iter()
            .map(InitialConfig::build)
            .collect::<Result<Vec<_>>>()?;
        match (&self.scalar, &self.system) {
            (Some(model), None) => {
                if profiles.len() != 1 {
                    return Err(Error::validation(format!(
                        "scalar model needs 1 initial profile, got {}",
                        profiles.len()
                    )));
                }
                solve_scalar(model, &self.grid, &profiles[0])
            }
            (None, Some(model)) => {
                let refs: Vec<&dyn InitialProfile> = profiles.iter().map(|p| p as &dyn InitialProfile).collect();
                solve_system(model, &self.grid, &refs)
            }
            _ => Err(Error::validation("give exactly one of [scalar] or [system]")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
    pub init: f64,
}

/// Solver grid for a fit; the spatial and time extents come from the observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitGrid {
    pub per_unit: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub observed: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: DensityMode,
    pub shape: ModelShape,
    pub free: std::collections::BTreeMap<String, Bounds>,
    #[serde(default)]
    pub fixed: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub loss: Loss,
    pub grid: FitGrid,
    #[serde(default)]
    pub options: FitOptions,
}

impl FitConfig {
    pub fn free_parameters(&self) -> Vec<FreeParameter> {
        self.free
            .iter()
            .map(|(name, b)| FreeParameter {
                name: name.clone(),
                lo: b.lo,
                hi: b.hi,
                init: b.init,
            })
            .collect()
    }

    /// Grid spanning the observed distances and times.
    pub fn grid_for(&self, observed: &DensityField) -> Result<GridSpec> {
        let xs = observed.distances();
        let ts = observed.times();
        let (Some(&lo), Some(&hi), Some(&t0), Some(&t1)) = (xs.first(), xs.last(), ts.first(), ts.last()) else {
            return Err(Error::validation("observed field is empty"));
        };
        GridSpec::aligned(lo as i64, hi as i64, self.grid.per_unit, t0, t1, self.grid.dt)
    }
}

/// Family and parameters for a minimum-speed computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpeedSpec {
    Fisher {
        d: f64,
        r: f64,
    },
    Cooperative {
        d1: f64,
        r1: f64,
        d2: f64,
        r2: f64,
        alpha1: f64,
        alpha2: f64,
        k1: f64,
        k2: f64,
    },
    Competition {
        d1: f64,
        r1: f64,
        alpha1: f64,
        k2: f64,
    },
    Sir {
        d2: f64,
        beta: f64,
        gamma: f64,
    },
    /// Arbitrary `D u_xx + J u`, minimized numerically.
    Linearization {
        diffusion: Vec<f64>,
        jacobian: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    pub speed: SpeedSpec,
}

impl SpeedConfig {
    pub fn compute(&self) -> Result<crate::spectral::SpeedResult> {
        use crate::spectral::*;
        match &self.speed {
            SpeedSpec::Fisher { d, r } => {
                if !(*r > 0.0) {
                    return Err(Error::validation("r must be positive"));
                }
                min_speed_competition(*d, *r, 0.0, 1.0)
            }
            SpeedSpec::Cooperative {
                d1,
                r1,
                d2,
                r2,
                alpha1,
                alpha2,
                k1,
                k2,
            } => min_speed_cooperative(*d1, *r1, *d2, *r2, *alpha1, *alpha2, *k1, *k2),
            SpeedSpec::Competition { d1, r1, alpha1, k2 } => min_speed_competition(*d1, *r1, *alpha1, *k2),
            SpeedSpec::Sir { d2, beta, gamma } => min_speed_sir(*d2, *beta, *gamma),
            SpeedSpec::Linearization { diffusion, jacobian } => {
                min_speed_numeric(&Linearization::new(diffusion.clone(), jacobian.clone())?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigConfig {
    pub problem: EigenProblem,
    /// Limit `r_inf` of the decay rate; enables the persistence threshold.
    pub r_infinity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    #[serde(default = "default_bisections")]
    pub bisections: usize,
}

fn default_bisections() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanConfig {
    pub model: StefanModel,
    pub initial: InitialConfig,
    pub grid: StefanGrid,
    #[serde(default)]
    pub classifier: Classifier,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Values of `mu K / d` for the front-speed table.
    #[serde(default)]
    pub sweep: Vec<f64>,
    pub threshold: Option<ThresholdConfig>,
}

fn default_tail() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub model: ScalarModel,
    pub grid: GridSpec,
    pub initial: InitialConfig,
    #[serde(default = "default_mode")]
    pub mode: DensityMode,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_and_replace() {
        let mut doc = Document::parse("[speed]\nfamily = \"sir\"\nd2 = 1.0\nbeta = 1.0\ngamma = 0.5\n", "t").unwrap();
        doc.set("speed.gamma=0.25").unwrap();
        doc.set("speed.family=sir").unwrap();
        let cfg: SpeedConfig = doc.bind().unwrap();
        assert_eq!(
            cfg.speed,
            SpeedSpec::Sir {
                d2: 1.0,
                beta: 1.0,
                gamma: 0.25
            }
        );
        let mut empty = Document::load(None).unwrap();
        for s in ["speed.family=fisher", "speed.d=1", "speed.r=1"] {
            empty.set(s).unwrap();
        }
        let c = empty.bind::<SpeedConfig>().unwrap().compute().unwrap();
        assert_eq!(c.c_star, 2.0);
    }

    #[test]
    fn array_index_override() {
        let mut doc = Document::parse("xs = [1, 2, 3]\n[[t]]\na = 1\n", "t").unwrap();
        doc.set("xs.1=7").unwrap();
        doc.set("t.0.a=5").unwrap();
        assert_eq!(doc.table()["xs"].as_array().unwrap()[1].as_integer(), Some(7));
        assert_eq!(doc.table()["t"].as_array().unwrap()[0]["a"].as_integer(), Some(5));
        assert!(doc.set("xs.9=1").is_err());
        assert!(doc.set("xs.0.a=1").is_err());
        assert!(doc.set("noequals").is_err());
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "[speed]\nfamily = \"fisher\"\nd = 1.0\nr = 1.0\nbogus = 2\n";
        match Document::parse(text, "cfg.toml").unwrap().bind::<SpeedConfig>() {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 5, "{msg}");
                assert!(msg.contains("bogus"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let text = "[eig]\nx = 1\n";
        assert!(Document::parse(text, "c").unwrap().bind::<EigConfig>().is_err());
        assert!(matches!(
            Document::parse("a = ", "c"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_key_in_tagged_enum_rejected() {
        let text = "[[initial]]\nkind = \"constant\"\nvalue = 1.0\nextra = 2\n";
        #[derive(Deserialize)]
        #[allow(dead_code)]
        struct Wrap {
            initial: Vec<InitialConfig>,
        }
        assert!(Document::parse(text, "c").unwrap().bind::<Wrap>().is_err());
    }

    #[test]
    fn analytic_profiles() {
        let step = InitialConfig::Step { value: 2.0, until: 1.0 }.build().unwrap();
        assert_eq!(step.value_at(1.0).unwrap(), 2.0);
        assert_eq!(step.value_at(1.5).unwrap(), 0.0);
        let cos = InitialConfig::Cosine {
            amplitude: 1.0,
            length: 2.0,
        }
        .build()
        .unwrap();
        assert_eq!(cos.value_at(0.0).unwrap(), 1.0);
        assert!(cos.value_at(2.0).unwrap().abs() < 1e-15);
        assert_eq!(cos.value_at(3.0).unwrap(), 0.0);
    }
}
