//! Run configuration files.
//!
//! A configuration is a TOML document read as a flat map of dotted keys;
//! `[model.u0]` followed by `shape = "gaussian"` and `model.u0.shape =
//! "gaussian"` at the top level are the same key. Every key is either
//! required, optional with a documented default, or rejected as unknown.
//!
//! ```text
//! grid.dim            integer 1..=3                        required
//! grid.half_width     number > 0                           required
//! grid.points         integer >= 8 (interior points/axis)  required
//!
//! model.mu            number > 0                           required
//! model.potential.v1.kind, model.potential.v2.kind
//!                     zero | constant | well | inverse_power | file   (zero)
//!     constant:       value
//!     well:           depth, width
//!     inverse_power:  strength, power, core
//!     file:           path (field CSV, imaginary part zero)
//! model.potential.beta  number > 0, two dimensions only     (1.0)
//! model.forcing.kind  zero | separable | bangbang_capped | ramp_to_zero (zero)
//!     separable:       amplitude.*, profile.*
//!     bangbang_capped: amplitude.*, profile.*, t0, cap
//!     ramp_to_zero:    profile.*, t0, eps_star
//! model.forcing.amplitude.kind  constant (re, im = 0) | exp_decay (a0, rate)
//!                               | oscillating (a0, omega)
//! model.u0.*, model.forcing.profile.*   field descriptors:
//!     shape           zero | sin_bump | gaussian | file     required
//!     amplitude, width                 (sin_bump, gaussian) required
//!     center          array of dim numbers                  (origin)
//!     path                             (file)               required
//!     l2_norm         rescale to this L2 norm               (none)
//!     phase           constant phase in radians             (0)
//!
//! solver.scheme       strang | backward_euler_reg           required
//! solver.dt, solver.t_end                                   required
//! solver.eps (1e-8), solver.fp_tol (1e-10), solver.fp_max_iter (200),
//! solver.linsolve_tol (1e-12), solver.snapshot_stride (0 = none),
//! solver.boundary_fail_threshold (1e-6), solver.boundary_shell (M/16),
//! solver.zero_tol (1e-14 max(1, sup|u0|))
//!
//! output.root (output), output.series_path (series.csv),
//! output.report_path (report.json), output.snapshot_dir (snapshots)
//! ```
//!
//! Output paths are relative to `output.root`, which the environment
//! variable `SATNLS_OUTPUT_DIR` overrides.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use satnls_core::model::{
    Amplitude, FieldShape, FieldSpec, ForcingKind, ForcingSpec, ModelSpec, PotentialSpec,
    PotentialTerm,
};
use satnls_core::{Grid, Scheme, SolverConfig};
use thiserror::Error;
use toml::{Table, Value};

/// Environment variable replacing `output.root`.
pub const OUTPUT_DIR_ENV: &str = "SATNLS_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {reason}")]
    Read { path: String, reason: String },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}` must be {expected}")]
    TypeError { key: String, expected: &'static str },
    #[error("invalid configuration: {0}")]
    ValidationError(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub root: PathBuf,
    pub series_path: PathBuf,
    pub report_path: PathBuf,
    pub snapshot_dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            root: PathBuf::from("output"),
            series_path: PathBuf::from("series.csv"),
            report_path: PathBuf::from("report.json"),
            snapshot_dir: PathBuf::from("snapshots"),
        }
    }
}

/// Output locations after applying the root override.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedOutput {
    pub series: PathBuf,
    pub report: PathBuf,
    pub snapshots: PathBuf,
}

impl OutputSpec {
    pub fn resolve(&self, root_override: Option<&Path>) -> ResolvedOutput {
        let root = root_override.unwrap_or(&self.root);
        ResolvedOutput {
            series: root.join(&self.series_path),
            report: root.join(&self.report_path),
            snapshots: root.join(&self.snapshot_dir),
        }
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle {
    pub grid: Grid,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub u0: FieldSpec,
    pub output: OutputSpec,
}

pub fn parse_config(path: &Path) -> Result<RunBundle, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunBundle, ConfigError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat)?;
    let mut keys = Keys {
        map: flat,
        used: BTreeSet::new(),
    };
    let bundle = read_bundle(&mut keys)?;
    keys.finish()?;
    validate(&bundle)?;
    Ok(bundle)
}

fn flatten(prefix: &str, table: &Table, out: &mut BTreeMap<String, Value>) -> Result<(), ConfigError> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            Value::Array(items) if items.iter().any(|i| matches!(i, Value::Table(_))) => {
                return Err(ConfigError::TypeError {
                    key,
                    expected: "a scalar or an array of numbers",
                })
            }
            other => {
                out.insert(key, other.clone());
            }
        }
    }
    Ok(())
}

/// Dotted-key lookup that remembers which keys were consumed.
struct Keys {
    map: BTreeMap<String, Value>,
    used: BTreeSet<String>,
}

impl Keys {
    fn get(&mut self, key: &str) -> Option<&Value> {
        let v = self.map.get(key);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(type_error(key, "a number")),
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.opt_f64(key)?
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn opt_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(type_error(key, "a non-negative integer")),
        }
    }

    fn usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        self.opt_usize(key)?
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn opt_str(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(type_error(key, "a string")),
        }
    }

    fn str(&mut self, key: &str) -> Result<String, ConfigError> {
        self.opt_str(key)?
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn opt_numbers(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let items = match self.get(key) {
            None => return Ok(None),
            Some(Value::Array(items)) => items.clone(),
            Some(_) => return Err(type_error(key, "an array of numbers")),
        };
        items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(type_error(key, "an array of numbers")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn finish(&self) -> Result<(), ConfigError> {
        match self.map.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(ConfigError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }
}

fn type_error(key: &str, expected: &'static str) -> ConfigError {
    ConfigError::TypeError {
        key: key.to_string(),
        expected,
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::ValidationError(msg.into())
}

fn read_bundle(k: &mut Keys) -> Result<RunBundle, ConfigError> {
    let dim = k.usize("grid.dim")?;
    let half_width = k.f64("grid.half_width")?;
    let points = k.usize("grid.points")?;
    let grid = Grid::new(dim, half_width, points).map_err(|e| invalid(format!("grid: {e}")))?;

    let mu = k.f64("model.mu")?;
    let potential = PotentialSpec {
        v1: read_potential_term(k, "model.potential.v1")?,
        v2: read_potential_term(k, "model.potential.v2")?,
        beta: k.opt_f64("model.potential.beta")?,
    };
    let forcing = read_forcing(k, "model.forcing", dim)?;
    let u0 = read_field(k, "model.u0", dim)?;

    let scheme: Scheme = k
        .str("solver.scheme")?
        .parse()
        .map_err(|e| invalid(format!("solver.scheme: {e}")))?;
    let mut solver = SolverConfig::strang(k.f64("solver.dt")?, k.f64("solver.t_end")?);
    solver.scheme = scheme;
    if let Some(v) = k.opt_f64("solver.eps")? {
        solver.eps = v;
    }
    if let Some(v) = k.opt_f64("solver.fp_tol")? {
        solver.fp_tol = v;
    }
    if let Some(v) = k.opt_usize("solver.fp_max_iter")? {
        solver.fp_max_iter = v;
    }
    if let Some(v) = k.opt_f64("solver.linsolve_tol")? {
        solver.linsolve_tol = v;
    }
    if let Some(v) = k.opt_usize("solver.snapshot_stride")? {
        solver.snapshot_stride = v;
    }
    if let Some(v) = k.opt_f64("solver.boundary_fail_threshold")? {
        solver.boundary_fail_threshold = v;
    }
    solver.boundary_shell = k.opt_usize("solver.boundary_shell")?;
    solver.zero_tol = k.opt_f64("solver.zero_tol")?;

    let defaults = OutputSpec::default();
    let mut path = |key: &str, default: PathBuf| -> Result<PathBuf, ConfigError> {
        Ok(k.opt_str(key)?.map(PathBuf::from).unwrap_or(default))
    };
    let output = OutputSpec {
        root: path("output.root", defaults.root)?,
        series_path: path("output.series_path", defaults.series_path)?,
        report_path: path("output.report_path", defaults.report_path)?,
        snapshot_dir: path("output.snapshot_dir", defaults.snapshot_dir)?,
    };

    Ok(RunBundle {
        grid,
        model: ModelSpec {
            mu,
            potential,
            forcing,
        },
        solver,
        u0,
        output,
    })
}

fn read_potential_term(k: &mut Keys, prefix: &str) -> Result<PotentialTerm, ConfigError> {
    let kind = k.opt_str(&format!("{prefix}.kind"))?;
    let mut num = |name: &str| k.f64(&format!("{prefix}.{name}"));
    Ok(match kind.as_deref().unwrap_or("zero") {
        "zero" => PotentialTerm::Zero,
        "constant" => PotentialTerm::Constant { value: num("value")? },
        "well" => PotentialTerm::Well {
            depth: num("depth")?,
            width: num("width")?,
        },
        "inverse_power" => PotentialTerm::InversePower {
            strength: num("strength")?,
            power: num("power")?,
            core: num("core")?,
        },
        "file" => PotentialTerm::File {
            path: PathBuf::from(k.str(&format!("{prefix}.path"))?),
        },
        other => return Err(invalid(format!("{prefix}.kind: unknown kind `{other}`"))),
    })
}

fn read_amplitude(k: &mut Keys, prefix: &str) -> Result<Amplitude, ConfigError> {
    let kind = k.str(&format!("{prefix}.kind"))?;
    let mut num = |name: &str| k.f64(&format!("{prefix}.{name}"));
    Ok(match kind.as_str() {
        "constant" => Amplitude::Constant {
            re: num("re")?,
            im: k.opt_f64(&format!("{prefix}.im"))?.unwrap_or(0.0),
        },
        "exp_decay" => Amplitude::ExpDecay {
            a0: num("a0")?,
            rate: num("rate")?,
        },
        "oscillating" => Amplitude::Oscillating {
            a0: num("a0")?,
            omega: num("omega")?,
        },
        other => return Err(invalid(format!("{prefix}.kind: unknown kind `{other}`"))),
    })
}

fn read_forcing(k: &mut Keys, prefix: &str, dim: usize) -> Result<ForcingSpec, ConfigError> {
    let kind: ForcingKind = k
        .opt_str(&format!("{prefix}.kind"))?
        .as_deref()
        .unwrap_or("zero")
        .parse()
        .map_err(|e| invalid(format!("{prefix}.kind: {e}")))?;
    let amp = format!("{prefix}.amplitude");
    let profile = format!("{prefix}.profile");
    Ok(match kind {
        ForcingKind::Zero => ForcingSpec::zero(),
        ForcingKind::Separable => {
            ForcingSpec::separable(read_amplitude(k, &amp)?, read_field(k, &profile, dim)?)
        }
        ForcingKind::BangBangCapped { .. } => ForcingSpec::bangbang_capped(
            read_amplitude(k, &amp)?,
            read_field(k, &profile, dim)?,
            k.f64(&format!("{prefix}.t0"))?,
            k.f64(&format!("{prefix}.cap"))?,
        ),
        ForcingKind::RampToZero => ForcingSpec::ramp_to_zero(
            read_field(k, &profile, dim)?,
            k.f64(&format!("{prefix}.t0"))?,
            k.f64(&format!("{prefix}.eps_star"))?,
        ),
    })
}

fn read_field(k: &mut Keys, prefix: &str, dim: usize) -> Result<FieldSpec, ConfigError> {
    let shape = k.str(&format!("{prefix}.shape"))?;
    let center_key = format!("{prefix}.center");
    let shape = match shape.as_str() {
        "zero" => FieldShape::Zero,
        "sin_bump" | "gaussian" => {
            let amplitude = k.f64(&format!("{prefix}.amplitude"))?;
            let width = k.f64(&format!("{prefix}.width"))?;
            let center = k.opt_numbers(&center_key)?.unwrap_or_else(|| vec![0.0; dim]);
            if center.len() != dim {
                return Err(invalid(format!(
                    "{center_key} has {} entries, grid is {dim}-dimensional",
                    center.len()
                )));
            }
            if shape == "sin_bump" {
                FieldShape::SinBump {
                    amplitude,
                    center,
                    width,
                }
            } else {
                FieldShape::Gaussian {
                    amplitude,
                    center,
                    width,
                }
            }
        }
        "file" => FieldShape::File {
            path: PathBuf::from(k.str(&format!("{prefix}.path"))?),
        },
        other => return Err(invalid(format!("{prefix}.shape: unknown shape `{other}`"))),
    };
    Ok(FieldSpec {
        shape,
        l2_norm: k.opt_f64(&format!("{prefix}.l2_norm"))?,
        phase: k.opt_f64(&format!("{prefix}.phase"))?.unwrap_or(0.0),
    })
}

/// Semantic checks beyond types: positive damping, a valid solver
/// configuration, and a model and initial field that can be sampled.
fn validate(bundle: &RunBundle) -> Result<(), ConfigError> {
    let mu = bundle.model.mu;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("model.mu must be positive (got {mu})")));
    }
    bundle
        .solver
        .validate()
        .map_err(|e| invalid(format!("solver: {e}")))?;
    bundle
        .model
        .build(&bundle.grid)
        .map_err(|e| invalid(format!("model: {e}")))?;
    bundle
        .u0
        .sample(&bundle.grid)
        .map_err(|e| invalid(format!("model.u0: {e}")))?;
    Ok(())
}

/// Writes a bundle in the grammar accepted by [`parse_config_str`], with
/// every optional key spelled out.
pub fn emit_config(bundle: &RunBundle) -> Result<String, ConfigError> {
    let mut t = Table::new();
    let g = &bundle.grid;
    put(&mut t, "grid.dim", int(g.dim()));
    put(&mut t, "grid.half_width", Value::Float(g.half_width()));
    put(&mut t, "grid.points", int(g.points_per_dim()));

    let m = &bundle.model;
    put(&mut t, "model.mu", Value::Float(m.mu));
    emit_potential_term(&mut t, "model.potential.v1", &m.potential.v1)?;
    emit_potential_term(&mut t, "model.potential.v2", &m.potential.v2)?;
    if let Some(beta) = m.potential.beta {
        put(&mut t, "model.potential.beta", Value::Float(beta));
    }
    emit_forcing(&mut t, "model.forcing", &m.forcing)?;
    emit_field(&mut t, "model.u0", &bundle.u0)?;

    let s = &bundle.solver;
    put(&mut t, "solver.scheme", Value::String(s.scheme.name().into()));
    put(&mut t, "solver.dt", Value::Float(s.dt));
    put(&mut t, "solver.t_end", Value::Float(s.t_end));
    put(&mut t, "solver.eps", Value::Float(s.eps));
    put(&mut t, "solver.fp_tol", Value::Float(s.fp_tol));
    put(&mut t, "solver.fp_max_iter", int(s.fp_max_iter));
    put(&mut t, "solver.linsolve_tol", Value::Float(s.linsolve_tol));
    put(&mut t, "solver.snapshot_stride", int(s.snapshot_stride));
    put(
        &mut t,
        "solver.boundary_fail_threshold",
        Value::Float(s.boundary_fail_threshold),
    );
    if let Some(shell) = s.boundary_shell {
        put(&mut t, "solver.boundary_shell", int(shell));
    }
    if let Some(z) = s.zero_tol {
        put(&mut t, "solver.zero_tol", Value::Float(z));
    }

    let o = &bundle.output;
    put(&mut t, "output.root", path_value("output.root", &o.root)?);
    put(&mut t, "output.series_path", path_value("output.series_path", &o.series_path)?);
    put(&mut t, "output.report_path", path_value("output.report_path", &o.report_path)?);
    put(&mut t, "output.snapshot_dir", path_value("output.snapshot_dir", &o.snapshot_dir)?);

    toml::to_string(&t).map_err(|e| invalid(format!("cannot serialize: {e}")))
}

fn int(v: usize) -> Value {
    Value::Integer(v as i64)
}

fn path_value(key: &str, p: &Path) -> Result<Value, ConfigError> {
    p.to_str()
        .map(|s| Value::String(s.to_string()))
        .ok_or_else(|| invalid(format!("{key} is not valid UTF-8")))
}

fn put(root: &mut Table, dotted: &str, value: Value) {
    let mut parts: Vec<&str> = dotted.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut table = root;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("intermediate keys are tables");
    }
    table.insert(last.to_string(), value);
}

fn emit_potential_term(t: &mut Table, prefix: &str, term: &PotentialTerm) -> Result<(), ConfigError> {
    let mut set = |name: &str, v: Value| put(t, &format!("{prefix}.{name}"), v);
    match term {
        PotentialTerm::Zero => set("kind", Value::String("zero".into())),
        PotentialTerm::Constant { value } => {
            set("kind", Value::String("constant".into()));
            set("value", Value::Float(*value));
        }
        PotentialTerm::Well { depth, width } => {
            set("kind", Value::String("well".into()));
            set("depth", Value::Float(*depth));
            set("width", Value::Float(*width));
        }
        PotentialTerm::InversePower {
            strength,
            power,
            core,
        } => {
            set("kind", Value::String("inverse_power".into()));
            set("strength", Value::Float(*strength));
            set("power", Value::Float(*power));
            set("core", Value::Float(*core));
        }
        PotentialTerm::File { path } => {
            set("kind", Value::String("file".into()));
            set("path", path_value(&format!("{prefix}.path"), path)?);
        }
        PotentialTerm::Samples { .. } => {
            return Err(invalid(format!(
                "{prefix}: sampled potentials have no configuration form; save them to a file"
            )))
        }
    }
    Ok(())
}

fn emit_amplitude(t: &mut Table, prefix: &str, amp: &Amplitude) {
    let mut set = |name: &str, v: Value| put(t, &format!("{prefix}.{name}"), v);
    match *amp {
        Amplitude::Constant { re, im } => {
            set("kind", Value::String("constant".into()));
            set("re", Value::Float(re));
            set("im", Value::Float(im));
        }
        Amplitude::ExpDecay { a0, rate } => {
            set("kind", Value::String("exp_decay".into()));
            set("a0", Value::Float(a0));
            set("rate", Value::Float(rate));
        }
        Amplitude::Oscillating { a0, omega } => {
            set("kind", Value::String("oscillating".into()));
            set("a0", Value::Float(a0));
            set("omega", Value::Float(omega));
        }
    }
}

fn emit_forcing(t: &mut Table, prefix: &str, f: &ForcingSpec) -> Result<(), ConfigError> {
    put(t, &format!("{prefix}.kind"), Value::String(f.kind.name().into()));
    let amp = format!("{prefix}.amplitude");
    let profile = format!("{prefix}.profile");
    match f.kind {
        ForcingKind::Zero => {}
        ForcingKind::Separable => {
            emit_amplitude(t, &amp, &f.amp);
            emit_field(t, &profile, &f.profile)?;
        }
        ForcingKind::BangBangCapped { cap } => {
            emit_amplitude(t, &amp, &f.amp);
            emit_field(t, &profile, &f.profile)?;
            put(t, &format!("{prefix}.t0"), Value::Float(f.t0));
            put(t, &format!("{prefix}.cap"), Value::Float(cap));
        }
        ForcingKind::RampToZero => {
            emit_field(t, &profile, &f.profile)?;
            put(t, &format!("{prefix}.t0"), Value::Float(f.t0));
            put(t, &format!("{prefix}.eps_star"), Value::Float(f.eps_star));
        }
    }
    Ok(())
}

fn emit_field(t: &mut Table, prefix: &str, f: &FieldSpec) -> Result<(), ConfigError> {
    let mut set = |name: &str, v: Value| put(t, &format!("{prefix}.{name}"), v);
    let numbers = |xs: &[f64]| Value::Array(xs.iter().map(|x| Value::Float(*x)).collect());
    match &f.shape {
        FieldShape::Zero => set("shape", Value::String("zero".into())),
        FieldShape::SinBump {
            amplitude,
            center,
            width,
        }
        | FieldShape::Gaussian {
            amplitude,
            center,
            width,
        } => {
            let name = if matches!(f.shape, FieldShape::SinBump { .. }) {
                "sin_bump"
            } else {
                "gaussian"
            };
            set("shape", Value::String(name.into()));
            set("amplitude", Value::Float(*amplitude));
            set("center", numbers(center));
            set("width", Value::Float(*width));
        }
        FieldShape::File { path } => {
            set("shape", Value::String("file".into()));
            set("path", path_value(&format!("{prefix}.path"), path)?);
        }
    }
    if let Some(n) = f.l2_norm {
        set("l2_norm", Value::Float(n));
    }
    set("phase", Value::Float(f.phase));
    Ok(())
}
