//! Versioned JSON experiment configs. Validation walks the whole document
//! and reports every violation with its field path.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rustfft::num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;
use crate::lp_calculus::Grid2Field;
use crate::mat::{det_i, trace_i, Mat2i};
use crate::orbits::ConformalFactor;
use crate::systems::{TrigPerturbation, CAT};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Norms,
    Livsic,
    Threshold,
    SourceSweep,
    Propagation,
    Foliation,
    Mls,
    StretchStability,
    Conformal,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Norms,
        ExperimentKind::Livsic,
        ExperimentKind::Threshold,
        ExperimentKind::SourceSweep,
        ExperimentKind::Propagation,
        ExperimentKind::Foliation,
        ExperimentKind::Mls,
        ExperimentKind::StretchStability,
        ExperimentKind::Conformal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Norms => "norms",
            ExperimentKind::Livsic => "livsic",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::SourceSweep => "source-sweep",
            ExperimentKind::Propagation => "propagation",
            ExperimentKind::Foliation => "foliation",
            ExperimentKind::Mls => "mls",
            ExperimentKind::StretchStability => "stretch-stability",
            ExperimentKind::Conformal => "conformal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One violation, located by its JSON path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemSpec {
    Cat { matrix: Mat2i },
    PerturbedCat { matrix: Mat2i, epsilon: f64, perturbation: TrigPerturbation },
    /// Suspension of the linear map under a constant roof.
    Suspension { matrix: Mat2i, roof: f64 },
    Bolza,
}

impl SystemSpec {
    pub fn matrix(&self) -> Option<Mat2i> {
        match self {
            SystemSpec::Cat { matrix } | SystemSpec::PerturbedCat { matrix, .. } | SystemSpec::Suspension { matrix, .. } => Some(*matrix),
            SystemSpec::Bolza => None,
        }
    }

    fn is_linear_toral(&self) -> bool {
        matches!(self, SystemSpec::Cat { .. } | SystemSpec::Suspension { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub n_side: usize,
    pub n_s: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrigTermSpec {
    pub k: [i64; 2],
    pub amplitude: f64,
    pub phase: f64,
}

/// `constant + sum amplitude cos(2 pi k.x + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrigSpec {
    pub constant: f64,
    pub terms: Vec<TrigTermSpec>,
}

impl TrigSpec {
    pub fn constant(c: f64) -> Self {
        TrigSpec { constant: c, terms: Vec::new() }
    }

    pub fn to_field(&self, n: usize) -> Result<Grid2Field> {
        let mut modes = vec![([0, 0], Complex64::new(self.constant, 0.0))];
        for t in &self.terms {
            let c = Complex64::from_polar(0.5 * t.amplitude, t.phase);
            modes.push((t.k, c));
            modes.push(([-t.k[0], -t.k[1]], c.conj()));
        }
        Ok(Grid2Field::from_modes(n, &modes)?.real_part())
    }

    fn max_mode(&self) -> i64 {
        self.terms.iter().map(|t| t.k[0].abs().max(t.k[1].abs())).max().unwrap_or(0)
    }

    fn min_bound(&self) -> f64 {
        self.constant - self.terms.iter().map(|t| t.amplitude.abs()).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Bounded,
    Divergence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormsParams {
    pub s: f64,
    pub samples: usize,
    pub h0: f64,
    pub max_mode: i64,
    pub decay: f64,
    pub reconstruction_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LivsicParams {
    pub samples: usize,
    pub max_mode: i64,
    pub decay: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdParams {
    pub weight: TrigSpec,
    pub max_period: usize,
    pub rho_step: f64,
    pub rho_max: f64,
    pub expect_omega_plus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceSweepParams {
    pub rho: Vec<f64>,
    pub h_list: Vec<f64>,
    pub samples: usize,
    pub half_angle: f64,
    pub h0: f64,
    pub n_neg: f64,
    pub weight: Option<TrigSpec>,
    pub expect: Option<Expectation>,
    /// Largest allowed max/min ratio spread across scales when bounded.
    pub max_spread: f64,
    /// Least median slope counted as divergence.
    pub min_divergent_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagationParams {
    pub s: f64,
    pub n_neg: f64,
    pub time: f64,
    pub samples: usize,
    /// Angle of `A`'s axis from `E*_s`, in degrees.
    pub axis_from_stable_deg: f64,
    pub half_angle: f64,
    pub radial: [f64; 4],
    pub max_mode: i64,
    pub decay: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationParams {
    pub points: usize,
    pub horizon: usize,
    pub epsilon: f64,
    pub steps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MlsParams {
    pub roof_ref: TrigSpec,
    pub roof_target: TrigSpec,
    pub max_period: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityParams {
    pub samples: usize,
    pub amplitudes: Vec<f64>,
    pub max_period: usize,
    pub nu: f64,
    pub roof: TrigSpec,
    pub homogeneity_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformalParams {
    pub sigma: ConformalFactor,
    pub eps: Vec<f64>,
    pub words: Vec<Vec<usize>>,
    pub n_points: usize,
    pub slope_range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum KindParams {
    Norms(NormsParams),
    Livsic(LivsicParams),
    Threshold(ThresholdParams),
    SourceSweep(SourceSweepParams),
    Propagation(PropagationParams),
    Foliation(FoliationParams),
    Mls(MlsParams),
    StretchStability(StabilityParams),
    Conformal(ConformalParams),
}

/// Fully resolved experiment: defaults applied, ranges checked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schema_version: u64,
    pub kind: ExperimentKind,
    pub system: SystemSpec,
    pub grid: GridConfig,
    pub params: KindParams,
    pub seed: u64,
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    /// Canonical JSON of the resolved config, the input of the run hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> std::result::Result<ExperimentConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![ConfigError { field: "<file>".into(), message: format!("cannot read {}: {e}", path.display()) }])?;
    validate_config_str(&text)
}

pub fn validate_config_str(text: &str) -> std::result::Result<ExperimentConfig, Vec<ConfigError>> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| vec![ConfigError { field: "<document>".into(), message: format!("not valid JSON: {e}") }])?;
    validate_config_value(&value)
}

pub fn validate_config_value(value: &Value) -> std::result::Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errs = Vec::new();
    let Some(root) = value.as_object() else {
        return Err(vec![ConfigError { field: "<document>".into(), message: "expected a JSON object".into() }]);
    };
    let mut top = Obj::new("", root);
    let schema_version = top.int("schema_version", SCHEMA_VERSION, SCHEMA_VERSION, SCHEMA_VERSION, &mut errs);
    let kind = match top.take("kind") {
        None => {
            errs.push(err("kind", "missing; expected one of the experiment kinds"));
            None
        }
        Some(v) => match v.as_str().and_then(ExperimentKind::parse) {
            Some(k) => Some(k),
            None => {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                errs.push(err("kind", &format!("unknown kind {v}; expected one of {}", names.join(", "))));
                None
            }
        },
    };
    let default_system = if kind == Some(ExperimentKind::Conformal) { SystemSpec::Bolza } else { SystemSpec::Cat { matrix: CAT } };
    let system = match top.take("system") {
        None => default_system,
        Some(v) => parse_system(v, &mut errs).unwrap_or(default_system),
    };
    let grid = match top.child("grid", &mut errs) {
        None => GridConfig { n_side: 64, n_s: 16 },
        Some(mut g) => {
            let n_side = g.int("n_side", 64, 8, 1024, &mut errs) as usize;
            if !n_side.is_power_of_two() {
                errs.push(err("grid.n_side", &format!("must be a power of two, got {n_side}")));
            }
            let n_s = g.int("n_s", 16, 4, 1024, &mut errs) as usize;
            g.finish(&mut errs);
            GridConfig { n_side, n_s }
        }
    };
    let seed = top.int("seed", 0, 0, u64::MAX, &mut errs);
    let output_dir = top.take("output_dir").and_then(|v| match v.as_str() {
        Some(s) if !s.is_empty() => Some(s.to_string()),
        _ => {
            errs.push(err("output_dir", "must be a nonempty string"));
            None
        }
    });
    let empty = Map::new();
    let params_obj = match top.take("params") {
        None => Some(&empty),
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            errs.push(err("params", "must be an object"));
            None
        }
    };
    top.finish(&mut errs);

    let params = match (kind, params_obj) {
        (Some(kind), Some(m)) => {
            let mut p = Obj::new("params", m);
            let params = parse_params(kind, &mut p, &grid, &mut errs);
            p.finish(&mut errs);
            check_system(kind, &system, &mut errs);
            Some(params)
        }
        _ => None,
    };
    match (kind, params) {
        (Some(kind), Some(params)) if errs.is_empty() => {
            Ok(ExperimentConfig { schema_version, kind, system, grid, params, seed, output_dir })
        }
        _ => Err(errs),
    }
}

fn err(field: &str, message: &str) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.to_string() }
}

/// Object reader that records which keys were consumed.
struct Obj<'a> {
    path: String,
    map: &'a Map<String, Value>,
    seen: BTreeSet<String>,
}

impl<'a> Obj<'a> {
    fn new(path: &str, map: &'a Map<String, Value>) -> Self {
        Obj { path: path.to_string(), map, seen: BTreeSet::new() }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn take(&mut self, key: &str) -> Option<&'a Value> {
        self.seen.insert(key.to_string());
        self.map.get(key)
    }

    fn child(&mut self, key: &str, errs: &mut Vec<ConfigError>) -> Option<Obj<'a>> {
        let path = self.field(key);
        match self.take(key)? {
            Value::Object(m) => Some(Obj::new(&path, m)),
            _ => {
                errs.push(err(&path, "must be an object"));
                None
            }
        }
    }

    fn num(&mut self, key: &str, default: f64, check: impl Fn(f64) -> Option<String>, errs: &mut Vec<ConfigError>) -> f64 {
        let path = self.field(key);
        match self.take(key) {
            None => default,
            Some(v) => match v.as_f64() {
                Some(x) => {
                    if let Some(m) = check(x) {
                        errs.push(err(&path, &m));
                    }
                    x
                }
                None => {
                    errs.push(err(&path, &format!("expected a number, got {v}")));
                    default
                }
            },
        }
    }

    fn opt_num(&mut self, key: &str, check: impl Fn(f64) -> Option<String>, errs: &mut Vec<ConfigError>) -> Option<f64> {
        self.map.contains_key(key).then(|| self.num(key, 0.0, check, errs))
    }

    fn int(&mut self, key: &str, default: u64, lo: u64, hi: u64, errs: &mut Vec<ConfigError>) -> u64 {
        let path = self.field(key);
        match self.take(key) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(x) if x >= lo && x <= hi => x,
                Some(x) => {
                    errs.push(err(&path, &format!("must lie in [{lo}, {hi}], got {x}")));
                    default
                }
                None => {
                    errs.push(err(&path, &format!("expected a nonnegative integer, got {v}")));
                    default
                }
            },
        }
    }

    fn num_list(&mut self, key: &str, default: Vec<f64>, check: impl Fn(f64) -> Option<String>, errs: &mut Vec<ConfigError>) -> Vec<f64> {
        let path = self.field(key);
        match self.take(key) {
            None => default,
            Some(Value::Array(a)) if !a.is_empty() => a
                .iter()
                .enumerate()
                .filter_map(|(i, v)| match v.as_f64() {
                    Some(x) => {
                        if let Some(m) = check(x) {
                            errs.push(err(&format!("{path}[{i}]"), &m));
                        }
                        Some(x)
                    }
                    None => {
                        errs.push(err(&format!("{path}[{i}]"), &format!("expected a number, got {v}")));
                        None
                    }
                })
                .collect(),
            Some(_) => {
                errs.push(err(&path, "expected a nonempty array of numbers"));
                default
            }
        }
    }

    fn finish(self, errs: &mut Vec<ConfigError>) {
        for k in self.map.keys() {
            if !self.seen.contains(k) {
                errs.push(err(&self.field(k), "unknown key"));
            }
        }
    }
}

fn in_range(lo: f64, hi: f64) -> impl Fn(f64) -> Option<String> {
    move |x| (!(x >= lo && x <= hi)).then(|| format!("must lie in [{lo}, {hi}], got {x}"))
}

fn positive(x: f64) -> Option<String> {
    (!(x > 0.0 && x.is_finite())).then(|| format!("must be positive, got {x}"))
}

fn parse_matrix(v: &Value, path: &str, errs: &mut Vec<ConfigError>) -> Option<Mat2i> {
    let rows = v.as_array().filter(|a| a.len() == 2)?;
    let mut m = [[0i64; 2]; 2];
    for (i, row) in rows.iter().enumerate() {
        let r = row.as_array().filter(|a| a.len() == 2)?;
        for (j, e) in r.iter().enumerate() {
            m[i][j] = e.as_i64()?;
        }
    }
    if det_i(&m).abs() != 1 {
        errs.push(err(path, &format!("determinant {} is not +-1", det_i(&m))));
    } else if trace_i(&m).abs() <= 2 {
        errs.push(err(path, &format!("trace {} is not hyperbolic", trace_i(&m))));
    }
    Some(m)
}

fn parse_system(v: &Value, errs: &mut Vec<ConfigError>) -> Option<SystemSpec> {
    if let Some(s) = v.as_str() {
        return match s {
            "cat" => Some(SystemSpec::Cat { matrix: CAT }),
            "bolza" => Some(SystemSpec::Bolza),
            "suspension" => Some(SystemSpec::Suspension { matrix: CAT, roof: 1.0 }),
            "perturbed_cat" => Some(SystemSpec::PerturbedCat { matrix: CAT, epsilon: 0.01, perturbation: TrigPerturbation::sin_x2() }),
            _ => {
                errs.push(err("system", &format!("unknown system {s:?}; expected cat, perturbed_cat, suspension or bolza")));
                None
            }
        };
    }
    let Some(m) = v.as_object() else {
        errs.push(err("system", "must be a string or an object"));
        return None;
    };
    let mut o = Obj::new("system", m);
    let ty = o.take("type").and_then(Value::as_str).unwrap_or("cat").to_string();
    let matrix = match o.take("matrix") {
        None => CAT,
        Some(v) => parse_matrix(v, "system.matrix", errs).unwrap_or_else(|| {
            errs.push(err("system.matrix", "expected a 2x2 integer matrix"));
            CAT
        }),
    };
    let spec = match ty.as_str() {
        "cat" => Some(SystemSpec::Cat { matrix }),
        "perturbed_cat" => {
            let epsilon = o.num("epsilon", 0.01, in_range(0.0, 0.2), errs);
            let perturbation = match o.take("perturbation") {
                None => TrigPerturbation::sin_x2(),
                Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
                    errs.push(err("system.perturbation", &format!("{e}")));
                    TrigPerturbation::sin_x2()
                }),
            };
            Some(SystemSpec::PerturbedCat { matrix, epsilon, perturbation })
        }
        "suspension" => {
            let roof = o.num("roof", 1.0, positive, errs);
            Some(SystemSpec::Suspension { matrix, roof })
        }
        "bolza" => Some(SystemSpec::Bolza),
        other => {
            errs.push(err("system.type", &format!("unknown system type {other:?}")));
            None
        }
    };
    o.finish(errs);
    spec
}

fn parse_trig(v: Option<&Value>, path: &str, default: TrigSpec, errs: &mut Vec<ConfigError>) -> TrigSpec {
    let Some(v) = v else { return default };
    if let Some(c) = v.as_f64() {
        return TrigSpec::constant(c);
    }
    let Some(m) = v.as_object() else {
        errs.push(err(path, "expected a number or {constant, terms}"));
        return default;
    };
    let mut o = Obj::new(path, m);
    let constant = o.num("constant", 0.0, |x| (!x.is_finite()).then(|| "must be finite".to_string()), errs);
    let mut terms = Vec::new();
    match o.take("terms") {
        None => {}
        Some(Value::Array(a)) => {
            for (i, t) in a.iter().enumerate() {
                let tp = format!("{path}.terms[{i}]");
                let Some(tm) = t.as_object() else {
                    errs.push(err(&tp, "expected {k, amplitude, phase}"));
                    continue;
                };
                let mut to = Obj::new(&tp, tm);
                let k = match to.take("k").and_then(Value::as_array) {
                    Some(a) if a.len() == 2 && a.iter().all(|x| x.as_i64().is_some()) => [a[0].as_i64().unwrap(), a[1].as_i64().unwrap()],
                    _ => {
                        errs.push(err(&format!("{tp}.k"), "expected two integers"));
                        [0, 0]
                    }
                };
                if k == [0, 0] {
                    errs.push(err(&format!("{tp}.k"), "the zero mode belongs in `constant`"));
                }
                let amplitude = to.num("amplitude", 0.0, |x| (!x.is_finite()).then(|| "must be finite".to_string()), errs);
                let phase = to.num("phase", 0.0, |x| (!x.is_finite()).then(|| "must be finite".to_string()), errs);
                to.finish(errs);
                terms.push(TrigTermSpec { k, amplitude, phase });
            }
        }
        Some(_) => errs.push(err(&format!("{path}.terms"), "expected an array")),
    }
    o.finish(errs);
    TrigSpec { constant, terms }
}

fn check_resolved(spec: &TrigSpec, path: &str, grid: &GridConfig, errs: &mut Vec<ConfigError>) {
    if spec.max_mode() >= (grid.n_side / 2) as i64 {
        errs.push(err(path, &format!("mode {} is not resolved on n_side = {}", spec.max_mode(), grid.n_side)));
    }
}

fn check_roof(spec: &TrigSpec, path: &str, errs: &mut Vec<ConfigError>) {
    if !(spec.min_bound() > 0.0) {
        errs.push(err(path, "roof must be bounded below by a positive constant (constant > sum of |amplitude|)"));
    }
}

fn parse_params(kind: ExperimentKind, p: &mut Obj<'_>, grid: &GridConfig, errs: &mut Vec<ConfigError>) -> KindParams {
    let half = (grid.n_side / 2) as u64;
    match kind {
        ExperimentKind::Norms => KindParams::Norms(NormsParams {
            s: p.num("s", 1.0, in_range(-4.0, 8.0), errs),
            samples: p.int("samples", 8, 1, 1000, errs) as usize,
            h0: p.num("h0", 0.5, in_range(1e-6, 1.0), errs),
            max_mode: p.int("max_mode", 6.min(half - 1), 1, half - 1, errs) as i64,
            decay: p.num("decay", 2.0, in_range(0.0, 10.0), errs),
            reconstruction_tol: p.num("reconstruction_tol", 1e-10, positive, errs),
        }),
        ExperimentKind::Livsic => KindParams::Livsic(LivsicParams {
            samples: p.int("samples", 10, 1, 10_000, errs) as usize,
            max_mode: p.int("max_mode", 4.min(half - 1), 1, half - 1, errs) as i64,
            decay: p.num("decay", 2.0, in_range(0.0, 10.0), errs),
            tol: p.num("tol", 1e-10, positive, errs),
        }),
        ExperimentKind::Threshold => {
            let weight = parse_trig(p.take("weight"), "params.weight", TrigSpec::constant(0.0), errs);
            check_resolved(&weight, "params.weight", grid, errs);
            let rho_step = p.num("rho_step", 1.0 / 64.0, in_range(1e-6, 1.0), errs);
            KindParams::Threshold(ThresholdParams {
                weight,
                max_period: p.int("max_period", 12, 4, 16, errs) as usize,
                rho_step,
                rho_max: p.num("rho_max", 8.0, in_range(rho_step, 64.0), errs),
                expect_omega_plus: p.opt_num("expect_omega_plus", in_range(0.0, 64.0), errs),
            })
        }
        ExperimentKind::SourceSweep => {
            let h0 = p.num("h0", 0.5, in_range(1e-6, 1.0), errs);
            let weight = match p.take("weight") {
                None => None,
                Some(v) => Some(parse_trig(Some(v), "params.weight", TrigSpec::constant(0.0), errs)),
            };
            if let Some(w) = &weight {
                check_resolved(w, "params.weight", grid, errs);
            }
            let expect = match p.take("expect") {
                None => None,
                Some(Value::String(s)) if s == "bounded" => Some(Expectation::Bounded),
                Some(Value::String(s)) if s == "divergence" => Some(Expectation::Divergence),
                Some(v) => {
                    errs.push(err("params.expect", &format!("expected \"bounded\" or \"divergence\", got {v}")));
                    None
                }
            };
            if grid.n_side < 16 {
                errs.push(err("grid.n_side", "source sweeps need n_side >= 16"));
            }
            KindParams::SourceSweep(SourceSweepParams {
                rho: p.num_list("rho", vec![0.5], in_range(-4.0, 8.0), errs),
                h_list: p.num_list("h_list", vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0], in_range(1e-6, h0), errs),
                samples: p.int("samples", 8, 1, 10_000, errs) as usize,
                half_angle: p.num("half_angle", 0.75, in_range(1e-3, 1.5), errs),
                h0,
                n_neg: p.num("n_neg", 4.0, in_range(0.0, 32.0), errs),
                weight,
                expect,
                max_spread: p.num("max_spread", 2.0, |x| (!(x >= 1.0)).then(|| format!("must be >= 1, got {x}")), errs),
                min_divergent_slope: p.num("min_divergent_slope", 0.25, positive, errs),
            })
        }
        ExperimentKind::Propagation => {
            let radial = p.num_list("radial", vec![30.0, 40.0, 80.0, 100.0], positive, errs);
            let radial = match radial.as_slice() {
                &[a, b, c, d] if a < b && b <= c && c < d => [a, b, c, d],
                _ => {
                    errs.push(err("params.radial", "expected four increasing radii [lo, plateau_lo, plateau_hi, hi]"));
                    [30.0, 40.0, 80.0, 100.0]
                }
            };
            KindParams::Propagation(PropagationParams {
                s: p.num("s", 0.5, in_range(-4.0, 8.0), errs),
                n_neg: p.num("n_neg", 4.0, in_range(0.0, 32.0), errs),
                time: p.num("time", 3.0, in_range(0.0, 32.0), errs),
                samples: p.int("samples", 16, 1, 10_000, errs) as usize,
                axis_from_stable_deg: p.num("axis_from_stable_deg", 45.0, in_range(-180.0, 180.0), errs),
                half_angle: p.num("half_angle", 0.2, in_range(1e-3, 1.5), errs),
                radial,
                max_mode: p.int("max_mode", 40.min(half - 1), 1, half - 1, errs) as i64,
                decay: p.num("decay", 1.5, in_range(0.0, 10.0), errs),
                max_ratio: p.num("max_ratio", 10.0, positive, errs),
            })
        }
        ExperimentKind::Foliation => KindParams::Foliation(FoliationParams {
            points: p.int("points", 12, 1, 10_000, errs) as usize,
            horizon: p.int("horizon", 64, 4, 100_000, errs) as usize,
            epsilon: p.num("epsilon", 0.01, in_range(0.0, 0.2), errs),
            steps: p.num_list("steps", vec![1e-1, 3e-2, 1e-2, 3e-3], in_range(1e-8, 0.5), errs),
        }),
        ExperimentKind::Mls => {
            let roof_ref = parse_trig(p.take("roof_ref"), "params.roof_ref", TrigSpec::constant(1.0), errs);
            let default_target = TrigSpec { constant: 1.0, terms: vec![TrigTermSpec { k: [1, 0], amplitude: 0.1, phase: 0.0 }] };
            let roof_target = parse_trig(p.take("roof_target"), "params.roof_target", default_target, errs);
            for (r, path) in [(&roof_ref, "params.roof_ref"), (&roof_target, "params.roof_target")] {
                check_roof(r, path, errs);
                check_resolved(r, path, grid, errs);
            }
            KindParams::Mls(MlsParams {
                roof_ref,
                roof_target,
                max_period: p.int("max_period", 10, 1, 14, errs) as usize,
                tol: p.num("tol", 1e-12, positive, errs),
            })
        }
        ExperimentKind::StretchStability => {
            let roof = parse_trig(p.take("roof"), "params.roof", TrigSpec::constant(1.0), errs);
            check_roof(&roof, "params.roof", errs);
            check_resolved(&roof, "params.roof", grid, errs);
            if half <= 2 {
                errs.push(err("grid.n_side", "stability families need n_side >= 8"));
            }
            KindParams::StretchStability(StabilityParams {
                samples: p.int("samples", 20, 1, 10_000, errs) as usize,
                amplitudes: p.num_list("amplitudes", vec![1e-3, 1e-2], in_range(1e-12, 0.1), errs),
                max_period: p.int("max_period", 8, 1, 14, errs) as usize,
                nu: p.num("nu", 0.5, in_range(0.0, 8.0), errs),
                roof,
                homogeneity_tol: p.num("homogeneity_tol", 1e-2, positive, errs),
            })
        }
        ExperimentKind::Conformal => {
            let sigma = match p.take("sigma") {
                None => ConformalFactor::bump(1.0, 1.0),
                Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
                    errs.push(err("params.sigma", &format!("{e}")));
                    ConformalFactor::zero()
                }),
            };
            let words = match p.take("words") {
                None => vec![vec![0]],
                Some(v) => match serde_json::from_value::<Vec<Vec<usize>>>(v.clone()) {
                    Ok(w) if !w.is_empty() && w.iter().all(|x| !x.is_empty() && x.iter().all(|&l| l < 8)) => w,
                    _ => {
                        errs.push(err("params.words", "expected a nonempty list of nonempty words over letters 0..8"));
                        vec![vec![0]]
                    }
                },
            };
            let eps = p.num_list("eps", vec![1e-2, 5e-3, 2.5e-3], in_range(1e-8, 0.5), errs);
            if eps.len() < 3 {
                errs.push(err("params.eps", &format!("need at least 3 amplitudes, got {}", eps.len())));
            }
            let range = p.num_list("slope_range", vec![1.8, 2.2], |x| (!x.is_finite()).then(|| "must be finite".into()), errs);
            let slope_range = match range.as_slice() {
                &[a, b] if a < b => [a, b],
                _ => {
                    errs.push(err("params.slope_range", "expected [min, max] with min < max"));
                    [1.8, 2.2]
                }
            };
            KindParams::Conformal(ConformalParams {
                sigma,
                eps,
                words,
                n_points: p.int("n_points", 512, 64, 8192, errs) as usize,
                slope_range,
            })
        }
    }
}

fn check_system(kind: ExperimentKind, system: &SystemSpec, errs: &mut Vec<ConfigError>) {
    use ExperimentKind::*;
    let ok = match kind {
        Conformal => matches!(system, SystemSpec::Bolza),
        Foliation => !matches!(system, SystemSpec::Bolza),
        Norms => true,
        Livsic | Threshold | SourceSweep | Propagation | Mls | StretchStability => system.is_linear_toral(),
    };
    if !ok {
        let need = match kind {
            Conformal => "the bolza system",
            Foliation => "a toral system",
            _ => "a linear toral system (cat or suspension)",
        };
        errs.push(err("system", &format!("{kind} experiments need {need}")));
    }
}
