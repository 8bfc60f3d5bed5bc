//! JSON scan configuration: a flat key set validated one key at a time so that
//! diagnostics name the offending key.

use std::path::PathBuf;

use modlab::{Sign, TestFunction};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Illposedness,
    Dispersion,
    Scaling,
    Conservation,
    Norm,
    Evolve,
    Picard,
    Alpha,
    GwpTrack,
}

impl Experiment {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "illposedness" => Self::Illposedness,
            "dispersion" => Self::Dispersion,
            "scaling" => Self::Scaling,
            "conservation" => Self::Conservation,
            "norm" => Self::Norm,
            "evolve" => Self::Evolve,
            "picard" => Self::Picard,
            "alpha" => Self::Alpha,
            "gwp-track" | "gwp_track" => Self::GwpTrack,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Illposedness => "illposedness",
            Self::Dispersion => "dispersion",
            Self::Scaling => "scaling",
            Self::Conservation => "conservation",
            Self::Norm => "norm",
            Self::Evolve => "evolve",
            Self::Picard => "picard",
            Self::Alpha => "alpha",
            Self::GwpTrack => "gwp-track",
        }
    }

    /// Experiments reachable through `scan --experiment`.
    pub fn is_scan(self) -> bool {
        matches!(
            self,
            Self::Illposedness | Self::Dispersion | Self::Scaling | Self::Conservation
        )
    }
}

/// Pass thresholds; defaults are the acceptance tolerances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub trend_slope: f64,
    pub growth_slope_min: f64,
    pub control_slope_band: f64,
    pub crosscheck: f64,
    pub factorization: f64,
    pub invariance: f64,
    pub decay_exponent: f64,
    pub decay_band: f64,
    pub growth_exponent_max: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub mass_drift: f64,
    pub alpha_drift: f64,
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub apriori_max: f64,
    pub gronwall_residual: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            trend_slope: 0.1,
            growth_slope_min: 0.5,
            control_slope_band: 0.2,
            crosscheck: 1e-5,
            factorization: 1e-12,
            invariance: 1e-12,
            decay_exponent: -0.5,
            decay_band: 0.05,
            growth_exponent_max: 0.55,
            bracket_low: 0.1,
            bracket_high: 10.0,
            mass_drift: 1e-11,
            alpha_drift: 1e-4,
            ratio_low: 3.5,
            ratio_high: 4.5,
            apriori_max: 10.0,
            gronwall_residual: 0.1,
        }
    }
}

impl Thresholds {
    fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "trend_slope" => &mut self.trend_slope,
            "growth_slope_min" => &mut self.growth_slope_min,
            "control_slope_band" => &mut self.control_slope_band,
            "crosscheck" => &mut self.crosscheck,
            "factorization" => &mut self.factorization,
            "invariance" => &mut self.invariance,
            "decay_exponent" => &mut self.decay_exponent,
            "decay_band" => &mut self.decay_band,
            "growth_exponent_max" => &mut self.growth_exponent_max,
            "bracket_low" => &mut self.bracket_low,
            "bracket_high" => &mut self.bracket_high,
            "mass_drift" => &mut self.mass_drift,
            "alpha_drift" => &mut self.alpha_drift,
            "ratio_low" => &mut self.ratio_low,
            "ratio_high" => &mut self.ratio_high,
            "apriori_max" => &mut self.apriori_max,
            "gronwall_residual" => &mut self.gronwall_residual,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanConfig {
    pub schema_version: u64,
    pub experiment: Experiment,
    pub periods: u32,
    pub points: usize,
    pub data: TestFunction,
    pub psi_list: Vec<TestFunction>,
    pub sign: Sign,
    pub n_list: Vec<f64>,
    pub lambda_list: Vec<f64>,
    pub kappa_list: Vec<f64>,
    pub t_list: Vec<f64>,
    #[serde(serialize_with = "serialize_exponents")]
    pub p_list: Vec<f64>,
    #[serde(serialize_with = "serialize_exponents")]
    pub q_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub epsilon: f64,
    pub depth: usize,
    pub final_time: f64,
    pub steps: usize,
    pub record_every: usize,
    pub slices: usize,
    pub members: usize,
    pub amplitude: f64,
    pub thresholds: Thresholds,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

fn serialize_exponents<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_infinite() {
            seq.serialize_element("inf")?;
        } else {
            seq.serialize_element(x)?;
        }
    }
    seq.end()
}

const KEYS: &[&str] = &[
    "schema_version",
    "experiment",
    "periods",
    "points",
    "data",
    "psi_list",
    "sign",
    "n_list",
    "lambda_list",
    "kappa_list",
    "t_list",
    "p_list",
    "q_list",
    "s_list",
    "epsilon",
    "depth",
    "final_time",
    "steps",
    "record_every",
    "slices",
    "members",
    "amplitude",
    "thresholds",
    "seed",
    "out",
    "workers",
];

impl ScanConfig {
    /// Defaults for an experiment; each matches the corresponding acceptance setup.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            periods: 4,
            points: 256,
            data: TestFunction::gaussian(0.1),
            psi_list: vec![
                TestFunction::gaussian(1.0),
                TestFunction::Gaussian {
                    amplitude: 1.0,
                    center: 0.0,
                    width: 2.0,
                },
            ],
            sign: Sign::Defocusing,
            n_list: vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0],
            lambda_list: vec![1.0, 2.0, 4.0, 8.0],
            kappa_list: vec![1.0, 2.0, 4.0],
            t_list: vec![0.1],
            p_list: vec![2.0],
            q_list: vec![2.0],
            s_list: vec![-0.5, 0.0],
            epsilon: 0.1,
            depth: 3,
            final_time: 1.0,
            steps: 1000,
            record_every: 100,
            slices: 256,
            members: 100,
            amplitude: 1.0,
            thresholds: Thresholds::default(),
            seed: 42,
            out: None,
            workers: None,
        };
        match experiment {
            Experiment::Illposedness => {
                c.periods = 16;
                c.points = 256;
            }
            Experiment::Dispersion => {
                c.periods = 128;
                c.points = 2048;
                c.data = TestFunction::gaussian(1.0);
                c.t_list = vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 14.0, 20.0];
                c.p_list = vec![1.0, 2.0, 4.0, f64::INFINITY];
                c.q_list = vec![1.0, 2.0, 4.0];
            }
            Experiment::Scaling => {
                c.periods = 8;
                c.points = 1024;
                c.q_list = vec![1.0, 2.0, 4.0];
            }
            Experiment::Conservation => {}
            Experiment::Norm => {
                c.p_list = vec![1.0, 2.0, 4.0, f64::INFINITY];
                c.q_list = vec![1.0, 2.0, f64::INFINITY];
                c.s_list = vec![0.0];
            }
            Experiment::Evolve => {
                c.data = TestFunction::gaussian(0.5);
            }
            Experiment::Picard => {
                c.depth = 7;
                c.slices = 100;
            }
            Experiment::Alpha => {}
            Experiment::GwpTrack => {
                c.data = TestFunction::gaussian(0.2);
                c.final_time = 5.0;
                c.steps = 5000;
                c.record_every = 25;
                c.members = 20;
                c.amplitude = 0.1;
            }
        }
        c
    }

    /// Defaults for `experiment` overridden by the keys of a JSON document.
    pub fn from_json(text: &str, experiment: Option<Experiment>) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        Self::from_map(&map, experiment)
    }

    fn from_map(map: &Map<String, Value>, requested: Option<Experiment>) -> Result<Self, CliError> {
        for key in map.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(key_error(key, "unknown key"));
            }
        }
        match map.get("schema_version") {
            None => return Err(key_error("schema_version", "missing")),
            Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(key_error(
                    "schema_version",
                    &format!("expected {SCHEMA_VERSION}, got {v}"),
                ))
            }
        }
        let named = match map.get("experiment") {
            None => None,
            Some(Value::String(s)) => Some(
                Experiment::parse(s).ok_or_else(|| key_error("experiment", &format!("unknown experiment {s:?}")))?,
            ),
            Some(v) => return Err(key_error("experiment", &format!("expected a string, got {v}"))),
        };
        let experiment = match (requested, named) {
            (Some(a), Some(b)) if a != b => {
                return Err(key_error(
                    "experiment",
                    &format!("config names {} but {} was requested", b.name(), a.name()),
                ))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(key_error("experiment", "missing")),
        };
        let mut c = Self::defaults(experiment);
        read(map, "periods", &mut c.periods)?;
        read(map, "points", &mut c.points)?;
        read(map, "data", &mut c.data)?;
        read(map, "psi_list", &mut c.psi_list)?;
        read(map, "sign", &mut c.sign)?;
        read(map, "n_list", &mut c.n_list)?;
        read(map, "lambda_list", &mut c.lambda_list)?;
        read(map, "kappa_list", &mut c.kappa_list)?;
        read(map, "t_list", &mut c.t_list)?;
        read_exponents(map, "p_list", &mut c.p_list)?;
        read_exponents(map, "q_list", &mut c.q_list)?;
        read(map, "s_list", &mut c.s_list)?;
        read(map, "epsilon", &mut c.epsilon)?;
        read(map, "depth", &mut c.depth)?;
        read(map, "final_time", &mut c.final_time)?;
        read(map, "steps", &mut c.steps)?;
        read(map, "record_every", &mut c.record_every)?;
        read(map, "slices", &mut c.slices)?;
        read(map, "members", &mut c.members)?;
        read(map, "amplitude", &mut c.amplitude)?;
        read(map, "seed", &mut c.seed)?;
        if let Some(v) = map.get("out") {
            let s: String = parse_key("out", v)?;
            c.out = Some(PathBuf::from(s));
        }
        if let Some(v) = map.get("workers") {
            c.workers = Some(parse_key("workers", v)?);
        }
        if let Some(v) = map.get("thresholds") {
            let Value::Object(t) = v else {
                return Err(key_error("thresholds", "expected an object"));
            };
            for (k, x) in t {
                let name = format!("thresholds.{k}");
                let x: f64 = parse_key(&name, x)?;
                if !c.thresholds.set(k, x) {
                    return Err(key_error(&name, "unknown threshold"));
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let lists: [(&str, &Vec<f64>); 7] = [
            ("n_list", &self.n_list),
            ("lambda_list", &self.lambda_list),
            ("kappa_list", &self.kappa_list),
            ("t_list", &self.t_list),
            ("p_list", &self.p_list),
            ("q_list", &self.q_list),
            ("s_list", &self.s_list),
        ];
        for (key, list) in lists {
            if list.is_empty() {
                return Err(key_error(key, "range must be nonempty"));
            }
            if list.iter().any(|x| x.is_nan()) {
                return Err(key_error(key, "contains NaN"));
            }
        }
        if self.psi_list.is_empty() {
            return Err(key_error("psi_list", "range must be nonempty"));
        }
        let positive: [(&str, &Vec<f64>); 3] = [
            ("n_list", &self.n_list),
            ("lambda_list", &self.lambda_list),
            ("kappa_list", &self.kappa_list),
        ];
        for (key, list) in positive {
            if list.iter().any(|&x| !(x > 0.0) || x.is_infinite()) {
                return Err(key_error(key, "entries must be positive and finite"));
            }
        }
        if self.t_list.iter().any(|&t| !(t >= 0.0) || t.is_infinite()) {
            return Err(key_error("t_list", "entries must be finite and nonnegative"));
        }
        for (key, list) in [("p_list", &self.p_list), ("q_list", &self.q_list)] {
            if list.iter().any(|&x| !(x >= 1.0)) {
                return Err(key_error(key, "exponents must be at least 1"));
            }
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(key_error("epsilon", "must be positive"));
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(key_error("final_time", "must be positive"));
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(key_error("amplitude", "must be positive"));
        }
        for (key, v) in [
            ("steps", self.steps),
            ("record_every", self.record_every),
            ("slices", self.slices),
            ("members", self.members),
            ("points", self.points),
            ("depth", self.depth),
        ] {
            if v == 0 {
                return Err(key_error(key, "must be positive"));
            }
        }
        if !self.steps.is_multiple_of(self.record_every) {
            return Err(key_error("record_every", "must divide steps"));
        }
        if self.periods == 0 {
            return Err(key_error("periods", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(key_error("workers", "must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the result-determining fields, hex encoded and truncated to 16 digits.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        short_hash(&text)
    }
}

pub fn short_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn key_error(key: &str, msg: &str) -> CliError {
    CliError::Config(format!("key `{key}`: {msg}"))
}

fn parse_key<T: DeserializeOwned>(key: &str, v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| key_error(key, &e.to_string()))
}

fn read<T: DeserializeOwned>(map: &Map<String, Value>, key: &str, slot: &mut T) -> Result<(), CliError> {
    if let Some(v) = map.get(key) {
        *slot = parse_key(key, v)?;
    }
    Ok(())
}

/// Exponent lists accept numbers and the string `"inf"`.
fn read_exponents(map: &Map<String, Value>, key: &str, slot: &mut Vec<f64>) -> Result<(), CliError> {
    let Some(v) = map.get(key) else {
        return Ok(());
    };
    let Value::Array(items) = v else {
        return Err(key_error(key, "expected an array"));
    };
    *slot = items
        .iter()
        .map(|x| match x {
            Value::String(s) if s == "inf" => Ok(f64::INFINITY),
            Value::Number(n) => n.as_f64().ok_or_else(|| key_error(key, "bad number")),
            other => Err(key_error(key, &format!("expected a number or \"inf\", got {other}"))),
        })
        .collect::<Result<_, _>>()?;
    Ok(())
}
