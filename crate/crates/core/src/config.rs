//! Run configuration: the four benchmark settings, named presets, the flat
//! `key = value` config file format, and resolution of a raw config into a
//! fully determined scenario plus verification parameters.
//!
//! A `RunConfig` is intentionally sparse: every field that has a
//! setting-specific default is optional, and `resolve` fills the gaps. The
//! normalized config returned inside `ResolvedRun` has every field populated,
//! so emitting it alongside a trace records the effective parameters and
//! rerunning from that record reproduces the run exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::certificate::DEFAULT_FEASIBILITY_TOL;
use crate::engine::{Lookahead, Scenario};
use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::oracle::{gen_costs, ComparatorKind, CostModel, CostModelKind};
use crate::regularizer::Regularizer;
use crate::vector::Vector;

/// The benchmark family a run belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "oco-pball")]
    OcoPball,
    #[serde(rename = "drift-expert")]
    DriftExpert,
    #[serde(rename = "onela-2ball")]
    Onela2Ball,
    #[serde(rename = "onela-mts")]
    OnelaMts,
}

impl Setting {
    /// All settings, in the canonical order used by sweeps and docs.
    pub const ALL: [Setting; 4] = [
        Setting::OcoPball,
        Setting::DriftExpert,
        Setting::Onela2Ball,
        Setting::OnelaMts,
    ];

    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::OcoPball => "oco-pball",
            Setting::DriftExpert => "drift-expert",
            Setting::Onela2Ball => "onela-2ball",
            Setting::OnelaMts => "onela-mts",
        }
    }

    /// True for the settings that look one step ahead and pay movement.
    #[must_use]
    pub fn is_lookahead(&self) -> bool {
        matches!(self, Setting::Onela2Ball | Setting::OnelaMts)
    }

    /// True for the settings whose decision body is a norm ball.
    #[must_use]
    pub fn is_ball(&self) -> bool {
        matches!(self, Setting::OcoPball | Setting::Onela2Ball)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oco-pball" => Ok(Setting::OcoPball),
            "drift-expert" => Ok(Setting::DriftExpert),
            "onela-2ball" => Ok(Setting::Onela2Ball),
            "onela-mts" => Ok(Setting::OnelaMts),
            other => Err(Error::InvalidInput(format!(
                "unknown setting '{other}' (expected oco-pball, drift-expert, onela-2ball, or onela-mts)"
            ))),
        }
    }
}

/// Output encoding for emitted artifacts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidInput(format!(
                "unknown format '{other}' (expected json or csv)"
            ))),
        }
    }
}

/// Comparator requested for the regret checks of the 0-lookahead settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ComparatorSpec {
    /// Best fixed point in hindsight (zero drift).
    Constant,
    /// Simplex path switching between vertices a fixed number of times.
    Switching { switches: usize },
    /// Ball path shuttling between two antipodal points on a geodesic.
    Geodesic,
}

impl fmt::Display for ComparatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComparatorSpec::Constant => f.write_str("constant"),
            ComparatorSpec::Switching { switches } => write!(f, "switching:{switches}"),
            ComparatorSpec::Geodesic => f.write_str("geodesic"),
        }
    }
}

impl FromStr for ComparatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "constant" {
            return Ok(ComparatorSpec::Constant);
        }
        if s == "geodesic" {
            return Ok(ComparatorSpec::Geodesic);
        }
        if let Some(rest) = s.strip_prefix("switching:") {
            let switches = rest.parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!("comparator 'switching': bad count '{rest}'"))
            })?;
            return Ok(ComparatorSpec::Switching { switches });
        }
        Err(Error::InvalidInput(format!(
            "unknown comparator '{s}' (expected constant, switching:<count>, or geodesic)"
        )))
    }
}

impl ComparatorSpec {
    #[must_use]
    pub fn to_kind(&self) -> ComparatorKind {
        match self {
            ComparatorSpec::Constant => ComparatorKind::Constant,
            ComparatorSpec::Switching { switches } => ComparatorKind::SwitchingVertices {
                switches: *switches,
            },
            ComparatorSpec::Geodesic => ComparatorKind::Geodesic,
        }
    }
}

/// Parse a cost-model string such as `uniform:0,1`, `switcher:5`,
/// `spike:10,3.5`, `radial:1.0`, or `replay:costs.txt`.
pub fn parse_cost_model(s: &str) -> Result<CostModelKind> {
    let (name, args) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let bad = |msg: String| Err(Error::InvalidInput(format!("cost model '{s}': {msg}")));
    match name {
        "uniform" => {
            let (lo, hi) = match args {
                None | Some("") => (0.0, 1.0),
                Some(a) => {
                    let parts: Vec<&str> = a.split(',').collect();
                    if parts.len() != 2 {
                        return bad("expected uniform:<lo>,<hi>".into());
                    }
                    let lo = parse_float_field(parts[0], "uniform lo")?;
                    let hi = parse_float_field(parts[1], "uniform hi")?;
                    (lo, hi)
                }
            };
            Ok(CostModelKind::UniformRandom { lo, hi })
        }
        "switcher" => {
            let a = args.unwrap_or("");
            let period = a
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("cost model '{s}': bad period '{a}'")))?;
            Ok(CostModelKind::BestExpertSwitcher { period })
        }
        "spike" => {
            let a = args.unwrap_or("");
            let parts: Vec<&str> = a.split(',').collect();
            if parts.len() != 2 {
                return bad("expected spike:<t>,<magnitude>".into());
            }
            let t = parts[0].parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!("cost model '{s}': bad round '{}'", parts[0]))
            })?;
            let magnitude = parse_float_field(parts[1], "spike magnitude")?;
            Ok(CostModelKind::SingleSpike { t, magnitude })
        }
        "radial" => {
            let a = args.unwrap_or("1");
            let magnitude = parse_float_field(a, "radial magnitude")?;
            Ok(CostModelKind::AdversarialRadial { magnitude })
        }
        "replay" => match args {
            Some(path) if !path.is_empty() => Ok(CostModelKind::FileReplay { path: path.into() }),
            _ => bad("expected replay:<path>".into()),
        },
        _ => bad("unknown model (expected uniform, switcher, spike, radial, or replay)".into()),
    }
}

fn parse_float_field(s: &str, what: &str) -> Result<f64> {
    let v = s
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("{what}: invalid number '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("{what}: must be finite, got '{s}'")));
    }
    Ok(v)
}

/// Raw run configuration. Optional fields fall back to setting-specific
/// defaults during `resolve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub setting: Setting,
    pub n: usize,
    #[serde(rename = "T")]
    pub t_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Comparator drift budget for the 0-lookahead regret bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    /// Ball radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Ball center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Ball norm exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<NormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_model: Option<CostModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonneg: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparator: Option<ComparatorSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Certificate feasibility tolerance override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    /// A bare config for a setting with everything else defaulted.
    #[must_use]
    pub fn new(setting: Setting, n: usize, t_len: usize) -> Self {
        RunConfig {
            setting,
            n,
            t_len,
            eta: None,
            alpha: None,
            drift: None,
            radius: None,
            epsilon: None,
            center: None,
            p: None,
            cost_model: None,
            nonneg: None,
            comparator: None,
            seed: 0,
            tol: None,
            out: None,
            format: None,
        }
    }

    /// Named presets.
    ///
    /// `thm3` and `thm2` pin the tuned parameter couplings (step size equal
    /// to the radius, and cap scaled so that eta * alpha = ln n) through the
    /// setting defaults; `thm3-demo` is a complete runnable demonstration.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "thm3" => Ok(RunConfig::new(Setting::Onela2Ball, 2, 100)),
            "thm2" => Ok(RunConfig::new(Setting::DriftExpert, 10, 100)),
            "thm3-demo" => {
                let mut cfg = RunConfig::new(Setting::Onela2Ball, 2, 500);
                cfg.center = Some(vec![2.0, 2.0]);
                cfg.radius = Some(1.0);
                cfg.epsilon = Some(1.0);
                cfg.cost_model = Some(CostModelKind::UniformRandom { lo: 0.0, hi: 1.0 });
                Ok(cfg)
            }
            other => Err(Error::InvalidInput(format!(
                "unknown preset '{other}' (expected thm3, thm2, or thm3-demo)"
            ))),
        }
    }

    /// Parse the flat `key = value` config file format. Blank lines and lines
    /// starting with `#` are ignored. A `preset = <name>` line provides the
    /// base config; every other key overrides it regardless of line order.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        let mut preset: Option<(usize, String)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("config line {lineno}: expected 'key = value'"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key == "preset" {
                preset = Some((lineno, value));
            } else {
                pairs.push((lineno, key, value));
            }
        }
        let mut cfg = match &preset {
            Some((lineno, name)) => RunConfig::preset(name)
                .map_err(|e| Error::InvalidInput(format!("config line {lineno}: {e}")))?,
            None => {
                let setting = pairs
                    .iter()
                    .find(|(_, k, _)| k == "setting")
                    .ok_or_else(|| {
                        Error::InvalidInput("config: missing required key 'setting'".into())
                    })?;
                let parsed: Setting = setting.2.parse().map_err(|e| {
                    Error::InvalidInput(format!("config line {}: {e}", setting.0))
                })?;
                RunConfig::new(parsed, 2, 0)
            }
        };
        for (lineno, key, value) in &pairs {
            cfg.apply_kv(key, value)
                .map_err(|e| Error::InvalidInput(format!("config line {lineno}: {e}")))?;
        }
        Ok(cfg)
    }

    /// Apply one `key = value` override. Shared by the file parser and the
    /// CLI flag layer so both spell fields identically.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let field = |what: &str, e: Error| Error::InvalidInput(format!("field '{what}': {e}"));
        match key {
            "setting" => {
                self.setting = value.parse().map_err(|e| field("setting", e))?;
            }
            "n" => {
                self.n = value
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("field 'n': bad count '{value}'")))?;
            }
            "T" | "t" => {
                self.t_len = value
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("field 'T': bad count '{value}'")))?;
            }
            "eta" => self.eta = Some(parse_float_field(value, "field 'eta'")?),
            "alpha" => self.alpha = Some(parse_float_field(value, "field 'alpha'")?),
            "drift" | "L" => self.drift = Some(parse_float_field(value, "field 'drift'")?),
            "radius" | "D" => self.radius = Some(parse_float_field(value, "field 'radius'")?),
            "epsilon" => self.epsilon = Some(parse_float_field(value, "field 'epsilon'")?),
            "center" => {
                let coords: Vec<f64> = value
                    .split(',')
                    .map(|c| parse_float_field(c, "field 'center'"))
                    .collect::<Result<_>>()?;
                if coords.is_empty() {
                    return Err(Error::InvalidInput("field 'center': empty list".into()));
                }
                self.center = Some(coords);
            }
            "p" => {
                let spec = if value == "inf" {
                    NormSpec::Infinity
                } else {
                    NormSpec::Finite(parse_float_field(value, "field 'p'")?)
                };
                self.p = Some(spec);
            }
            "cost-model" | "cost_model" => {
                self.cost_model = Some(parse_cost_model(value)?);
            }
            "nonneg" => {
                self.nonneg = Some(value.parse::<bool>().map_err(|_| {
                    Error::InvalidInput(format!("field 'nonneg': expected true or false, got '{value}'"))
                })?);
            }
            "comparator" => {
                self.comparator = Some(value.parse().map_err(|e| field("comparator", e))?);
            }
            "seed" => {
                self.seed = value.parse::<u64>().map_err(|_| {
                    Error::InvalidInput(format!("field 'seed': bad integer '{value}'"))
                })?;
            }
            "tol" => self.tol = Some(parse_float_field(value, "field 'tol'")?),
            "out" => self.out = Some(value.to_string()),
            "format" => {
                self.format = Some(value.parse().map_err(|e| field("format", e))?);
            }
            other => {
                return Err(Error::InvalidInput(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Fill defaults, validate setting-specific invariants, generate costs,
    /// and package everything needed to run and verify the scenario.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.n == 0 {
            return Err(Error::InvalidInput("field 'n': must be at least 1".into()));
        }
        let setting = self.setting;
        let n = self.n;
        let mut normalized = self.clone();

        let radius = self.radius.unwrap_or(1.0);
        if setting.is_ball() && (!radius.is_finite() || radius <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "field 'radius': must be positive, got {radius}"
            )));
        }
        let p = match self.p.clone() {
            Some(spec) => {
                if setting != Setting::OcoPball && spec != NormSpec::Finite(2.0) {
                    return Err(Error::InvalidInput(format!(
                        "field 'p': setting {setting} fixes the exponent at 2, got {spec}"
                    )));
                }
                spec
            }
            None => NormSpec::Finite(2.0),
        };

        let center = if setting.is_ball() {
            let coords = match &self.center {
                Some(c) => c.clone(),
                None => match setting {
                    Setting::Onela2Ball => vec![radius + 1.0; n],
                    _ => vec![0.0; n],
                },
            };
            if coords.len() != n {
                return Err(Error::InvalidInput(format!(
                    "field 'center': dimension {} does not match n = {n}",
                    coords.len()
                )));
            }
            Some(Vector::computed(coords, "ball center")?)
        } else {
            None
        };

        let eta = self.eta.unwrap_or(match setting {
            Setting::Onela2Ball => radius,
            _ => 0.1,
        });
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "field 'eta': must be positive, got {eta}"
            )));
        }

        let alpha = match setting {
            Setting::DriftExpert | Setting::OnelaMts => {
                let a = self.alpha.unwrap_or((n as f64).ln() / eta);
                if !a.is_finite() || a <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "field 'alpha': must be positive, got {a}"
                    )));
                }
                Some(a)
            }
            _ => {
                if self.alpha.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "field 'alpha': not applicable to setting {setting}"
                    )));
                }
                None
            }
        };

        let epsilon = match setting {
            Setting::Onela2Ball => {
                let k = center.as_ref().expect("ball settings carry a center");
                let k_min = k.iter().copied().fold(f64::INFINITY, f64::min);
                let e = self.epsilon.unwrap_or(k_min - radius);
                if !e.is_finite() || e <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "field 'epsilon': must be positive, got {e}"
                    )));
                }
                if k_min < radius + e - 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "field 'center': min coordinate {k_min} violates min_i k_i >= D + epsilon = {}",
                        radius + e
                    )));
                }
                Some(e)
            }
            _ => {
                if self.epsilon.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "field 'epsilon': not applicable to setting {setting}"
                    )));
                }
                None
            }
        };

        let drift = match setting {
            Setting::OcoPball | Setting::DriftExpert => {
                let l = self.drift.unwrap_or(0.0);
                if !l.is_finite() || l < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "field 'drift': must be nonnegative, got {l}"
                    )));
                }
                Some(l)
            }
            _ => {
                if self.drift.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "field 'drift': not applicable to setting {setting}"
                    )));
                }
                None
            }
        };

        let nonneg = self.nonneg.unwrap_or(setting.is_lookahead());
        if setting.is_lookahead() && !nonneg {
            return Err(Error::InvalidInput(
                "field 'nonneg': lookahead settings require nonnegative costs".into(),
            ));
        }

        let cost_kind = self
            .cost_model
            .clone()
            .unwrap_or(CostModelKind::UniformRandom { lo: 0.0, hi: 1.0 });
        let cost_model = CostModel {
            kind: cost_kind,
            nonneg,
            seed: self.seed,
        };
        let costs = gen_costs(&cost_model, self.t_len, n)
            .map_err(|e| Error::InvalidInput(format!("field 'cost-model': {e}")))?;

        let (body, regularizer, x0, lookahead) = match setting {
            Setting::OcoPball => {
                let k = center.clone().expect("ball settings carry a center");
                let reg = match &p {
                    NormSpec::Finite(pv) if *pv == 2.0 => {
                        Regularizer::centered_squared_l2(k.clone())
                    }
                    NormSpec::Finite(pv) => {
                        if k.iter().any(|c| *c != 0.0) {
                            return Err(Error::InvalidInput(
                                "field 'center': non-Euclidean balls must be centered at the origin"
                                    .into(),
                            ));
                        }
                        Regularizer::p_norm_squared(*pv)
                            .map_err(|e| Error::InvalidInput(format!("field 'p': {e}")))?
                    }
                    NormSpec::Infinity => {
                        return Err(Error::InvalidInput(
                            "field 'p': the max norm has no strongly convex mirror map here"
                                .into(),
                        ));
                    }
                };
                let body = Body::p_ball(p.clone(), k.clone(), radius)?;
                (body, reg, k, Lookahead::Zero)
            }
            Setting::Onela2Ball => {
                let k = center.clone().expect("ball settings carry a center");
                let body = Body::p_ball(NormSpec::Finite(2.0), k.clone(), radius)?;
                let reg = Regularizer::centered_squared_l2(k.clone());
                (body, reg, k, Lookahead::One)
            }
            Setting::DriftExpert | Setting::OnelaMts => {
                let a = alpha.expect("expert settings carry a cap");
                let theta = crate::certificate::shift_for_cap(eta, a);
                let body = Body::simplex(n)?;
                let reg = Regularizer::shifted_neg_entropy(theta, n)
                    .map_err(|e| Error::InvalidInput(format!("field 'alpha': {e}")))?;
                let x0 = Vector::constant(n, 1.0 / n as f64)?;
                let lookahead = if setting == Setting::OnelaMts {
                    Lookahead::One
                } else {
                    Lookahead::Zero
                };
                (body, reg, x0, lookahead)
            }
        };

        let comparator = match setting {
            Setting::OcoPball | Setting::DriftExpert => Some(match &self.comparator {
                Some(spec) => {
                    if setting == Setting::OcoPball
                        && matches!(spec, ComparatorSpec::Switching { .. })
                    {
                        return Err(Error::InvalidInput(
                            "field 'comparator': switching paths live on the simplex".into(),
                        ));
                    }
                    if setting == Setting::DriftExpert && *spec == ComparatorSpec::Geodesic {
                        return Err(Error::InvalidInput(
                            "field 'comparator': geodesic paths live on a ball".into(),
                        ));
                    }
                    *spec
                }
                None => {
                    let l = drift.unwrap_or(0.0);
                    if l <= 0.0 || self.t_len < 2 {
                        ComparatorSpec::Constant
                    } else if setting == Setting::OcoPball {
                        ComparatorSpec::Geodesic
                    } else {
                        ComparatorSpec::Switching {
                            switches: l.floor() as usize,
                        }
                    }
                }
            }),
            _ => {
                if self.comparator.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "field 'comparator': not applicable to setting {setting}"
                    )));
                }
                None
            }
        };

        let feasibility_tol = self.tol.unwrap_or(DEFAULT_FEASIBILITY_TOL);
        if !feasibility_tol.is_finite() || feasibility_tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "field 'tol': must be positive, got {feasibility_tol}"
            )));
        }

        let scenario = Scenario {
            body,
            regularizer,
            eta,
            lookahead,
            x0,
            costs,
        };
        scenario
            .validate()
            .map_err(|e| Error::InvalidInput(format!("scenario: {e}")))?;

        normalized.eta = Some(eta);
        normalized.alpha = alpha;
        normalized.drift = drift;
        normalized.radius = if setting.is_ball() { Some(radius) } else { None };
        normalized.epsilon = epsilon;
        normalized.center = center.as_ref().map(|k| k.as_slice().to_vec());
        normalized.p = if setting.is_ball() { Some(p.clone()) } else { None };
        normalized.cost_model = Some(cost_model.kind.clone());
        normalized.nonneg = Some(nonneg);
        normalized.comparator = comparator;
        normalized.tol = Some(feasibility_tol);
        normalized.format = Some(self.format.unwrap_or_default());

        Ok(ResolvedRun {
            config: normalized,
            scenario,
            cost_model,
            comparator: comparator.map(|c| c.to_kind()),
            alpha,
            drift_budget: drift,
            radius: if setting.is_ball() { Some(radius) } else { None },
            epsilon,
            feasibility_tol,
        })
    }
}

/// A fully determined run: the scenario to execute plus every parameter the
/// verification layers need. `config` is the normalized copy with all
/// defaults written out.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub scenario: Scenario,
    pub cost_model: CostModel,
    pub comparator: Option<ComparatorKind>,
    pub alpha: Option<f64>,
    pub drift_budget: Option<f64>,
    pub radius: Option<f64>,
    pub epsilon: Option<f64>,
    pub feasibility_tol: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_strings_round_trip() {
        for s in Setting::ALL {
            assert_eq!(s.as_str().parse::<Setting>().unwrap(), s);
        }
        assert!("pball".parse::<Setting>().is_err());
    }

    #[test]
    fn cost_model_strings_parse() {
        assert_eq!(
            parse_cost_model("uniform:0,2").unwrap(),
            CostModelKind::UniformRandom { lo: 0.0, hi: 2.0 }
        );
        assert_eq!(
            parse_cost_model("uniform").unwrap(),
            CostModelKind::UniformRandom { lo: 0.0, hi: 1.0 }
        );
        assert_eq!(
            parse_cost_model("switcher:5").unwrap(),
            CostModelKind::BestExpertSwitcher { period: 5 }
        );
        assert_eq!(
            parse_cost_model("spike:10,3.5").unwrap(),
            CostModelKind::SingleSpike { t: 10, magnitude: 3.5 }
        );
        assert_eq!(
            parse_cost_model("radial:1.5").unwrap(),
            CostModelKind::AdversarialRadial { magnitude: 1.5 }
        );
        assert_eq!(
            parse_cost_model("replay:costs.txt").unwrap(),
            CostModelKind::FileReplay { path: "costs.txt".into() }
        );
        assert!(parse_cost_model("uniform:1").is_err());
        assert!(parse_cost_model("bogus:1").is_err());
        assert!(parse_cost_model("replay:").is_err());
    }

    #[test]
    fn flat_file_parses_and_overrides_preset() {
        let text = "\
# demo run
preset = thm3-demo
T = 100
seed = 7
tol = 1e-9
";
        let cfg = RunConfig::parse_file(text).unwrap();
        assert_eq!(cfg.setting, Setting::Onela2Ball);
        assert_eq!(cfg.t_len, 100);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.tol, Some(1e-9));
        assert_eq!(cfg.center, Some(vec![2.0, 2.0]));
    }

    #[test]
    fn flat_file_errors_name_the_line() {
        let err = RunConfig::parse_file("setting = drift-expert\nwat = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("wat"), "{err}");
        let err = RunConfig::parse_file("n = 3\n").unwrap_err();
        assert!(err.to_string().contains("setting"), "{err}");
        let err = RunConfig::parse_file("setting drift-expert\n").unwrap_err();
        assert!(err.to_string().contains("key = value"), "{err}");
    }

    #[test]
    fn demo_preset_resolves_with_tuned_parameters() {
        let cfg = RunConfig::preset("thm3-demo").unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.scenario.eta, 1.0);
        assert_eq!(run.radius, Some(1.0));
        assert_eq!(run.epsilon, Some(1.0));
        assert_eq!(run.scenario.costs.len(), 500);
        assert_eq!(run.config.eta, Some(1.0));
        assert!(run.scenario.costs.iter().all(|c| c.iter().all(|x| *x >= 0.0)));
        assert_eq!(run.scenario.x0.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn expert_defaults_tie_cap_to_log_n() {
        let cfg = RunConfig::new(Setting::DriftExpert, 5, 40);
        let run = cfg.resolve().unwrap();
        let eta = run.scenario.eta;
        let alpha = run.alpha.unwrap();
        assert!((eta * alpha - (5f64).ln()).abs() < 1e-12);
        assert_eq!(run.comparator, Some(ComparatorKind::Constant));
        let mut with_drift = RunConfig::new(Setting::DriftExpert, 5, 40);
        with_drift.drift = Some(3.0);
        let run = with_drift.resolve().unwrap();
        assert_eq!(
            run.comparator,
            Some(ComparatorKind::SwitchingVertices { switches: 3 })
        );
    }

    #[test]
    fn empty_horizon_resolves() {
        let cfg = RunConfig::new(Setting::DriftExpert, 10, 0);
        let run = cfg.resolve().unwrap();
        assert!(run.scenario.costs.is_empty());
    }

    #[test]
    fn lookahead_ball_center_invariant_is_enforced() {
        let mut cfg = RunConfig::new(Setting::Onela2Ball, 2, 10);
        cfg.center = Some(vec![1.5, 3.0]);
        cfg.epsilon = Some(1.0);
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("center"), "{err}");
        cfg.epsilon = Some(0.5);
        assert!(cfg.resolve().is_ok());
    }

    #[test]
    fn inapplicable_fields_are_rejected_with_paths() {
        let mut cfg = RunConfig::new(Setting::OcoPball, 2, 5);
        cfg.epsilon = Some(1.0);
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");
        let mut cfg = RunConfig::new(Setting::OnelaMts, 3, 5);
        cfg.drift = Some(1.0);
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("drift"), "{err}");
    }

    #[test]
    fn non_euclidean_ball_requires_origin_center() {
        let mut cfg = RunConfig::new(Setting::OcoPball, 3, 5);
        cfg.p = Some(NormSpec::Finite(1.5));
        assert!(cfg.resolve().is_ok());
        cfg.center = Some(vec![1.0, 0.0, 0.0]);
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("origin"), "{err}");
    }

    #[test]
    fn normalized_config_resolves_to_the_same_run() {
        let cfg = RunConfig::preset("thm3-demo").unwrap();
        let run = cfg.resolve().unwrap();
        let again = run.config.resolve().unwrap();
        assert_eq!(run.config, again.config);
        assert_eq!(run.scenario.costs, again.scenario.costs);
    }

    #[test]
    fn config_serde_round_trips() {
        let cfg = RunConfig::preset("thm3-demo").unwrap().resolve().unwrap().config;
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        assert!(json.contains("\"T\":500"), "{json}");
    }
}
