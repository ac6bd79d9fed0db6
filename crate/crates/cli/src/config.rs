//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment
//! [model]
//! name = lattice_bd
//! lambda = 1.0
//!
//! [window]
//! dimension = 1
//! radii = 4 8
//!
//! [run]
//! tau = 1.0
//! replicates = 100
//! seed = 7
//!
//! [statistic]
//! experiment = lln
//! functional = moment
//! k = 1
//!
//! [output]
//! directory = out
//! formats = csv json
//! ```
//!
//! Lists are whitespace-separated. Sites in `window.sites` and
//! `statistic.probes` are comma-separated coordinates, e.g. `0,0 1,0`.
//! Every problem is reported with its line number; parsing never stops at
//! the first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::registry::{self, Entry, Fallback, Family, Kind, Params, Value};

pub const SECTIONS: [&str; 5] = ["model", "window", "run", "statistic", "output"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Lln,
    Clt,
    Sigma,
    Decay,
    Cluster,
    Couple,
    Oracle,
    Increments,
}

impl Experiment {
    const ALL: [(&'static str, Experiment); 8] = [
        ("cluster", Experiment::Cluster),
        ("clt", Experiment::Clt),
        ("couple", Experiment::Couple),
        ("decay", Experiment::Decay),
        ("increments", Experiment::Increments),
        ("lln", Experiment::Lln),
        ("oracle", Experiment::Oracle),
        ("sigma", Experiment::Sigma),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, e)| *e == self)
            .expect("listed")
            .0
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(n, _)| *n == s).map(|(_, e)| *e)
    }

    /// Keys of `[statistic]` specific to this experiment.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Sigma => &["s", "t", "sigma_radius", "margin"],
            Experiment::Decay => &["s", "t", "distances", "margin"],
            Experiment::Cluster => &["n_values"],
            Experiment::Couple => &["probes"],
            Experiment::Oracle => &["state_cap"],
            _ => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub name: String,
    pub params: Params,
}

impl Component {
    pub fn real(&self, key: &str) -> Option<f64> {
        self.params.get(key).map(Value::real)
    }

    pub fn integer(&self, key: &str) -> Option<i64> {
        self.params.get(key).map(Value::integer)
    }

    pub fn reals(&self, key: &str) -> Option<&[f64]> {
        match self.params.get(key) {
            Some(Value::Reals(v)) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSpec {
    pub dimension: usize,
    pub radii: Vec<i64>,
    /// Explicit window, used by the oracle experiment instead of the first box.
    pub sites: Option<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSpec {
    pub tau: f64,
    pub times: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatisticSpec {
    pub experiment: Experiment,
    pub functional: Component,
    pub s: f64,
    pub t: f64,
    pub sigma_radius: usize,
    pub margin: usize,
    pub distances: Vec<usize>,
    pub n_values: Vec<usize>,
    pub probes: Vec<Vec<i64>>,
    pub state_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub csv: bool,
    pub json: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: Component,
    pub window: WindowSpec,
    pub run: RunSpec,
    pub statistic: StatisticSpec,
    pub output: OutputSpec,
}

/// Command-line values that replace the corresponding config keys.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default)]
struct Section {
    line: Option<usize>,
    entries: BTreeMap<String, (usize, String)>,
}

/// Reads typed values out of the parsed sections, collecting errors and
/// remembering which keys were consumed.
struct Reader {
    sections: BTreeMap<&'static str, Section>,
    used: BTreeSet<(&'static str, String)>,
    errors: Vec<ConfigError>,
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

fn lex(text: &str) -> (BTreeMap<&'static str, Section>, Vec<ConfigError>) {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut errors = Vec::new();
    // `None` before the first header, `Some(None)` under an unknown one.
    let mut current: Option<Option<&'static str>> = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']').map(str::trim) else {
                errors.push(err(Some(n), format!("malformed section header `{line}`")));
                current = Some(None);
                continue;
            };
            match SECTIONS.iter().find(|s| **s == name) {
                Some(s) => {
                    let sec = sections.entry(s).or_default();
                    if sec.line.is_some() {
                        errors.push(err(Some(n), format!("duplicate section [{name}]")));
                    }
                    sec.line = Some(n);
                    current = Some(Some(s));
                }
                None => {
                    errors.push(err(
                        Some(n),
                        format!(
                            "unknown section [{name}] (expected one of: {})",
                            SECTIONS.join(", ")
                        ),
                    ));
                    current = Some(None);
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(err(
                Some(n),
                format!("expected `key = value`, got `{line}`"),
            ));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            errors.push(err(Some(n), "missing key before `=`"));
            continue;
        }
        let sec = match current {
            Some(Some(sec)) => sec,
            Some(None) => continue,
            None => {
                errors.push(err(
                    Some(n),
                    format!("key `{key}` appears before any section"),
                ));
                continue;
            }
        };
        let entries = &mut sections.entry(sec).or_default().entries;
        if let Some((first, _)) = entries.get(key) {
            errors.push(err(
                Some(n),
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
            continue;
        }
        entries.insert(key.to_string(), (n, value.to_string()));
    }
    (sections, errors)
}

impl Reader {
    fn raw(&mut self, section: &'static str, key: &str) -> Option<(usize, String)> {
        let found = self.sections.get(section)?.entries.get(key).cloned();
        if found.is_some() {
            self.used.insert((section, key.to_string()));
        }
        found
    }

    fn section_line(&self, section: &str) -> Option<usize> {
        self.sections.get(section).and_then(|s| s.line)
    }

    fn missing(&mut self, section: &'static str, key: &str) {
        let line = self.section_line(section);
        self.errors
            .push(err(line, format!("missing required key `{section}.{key}`")));
    }

    fn parse_with<T>(
        &mut self,
        section: &'static str,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Option<(usize, T)> {
        let (line, value) = self.raw(section, key)?;
        match parse(&value) {
            Some(v) => Some((line, v)),
            None => {
                self.errors.push(err(
                    Some(line),
                    format!("`{key}`: expected {what}, got `{value}`"),
                ));
                None
            }
        }
    }

    fn real(&mut self, section: &'static str, key: &str) -> Option<(usize, f64)> {
        self.parse_with(section, key, "a finite number", |s| {
            s.parse::<f64>().ok().filter(|x| x.is_finite())
        })
    }

    fn unsigned(&mut self, section: &'static str, key: &str) -> Option<(usize, u64)> {
        self.parse_with(section, key, "a non-negative integer", |s| {
            s.parse::<u64>().ok()
        })
    }

    fn list<T: std::str::FromStr>(
        &mut self,
        section: &'static str,
        key: &str,
        what: &str,
    ) -> Option<(usize, Vec<T>)> {
        self.parse_with(section, key, what, |s| {
            let items: Option<Vec<T>> = s.split_whitespace().map(|w| w.parse().ok()).collect();
            items.filter(|v| !v.is_empty())
        })
    }

    fn sites(
        &mut self,
        section: &'static str,
        key: &str,
        dim: usize,
    ) -> Option<(usize, Vec<Vec<i64>>)> {
        let what = format!("whitespace-separated sites of {dim} comma-separated integers");
        self.parse_with(section, key, &what, |s| {
            let sites: Option<Vec<Vec<i64>>> = s
                .split_whitespace()
                .map(|w| {
                    let c: Option<Vec<i64>> = w.split(',').map(|x| x.trim().parse().ok()).collect();
                    c.filter(|c| c.len() == dim)
                })
                .collect();
            sites.filter(|v| !v.is_empty())
        })
    }

    fn out_of_range(&mut self, line: usize, key: &str, message: impl fmt::Display) {
        self.errors
            .push(err(Some(line), format!("`{key}` out of range: {message}")));
    }

    /// Reads every parameter of a registry entry from `section`.
    fn params(&mut self, section: &'static str, entry: &Entry) -> Params {
        let mut out = Params::new();
        for p in entry.params {
            let raw = self.raw(section, p.key);
            let (line, text) = match (raw, p.default) {
                (Some((l, v)), _) => (Some(l), v),
                (None, Fallback::Value(d)) => (None, d.to_string()),
                (None, Fallback::Optional) => continue,
                (None, Fallback::Required) => {
                    let where_ = self.section_line(section);
                    self.errors.push(err(
                        where_,
                        format!(
                            "missing required key `{section}.{}` for `{}`",
                            p.key, entry.name
                        ),
                    ));
                    continue;
                }
            };
            match check_param(p.kind, &text) {
                Ok(v) => {
                    out.insert(p.key.to_string(), v);
                }
                Err(m) => self.errors.push(err(line, format!("`{}` {m}", p.key))),
            }
        }
        out
    }

    fn reject_unused(&mut self, section: &'static str, context: &str) {
        let Some(sec) = self.sections.get(section) else {
            return;
        };
        for (key, (line, _)) in &sec.entries {
            if !self.used.contains(&(section, key.clone())) {
                self.errors.push(err(
                    Some(*line),
                    format!("unknown key `{key}` in [{section}]{context}"),
                ));
            }
        }
    }
}

fn check_param(kind: Kind, text: &str) -> Result<Value, String> {
    match kind {
        Kind::Real { min, open_min, max } => {
            let x: f64 = text
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| format!("expected a finite number, got `{text}`"))?;
            let low_ok = if open_min { x > min } else { x >= min };
            if !low_ok || x > max {
                let lo = if open_min { "(" } else { "[" };
                let hi = if max.is_infinite() {
                    "inf)".to_string()
                } else {
                    format!("{max}]")
                };
                return Err(format!("out of range: {x} not in {lo}{min}, {hi}"));
            }
            Ok(Value::Real(x))
        }
        Kind::Integer { min, max } => {
            let x: i64 = text
                .parse()
                .map_err(|_| format!("expected an integer, got `{text}`"))?;
            if x < min || x > max {
                return Err(format!("out of range: {x} not in [{min}, {max}]"));
            }
            Ok(Value::Integer(x))
        }
        Kind::RealList => {
            let xs: Option<Vec<f64>> = text.split_whitespace().map(|w| w.parse().ok()).collect();
            match xs {
                Some(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite() && *x >= 0.0) => {
                    Ok(Value::Reals(xs))
                }
                _ => Err(format!(
                    "expected a list of non-negative numbers, got `{text}`"
                )),
            }
        }
    }
}

fn strictly_increasing<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|p| p[0] < p[1])
}

/// Parses and validates a configuration; returns every error found.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, Vec<ConfigError>> {
    let (sections, errors) = lex(text);
    let mut r = Reader {
        sections,
        used: BTreeSet::new(),
        errors,
    };

    // [model]
    let model_entry = match r.raw("model", "name") {
        Some((line, name)) => match registry::model(&name) {
            Some(e) => Some(e),
            None => {
                r.errors.push(err(
                    Some(line),
                    format!(
                        "unknown model `{name}` (available: {})",
                        registry::names(registry::MODELS)
                    ),
                ));
                None
            }
        },
        None => {
            r.missing("model", "name");
            None
        }
    };
    let model = model_entry.map(|e| Component {
        name: e.name.to_string(),
        params: r.params("model", e),
    });
    let context = model_entry
        .map(|e| format!(" for model `{}`", e.name))
        .unwrap_or_default();
    if model_entry.is_some() {
        r.reject_unused("model", &context);
    }

    // [window]
    let dimension = match r.unsigned("window", "dimension") {
        Some((line, d)) if !(1..=3).contains(&d) => {
            r.out_of_range(line, "dimension", format!("{d} not in [1, 3]"));
            1
        }
        Some((_, d)) => d as usize,
        None => 1,
    };
    let radii = match r.list::<i64>("window", "radii", "a list of positive integers") {
        Some((line, v)) => {
            if v.iter().any(|x| *x <= 0) || !strictly_increasing(&v) {
                r.out_of_range(
                    line,
                    "radii",
                    "radii must be positive and strictly increasing",
                );
            }
            v
        }
        None => Vec::new(),
    };
    let sites = r.sites("window", "sites", dimension).map(|(_, s)| s);
    r.reject_unused("window", "");

    // [run]
    let times_given = r.list::<f64>("run", "times", "a list of numbers");
    let tau_given = r.real("run", "tau");
    let (tau, times) = match (tau_given, times_given) {
        (Some((line, tau)), _) if tau < 0.0 => {
            r.out_of_range(line, "tau", format!("{tau} must be non-negative"));
            (tau, vec![tau])
        }
        (Some((_, tau)), None) => (tau, vec![tau]),
        (tau, Some((line, times))) => {
            let tau = tau.map_or_else(|| *times.last().expect("non-empty"), |t| t.1);
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || !strictly_increasing(&times) {
                r.out_of_range(
                    line,
                    "times",
                    "times must be non-negative and strictly increasing",
                );
            } else if times.iter().any(|t| *t > tau) {
                r.out_of_range(line, "times", format!("times must not exceed tau = {tau}"));
            }
            (tau, times)
        }
        (None, None) => (f64::NAN, Vec::new()),
    };
    let replicates = match r.unsigned("run", "replicates") {
        Some((line, 0)) => {
            r.out_of_range(line, "replicates", "must be at least 1");
            1
        }
        Some((_, n)) => n as usize,
        None => {
            if overrides.replicates.is_none() {
                r.missing("run", "replicates");
            }
            1
        }
    };
    let seed = match r.unsigned("run", "seed") {
        Some((_, s)) => s,
        None => {
            if overrides.seed.is_none() {
                r.missing("run", "seed");
            }
            0
        }
    };
    r.reject_unused("run", "");

    // [statistic]
    let experiment = match r.raw("statistic", "experiment") {
        Some((line, name)) => {
            let e = Experiment::parse(&name);
            if e.is_none() {
                let names: Vec<&str> = Experiment::ALL.iter().map(|(n, _)| *n).collect();
                r.errors.push(err(
                    Some(line),
                    format!(
                        "unknown experiment `{name}` (available: {})",
                        names.join(", ")
                    ),
                ));
            }
            e
        }
        None => {
            r.missing("statistic", "experiment");
            None
        }
    };
    let model_family = model_entry.map(|e| e.family);
    let functional = match r.raw("statistic", "functional") {
        Some((line, name)) => match registry::functional(&name) {
            Some(f) => {
                if let Some(fam) = model_family {
                    if !f.family.accepts(fam) {
                        r.errors.push(err(
                            Some(line),
                            format!(
                                "functional `{name}` does not apply to model `{}`",
                                model.as_ref().map_or("", |m| m.name.as_str())
                            ),
                        ));
                    }
                }
                Some(f)
            }
            None => {
                r.errors.push(err(
                    Some(line),
                    format!(
                        "unknown functional `{name}` (available: {})",
                        registry::names(registry::FUNCTIONALS)
                    ),
                ));
                None
            }
        },
        None => match model_family {
            Some(Family::Points) => registry::functional("phi1"),
            _ => registry::functional("moment"),
        },
    };
    let functional = functional.map(|f| Component {
        name: f.name.to_string(),
        params: r.params("statistic", f),
    });

    let first_time = times.first().copied().unwrap_or(f64::NAN);
    let last_time = times.last().copied().unwrap_or(f64::NAN);
    let exp_keys: &[&str] = experiment.map(Experiment::keys).unwrap_or(&[]);
    let mut s = first_time;
    let mut t = last_time;
    if exp_keys.contains(&"s") {
        if let Some((_, v)) = r.real("statistic", "s") {
            s = v;
        }
        if let Some((line, v)) = r.real("statistic", "t") {
            t = v;
            if !(0.0 <= s && s <= t) {
                r.out_of_range(line, "t", format!("need 0 <= s <= t, got s = {s}, t = {t}"));
            }
        }
    }
    let mut sigma_radius = 2;
    let mut margin = 2;
    let mut distances: Vec<usize> = (0..=6).collect();
    let mut n_values = vec![1, 2, 3];
    let mut probes = vec![vec![0; dimension]];
    let mut state_cap = ipsim::engine::DEFAULT_STATE_CAP;
    if exp_keys.contains(&"sigma_radius") {
        if let Some((_, v)) = r.unsigned("statistic", "sigma_radius") {
            sigma_radius = v as usize;
        }
    }
    if exp_keys.contains(&"margin") {
        if let Some((_, v)) = r.unsigned("statistic", "margin") {
            margin = v as usize;
        }
    }
    if exp_keys.contains(&"distances") {
        if let Some((line, v)) =
            r.list::<usize>("statistic", "distances", "a list of non-negative integers")
        {
            if !strictly_increasing(&v) {
                r.out_of_range(line, "distances", "must be strictly increasing");
            }
            distances = v;
        }
    }
    if exp_keys.contains(&"n_values") {
        if let Some((line, v)) =
            r.list::<usize>("statistic", "n_values", "a list of positive integers")
        {
            if v.contains(&0) || !strictly_increasing(&v) || v.iter().any(|n| *n > 12) {
                r.out_of_range(
                    line,
                    "n_values",
                    "must be strictly increasing integers in [1, 12]",
                );
            }
            n_values = v;
        }
    }
    if exp_keys.contains(&"probes") {
        if let Some((_, v)) = r.sites("statistic", "probes", dimension) {
            probes = v;
        }
    }
    if exp_keys.contains(&"state_cap") {
        if let Some((line, v)) = r.unsigned("statistic", "state_cap") {
            if !(2..=1 << 16).contains(&v) {
                r.out_of_range(line, "state_cap", format!("{v} not in [2, 65536]"));
            }
            state_cap = v as usize;
        }
    }
    let context = match (experiment, &functional) {
        (Some(e), Some(f)) => format!(" for experiment `{}` and functional `{}`", e.name(), f.name),
        _ => String::new(),
    };
    if experiment.is_some() && functional.is_some() {
        r.reject_unused("statistic", &context);
    }

    // [output]
    let directory = r
        .raw("output", "directory")
        .map_or_else(|| PathBuf::from("out"), |(_, d)| PathBuf::from(d));
    let (mut csv, mut json) = (true, true);
    if let Some((line, formats)) = r.raw("output", "formats") {
        csv = false;
        json = false;
        for f in formats.split_whitespace() {
            match f {
                "csv" => csv = true,
                "json" => json = true,
                other => r.errors.push(err(
                    Some(line),
                    format!("unknown format `{other}` (expected csv, json)"),
                )),
            }
        }
        if !(csv || json) {
            r.errors
                .push(err(Some(line), "at least one output format is required"));
        }
    }
    r.reject_unused("output", "");

    // Experiment-specific requirements.
    if let (Some(e), Some(m)) = (experiment, model_entry) {
        let statistic_line = r.section_line("statistic");
        let window_line = r.section_line("window");
        let needs_times = e != Experiment::Cluster;
        if needs_times && times.is_empty() {
            r.missing("run", "tau");
        }
        let needs_radii =
            !matches!(e, Experiment::Cluster) && !(e == Experiment::Oracle && sites.is_some());
        if needs_radii && radii.is_empty() {
            r.missing("window", "radii");
        }
        if e == Experiment::Couple && !radii.is_empty() && radii.len() < 2 {
            r.errors.push(err(window_line, "couple needs at least two radii: the first is the inner window, the last the outer"));
        }
        if e == Experiment::Couple {
            let inner = radii.first().copied().unwrap_or(0);
            if let Some(p) = probes.iter().find(|p| p.iter().any(|c| c.abs() > inner)) {
                r.errors.push(err(
                    statistic_line,
                    format!("probe {p:?} lies outside the inner window of radius {inner}"),
                ));
            }
        }
        if e == Experiment::Oracle {
            if m.family != Family::Lattice {
                r.errors.push(err(
                    statistic_line,
                    format!(
                        "oracle needs a finite-state lattice model, not `{}`",
                        m.name
                    ),
                ));
            }
            let capped = model.as_ref().is_some_and(|c| c.params.contains_key("cap"));
            if m.param("cap").is_some() && !capped {
                r.errors.push(err(
                    r.section_line("model"),
                    format!("oracle with `{}` needs `cap`", m.name),
                ));
            }
        }
        if matches!(
            e,
            Experiment::Sigma | Experiment::Clt | Experiment::Decay | Experiment::Oracle
        ) {
            let reps = overrides.replicates.unwrap_or(replicates);
            if reps < 2 {
                r.errors.push(err(
                    r.section_line("run"),
                    format!("{} needs at least 2 replicates", e.name()),
                ));
            }
        }
        if m.name == "monolayer_bd_rolling_1d" && dimension != 1 {
            r.errors.push(err(
                window_line,
                "monolayer_bd_rolling_1d needs dimension = 1",
            ));
        }
        if m.name == "multilayer_bd_stick" && dimension > 2 {
            r.errors.push(err(
                window_line,
                "multilayer_bd_stick needs dimension 1 or 2",
            ));
        }
        if functional.as_ref().is_some_and(|f| f.name == "phi5") && dimension != 1 {
            r.errors.push(err(window_line, "phi5 needs dimension = 1"));
        }
    }

    if !r.errors.is_empty() {
        let mut errors = r.errors;
        errors.sort_by_key(|e| e.line.unwrap_or(0));
        return Err(errors);
    }
    let (Some(model), Some(experiment), Some(functional)) = (model, experiment, functional) else {
        unreachable!("missing components are reported as errors");
    };
    Ok(RunConfig {
        model,
        window: WindowSpec {
            dimension,
            radii,
            sites,
        },
        run: RunSpec {
            tau,
            times,
            replicates: overrides.replicates.unwrap_or(replicates),
            seed: overrides.seed.unwrap_or(seed),
        },
        statistic: StatisticSpec {
            experiment,
            functional,
            s,
            t,
            sigma_radius,
            margin,
            distances,
            n_values,
            probes,
            state_cap,
        },
        output: OutputSpec {
            directory: overrides.out.clone().unwrap_or(directory),
            csv,
            json,
        },
    })
}
