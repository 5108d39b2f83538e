//! Strict experiment configuration.
//!
//! The on-disk format is TOML (key = value, sections in brackets, `#`
//! comments). Parsing is strict and total: unknown sections or keys are
//! rejected, and validation reports *every* violation rather than the
//! first — numerical studies die silently from typos otherwise.

use std::collections::BTreeMap;
use std::fmt;

use extinction_core::exponents::{Exponents, ParamTriple, Regime, TailClass};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Exponents,
    BarrierCheck,
    TailDichotomy,
    RateStudy,
    LemmaCheck,
}

impl StudyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyKind::Exponents => "exponents",
            StudyKind::BarrierCheck => "barrier-check",
            StudyKind::TailDichotomy => "tail-dichotomy",
            StudyKind::RateStudy => "rate-study",
            StudyKind::LemmaCheck => "lemma-check",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exponents" => StudyKind::Exponents,
            "barrier-check" => StudyKind::BarrierCheck,
            "tail-dichotomy" => StudyKind::TailDichotomy,
            "rate-study" => StudyKind::RateStudy,
            "lemma-check" => StudyKind::LemmaCheck,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSpec {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySpec {
    DirichletZero,
    NeumannZero,
    /// Dirichlet trace of the study's dominating supersolution.
    BarrierTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// `amplitude · (1 + r)^{-sigma}`.
    Power,
    /// `amplitude / (1 + r^{sigma})` — a smoothed `min(1, r^{-sigma})`.
    CappedPower,
    /// `W(0, ·)` of the study's dominating supersolution.
    BarrierTrace,
    /// Two-column `r u` table read from `path`.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub triple: ParamTriple,
    pub study: StudyKind,
    pub seed: u64,
    pub r_max: f64,
    pub n: usize,
    pub eps: f64,
    pub cfl: f64,
    pub scheme: SchemeSpec,
    pub extinct_tol: f64,
    pub t_max: f64,
    pub boundary: BoundarySpec,
    pub rel_change: f64,
    pub max_steps: usize,
    pub positivity_guard: bool,
    pub initial_kind: InitialKind,
    pub sigma: f64,
    pub amplitude: f64,
    pub initial_path: String,
    pub scan_points: usize,
    pub scan_y_min: f64,
    pub scan_y_max: f64,
    pub scan_nt: usize,
    pub scan_nr: usize,
    pub scan_r_min: f64,
    pub margin: f64,
    pub c0: f64,
    pub barrier_horizon: f64,
    pub fit_decades: f64,
    pub fit_floor_factor: f64,
    pub sigma_fast: f64,
    pub sigma_slow: f64,
    pub budget: f64,
    pub lemma_families: usize,
    pub lemma_samples: usize,
    pub out_dir: String,
}

/// All violations found while parsing a configuration.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "invalid configuration ({} violations):",
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

const SCHEMA: &[(&str, &[&str])] = &[
    ("triple", &["dim", "p", "q"]),
    ("study", &["kind", "seed"]),
    ("grid", &["r_max", "n"]),
    (
        "solver",
        &[
            "eps",
            "cfl",
            "scheme",
            "extinct_tol",
            "t_max",
            "boundary",
            "rel_change",
            "max_steps",
            "positivity_guard",
        ],
    ),
    ("initial", &["kind", "sigma", "amplitude", "path"]),
    ("scan", &["points", "y_min", "y_max", "nt", "nr", "r_min"]),
    ("barrier", &["margin", "c0", "horizon"]),
    ("fit", &["decades", "floor_factor"]),
    ("dichotomy", &["sigma_fast", "sigma_slow", "budget"]),
    ("lemma", &["families", "samples"]),
    ("output", &["dir"]),
];

struct Reader<'a> {
    root: &'a toml::Table,
    errs: Vec<String>,
}

impl<'a> Reader<'a> {
    fn section(&self, name: &str) -> Option<&'a toml::Table> {
        self.root.get(name).and_then(|v| v.as_table())
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> f64 {
        match self.section(section).and_then(|t| t.get(key)) {
            None => default,
            Some(v) => match v {
                toml::Value::Float(x) => *x,
                toml::Value::Integer(x) => *x as f64,
                other => {
                    self.errs
                        .push(format!("[{section}] {key}: expected a number, got {other}"));
                    default
                }
            },
        }
    }

    fn usize_or(&mut self, section: &str, key: &str, default: usize) -> usize {
        match self.section(section).and_then(|t| t.get(key)) {
            None => default,
            Some(toml::Value::Integer(x)) if *x >= 0 => *x as usize,
            Some(other) => {
                self.errs.push(format!(
                    "[{section}] {key}: expected a non-negative integer, got {other}"
                ));
                default
            }
        }
    }

    fn bool_or(&mut self, section: &str, key: &str, default: bool) -> bool {
        match self.section(section).and_then(|t| t.get(key)) {
            None => default,
            Some(toml::Value::Boolean(b)) => *b,
            Some(other) => {
                self.errs.push(format!(
                    "[{section}] {key}: expected a boolean, got {other}"
                ));
                default
            }
        }
    }

    fn string_or(&mut self, section: &str, key: &str, default: &str) -> String {
        match self.section(section).and_then(|t| t.get(key)) {
            None => default.to_string(),
            Some(toml::Value::String(s)) => s.clone(),
            Some(other) => {
                self.errs
                    .push(format!("[{section}] {key}: expected a string, got {other}"));
                default.to_string()
            }
        }
    }

    fn required(&mut self, section: &str, key: &str) {
        if self.section(section).and_then(|t| t.get(key)).is_none() {
            self.errs
                .push(format!("[{section}] {key}: required key missing"));
        }
    }
}

/// Parses and validates a configuration, reporting every violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let root: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(ConfigError {
                violations: vec![format!("TOML syntax: {e}")],
            })
        }
    };

    let mut errs: Vec<String> = Vec::new();

    // Unknown sections and keys are hard errors.
    for (name, value) in &root {
        match SCHEMA.iter().find(|(s, _)| s == name) {
            None => errs.push(format!("unknown section [{name}]")),
            Some((_, keys)) => {
                if let Some(table) = value.as_table() {
                    for key in table.keys() {
                        if !keys.contains(&key.as_str()) {
                            errs.push(format!("unknown key \"{key}\" in [{name}]"));
                        }
                    }
                } else {
                    errs.push(format!("[{name}] must be a section"));
                }
            }
        }
    }

    let mut r = Reader { root: &root, errs };
    r.required("triple", "dim");
    r.required("triple", "p");
    r.required("triple", "q");
    r.required("study", "kind");

    let dim = r.usize_or("triple", "dim", 1) as u32;
    let p = r.f64_or("triple", "p", 1.6);
    let q = r.f64_or("triple", "q", 0.7);
    let study_str = r.string_or("study", "kind", "exponents");
    let seed = r.usize_or("study", "seed", 1) as u64;
    let r_max = r.f64_or("grid", "r_max", 300.0);
    let n = r.usize_or("grid", "n", 2000);
    let eps = r.f64_or("solver", "eps", 0.0);
    let cfl = r.f64_or("solver", "cfl", 0.4);
    let scheme_str = r.string_or("solver", "scheme", "semi-implicit");
    let extinct_tol = r.f64_or("solver", "extinct_tol", 0.0);
    let t_max = r.f64_or("solver", "t_max", 100.0);
    let boundary_str = r.string_or("solver", "boundary", "dirichlet-zero");
    let rel_change = r.f64_or("solver", "rel_change", 0.02);
    let max_steps = r.usize_or("solver", "max_steps", 2_000_000);
    let positivity_guard = r.bool_or("solver", "positivity_guard", false);
    let initial_str = r.string_or("initial", "kind", "capped-power");
    let sigma = r.f64_or("initial", "sigma", 9.0);
    let amplitude = r.f64_or("initial", "amplitude", 1.0);
    let initial_path = r.string_or("initial", "path", "");
    let scan_points = r.usize_or("scan", "points", 10_000);
    let scan_y_min = r.f64_or("scan", "y_min", 1e-6);
    let scan_y_max = r.f64_or("scan", "y_max", 1e6);
    let scan_nt = r.usize_or("scan", "nt", 64);
    let scan_nr = r.usize_or("scan", "nr", 160);
    let scan_r_min = r.f64_or("scan", "r_min", 1e-4);
    let margin = r.f64_or("barrier", "margin", 2.0);
    let c0 = r.f64_or("barrier", "c0", 1.0);
    let barrier_horizon = r.f64_or("barrier", "horizon", 0.0);
    let fit_decades = r.f64_or("fit", "decades", 2.0);
    let fit_floor_factor = r.f64_or("fit", "floor_factor", 10.0);
    let sigma_fast = r.f64_or("dichotomy", "sigma_fast", 3.0);
    let sigma_slow = r.f64_or("dichotomy", "sigma_slow", 2.0);
    let budget = r.f64_or("dichotomy", "budget", 5.0);
    let lemma_families = r.usize_or("lemma", "families", 1000);
    let lemma_samples = r.usize_or("lemma", "samples", 160);
    let out_dir = r.string_or("output", "dir", "");
    let mut errs = r.errs;

    let study = StudyKind::parse(&study_str).unwrap_or_else(|| {
        errs.push(format!(
            "[study] kind: unknown study \"{study_str}\" (expected exponents, \
             barrier-check, tail-dichotomy, rate-study, or lemma-check)"
        ));
        StudyKind::Exponents
    });
    let scheme = match scheme_str.as_str() {
        "explicit" => SchemeSpec::Explicit,
        "semi-implicit" => SchemeSpec::SemiImplicit,
        other => {
            errs.push(format!(
                "[solver] scheme: unknown scheme \"{other}\" (expected explicit or semi-implicit)"
            ));
            SchemeSpec::SemiImplicit
        }
    };
    let boundary = match boundary_str.as_str() {
        "dirichlet-zero" => BoundarySpec::DirichletZero,
        "neumann-zero" => BoundarySpec::NeumannZero,
        "barrier-trace" => BoundarySpec::BarrierTrace,
        other => {
            errs.push(format!(
                "[solver] boundary: unknown boundary \"{other}\" (expected dirichlet-zero, \
                 neumann-zero, or barrier-trace)"
            ));
            BoundarySpec::DirichletZero
        }
    };
    let initial_kind = match initial_str.as_str() {
        "power" => InitialKind::Power,
        "capped-power" => InitialKind::CappedPower,
        "barrier-trace" => InitialKind::BarrierTrace,
        "tabulated" => InitialKind::Tabulated,
        other => {
            errs.push(format!(
                "[initial] kind: unknown kind \"{other}\" (expected power, capped-power, \
                 barrier-trace, or tabulated)"
            ));
            InitialKind::CappedPower
        }
    };

    let triple = match ParamTriple::new(dim, p, q) {
        Ok(t) => Some(t),
        Err(e) => {
            errs.push(format!("[triple] {e}"));
            None
        }
    };

    if !(cfl > 0.0 && cfl < 1.0) {
        errs.push(format!("[solver] cfl: must lie in (0, 1), got {cfl}"));
    }
    if !(rel_change > 0.0) {
        errs.push(format!(
            "[solver] rel_change: must be positive, got {rel_change}"
        ));
    }
    if !(t_max > 0.0) {
        errs.push(format!("[solver] t_max: must be positive, got {t_max}"));
    }
    if n < 16 {
        errs.push(format!("[grid] n: must be at least 16, got {n}"));
    }
    if !(r_max > 0.0) {
        errs.push(format!("[grid] r_max: must be positive, got {r_max}"));
    }
    if !(margin > 1.0) {
        errs.push(format!("[barrier] margin: must exceed 1, got {margin}"));
    }
    if !(c0 > 0.0) {
        errs.push(format!("[barrier] c0: must be positive, got {c0}"));
    }
    if !(fit_decades >= 1.0) {
        errs.push(format!(
            "[fit] decades: must be at least 1, got {fit_decades}"
        ));
    }
    if !(fit_floor_factor >= 1.0) {
        errs.push(format!(
            "[fit] floor_factor: must be at least 1, got {fit_floor_factor}"
        ));
    }
    if initial_kind == InitialKind::Tabulated && initial_path.is_empty() {
        errs.push("[initial] path: required for tabulated initial data".into());
    }
    if !(sigma > 0.0) {
        errs.push(format!("[initial] sigma: must be positive, got {sigma}"));
    }
    if !(amplitude > 0.0) {
        errs.push(format!(
            "[initial] amplitude: must be positive, got {amplitude}"
        ));
    }

    // Study-specific consistency.
    if let Some(t) = triple {
        let e = Exponents::from_triple(t);
        match study {
            StudyKind::RateStudy | StudyKind::LemmaCheck => {
                if e.regime != Regime::AboveCritical {
                    errs.push(
                        "[study] rate targets require q > p - 1 (the L1 rate exponent \
                         degenerates otherwise)"
                            .into(),
                    );
                } else if matches!(initial_kind, InitialKind::Power | InitialKind::CappedPower)
                    && sigma < e.sigma_fast.unwrap_or(f64::INFINITY) * (1.0 - 1e-9)
                {
                    errs.push(format!(
                        "[initial] sigma: rate studies need decay at least sigma_fast = {:.6} \
                         (or barrier-trace/tabulated data), got {sigma}",
                        e.sigma_fast.unwrap_or(f64::NAN)
                    ));
                }
            }
            StudyKind::TailDichotomy => {
                if e.classify_tail(sigma_fast) != Ok(TailClass::Extinguishing) {
                    errs.push(format!(
                        "[dichotomy] sigma_fast: must classify as extinguishing \
                         (sigma_opt = {:.6}), got {sigma_fast}",
                        e.sigma_opt
                    ));
                }
                if e.classify_tail(sigma_slow) != Ok(TailClass::NonExtinguishing) {
                    errs.push(format!(
                        "[dichotomy] sigma_slow: must classify as non-extinguishing \
                         (sigma_opt = {:.6}), got {sigma_slow}",
                        e.sigma_opt
                    ));
                }
                if !(budget > 0.0) {
                    errs.push(format!(
                        "[dichotomy] budget: must be positive, got {budget}"
                    ));
                }
            }
            _ => {}
        }
    }
    if study == StudyKind::LemmaCheck {
        if lemma_families == 0 {
            errs.push("[lemma] families: must be at least 1".into());
        }
        if lemma_samples < 16 {
            errs.push(format!(
                "[lemma] samples: must be at least 16, got {lemma_samples}"
            ));
        }
    }

    if !errs.is_empty() {
        return Err(ConfigError { violations: errs });
    }

    Ok(ExperimentConfig {
        triple: triple.expect("validated"),
        study,
        seed,
        r_max,
        n,
        eps,
        cfl,
        scheme,
        extinct_tol,
        t_max,
        boundary,
        rel_change,
        max_steps,
        positivity_guard,
        initial_kind,
        sigma,
        amplitude,
        initial_path,
        scan_points,
        scan_y_min,
        scan_y_max,
        scan_nt,
        scan_nr,
        scan_r_min,
        margin,
        c0,
        barrier_horizon,
        fit_decades,
        fit_floor_factor,
        sigma_fast,
        sigma_slow,
        budget,
        lemma_families,
        lemma_samples,
        out_dir,
    })
}

fn fnum(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{:.1}", x)
    } else {
        format!("{:e}", x)
    }
}

impl ExperimentConfig {
    /// Deterministic canonical text: fixed key order, fixed float format.
    /// Hashing and the emitted config copy both use this form, so a
    /// re-run from the emitted file reproduces the hash.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# canonical experiment configuration\n");
        s.push_str(&format!(
            "[triple]\ndim = {}\np = {}\nq = {}\n\n",
            self.triple.dim,
            fnum(self.triple.p),
            fnum(self.triple.q)
        ));
        s.push_str(&format!(
            "[study]\nkind = \"{}\"\nseed = {}\n\n",
            self.study.as_str(),
            self.seed
        ));
        s.push_str(&format!(
            "[grid]\nr_max = {}\nn = {}\n\n",
            fnum(self.r_max),
            self.n
        ));
        let scheme = match self.scheme {
            SchemeSpec::Explicit => "explicit",
            SchemeSpec::SemiImplicit => "semi-implicit",
        };
        let boundary = match self.boundary {
            BoundarySpec::DirichletZero => "dirichlet-zero",
            BoundarySpec::NeumannZero => "neumann-zero",
            BoundarySpec::BarrierTrace => "barrier-trace",
        };
        s.push_str(&format!(
            "[solver]\neps = {}\ncfl = {}\nscheme = \"{scheme}\"\nextinct_tol = {}\n\
             t_max = {}\nboundary = \"{boundary}\"\nrel_change = {}\nmax_steps = {}\n\
             positivity_guard = {}\n\n",
            fnum(self.eps),
            fnum(self.cfl),
            fnum(self.extinct_tol),
            fnum(self.t_max),
            fnum(self.rel_change),
            self.max_steps,
            self.positivity_guard
        ));
        let initial = match self.initial_kind {
            InitialKind::Power => "power",
            InitialKind::CappedPower => "capped-power",
            InitialKind::BarrierTrace => "barrier-trace",
            InitialKind::Tabulated => "tabulated",
        };
        s.push_str(&format!(
            "[initial]\nkind = \"{initial}\"\nsigma = {}\namplitude = {}\npath = \"{}\"\n\n",
            fnum(self.sigma),
            fnum(self.amplitude),
            self.initial_path
        ));
        s.push_str(&format!(
            "[scan]\npoints = {}\ny_min = {}\ny_max = {}\nnt = {}\nnr = {}\nr_min = {}\n\n",
            self.scan_points,
            fnum(self.scan_y_min),
            fnum(self.scan_y_max),
            self.scan_nt,
            self.scan_nr,
            fnum(self.scan_r_min)
        ));
        s.push_str(&format!(
            "[barrier]\nmargin = {}\nc0 = {}\nhorizon = {}\n\n",
            fnum(self.margin),
            fnum(self.c0),
            fnum(self.barrier_horizon)
        ));
        s.push_str(&format!(
            "[fit]\ndecades = {}\nfloor_factor = {}\n\n",
            fnum(self.fit_decades),
            fnum(self.fit_floor_factor)
        ));
        s.push_str(&format!(
            "[dichotomy]\nsigma_fast = {}\nsigma_slow = {}\nbudget = {}\n\n",
            fnum(self.sigma_fast),
            fnum(self.sigma_slow),
            fnum(self.budget)
        ));
        s.push_str(&format!(
            "[lemma]\nfamilies = {}\nsamples = {}\n\n",
            self.lemma_families, self.lemma_samples
        ));
        s.push_str(&format!("[output]\ndir = \"{}\"\n", self.out_dir));
        s
    }

    /// SHA-256 of the canonical text, hex-encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Machine-checkable study outcome.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub study: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, String>,
    pub config_hash: String,
}

impl Verdict {
    pub fn new(study: StudyKind, config: &ExperimentConfig) -> Self {
        Self {
            study: study.as_str().to_string(),
            pass: false,
            metrics: BTreeMap::new(),
            config_hash: config.hash(),
        }
    }

    pub fn metric(&mut self, key: &str, value: impl fmt::Display) {
        self.metrics.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# verdict for study \"{}\"\n", self.study));
        s.push_str(&format!("study = {}\n", self.study));
        s.push_str(&format!("pass = {}\n", self.pass));
        s.push_str(&format!("config_sha256 = {}\n", self.config_hash));
        s.push_str(&format!(
            "artifact_version = {}\n",
            env!("CARGO_PKG_VERSION")
        ));
        for (k, v) in &self.metrics {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}
