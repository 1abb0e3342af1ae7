//! Benchmark harness: declarative experiment configs, the replicated
//! split/train/fit/score protocol, the DSEL-scaling study, and report
//! emission as CSV or an aligned markdown table.

use std::collections::HashMap;
use std::hint::black_box;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{DsRule, KnnModel};
use crate::data::{load_csv, normalize, stratified_split, Dataset};
use crate::des::{self, DesMode, DesModel};
use crate::error::{FhError, Result};
use crate::hyperbox::MembershipKind;
use crate::pool::{train_pool, Pool, PoolParams};
use crate::seeding::derive_seed;
use crate::synth::GeneratorSpec;

/// A benchmarkable selection method. The `fh-des-*` variants use the
/// smooth-border membership; the `fh-gabrys-*` variants use the ramp
/// membership with the configured gamma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FhDesC,
    FhDesM,
    FhGabrysC,
    FhGabrysM,
    Ola,
    KnoraU,
    /// Static baseline: the single pool member with the highest accuracy
    /// on the selection set answers every query.
    SingleBest,
}

impl Method {
    pub fn token(&self) -> &'static str {
        match self {
            Method::FhDesC => "fh-des-c",
            Method::FhDesM => "fh-des-m",
            Method::FhGabrysC => "fh-gabrys-c",
            Method::FhGabrysM => "fh-gabrys-m",
            Method::Ola => "ola",
            Method::KnoraU => "knora-u",
            Method::SingleBest => "single-best",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fh-des-c" => Ok(Method::FhDesC),
            "fh-des-m" => Ok(Method::FhDesM),
            "fh-gabrys-c" => Ok(Method::FhGabrysC),
            "fh-gabrys-m" => Ok(Method::FhGabrysM),
            "ola" => Ok(Method::Ola),
            "knora-u" => Ok(Method::KnoraU),
            "single-best" => Ok(Method::SingleBest),
            other => Err(FhError::Config(format!("unknown method '{other}'"))),
        }
    }

    /// Mode and membership kind for the hyperbox methods; None otherwise.
    fn fh_params(&self, gamma: f64) -> Option<(DesMode, MembershipKind)> {
        match self {
            Method::FhDesC => Some((DesMode::CompetenceBoxes, MembershipKind::Sbm)),
            Method::FhDesM => Some((DesMode::IncompetenceBoxes, MembershipKind::Sbm)),
            Method::FhGabrysC => Some((DesMode::CompetenceBoxes, MembershipKind::Gabrys { gamma })),
            Method::FhGabrysM => {
                Some((DesMode::IncompetenceBoxes, MembershipKind::Gabrys { gamma }))
            }
            _ => None,
        }
    }
}

/// Where the experiment's samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// A fixed CSV; replications differ only in the split seed.
    Csv(PathBuf),
    /// A synthetic generator; every replication draws fresh samples.
    Synth(GeneratorSpec),
}

/// Declarative description of a replicated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub methods: Vec<Method>,
    pub theta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub k: usize,
    pub pool_size: usize,
    pub replications: usize,
    pub seed: u64,
    pub split: (f64, f64, f64),
    /// Samples drawn per replication (generator sources only).
    pub samples: usize,
    /// Single-query latency measurements per replication; 0 disables
    /// timing entirely, which makes reports bitwise reproducible.
    pub latency_queries: usize,
    /// Optional report basename; the CLI writes `<out>.csv` and `<out>.md`.
    pub out: Option<String>,
}

/// Description of the DSEL-scaling study: fixed train/test of 1000
/// samples each, a pool trained once, selectors refitted per DSEL size.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    pub generator: GeneratorSpec,
    pub dsel_sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub theta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub k: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub latency_queries: usize,
    pub out: Option<String>,
}

/// One report line: a method (optionally at a specific DSEL size) with
/// its per-replication accuracies and aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub method: Method,
    pub dsel_size: Option<usize>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Mean over replications of the per-replication median query time.
    pub mean_latency_us: Option<f64>,
    /// Hyperbox counts per replication, per pool member (FH methods).
    pub box_counts: Option<Vec<Vec<usize>>>,
}

impl MethodRow {
    /// Mean over replications of the total hyperbox count.
    pub fn mean_total_boxes(&self) -> Option<f64> {
        self.box_counts.as_ref().map(|reps| {
            let totals: Vec<f64> = reps
                .iter()
                .map(|per_member| per_member.iter().sum::<usize>() as f64)
                .collect();
            totals.iter().sum::<f64>() / totals.len() as f64
        })
    }
}

/// Experiment results plus the echoed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub header: Vec<(String, String)>,
    pub rows: Vec<MethodRow>,
}

/// Mean and population standard deviation (denominator = count).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "need at least one value");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

// ---------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------

fn parse_kv(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(FhError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(FhError::Config(format!("line {}: empty value for '{key}'", lineno + 1)));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(FhError::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(map)
}

struct ConfigMap {
    map: HashMap<String, String>,
}

impl ConfigMap {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| FhError::Config(format!("'{key}' must be a number, got '{v}'"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| FhError::Config(format!("'{key}' must be an integer, got '{v}'"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| FhError::Config(format!("'{key}' must be an integer, got '{v}'"))),
        }
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        let mut unknown: Vec<&str> = self
            .map
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .map(|k| k.as_str())
            .collect();
        unknown.sort_unstable();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(FhError::Config(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }
}

fn parse_methods(cfg: &ConfigMap, default: &str) -> Result<Vec<Method>> {
    let list = cfg.get("methods").unwrap_or(default);
    let methods: Result<Vec<Method>> = list
        .split(',')
        .map(|tok| Method::parse(tok.trim()))
        .collect();
    let methods = methods?;
    if methods.is_empty() {
        return Err(FhError::Config("methods list is empty".into()));
    }
    Ok(methods)
}

fn parse_generator(cfg: &ConfigMap) -> Result<Option<GeneratorSpec>> {
    match cfg.get("generator") {
        None => Ok(None),
        Some("banana") => Ok(Some(GeneratorSpec::Banana {
            noise: cfg.f64("noise", 0.15)?,
            flip: cfg.f64("flip", 0.0)?,
        })),
        Some("blobs") => Ok(Some(GeneratorSpec::Blobs {
            features: cfg.usize("features", 5)?,
            classes: cfg.usize("classes", 2)?,
            spread: cfg.f64("spread", 0.45)?,
            flip: cfg.f64("flip", 0.0)?,
        })),
        Some(other) => Err(FhError::Config(format!(
            "unknown generator '{other}' (expected banana or blobs)"
        ))),
    }
}

fn parse_split(cfg: &ConfigMap) -> Result<(f64, f64, f64)> {
    let Some(raw) = cfg.get("split") else {
        return Ok((0.5, 0.25, 0.25));
    };
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(FhError::Config(format!(
            "'split' needs three comma-separated fractions, got '{raw}'"
        )));
    }
    let mut f = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        f[i] = p
            .parse()
            .map_err(|_| FhError::Config(format!("'split' fraction '{p}' is not a number")))?;
    }
    Ok((f[0], f[1], f[2]))
}

const EXPERIMENT_KEYS: &[&str] = &[
    "data", "generator", "noise", "features", "classes", "spread", "flip", "samples", "methods",
    "theta", "mu", "gamma", "k", "pool", "reps", "seed", "split", "latency_queries", "out",
];

/// Parses a flat `key = value` experiment config (`#` comments allowed).
/// Unset keys fall back to the standard defaults: theta 0.27, mu 0.99,
/// gamma 1, k 7, pool 100, reps 20, seed 42, split 0.5,0.25,0.25.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let cfg = ConfigMap { map: parse_kv(text)? };
    cfg.reject_unknown(EXPERIMENT_KEYS)?;

    let generator = parse_generator(&cfg)?;
    let source = match (cfg.get("data"), generator) {
        (Some(_), Some(_)) => {
            return Err(FhError::Config("'data' and 'generator' are mutually exclusive".into()))
        }
        (Some(path), None) => DataSource::Csv(PathBuf::from(path)),
        (None, Some(spec)) => DataSource::Synth(spec),
        (None, None) => {
            return Err(FhError::Config("config needs 'data' or 'generator'".into()))
        }
    };

    let config = ExperimentConfig {
        source,
        methods: parse_methods(&cfg, "fh-des-m")?,
        theta: cfg.f64("theta", 0.27)?,
        mu: cfg.f64("mu", 0.99)?,
        gamma: cfg.f64("gamma", 1.0)?,
        k: cfg.usize("k", 7)?,
        pool_size: cfg.usize("pool", 100)?,
        replications: cfg.usize("reps", 20)?,
        seed: cfg.u64("seed", 42)?,
        split: parse_split(&cfg)?,
        samples: cfg.usize("samples", 1000)?,
        latency_queries: cfg.usize("latency_queries", 1000)?,
        out: cfg.get("out").map(str::to_string),
    };
    validate_common(config.theta, config.mu, config.gamma, config.k, config.pool_size)?;
    if config.replications == 0 {
        return Err(FhError::Config("'reps' must be at least 1".into()));
    }
    let (a, b, c) = config.split;
    if [a, b, c].iter().any(|&v| v < 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(FhError::Config(format!(
            "split fractions must be nonnegative and sum to 1, got {a},{b},{c}"
        )));
    }
    Ok(config)
}

const SCALE_KEYS: &[&str] = &[
    "generator", "noise", "features", "classes", "spread", "flip", "dsel_sizes", "methods",
    "theta", "mu", "gamma", "k", "pool", "seed", "latency_queries", "out",
];

/// Parses a scaling-study config. Requires a generator and `dsel_sizes`.
pub fn parse_scale_config(text: &str) -> Result<ScaleConfig> {
    let cfg = ConfigMap { map: parse_kv(text)? };
    cfg.reject_unknown(SCALE_KEYS)?;

    let generator = parse_generator(&cfg)?.ok_or_else(|| {
        FhError::Config("scale config needs a 'generator' (banana or blobs)".into())
    })?;
    let Some(sizes_raw) = cfg.get("dsel_sizes") else {
        return Err(FhError::Config("scale config needs 'dsel_sizes'".into()));
    };
    let sizes: Result<Vec<usize>> = sizes_raw
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| FhError::Config(format!("bad dsel size '{}'", tok.trim())))
        })
        .collect();
    let mut dsel_sizes = sizes?;
    if dsel_sizes.contains(&0) {
        return Err(FhError::Config("dsel sizes must be positive".into()));
    }
    dsel_sizes.sort_unstable();
    dsel_sizes.dedup();

    let config = ScaleConfig {
        generator,
        dsel_sizes,
        methods: parse_methods(&cfg, "fh-des-m,ola,knora-u")?,
        theta: cfg.f64("theta", 0.27)?,
        mu: cfg.f64("mu", 0.99)?,
        gamma: cfg.f64("gamma", 1.0)?,
        k: cfg.usize("k", 7)?,
        pool_size: cfg.usize("pool", 100)?,
        seed: cfg.u64("seed", 42)?,
        latency_queries: cfg.usize("latency_queries", 1000)?,
        out: cfg.get("out").map(str::to_string),
    };
    validate_common(config.theta, config.mu, config.gamma, config.k, config.pool_size)?;
    Ok(config)
}

fn validate_common(theta: f64, mu: f64, gamma: f64, k: usize, pool: usize) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FhError::Config(format!("theta must be in (0,1], got {theta}")));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(FhError::Config(format!("mu must be in [0,1], got {mu}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(FhError::Config(format!("gamma must be positive, got {gamma}")));
    }
    if k == 0 {
        return Err(FhError::Config("k must be at least 1".into()));
    }
    if pool == 0 {
        return Err(FhError::Config("pool must be at least 1".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// method fitting and measurement
// ---------------------------------------------------------------------

enum FittedMethod {
    Des(DesModel),
    Knn(KnnModel),
    Single { pool: Pool, member: usize },
}

impl FittedMethod {
    fn predict(&self, x: &[f64]) -> usize {
        match self {
            FittedMethod::Des(m) => m.predict(x),
            FittedMethod::Knn(m) => m.predict(x),
            FittedMethod::Single { pool, member } => pool.members()[*member].predict(x),
        }
    }

    fn per_member_boxes(&self) -> Option<Vec<usize>> {
        match self {
            FittedMethod::Des(m) => Some(m.box_counts()),
            _ => None,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_method(
    method: Method,
    pool: &Pool,
    dsel_x: &[f64],
    dsel_y: &[usize],
    theta: f64,
    mu: f64,
    gamma: f64,
    k: usize,
) -> Result<FittedMethod> {
    if let Some((mode, kind)) = method.fh_params(gamma) {
        let model = des::fit(pool.clone(), dsel_x, dsel_y, mode, theta, kind, mu)?;
        return Ok(FittedMethod::Des(model));
    }
    match method {
        Method::Ola => Ok(FittedMethod::Knn(KnnModel::fit(
            pool.clone(),
            dsel_x,
            dsel_y,
            k,
            DsRule::Ola,
        )?)),
        Method::KnoraU => Ok(FittedMethod::Knn(KnnModel::fit(
            pool.clone(),
            dsel_x,
            dsel_y,
            k,
            DsRule::KnoraU,
        )?)),
        Method::SingleBest => {
            let n = pool.n_features();
            let best = pool
                .members()
                .iter()
                .enumerate()
                .map(|(i, member)| {
                    let hits = dsel_y
                        .iter()
                        .enumerate()
                        .filter(|(r, &label)| member.predict(&dsel_x[r * n..(r + 1) * n]) == label)
                        .count();
                    (i, hits)
                })
                // max_by_key keeps the later max on ties, so compare
                // explicitly to keep the lower member index
                .fold((0usize, 0usize), |acc, (i, hits)| {
                    if hits > acc.1 {
                        (i, hits)
                    } else {
                        acc
                    }
                });
            Ok(FittedMethod::Single {
                pool: pool.clone(),
                member: best.0,
            })
        }
        _ => unreachable!("hyperbox methods handled above"),
    }
}

fn accuracy(fitted: &FittedMethod, test_x: &[f64], test_y: &[usize], n: usize) -> f64 {
    let hits = test_y
        .par_iter()
        .enumerate()
        .filter(|(r, &label)| fitted.predict(&test_x[r * n..(r + 1) * n]) == label)
        .count();
    hits as f64 / test_y.len() as f64
}

/// Median wall-clock time of `queries` single-query predictions, in
/// microseconds. Runs on the calling thread only. Half the query budget
/// is spent warming up first, so the model is cache-resident and the
/// core has settled before anything is timed; medians are otherwise
/// dominated by whichever measurement ran first after a parallel fit.
fn measure_latency_us(fitted: &FittedMethod, test_x: &[f64], n: usize, queries: usize) -> f64 {
    let rows = test_x.len() / n;
    let row = |i: usize| &test_x[(i % rows) * n..(i % rows) * n + n];
    for i in 0..(queries / 2).max(100) {
        black_box(fitted.predict(black_box(row(i))));
    }
    let mut samples = Vec::with_capacity(queries);
    for i in 0..queries {
        let start = Instant::now();
        black_box(fitted.predict(black_box(row(i))));
        samples.push(start.elapsed().as_nanos() as f64 / 1000.0);
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    }
}

// ---------------------------------------------------------------------
// experiment protocols
// ---------------------------------------------------------------------

struct Measurement {
    accuracy: f64,
    latency_us: Option<f64>,
    boxes: Option<Vec<usize>>,
}

#[allow(clippy::too_many_arguments)]
fn run_method_once(
    method: Method,
    pool: &Pool,
    dsel_x: &[f64],
    dsel_y: &[usize],
    test_x: &[f64],
    test_y: &[usize],
    theta: f64,
    mu: f64,
    gamma: f64,
    k: usize,
    latency_queries: usize,
) -> Result<Measurement> {
    let n = pool.n_features();
    let fitted = fit_method(method, pool, dsel_x, dsel_y, theta, mu, gamma, k)?;
    let accuracy = accuracy(&fitted, test_x, test_y, n);
    let latency_us = (latency_queries > 0)
        .then(|| measure_latency_us(&fitted, test_x, n, latency_queries));
    Ok(Measurement {
        accuracy,
        latency_us,
        boxes: fitted.per_member_boxes(),
    })
}

fn describe_source(source: &DataSource) -> String {
    match source {
        DataSource::Csv(path) => path.display().to_string(),
        DataSource::Synth(spec) => describe_generator(spec),
    }
}

fn describe_generator(spec: &GeneratorSpec) -> String {
    match spec {
        GeneratorSpec::Banana { noise, flip } => format!("banana(noise={noise}, flip={flip})"),
        GeneratorSpec::Blobs {
            features,
            classes,
            spread,
            flip,
        } => format!("blobs(features={features}, classes={classes}, spread={spread}, flip={flip})"),
    }
}

fn methods_echo(methods: &[Method]) -> String {
    methods
        .iter()
        .map(|m| m.token())
        .collect::<Vec<_>>()
        .join(",")
}

/// Runs the replicated protocol: per replication, split -> normalize on
/// train -> train pool -> fit every method on DSEL -> score on test.
/// Generator sources draw fresh samples each replication; CSV sources
/// reuse the file and vary only the split. All randomness derives from
/// `cfg.seed`, so reruns reproduce every number except wall-clock
/// latency (disable with `latency_queries = 0` for bitwise-stable
/// reports).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let csv_data = match &cfg.source {
        DataSource::Csv(path) => Some(load_csv(path)?),
        DataSource::Synth(_) => None,
    };

    let mut acc: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    let mut lat: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    let mut boxes: Vec<Vec<Vec<usize>>> = vec![Vec::new(); cfg.methods.len()];

    for r in 0..cfg.replications {
        let rep_seed = derive_seed(cfg.seed, r as u64);
        let generated;
        let ds: &Dataset = match &cfg.source {
            DataSource::Csv(_) => csv_data.as_ref().unwrap(),
            DataSource::Synth(spec) => {
                generated = spec.generate(cfg.samples, derive_seed(rep_seed, 0))?;
                &generated
            }
        };
        let (train, dsel, test) = stratified_split(ds, cfg.split, derive_seed(rep_seed, 1))?;
        if dsel.is_empty() || test.is_empty() {
            return Err(FhError::Config(
                "split leaves an empty selection or test part".into(),
            ));
        }
        let normed = normalize(ds, &train);
        let (tx, ty) = normed.subset(&train);
        let (dx, dy) = normed.subset(&dsel);
        let (sx, sy) = normed.subset(&test);
        let pool_params = PoolParams {
            members: cfg.pool_size,
            ..PoolParams::default()
        };
        let pool = train_pool(&tx, ds.n_features, &ty, &pool_params, derive_seed(rep_seed, 2))?;

        for (mi, &method) in cfg.methods.iter().enumerate() {
            let m = run_method_once(
                method,
                &pool,
                &dx,
                &dy,
                &sx,
                &sy,
                cfg.theta,
                cfg.mu,
                cfg.gamma,
                cfg.k,
                cfg.latency_queries,
            )?;
            acc[mi].push(m.accuracy);
            if let Some(l) = m.latency_us {
                lat[mi].push(l);
            }
            if let Some(b) = m.boxes {
                boxes[mi].push(b);
            }
        }
    }

    let rows = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let (mean, std) = mean_std(&acc[mi]);
            MethodRow {
                method,
                dsel_size: None,
                accuracies: std::mem::take(&mut acc[mi]),
                mean,
                std,
                mean_latency_us: (!lat[mi].is_empty())
                    .then(|| lat[mi].iter().sum::<f64>() / lat[mi].len() as f64),
                box_counts: (!boxes[mi].is_empty()).then(|| std::mem::take(&mut boxes[mi])),
            }
        })
        .collect();

    let header = vec![
        ("dataset".into(), describe_source(&cfg.source)),
        ("methods".into(), methods_echo(&cfg.methods)),
        ("theta".into(), cfg.theta.to_string()),
        ("mu".into(), cfg.mu.to_string()),
        ("gamma".into(), cfg.gamma.to_string()),
        ("k".into(), cfg.k.to_string()),
        ("pool".into(), cfg.pool_size.to_string()),
        ("reps".into(), cfg.replications.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        (
            "split".into(),
            format!("{},{},{}", cfg.split.0, cfg.split.1, cfg.split.2),
        ),
        ("samples".into(), cfg.samples.to_string()),
        ("latency_queries".into(), cfg.latency_queries.to_string()),
    ];
    Ok(RunReport { header, rows })
}

/// Runs the DSEL-scaling study. One generator stream provides 1000
/// training samples, then 1000 test samples, then the selection set,
/// which grows incrementally through `dsel_sizes` (so larger sizes are
/// supersets of smaller ones and never overlap train/test). The pool is
/// trained once; every method is refitted and measured at each size.
pub fn scalability_bench(cfg: &ScaleConfig) -> Result<RunReport> {
    if cfg.dsel_sizes.is_empty() {
        return Err(FhError::Config("dsel_sizes must not be empty".into()));
    }
    if cfg.dsel_sizes.contains(&0) {
        return Err(FhError::Config("dsel sizes must be positive".into()));
    }

    let mut stream = cfg.generator.stream(derive_seed(cfg.seed, 0))?;
    let n = cfg.generator.n_features();
    let (train_raw, train_y) = stream.take(1000);
    let (test_raw, test_y) = stream.take(1000);

    let train_ds = Dataset::new("scale-train".into(), train_raw, n, train_y);
    let all_rows: Vec<usize> = (0..train_ds.len()).collect();
    let normed_train = normalize(&train_ds, &all_rows);
    let norm = normed_train.norm.clone().expect("normalization just fitted");
    let (tx, ty) = (normed_train.x, normed_train.y);

    let mut sx = test_raw;
    for row in sx.chunks_mut(n) {
        norm.apply_row(row);
    }

    let pool_params = PoolParams {
        members: cfg.pool_size,
        ..PoolParams::default()
    };
    let pool = train_pool(&tx, n, &ty, &pool_params, derive_seed(cfg.seed, 2))?;

    let mut dx: Vec<f64> = Vec::new();
    let mut dy: Vec<usize> = Vec::new();
    let mut rows = Vec::new();
    for &size in &cfg.dsel_sizes {
        let (mut add_x, add_y) = stream.take(size - dy.len());
        for row in add_x.chunks_mut(n) {
            norm.apply_row(row);
        }
        dx.extend_from_slice(&add_x);
        dy.extend_from_slice(&add_y);

        for &method in &cfg.methods {
            let m = run_method_once(
                method,
                &pool,
                &dx,
                &dy,
                &sx,
                &test_y,
                cfg.theta,
                cfg.mu,
                cfg.gamma,
                cfg.k,
                cfg.latency_queries,
            )?;
            rows.push(MethodRow {
                method,
                dsel_size: Some(size),
                accuracies: vec![m.accuracy],
                mean: m.accuracy,
                std: 0.0,
                mean_latency_us: m.latency_us,
                box_counts: m.boxes.map(|b| vec![b]),
            });
        }
    }

    let header = vec![
        ("dataset".into(), describe_generator(&cfg.generator)),
        ("methods".into(), methods_echo(&cfg.methods)),
        (
            "dsel_sizes".into(),
            cfg.dsel_sizes
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("theta".into(), cfg.theta.to_string()),
        ("mu".into(), cfg.mu.to_string()),
        ("gamma".into(), cfg.gamma.to_string()),
        ("k".into(), cfg.k.to_string()),
        ("pool".into(), cfg.pool_size.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("latency_queries".into(), cfg.latency_queries.to_string()),
    ];
    Ok(RunReport { header, rows })
}

// ---------------------------------------------------------------------
// report emission
// ---------------------------------------------------------------------

/// Output flavor for `emit_report`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn row_cells(row: &MethodRow, with_size: bool) -> Vec<String> {
    let mut cells = vec![row.method.token().to_string()];
    if with_size {
        cells.push(row.dsel_size.map(|s| s.to_string()).unwrap_or_default());
    }
    cells.push(format!("{:.6}", row.mean));
    cells.push(format!("{:.6}", row.std));
    cells.push(
        row.mean_latency_us
            .map(|l| format!("{l:.3}"))
            .unwrap_or_default(),
    );
    cells.push(
        row.mean_total_boxes()
            .map(|b| format!("{b:.1}"))
            .unwrap_or_default(),
    );
    cells
}

/// Renders a report. Both formats carry the echoed config and identical
/// numbers; accuracy statistics use the population standard deviation
/// (denominator = number of replications).
pub fn emit_report(report: &RunReport, format: ReportFormat) -> String {
    let with_size = report.rows.iter().any(|r| r.dsel_size.is_some());
    let mut columns = vec!["method"];
    if with_size {
        columns.push("dsel_size");
    }
    columns.extend_from_slice(&["mean", "std", "mean_latency_us", "boxes"]);

    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| row_cells(r, with_size))
        .collect();

    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            for (k, v) in &report.header {
                out.push_str(&format!("# {k} = {v}\n"));
            }
            out.push_str("# std = population (denominator = replications)\n");
            out.push_str(&columns.join(","));
            out.push('\n');
            for cells in &body {
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Markdown => {
            let mut widths: Vec<usize> = columns.iter().map(|c| c.len()).collect();
            for cells in &body {
                for (i, c) in cells.iter().enumerate() {
                    widths[i] = widths[i].max(c.len());
                }
            }
            let fmt_row = |cells: &[String]| {
                let padded: Vec<String> = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{c:<width$}", width = widths[i]))
                    .collect();
                format!("| {} |\n", padded.join(" | "))
            };
            let mut out = String::new();
            for (k, v) in &report.header {
                out.push_str(&format!("{k} = {v}  \n"));
            }
            out.push_str("std = population (denominator = replications)  \n\n");
            let header_cells: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
            out.push_str(&fmt_row(&header_cells));
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
            for cells in &body {
                out.push_str(&fmt_row(cells));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_are_filled() {
        let cfg = parse_experiment_config("generator = banana\n").unwrap();
        assert_eq!(cfg.theta, 0.27);
        assert_eq!(cfg.mu, 0.99);
        assert_eq!(cfg.gamma, 1.0);
        assert_eq!(cfg.k, 7);
        assert_eq!(cfg.pool_size, 100);
        assert_eq!(cfg.replications, 20);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.split, (0.5, 0.25, 0.25));
        assert_eq!(cfg.samples, 1000);
        assert_eq!(cfg.latency_queries, 1000);
        assert_eq!(cfg.methods, vec![Method::FhDesM]);
        assert_eq!(cfg.source, DataSource::Synth(GeneratorSpec::Banana { noise: 0.15, flip: 0.0 }));
    }

    #[test]
    fn config_parses_fields_and_comments() {
        let text = "\
# an experiment
generator = blobs
features = 3
classes = 2
spread = 0.3
methods = fh-des-m, knora-u , single-best
theta = 0.2
reps = 5
seed = 7
split = 0.6, 0.2, 0.2
latency_queries = 0
";
        let cfg = parse_experiment_config(text).unwrap();
        assert_eq!(
            cfg.source,
            DataSource::Synth(GeneratorSpec::Blobs {
                features: 3,
                classes: 2,
                spread: 0.3,
                flip: 0.0
            })
        );
        assert_eq!(
            cfg.methods,
            vec![Method::FhDesM, Method::KnoraU, Method::SingleBest]
        );
        assert_eq!(cfg.theta, 0.2);
        assert_eq!(cfg.replications, 5);
        assert_eq!(cfg.split, (0.6, 0.2, 0.2));
        assert_eq!(cfg.latency_queries, 0);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(parse_experiment_config("generator = banana\nbogus = 1\n").is_err());
        assert!(parse_experiment_config("generator = banana\ntheta = 1.5\n").is_err());
        assert!(parse_experiment_config("generator = banana\nmethods = nope\n").is_err());
        assert!(parse_experiment_config("generator = banana\nsplit = 0.5,0.5,0.5\n").is_err());
        assert!(parse_experiment_config("data = a.csv\ngenerator = banana\n").is_err());
        assert!(parse_experiment_config("theta = 0.2\n").is_err());
        assert!(parse_experiment_config("generator = banana\ngenerator = blobs\n").is_err());
        assert!(parse_experiment_config("generator = banana\nreps = 0\n").is_err());
    }

    #[test]
    fn scale_config_requires_generator_and_sizes() {
        let cfg = parse_scale_config(
            "generator = blobs\ndsel_sizes = 1000, 100, 1000\nlatency_queries = 0\n",
        )
        .unwrap();
        assert_eq!(cfg.dsel_sizes, vec![100, 1000]); // sorted, deduped
        assert_eq!(
            cfg.methods,
            vec![Method::FhDesM, Method::Ola, Method::KnoraU]
        );
        assert!(parse_scale_config("dsel_sizes = 100\n").is_err());
        assert!(parse_scale_config("generator = blobs\n").is_err());
        assert!(parse_scale_config("generator = blobs\ndsel_sizes = 0,10\n").is_err());
        assert!(parse_scale_config("generator = blobs\ndsel_sizes = 10\nreps = 3\n").is_err());
    }

    #[test]
    fn mean_std_uses_population_denominator() {
        let (mean, std) = mean_std(&[0.8, 0.9]);
        assert!((mean - 0.85).abs() < 1e-12);
        assert!((std - 0.05).abs() < 1e-12);
    }

    #[test]
    fn emit_matches_hand_computed_aggregates() {
        let (mean, std) = mean_std(&[0.8, 0.9]);
        let report = RunReport {
            header: vec![("dataset".into(), "toy".into())],
            rows: vec![MethodRow {
                method: Method::FhDesM,
                dsel_size: None,
                accuracies: vec![0.8, 0.9],
                mean,
                std,
                mean_latency_us: None,
                box_counts: Some(vec![vec![3, 2], vec![4, 1]]),
            }],
        };
        let csv = emit_report(&report, ReportFormat::Csv);
        assert!(csv.contains("# dataset = toy"));
        assert!(csv.contains("method,mean,std,mean_latency_us,boxes"));
        assert!(csv.contains("fh-des-m,0.850000,0.050000,,5.0"));

        let md = emit_report(&report, ReportFormat::Markdown);
        for number in ["0.850000", "0.050000", "5.0"] {
            assert!(md.contains(number), "markdown missing {number}:\n{md}");
        }
    }

    #[test]
    fn emit_empty_report_is_header_only() {
        let report = RunReport {
            header: vec![("dataset".into(), "toy".into())],
            rows: vec![],
        };
        let csv = emit_report(&report, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.last().unwrap(), &"method,mean,std,mean_latency_us,boxes");
    }

    fn small_experiment() -> ExperimentConfig {
        parse_experiment_config(
            "\
generator = banana
noise = 0.12
samples = 160
methods = fh-des-m, fh-gabrys-c, ola, knora-u, single-best
pool = 5
reps = 2
k = 3
seed = 9
latency_queries = 0
",
        )
        .unwrap()
    }

    #[test]
    fn run_experiment_produces_complete_rows() {
        let report = run_experiment(&small_experiment()).unwrap();
        assert_eq!(report.rows.len(), 5);
        for row in &report.rows {
            assert_eq!(row.accuracies.len(), 2);
            assert!(row.accuracies.iter().all(|a| (0.0..=1.0).contains(a)));
            assert!(row.mean_latency_us.is_none());
            let (mean, std) = mean_std(&row.accuracies);
            assert_eq!(mean, row.mean);
            assert_eq!(std, row.std);
        }
        // hyperbox methods report box counts, others do not
        assert!(report.rows[0].box_counts.is_some());
        assert!(report.rows[1].box_counts.is_some());
        assert!(report.rows[2].box_counts.is_none());
        let counts = report.rows[0].box_counts.as_ref().unwrap();
        assert_eq!(counts.len(), 2);
        assert_eq!(counts[0].len(), 5);
    }

    #[test]
    fn run_experiment_is_reproducible() {
        let cfg = small_experiment();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            emit_report(&a, ReportFormat::Csv),
            emit_report(&b, ReportFormat::Csv)
        );
    }

    #[test]
    fn latency_is_measured_when_requested() {
        let mut cfg = small_experiment();
        cfg.replications = 1;
        cfg.latency_queries = 50;
        cfg.methods = vec![Method::FhDesM];
        let report = run_experiment(&cfg).unwrap();
        let lat = report.rows[0].mean_latency_us.unwrap();
        assert!(lat > 0.0 && lat.is_finite());
    }

    #[test]
    fn scalability_grows_dsel_incrementally() {
        let cfg = parse_scale_config(
            "\
generator = blobs
features = 2
classes = 2
spread = 0.35
dsel_sizes = 60, 240
methods = fh-des-m, knora-u
pool = 4
k = 3
seed = 4
latency_queries = 0
",
        )
        .unwrap();
        let report = scalability_bench(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.rows[0].dsel_size, Some(60));
        assert_eq!(report.rows[2].dsel_size, Some(240));
        // FH rows carry box counts; the larger DSEL cannot shrink them
        let small = report.rows[0].mean_total_boxes().unwrap();
        let large = report.rows[2].mean_total_boxes().unwrap();
        assert!(large >= small);
        let csv = emit_report(&report, ReportFormat::Csv);
        assert!(csv.contains("method,dsel_size,mean,std,mean_latency_us,boxes"));

        let again = scalability_bench(&cfg).unwrap();
        assert_eq!(report, again);
    }
}
