//! Command-line front end: `fit`, `predict`, `bench`, `scale`.
//!
//! Exit codes are fixed for scripting: 0 success, 1 usage error (bad
//! flags, bad parameter values, malformed configs), 2 data error
//! (unreadable or malformed data/model files).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{
    emit_report, parse_experiment_config, parse_scale_config, run_experiment, scalability_bench,
    ReportFormat, RunReport,
};
use crate::data::{load_csv, load_features, normalize, stratified_split};
use crate::des::{self, DesMode};
use crate::error::{FhError, Result};
use crate::hyperbox::MembershipKind;
use crate::model_io::{load_model, save_model};
use crate::pool::{train_pool, PoolParams};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Boxes over correctly classified selection samples (FH-DES-C).
    #[value(name = "C", alias = "c")]
    C,
    /// Boxes over misclassified selection samples (FH-DES-M).
    #[value(name = "M", alias = "m")]
    M,
}

impl From<ModeArg> for DesMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::C => DesMode::CompetenceBoxes,
            ModeArg::M => DesMode::IncompetenceBoxes,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    /// Ramp membership (min over dimensions), controlled by --gamma.
    Gabrys,
    /// Smooth-border membership (squared face distances).
    Sbm,
}

#[derive(Debug, Parser)]
#[command(
    name = "fhdes",
    version,
    about = "Dynamic ensemble selection with fuzzy-hyperbox competence models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Train a selector on a labeled CSV and save it.
    ///
    /// The file is split 2:1 into pool-training data and the dynamic
    /// selection set (stratified by class); features are min-max
    /// normalized with parameters fitted on the training part and stored
    /// in the model.
    Fit {
        /// Labeled CSV (header row, features..., label in the last column).
        #[arg(long)]
        data: PathBuf,
        /// Which samples the hyperboxes cover: C = hits, M = misses.
        #[arg(long, default_value = "M")]
        mode: ModeArg,
        /// Maximum hyperbox extent per dimension, in (0,1].
        #[arg(long, default_value_t = 0.27)]
        theta: f64,
        /// Competence threshold fraction, in [0,1].
        #[arg(long, default_value_t = 0.99)]
        mu: f64,
        /// Membership function.
        #[arg(long, default_value = "sbm")]
        kind: KindArg,
        /// Ramp steepness for --kind gabrys.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Number of bagged perceptrons.
        #[arg(long, default_value_t = 100)]
        pool: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a CSV with a saved model (one label id per output line).
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with the model's feature columns (a trailing label column
        /// is tolerated and ignored).
        #[arg(long)]
        data: PathBuf,
        /// Output file; one predicted label id per row.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a replicated accuracy/latency experiment from a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the DSEL-size scaling study from a config file.
    Scale {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses argv and runs a command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Caps the worker-thread pool when FHDES_THREADS is set.
fn init_threads() {
    if let Ok(v) = std::env::var("FHDES_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn exit_code(e: &FhError) -> i32 {
    match e {
        FhError::InvalidParameter(_) | FhError::Config(_) => 1,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Fit {
            data,
            mode,
            theta,
            mu,
            kind,
            gamma,
            pool,
            seed,
            out,
        } => fit_cmd(&data, mode, theta, mu, kind, gamma, pool, seed, &out),
        Cmd::Predict { model, data, out } => predict_cmd(&model, &data, &out),
        Cmd::Bench { config } => {
            let text = fs::read_to_string(&config)?;
            let cfg = parse_experiment_config(&text)?;
            let report = run_experiment(&cfg)?;
            emit(&report, cfg.out.as_deref())
        }
        Cmd::Scale { config } => {
            let text = fs::read_to_string(&config)?;
            let cfg = parse_scale_config(&text)?;
            let report = scalability_bench(&cfg)?;
            emit(&report, cfg.out.as_deref())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_cmd(
    data: &Path,
    mode: ModeArg,
    theta: f64,
    mu: f64,
    kind: KindArg,
    gamma: f64,
    pool_size: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    // fail fast on bad numeric flags before touching the data
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FhError::InvalidParameter(format!(
            "--theta must be in (0,1], got {theta}"
        )));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(FhError::InvalidParameter(format!(
            "--mu must be in [0,1], got {mu}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(FhError::InvalidParameter(format!(
            "--gamma must be positive, got {gamma}"
        )));
    }
    if pool_size == 0 {
        return Err(FhError::InvalidParameter("--pool must be at least 1".into()));
    }

    let membership = match kind {
        KindArg::Gabrys => MembershipKind::Gabrys { gamma },
        KindArg::Sbm => MembershipKind::Sbm,
    };

    let ds = load_csv(data)?;
    let (train, dsel, _) = stratified_split(&ds, (2.0 / 3.0, 1.0 / 3.0, 0.0), seed)?;
    let normed = normalize(&ds, &train);
    let norm = normed.norm.clone().expect("normalization just fitted");
    let (tx, ty) = normed.subset(&train);
    let (dx, dy) = normed.subset(&dsel);

    let params = PoolParams {
        members: pool_size,
        ..PoolParams::default()
    };
    let pool = train_pool(&tx, ds.n_features, &ty, &params, seed)?;
    let model = des::fit(pool, &dx, &dy, mode.into(), theta, membership, mu)?;
    save_model(out, &model, Some(&norm))?;

    let total_boxes: usize = model.box_counts().iter().sum();
    println!(
        "trained {} members on {} samples ({} selection rows, {} hyperboxes); model written to {}",
        pool_size,
        train.len(),
        dsel.len(),
        total_boxes,
        out.display()
    );
    Ok(())
}

fn predict_cmd(model_path: &Path, data: &Path, out: &Path) -> Result<()> {
    let saved = load_model(model_path)?;
    let n = saved.model.n_features();
    let mut x = load_features(data, n)?;
    if let Some(norm) = &saved.norm {
        for row in x.chunks_mut(n) {
            norm.apply_row(row);
        }
    }
    let mut lines = String::new();
    for row in x.chunks(n) {
        lines.push_str(&saved.model.predict(row).to_string());
        lines.push('\n');
    }
    fs::write(out, &lines)?;
    println!("wrote {} predictions to {}", x.len() / n, out.display());
    Ok(())
}

fn emit(report: &RunReport, out: Option<&str>) -> Result<()> {
    let md = emit_report(report, ReportFormat::Markdown);
    print!("{md}");
    if let Some(base) = out {
        let csv = emit_report(report, ReportFormat::Csv);
        fs::write(format!("{base}.csv"), csv)?;
        fs::write(format!("{base}.md"), md)?;
        println!("report written to {base}.csv and {base}.md");
    }
    Ok(())
}
