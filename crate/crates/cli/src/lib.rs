//! Command-line front end: `detect`, `study` and `models`.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use discloc::detector::Monitor;
use discloc::harness::{convergence_study, error_rate, truth_labels, ExperimentSpec};
use discloc::models::{by_name, catalog};
use discloc::{detect, Classifier, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "discloc", about = "Locate discontinuities in black-box model outputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One detection run: writes trace.csv, classifier.txt and points.csv.
    Detect(RunArgs),
    /// Repeated-seed convergence study: writes study.csv and summary.csv.
    Study(RunArgs),
    /// List the available models.
    Models,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            config::from_text(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.detector.seed = seed;
    }
    spec.validate()?;
    by_name(&spec.model)?;
    Ok(spec)
}

/// Write every file or none of them.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(Failure::Runtime(format!("{}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(())
}

fn remove_outputs(dir: &Path, names: &[&str]) {
    for n in names {
        let _ = fs::remove_file(dir.join(n));
    }
}

const DETECT_FILES: [&str; 3] = ["trace.csv", "classifier.txt", "points.csv"];
const STUDY_FILES: [&str; 2] = ["study.csv", "summary.csv"];

fn run_detect(args: &RunArgs) -> Result<(), Failure> {
    let spec = load(args)?;
    let bench = by_name(&spec.model)?;
    let test = spec.test_points()?;
    let labels = truth_labels(bench.truth.as_ref(), &test);
    let score = |clf: &Classifier| error_rate(clf, &test, &labels);
    let monitor = Monitor { score: &score, target: spec.targets.iter().copied().reduce(f64::min) };
    let det = detect(&bench.adapter, &spec.detector, Some(&monitor))?;
    write_all(
        &args.out,
        &[
            (DETECT_FILES[0], det.trace.to_csv()),
            (DETECT_FILES[1], det.classifier.to_text()),
            (DETECT_FILES[2], det.points_csv()),
        ],
    )?;
    if !args.quiet {
        let last = det.trace.last();
        println!(
            "{}: stop {:?} after {} iterations, {} evals ({} in initialization), misclassification {}",
            spec.model,
            det.trace.stop,
            last.iter,
            last.evals,
            det.trace.init_evals,
            last.misclass.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn run_study(args: &RunArgs) -> Result<(), Failure> {
    let spec = load(args)?;
    let report = convergence_study(&spec)?;
    for (run, msg) in &report.failures {
        eprintln!("run {run} failed: {msg}");
    }
    if report.runs.is_empty() {
        return Err(Failure::Runtime(format!("all {} runs failed", spec.n_runs)));
    }
    write_all(&args.out, &[(STUDY_FILES[0], report.study_csv()), (STUDY_FILES[1], report.summary_csv())])?;
    if !args.quiet {
        let m = report.final_misclass().expect("at least one run");
        let e = report.final_evals().expect("at least one run");
        println!(
            "{}: {} runs, final misclassification {:.5} ± {:.5}, evals {:.1} ± {:.1}",
            spec.model,
            report.runs.len(),
            m.mean,
            m.std,
            e.mean,
            e.std
        );
        for (k, t) in spec.targets.iter().enumerate() {
            match report.evals_to_target(k) {
                (Some(s), hits) => println!("  evals to {t}: {:.1} ± {:.1} ({hits}/{} runs)", s.mean, s.std, report.runs.len()),
                (None, _) => println!("  evals to {t}: not reached"),
            }
        }
    }
    Ok(())
}

fn list_models() {
    for (name, dim, domain) in catalog() {
        let bounds: Vec<String> = domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(lo, hi)| format!("[{lo}, {hi}]"))
            .collect();
        let shown = if bounds.len() > 3 { format!("{}^{}", bounds[0], bounds.len()) } else { bounds.join(" x ") };
        println!("{name:<10} d={dim:<3} {shown}");
    }
}

/// Parse `argv` (program name first) and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Detect(a) => run_detect(a).inspect_err(|_| remove_outputs(&a.out, &DETECT_FILES)),
        Command::Study(a) => run_study(a).inspect_err(|_| remove_outputs(&a.out, &STUDY_FILES)),
        Command::Models => {
            list_models();
            Ok(())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            EXIT_RUNTIME
        }
    }
}
