use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use relikit_calibration::{load_calibrator, save_calibrator, FeatureMode};
use relikit_core::{parallel, ConfidenceScore, DatasetManifest};
use relikit_metrics::ReliabilityReport;
use relikit_synth::{
    build_counterexample, generate_benchmark, ladder, CounterexampleSpec, SynthConfig,
};

use crate::config::{Method, Metric, OutputFormat, RunConfig};
use crate::error::{CliError, CliResult, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK};
use crate::eval::evaluate;
use crate::fit::fit_calibrator;

#[derive(Debug, Parser)]
#[command(
    name = "relikit",
    version,
    about = "Reliability evaluation and calibration for semantic segmentation"
)]
pub struct Cli {
    /// Worker threads for per-image work.
    #[arg(long, global = true, env = parallel::WORKERS_ENV)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every tensor referenced by a manifest.
    Validate(ValidateArgs),
    /// Fit a calibrator on the calibration split.
    Fit(FitArgs),
    /// Evaluate the test split and write a reliability report.
    Eval(EvalArgs),
    /// Generate a synthetic benchmark.
    Synth(SynthArgs),
    /// Build and check the per-subset vs union calibration counterexample.
    Theorem(TheoremArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Number of clusters.
    #[arg(long, short = 'k')]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub feature_mode: Option<FeatureMode>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Calibration domains to fit on (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub domains: Option<Vec<String>>,
    /// Pixels sampled per calibration image.
    #[arg(long)]
    pub pixels: Option<usize>,
    /// Calibrator artifact to write.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Calibrator artifact applied before extracting confidences.
    #[arg(long, conflicts_with = "no_calibrator")]
    pub calibrator: Option<PathBuf>,
    /// Ignore any calibrator named in the config.
    #[arg(long)]
    pub no_calibrator: bool,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub confidence: Option<ConfidenceScore>,
    #[arg(long)]
    pub pixels: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<Metric>>,
    #[arg(long)]
    pub in_domain: Option<String>,
    #[arg(long)]
    pub format: Option<OutputFormat>,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// Per-bin reliability table (CSV).
    #[arg(long)]
    pub reliability: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace the domains with the default ladder at this shift strength.
    #[arg(long)]
    pub shift: Option<f64>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub calibration_images: Option<usize>,
    #[arg(long)]
    pub test_images: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    /// JSON file with `bins`, `residual` and `per_bin`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub residual: Option<f64>,
    #[arg(long)]
    pub per_bin: Option<usize>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))
}

fn base_config(path: Option<&Path>) -> CliResult<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn load_manifest(path: &Path) -> CliResult<DatasetManifest> {
    Ok(DatasetManifest::load(path)?)
}

pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let manifest = DatasetManifest::parse(&args.manifest)?;
    let problems = manifest.validate();
    if problems.is_empty() {
        write_out(
            out,
            &format!(
                "ok: {} entries, {} classes\n",
                manifest.entries.len(),
                manifest.classes
            ),
        )?;
        return Ok(EXIT_OK);
    }
    for p in &problems {
        write_out(out, &format!("{p}\n"))?;
    }
    write_out(out, &format!("{} problem(s) found\n", problems.len()))?;
    Ok(EXIT_DATA)
}

pub fn fit_config(args: &FitArgs) -> CliResult<RunConfig> {
    let mut c = base_config(args.config.as_deref())?;
    if let Some(m) = &args.manifest {
        c.manifest = Some(m.clone());
    }
    if let Some(m) = args.method {
        c.calibration.method = Some(m);
    }
    if let Some(k) = args.clusters {
        c.calibration.clusters = k;
    }
    if let Some(s) = args.seed {
        c.calibration.seed = s;
    }
    if let Some(f) = args.feature_mode {
        c.calibration.lts.feature_mode = f;
    }
    if let Some(e) = args.epochs {
        c.calibration.lts.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        c.calibration.lts.learning_rate = lr;
    }
    if let Some(d) = &args.domains {
        c.calibration.domains = d.clone();
    }
    if let Some(p) = args.pixels {
        c.subsample.pixels = p;
    }
    if let Some(o) = &args.output {
        c.calibration.artifact = Some(o.clone());
    }
    Ok(c)
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> CliResult<i32> {
    let config = fit_config(args)?;
    let artifact = config.calibration.artifact.clone().ok_or_else(|| {
        CliError::usage("no artifact path given (set calibration.artifact or pass --output)")
    })?;
    let manifest = load_manifest(config.manifest_path()?)?;
    let (calibrator, summary) = fit_calibrator(&manifest, &config)?;
    save_calibrator(&calibrator, &artifact)?;
    write_out(out, &summary)?;
    write_out(out, &format!("wrote {}\n", artifact.display()))?;
    Ok(EXIT_OK)
}

pub fn eval_config(args: &EvalArgs) -> CliResult<RunConfig> {
    let mut c = base_config(args.config.as_deref())?;
    if let Some(m) = &args.manifest {
        c.manifest = Some(m.clone());
    }
    if let Some(p) = &args.calibrator {
        c.calibration.artifact = Some(p.clone());
    }
    if args.no_calibrator {
        c.calibration.artifact = None;
    }
    if let Some(b) = args.bins {
        c.bins = b;
    }
    if let Some(s) = args.confidence {
        c.confidence = s;
    }
    if let Some(p) = args.pixels {
        c.subsample.pixels = p;
    }
    if let Some(s) = args.seed {
        c.subsample.seed = s;
    }
    if let Some(m) = &args.metrics {
        c.metrics = m.clone();
    }
    if let Some(d) = &args.in_domain {
        c.ood.in_domain = Some(d.clone());
    }
    if let Some(f) = args.format {
        c.output.format = f;
    }
    if let Some(o) = &args.output {
        c.output.path = Some(o.clone());
    }
    if let Some(r) = &args.reliability {
        c.output.reliability = Some(r.clone());
    }
    Ok(c)
}

pub fn render_report(report: &ReliabilityReport, format: OutputFormat) -> CliResult<String> {
    Ok(match format {
        OutputFormat::Json => report.to_json()?,
        OutputFormat::Csv => report.to_csv(),
    })
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<i32> {
    let config = eval_config(args)?;
    let manifest = load_manifest(config.manifest_path()?)?;
    let calibrator = config
        .calibration
        .artifact
        .as_deref()
        .map(load_calibrator)
        .transpose()?;
    let report = evaluate(&manifest, calibrator.as_ref(), &config)?;
    let text = render_report(&report, config.output.format)?;
    match &config.output.path {
        Some(p) => {
            std::fs::write(p, &text).map_err(|e| io_err(p, e))?;
            write_out(out, &format!("wrote {}\n", p.display()))?;
        }
        None => write_out(out, &text)?,
    }
    if let Some(p) = &config.output.reliability {
        std::fs::write(p, report.reliability_csv()).map_err(|e| io_err(p, e))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<i32> {
    let mut config = match &args.config {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(s) = args.shift {
        if !(s.is_finite() && s >= 0.0) {
            return Err(CliError::usage("shift must be a non-negative number"));
        }
        config.domains = ladder(s);
    }
    if let Some(k) = args.classes {
        config.classes = k;
    }
    if let Some(h) = args.height {
        config.height = h;
    }
    if let Some(w) = args.width {
        config.width = w;
    }
    if let Some(n) = args.calibration_images {
        config.calibration_images = n;
    }
    if let Some(n) = args.test_images {
        config.test_images = n;
    }
    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let manifest = generate_benchmark(&config, &args.out)?;
    for d in &config.domains {
        write_out(
            out,
            &format!(
                "{}: tau {} sigma {} ({} calibration, {} test images)\n",
                d.tag,
                d.true_temperature,
                d.logit_noise,
                config.calibration_images,
                config.test_images
            ),
        )?;
    }
    write_out(
        out,
        &format!(
            "wrote {} images and {}\n",
            manifest.entries.len(),
            args.out.join(relikit_synth::MANIFEST_FILE).display()
        ),
    )?;
    Ok(EXIT_OK)
}

pub fn theorem_spec(args: &TheoremArgs) -> CliResult<CounterexampleSpec> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("invalid spec {}: {e}", p.display())))?
        }
        None => CounterexampleSpec::default(),
    };
    if let Some(m) = args.bins {
        spec.bins = m;
    }
    if let Some(r) = args.residual {
        spec.residual = r;
    }
    if let Some(c) = args.per_bin {
        spec.per_bin = c;
    }
    Ok(spec)
}

/// Rounds away float noise in printed values.
fn show(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub fn cmd_theorem(args: &TheoremArgs, out: &mut dyn Write) -> CliResult<i32> {
    let spec = theorem_spec(args)?;
    let check = build_counterexample(&spec)?.check()?;
    let text = format!(
        "bins {} residual {} per_bin {}\n\
         model   ECE(B)    ECE(B')   ECE(B+B')\n\
         f       {}  {}  {}\n\
         oracle  {}  {}  {}\n\
         {}\n",
        spec.bins,
        spec.residual,
        spec.per_bin,
        show(check.f_b),
        show(check.f_b_prime),
        show(check.f_union),
        show(check.oracle_b),
        show(check.oracle_b_prime),
        show(check.oracle_union),
        if check.holds { "PASS" } else { "FAIL" }
    );
    write_out(out, &text)?;
    Ok(if check.holds { EXIT_OK } else { EXIT_NUMERICAL })
}
