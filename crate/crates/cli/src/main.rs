//! `psa`: generate, evaluate, benchmark and plot privacy-set designs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psa_core::criteria::{nearest_distance_stats, uniform_probes, vertex_probes};
use psa_core::io::{read_design_csv, read_trace_csv, write_design_csv, write_trace_csv, Summary};
use psa_core::plot::{box_svg, design_svg, trace_svg, BoxEntry};
use psa_core::psa::RunTrace;
use psa_core::{psa_bench, psa_run, Design, Error, ExperimentConfig, GridPoint, GridSpace, PrivacySpec};

#[derive(Parser)]
#[command(name = "psa", version, about = "Constrained space-filling designs via privacy sets")]
struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config time budget (seconds).
    #[arg(long, global = true)]
    time_budget: Option<f64>,
    /// Overrides the config restart count.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Suppresses progress and warnings on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the search and write design.csv, trace.csv and summary.txt.
    Generate { config: PathBuf },
    /// Check a design's permissibility and print criterion values.
    Evaluate {
        design: PathBuf,
        config: PathBuf,
        /// Extra criteria, e.g. `ard:J=1` (repeatable).
        #[arg(long = "criterion")]
        criteria: Vec<String>,
    },
    /// Restart the search on convergence until the time budget is spent.
    Bench {
        config: PathBuf,
        /// Independent repetitions, written as trace-1.csv, trace-2.csv, ...
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Emit SVG figures.
    Plot {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Subcommand)]
enum PlotKind {
    /// Scatter plot with marginal histograms (pairwise panels for d >= 3).
    Design {
        design: PathBuf,
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Best-value traces with restart markers.
    Trace {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Nearest-distance box plots with the config criterion beneath.
    Box {
        config: PathBuf,
        #[arg(required = true)]
        designs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

struct Failure {
    kind: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, code: u8, message: impl Into<String>) -> Self {
        Self {
            kind,
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("io", 2, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::MaximalityViolation { .. } | Error::AvailabilityExhausted { .. } | Error::NoFeasibleDesign { .. } => {
                ("maximality", 3)
            }
            Error::RejectionBudgetExceeded { .. } => ("rejection", 4),
            Error::Parse { .. } => ("parse", 2),
            Error::Domain(_) | Error::DegenerateProjection { .. } => ("domain", 2),
            _ => ("config", 2),
        };
        Self::new(kind, code, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn with_context(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

impl Cli {
    fn load_config(&self, path: &Path) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::parse(&read(path)?).map_err(|e| with_context(path, e))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.time_budget {
            cfg.time_budget = Some(t);
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        cfg.validate().map_err(|e| with_context(path, e))?;
        Ok(cfg)
    }

    fn note(&self, message: &str) {
        if !self.quiet {
            eprintln!("{message}");
        }
    }
}

fn out_dir(cfg: &ExperimentConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Failure::io(&cfg.out_dir, e))?;
    Ok(&cfg.out_dir)
}

fn summary_for(cfg: &ExperimentConfig, space: &GridSpace, design: &Design, trace: &RunTrace, elapsed: f64) -> CliResult<Summary> {
    let mut s = Summary::new();
    s.text("criterion", &cfg.criterion)
        .real("value", cfg.criterion.evaluate(design, space)?)
        .real("objective", trace.final_value)
        .text("runs", cfg.runs)
        .text("dim", cfg.dim)
        .text("levels", space.levels())
        .text("seed", cfg.seed)
        .text("restarts_run", trace.restarts.len())
        .real("elapsed_seconds", elapsed)
        .text("greedy_augmentations", trace.counters.greedy_augmentations)
        .text("mutations_attempted", trace.counters.mutations_attempted)
        .text("mutations_accepted", trace.counters.mutations_accepted)
        .text("mutations_failed", trace.counters.mutations_failed)
        .text("rejections", trace.counters.rejections);
    Ok(s)
}

/// Trace rows every `sample_interval` up to the end of the run.
fn trace_rows(cfg: &ExperimentConfig, trace: &RunTrace, horizon: f64) -> Vec<psa_core::psa::TraceRow> {
    let interval = Duration::from_secs_f64(cfg.sample_interval);
    let ticks = (horizon / cfg.sample_interval).ceil().max(1.0);
    let horizon = if horizon == 0.0 { Duration::ZERO } else { interval.mul_f64(ticks) };
    trace.resample(interval, horizon)
}

fn generate(cli: &Cli, path: &Path) -> CliResult<()> {
    let cfg = cli.load_config(path)?;
    let psa = cfg.psa_config()?;
    let start = Instant::now();
    let (design, trace) = psa_run(&psa)?;
    let elapsed = start.elapsed().as_secs_f64();
    let dir = out_dir(&cfg)?;
    write(&dir.join("design.csv"), &write_design_csv(design.points(), &psa.space))?;
    write(&dir.join("trace.csv"), &write_trace_csv(&trace_rows(&cfg, &trace, elapsed)))?;
    let summary = summary_for(&cfg, &psa.space, &design, &trace, elapsed)?;
    write(&dir.join("summary.txt"), &summary.to_string())?;
    write(&dir.join("config.txt"), &cfg.to_canonical())?;
    cli.note(&format!(
        "wrote {} points to {} ({} = {})",
        design.len(),
        dir.join("design.csv").display(),
        cfg.criterion,
        summary.get("value").unwrap_or("?")
    ));
    Ok(())
}

fn bench(cli: &Cli, path: &Path, repeats: usize) -> CliResult<()> {
    let cfg = cli.load_config(path)?;
    let total = cfg
        .time_budget
        .ok_or_else(|| Failure::new("config", 2, format!("{}: field `time_budget`: required by bench", path.display())))?;
    if repeats == 0 {
        return Err(Failure::new("config", 2, "--repeats must be at least 1"));
    }
    let dir = out_dir(&cfg)?.to_path_buf();
    for k in 1..=repeats {
        let mut psa = cfg.psa_config()?;
        psa.seed = cfg.seed.wrapping_add(k as u64 - 1);
        let (design, trace) = psa_bench(&psa, Duration::from_secs_f64(total))?;
        let rows = trace_rows(&cfg, &trace, total);
        let suffix = if repeats == 1 { String::new() } else { format!("-{k}") };
        write(&dir.join(format!("trace{suffix}.csv")), &write_trace_csv(&rows))?;
        write(&dir.join(format!("design{suffix}.csv")), &write_design_csv(design.points(), &psa.space))?;
        let mut summary = summary_for(&cfg, &psa.space, &design, &trace, total)?;
        summary.text("seed_used", psa.seed);
        write(&dir.join(format!("summary{suffix}.txt")), &summary.to_string())?;
        cli.note(&format!(
            "repeat {k}: {} restarts, {} trace rows, best {}",
            trace.restarts.len(),
            rows.len(),
            trace.final_value
        ));
    }
    Ok(())
}

fn load_design(cli: &Cli, path: &Path, space: &GridSpace) -> CliResult<Vec<GridPoint>> {
    let parsed = read_design_csv(&read(path)?, space).map_err(|e| with_context(path, e))?;
    for w in &parsed.warnings {
        cli.note(&format!("warning: {}: {w}", path.display()));
    }
    if parsed.points.is_empty() {
        return Err(Failure::new("parse", 2, format!("{}: design has no rows", path.display())));
    }
    Ok(parsed.points)
}

/// Privacy collisions and out-of-region rows, 1-based in file order.
fn permissibility_report(points: &[GridPoint], space: &GridSpace, spec: &PrivacySpec) -> CliResult<Vec<String>> {
    let mut problems = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !space.in_region(p) {
            problems.push(format!("row {} outside region", i + 1));
        }
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if spec.in_privacy(&points[i], &points[j])? {
                problems.push(format!("({},{})", i + 1, j + 1));
            }
        }
    }
    Ok(problems)
}

fn evaluate(cli: &Cli, design_path: &Path, config_path: &Path, extra: &[String]) -> CliResult<()> {
    let cfg = cli.load_config(config_path)?;
    let space = cfg.space()?;
    let spec = cfg.privacy_spec(&space)?;
    let points = load_design(cli, design_path, &space)?;
    let problems = permissibility_report(&points, &space, &spec)?;
    if !problems.is_empty() {
        return Err(Failure::new(
            "permissibility",
            5,
            format!("{}: {} violation(s): {}", design_path.display(), problems.len(), problems.join(" ")),
        ));
    }
    let design = Design::from_points(points.iter().cloned(), points.len())?;
    let mut criteria = cfg.report_criteria();
    for text in extra {
        let c = psa_core::CriterionSpec::parse(text, cfg.dim)
            .map_err(|e| Failure::new("config", 2, format!("--criterion {text}: {e}")))?;
        if !criteria.contains(&c) {
            criteria.push(c);
        }
    }
    let mut s = Summary::new();
    s.text("points", design.len()).text("levels", space.levels()).text("permissible", true);
    for (k, c) in criteria.iter().enumerate() {
        s.text(&format!("criterion.{}", k + 1), c);
        s.real(&format!("value.{}", k + 1), c.evaluate(&design, &space)?);
    }
    let probes = probes(&cfg);
    if !probes.is_empty() {
        let stats = nearest_distance_stats(&design, &space, &probes)?;
        s.text("distance.probes", probes.len())
            .real("distance.min", stats.min)
            .real("distance.lower_quartile", stats.lower_quartile)
            .real("distance.median", stats.median)
            .real("distance.upper_quartile", stats.upper_quartile)
            .real("distance.max", stats.max);
    }
    print!("{s}");
    Ok(())
}

fn probes(cfg: &ExperimentConfig) -> Vec<Vec<f64>> {
    let mut probes = if cfg.probe_vertices { vertex_probes(cfg.dim) } else { Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    probes.extend(uniform_probes(cfg.dim, cfg.probe_uniform, &mut rng));
    probes
}

fn plot(cli: &Cli, kind: &PlotKind) -> CliResult<()> {
    let (svg, output) = match kind {
        PlotKind::Design {
            design,
            config,
            output,
            bins,
        } => {
            let cfg = cli.load_config(config)?;
            let space = cfg.space()?;
            let points = load_design(cli, design, &space)?;
            let coords: Vec<Vec<f64>> = points.iter().map(|p| space.coord_of(p)).collect::<Result<_, _>>()?;
            let title = format!("{} ({} points)", design.display(), coords.len());
            (design_svg(&coords, &title, *bins), output)
        }
        PlotKind::Trace { traces, output } => {
            let series = traces
                .iter()
                .map(|p| {
                    let rows = read_trace_csv(&read(p)?).map_err(|e| with_context(p, e))?;
                    Ok((p.display().to_string(), rows))
                })
                .collect::<CliResult<Vec<_>>>()?;
            (trace_svg(&series, "best value"), output)
        }
        PlotKind::Box {
            config,
            designs,
            output,
        } => {
            let cfg = cli.load_config(config)?;
            let space = cfg.space()?;
            let probes = probes(&cfg);
            if probes.is_empty() {
                return Err(Failure::new(
                    "config",
                    2,
                    format!("{}: set `probe_vertices` or `probe_uniform` for box plots", config.display()),
                ));
            }
            let entries = designs
                .iter()
                .map(|p| {
                    let points = load_design(cli, p, &space)?;
                    let design = Design::from_points(points.iter().cloned(), points.len())?;
                    Ok(BoxEntry {
                        label: p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into()),
                        summary: nearest_distance_stats(&design, &space, &probes)?,
                        criterion: cfg.criterion.evaluate(&design, &space).ok(),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            (box_svg(&entries, "distance to nearest design point", &cfg.criterion.to_string()), output)
        }
    };
    write(output, &svg)?;
    cli.note(&format!("wrote {}", output.display()));
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate { config } => generate(cli, config),
        Command::Evaluate {
            design,
            config,
            criteria,
        } => evaluate(cli, design, config, criteria),
        Command::Bench { config, repeats } => bench(cli, config, *repeats),
        Command::Plot { kind } => plot(cli, kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
