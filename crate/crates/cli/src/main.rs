use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use debsloc::curation::{build_plan, group_families, OverrideTable, SelectionPolicy};
use debsloc::debsrc::{decode_index, parse_sources_index, read_index_source, DebsrcError, MirrorLocator, Phase, SourcePackageRecord};
use debsloc::estimator::{estimate_release, CocomoParams, ScheduleBasis};
use debsloc::pipeline::{measure_release, Cache, MeasureOptions, NativeUpstream, PipelineError};
use debsloc::reporting::{self, render, render_tree, Format, Report, ReportBundle, SizeComparison};
use debsloc::sloc::{Registry, TreeOptions};

mod config;

use config::RunConfig;

/// Measure physical source lines of code of files, trees and whole
/// source-package releases.
#[derive(Debug, Parser)]
#[command(name = "debsloc", version)]
struct Cli {
    /// TOML file with extra or replacement language definitions.
    #[arg(long, global = true)]
    languages: Option<PathBuf>,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count a directory tree and print a per-language table.
    Count {
        dir: PathBuf,
        #[arg(long)]
        format: Option<String>,
        /// Count byte-identical files once.
        #[arg(long)]
        dedup: bool,
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
    },
    /// Group the packages of an index into version families for review.
    Plan {
        #[arg(long)]
        index: Option<String>,
        #[arg(long)]
        overrides: Option<PathBuf>,
        /// Ignore the shipped override rules.
        #[arg(long)]
        no_default_overrides: bool,
        /// plain or json.
        #[arg(long)]
        format: Option<String>,
    },
    /// Fetch, unpack, patch and count every curated package of a release.
    Measure(MeasureArgs),
    /// Print reports computed from a measured release in the cache.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[arg(long)]
    index: Option<String>,
    #[arg(long)]
    mirror: Option<String>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    release: Option<String>,
    #[arg(long)]
    overrides: Option<PathBuf>,
    #[arg(long)]
    no_default_overrides: bool,
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Byte limit for one unpacked tarball.
    #[arg(long)]
    quota: Option<u64>,
    /// Keep per-package scratch directories.
    #[arg(long)]
    keep_scratch: bool,
    #[arg(long, value_enum)]
    native_upstream: Option<NativeArg>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Reports to print, in order.
    #[arg(value_enum, default_value = "summary")]
    kinds: Vec<ReportKind>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    release: Option<String>,
    #[arg(long, default_value = "D")]
    phase: Phase,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    top: u64,
    /// Languages below this share (percent) are folded into "other".
    #[arg(long, default_value_t = reporting::DEFAULT_OTHER_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    salary: Option<f64>,
    #[arg(long)]
    overhead: Option<f64>,
    #[arg(long = "cocomo-a")]
    cocomo_a: Option<f64>,
    #[arg(long = "cocomo-b")]
    cocomo_b: Option<f64>,
    #[arg(long = "cocomo-c")]
    cocomo_c: Option<f64>,
    #[arg(long = "cocomo-d")]
    cocomo_d: Option<f64>,
    #[arg(long, value_enum)]
    schedule_basis: Option<BasisArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Summary,
    Languages,
    Top,
    Distribution,
    Deltas,
    Estimate,
    Comparison,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BasisArg {
    PerPackageMax,
    Monolithic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NativeArg {
    Absent,
    SubstituteDebian,
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

const USAGE: u8 = 1;
const INPUT: u8 = 2;
const ENVIRONMENT: u8 = 3;

fn input(message: impl std::fmt::Display) -> Failure {
    Failure { code: INPUT, message: message.to_string() }
}

fn environment(message: impl std::fmt::Display) -> Failure {
    Failure { code: ENVIRONMENT, message: message.to_string() }
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: USAGE, message: message.to_string() }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        match e {
            PipelineError::Cache { .. } | PipelineError::MirrorUnreachable(_) | PipelineError::Pool(_) => environment(e),
            _ => input(e),
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("missing --{flag} (or `{flag}` in the config file)")))
}

fn format_of(flag: Option<String>, cfg: &RunConfig) -> Result<Format, Failure> {
    flag.or_else(|| cfg.format.clone())
        .map_or(Ok(Format::Plain), |f| f.parse().map_err(usage))
}

fn registry(flag: Option<&PathBuf>, cfg: &RunConfig) -> Result<Registry, Failure> {
    match flag.or(cfg.languages.as_ref()) {
        Some(path) => Registry::with_overrides_file(path).map_err(input),
        None => Ok(Registry::builtin()),
    }
}

fn overrides(path: Option<&PathBuf>, skip_defaults: bool) -> Result<OverrideTable, Failure> {
    let base = if skip_defaults { OverrideTable::default() } else { OverrideTable::defaults() };
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            Ok(base.merged(OverrideTable::parse(&text).map_err(|e| input(format!("{}: {e}", p.display())))?))
        }
        None => Ok(base),
    }
}

fn load_index(location: &str) -> Result<Vec<SourcePackageRecord>, Failure> {
    let bytes = read_index_source(location).map_err(|e| match e {
        DebsrcError::Transfer(_) => environment(e),
        other => input(other),
    })?;
    let text = decode_index(&bytes).map_err(input)?;
    let parsed = parse_sources_index(&text);
    if !parsed.errors.is_empty() {
        let lines: Vec<String> = parsed.errors.iter().map(|e| format!("{location}: {e}")).collect();
        return Err(input(lines.join("\n")));
    }
    Ok(parsed.records)
}

fn cmd_count(registry: &Registry, cfg: &RunConfig, dir: &Path, format: Option<String>, dedup: bool, jobs: Option<u16>) -> Result<String, Failure> {
    let format = format_of(format, cfg)?;
    let opts = TreeOptions { dedup_identical: dedup, ..TreeOptions::default() };
    let threads = jobs.map(usize::from).or(cfg.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(environment)?;
    let tree = pool.install(|| registry.count_tree(dir, &opts)).map_err(input)?;
    Ok(render_tree(&tree, format))
}

fn cmd_plan(
    cfg: &RunConfig,
    index: Option<String>,
    overrides_path: Option<PathBuf>,
    skip_defaults: bool,
    format: Option<String>,
) -> Result<String, Failure> {
    let index = required(index.or_else(|| cfg.index.clone()), "index")?;
    let format = format_of(format, cfg)?;
    let records = load_index(&index)?;
    let table = overrides(overrides_path.as_ref().or(cfg.overrides.as_ref()), skip_defaults)?;
    let names: Vec<String> = records.iter().map(|r| r.name.clone()).collect();
    let plan = match build_plan(&names, &table, SelectionPolicy::HighestVersion) {
        Ok(p) => p,
        Err(e) => {
            // Show the draft so the missing override can be written.
            eprint!("{}", group_families(&names).to_table(&table));
            return Err(input(e));
        }
    };
    Ok(match format {
        Format::Json => plan.to_json() + "\n",
        Format::Plain => plan.to_table(&table),
        Format::Delimited => return Err(usage("plan supports the plain and json formats")),
    })
}

fn cmd_measure(registry: &Registry, cfg: &RunConfig, a: MeasureArgs) -> Result<String, Failure> {
    let index = required(a.index.or_else(|| cfg.index.clone()), "index")?;
    let mirror: MirrorLocator = required(a.mirror.or_else(|| cfg.mirror.clone()), "mirror")?
        .parse()
        .map_err(usage)?;
    let cache_root = required(a.cache.or_else(|| cfg.cache.clone()), "cache")?;
    let release = a.release.or_else(|| cfg.release_id.clone()).unwrap_or_else(|| "release".into());
    let format = format_of(a.format, cfg)?;
    let table = overrides(a.overrides.as_ref().or(cfg.overrides.as_ref()), a.no_default_overrides)?;

    let records = load_index(&index)?;
    let names: Vec<String> = records.iter().map(|r| r.name.clone()).collect();
    let plan = build_plan(&names, &table, SelectionPolicy::HighestVersion).map_err(input)?;
    let cache = Cache::open(&cache_root)?;
    let opts = MeasureOptions {
        quota: a.quota.or(cfg.quota),
        keep_scratch: a.keep_scratch,
        native_upstream: match a.native_upstream {
            Some(NativeArg::Absent) => NativeUpstream::Absent,
            Some(NativeArg::SubstituteDebian) => NativeUpstream::SubstituteDebian,
            None => cfg.native_upstream.unwrap_or_default(),
        },
        jobs: a.jobs.map(usize::from).or(cfg.jobs).unwrap_or(0),
        ..MeasureOptions::default()
    };
    let (rel, stats) = measure_release(&release, &records, &plan, &mirror, &cache, registry, &opts)?;
    let bundle = ReportBundle {
        release_id: release.clone(),
        reports: vec![Report::Summary(reporting::summary(&rel))],
    };
    let mut out = String::new();
    if format == Format::Plain {
        if stats.packages > 0 && stats.cache_hits == stats.packages {
            out.push_str(&format!("all cached ({} packages)\n", stats.packages));
        } else {
            out.push_str(&format!("fetched {}, from cache {}\n", stats.fetches, stats.cache_hits));
        }
    }
    out.push_str(&render(&bundle, format));
    Ok(out)
}

fn cocomo(a: &ReportArgs, cfg: &RunConfig) -> Result<CocomoParams, Failure> {
    let mut p = cfg.cocomo.unwrap_or_default();
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut p.a, a.cocomo_a);
    set(&mut p.b, a.cocomo_b);
    set(&mut p.c, a.cocomo_c);
    set(&mut p.d, a.cocomo_d);
    set(&mut p.salary, a.salary);
    set(&mut p.overhead, a.overhead);
    p.validate().map_err(usage)?;
    Ok(p)
}

fn cmd_report(cfg: &RunConfig, a: ReportArgs) -> Result<String, Failure> {
    let cache_root = required(a.cache.clone().or_else(|| cfg.cache.clone()), "cache")?;
    let format = format_of(a.format.clone(), cfg)?;
    let params = cocomo(&a, cfg)?;
    let basis = match a.schedule_basis {
        Some(BasisArg::PerPackageMax) => ScheduleBasis::PerPackageMax,
        Some(BasisArg::Monolithic) => ScheduleBasis::Monolithic,
        None => cfg.schedule_basis.unwrap_or_default(),
    };
    let cache = Cache::open_existing(&cache_root)?;
    let release = match a.release.clone().or_else(|| cfg.release_id.clone()) {
        Some(r) => r,
        None => {
            let all = cache.releases()?;
            match all.as_slice() {
                [one] => one.clone(),
                [] => return Err(input(format!("no measured release under {}", cache_root.display()))),
                _ => return Err(usage(format!("several releases in the cache ({}); pick one with --release", all.join(", ")))),
            }
        }
    };
    let rel = cache.load_release(&release)?;
    if rel.packages.is_empty() {
        return Err(input(format!("release {release} has no measured packages")));
    }

    let mut kinds = a.kinds.clone();
    if kinds.contains(&ReportKind::All) {
        kinds = vec![
            ReportKind::Summary,
            ReportKind::Languages,
            ReportKind::Top,
            ReportKind::Distribution,
            ReportKind::Deltas,
            ReportKind::Estimate,
            ReportKind::Comparison,
        ];
    }
    let mut reports = Vec::new();
    for kind in kinds {
        reports.push(match kind {
            ReportKind::Summary => Report::Summary(reporting::summary(&rel)),
            ReportKind::Languages => Report::Languages(reporting::language_breakdown(&rel, a.phase, a.threshold)),
            ReportKind::Top => Report::Top(reporting::top_packages(&rel, a.top as usize, a.phase).map_err(usage)?),
            ReportKind::Distribution => Report::Distribution(reporting::size_distribution(&rel, a.phase).map_err(input)?),
            ReportKind::Deltas => Report::Deltas(reporting::phase_delta(&rel)),
            ReportKind::Estimate => {
                let sizes: Vec<(String, u64)> = rel
                    .ok_packages()
                    .filter_map(|p| p.sloc(a.phase).map(|s| (p.package.name.clone(), s)))
                    .collect();
                Report::Estimate(estimate_release(&sizes, &params, basis).map_err(usage)?)
            }
            ReportKind::Comparison => Report::Comparison(SizeComparison::with_measured(&release, rel.total(a.phase))),
            ReportKind::All => unreachable!("expanded above"),
        });
    }
    Ok(render(&ReportBundle { release_id: release, reports }, format))
}

fn run(cli: Cli) -> Result<String, Failure> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(input)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Count { dir, format, dedup, jobs } => {
            cmd_count(&registry(cli.languages.as_ref(), &cfg)?, &cfg, &dir, format, dedup, jobs)
        }
        Command::Plan { index, overrides, no_default_overrides, format } => {
            cmd_plan(&cfg, index, overrides, no_default_overrides, format)
        }
        Command::Measure(args) => cmd_measure(&registry(cli.languages.as_ref(), &cfg)?, &cfg, args),
        Command::Report(args) => cmd_report(&cfg, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("debsloc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
