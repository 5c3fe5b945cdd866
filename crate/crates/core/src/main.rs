use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crossrate::dynamics::SalientOffset;
use crossrate::geometry::SegmentId;
use crossrate::monte_carlo::{run_campaign, ttc_monte_carlo};
use crossrate::probability::{deterministic_ttc_seeds, integrate_intensity, AdaptiveParams, RateCurve};
use crossrate::report::{Cell, CsvTable, RunManifest};
use crossrate::scenario::{Preset, Scenario, ScenarioConfig};
use crossrate::{Error, Method};

/// Seed used when neither the flag, the config nor `CROSSRATE_SEED` set one.
const DEFAULT_SEED: u64 = 0;
const SEED_ENV: &str = "CROSSRATE_SEED";

#[derive(Parser, Debug)]
#[command(name = "crossrate", version, about = "Collision probability rates from boundary entry intensities")]
struct Cli {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte-Carlo campaign: entry-time histograms and multiplicity statistics.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: SimulateOpts,
    },
    /// Entry intensity curve on a dense or adaptive grid.
    Intensity {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: SamplingOpts,
    },
    /// Upper bound of the collision probability over [t1, t2].
    Probability {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: ProbabilityOpts,
    },
    /// Initial-condition TTC histograms and deterministic crossing times.
    Ttc {
        #[command(flatten)]
        source: Source,
    },
    /// Entry intensity of body-fixed salient points.
    Salient {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        opts: SalientOpts,
    },
    /// Monte-Carlo rate, intensity methods, spatial overlap and TTC on one grid.
    Compare {
        #[command(flatten)]
        source: Source,
    },
    /// Repeats the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Source {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: front or front-right.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_traj: Option<u64>,
    /// Prediction horizon, s.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SimulateOpts {
    /// Stop each trajectory at its first entry.
    #[arg(long)]
    #[serde(skip)]
    terminate_on_entry: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SamplingOpts {
    #[arg(long, default_value = "quadrature", value_parser = parse_method)]
    method: Method,
    /// Sparse sampling seeded by deterministic crossing times.
    #[arg(long)]
    adaptive: bool,
    /// Dense grid step, s.
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long, default_value_t = 0.5)]
    dt1: f64,
    #[arg(long, default_value_t = 0.2)]
    dt2: f64,
    /// Adaptive marching stops below this intensity, 1/s.
    #[arg(long, default_value_t = 0.01)]
    floor: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ProbabilityOpts {
    #[arg(long)]
    t1: f64,
    #[arg(long)]
    t2: f64,
    #[command(flatten)]
    #[serde(flatten)]
    sampling: SamplingOpts,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SalientOpts {
    /// Body-frame offset `dx,dy` in m; repeatable. Defaults to the corners
    /// of a 4 m x 1.8 m body centred on the reference point.
    #[arg(long = "offset", value_parser = parse_offset)]
    offsets: Vec<SalientOffset>,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
}

/// Subcommand and options as stored in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Run {
    Simulate(SimulateOpts),
    Intensity(SamplingOpts),
    Probability(ProbabilityOpts),
    Ttc,
    Salient(SalientOpts),
    Compare,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_offset(s: &str) -> Result<SalientOffset, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `dx,dy`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok(SalientOffset::new(num(a)?, num(b)?))
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Config { .. } | Error::Argument(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(SEED_ENV, format!("not an unsigned integer: `{v}`")).into()),
        Err(_) => Ok(None),
    }
}

/// Loads the scenario and applies flag overrides; the seed is resolved from
/// the flag, the config, `CROSSRATE_SEED`, then the default.
fn resolve(source: &Source, terminate_on_entry: bool) -> CliResult<(ScenarioConfig, u64)> {
    let mut config = match (&source.config, &source.preset) {
        (Some(path), _) => ScenarioConfig::from_toml_str(&read_file(path)?)?,
        (None, Some(name)) => name.parse::<Preset>()?.config(),
        (None, None) => return Err(Error::config("config", "either --config or --preset is required").into()),
    };
    if let Some(n) = source.n_traj {
        config.n_traj = n;
    }
    if let Some(h) = source.horizon {
        config.horizon = h;
    }
    config.terminate_on_entry |= terminate_on_entry;
    let seed = match source.seed.or(config.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(DEFAULT_SEED),
    };
    config.seed = Some(seed);
    config.validate()?;
    Ok((config, seed))
}

/// Files produced by a run plus command-specific details for the manifest.
struct Outputs {
    files: Vec<(String, String)>,
    details: serde_json::Value,
}

fn execute(run: &Run, config: ScenarioConfig, seed: u64, out: &Path) -> CliResult<()> {
    let started = Instant::now();
    let scenario = Scenario::new(config.clone())?;
    let outputs = match run {
        Run::Simulate(_) => simulate(&scenario, seed)?,
        Run::Intensity(o) => intensity(&scenario, o)?,
        Run::Probability(o) => probability(&scenario, o)?,
        Run::Ttc => ttc(&scenario, seed)?,
        Run::Salient(o) => salient(&scenario, o)?,
        Run::Compare => compare(&scenario, seed)?,
    };
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_owned(), source })?;
    let mut names = Vec::new();
    for (name, contents) in &outputs.files {
        let path = out.join(name);
        write_file(&path, contents)?;
        println!("wrote {}", path.display());
        names.push(name.clone());
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run: serde_json::to_value(run).expect("run options serialize"),
        config,
        seed,
        outputs: names,
        details: outputs.details,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out.join("manifest.json"), &(text + "\n"))
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn segment_columns(prefix: &str) -> impl Iterator<Item = String> + '_ {
    SegmentId::ALL.into_iter().map(move |id| format!("{prefix}_{}", id.name()))
}

fn simulate(scenario: &Scenario, seed: u64) -> CliResult<Outputs> {
    let r = run_campaign(scenario, seed)?;
    let h = &r.histogram;
    let mut header = vec!["bin_start_s".to_string(), "bin_mid_s".into(), "first_entry_rate_total".into()];
    header.extend(segment_columns("first_entry_rate"));
    header.extend(segment_columns("all_entry_rate"));
    header.push("integrated_probability".into());
    header.extend(segment_columns("first_segment_entry_rate"));
    let mut table = CsvTable::new(header);
    let integrated = h.integrated_probability();
    for i in 0..h.n_bins {
        let mut row: Vec<Cell> =
            vec![h.bin_start(i).into(), h.bin_mid(i).into(), h.rate(h.first_entry_total(i)).into()];
        row.extend(h.first_entry.iter().map(|c| Cell::from(h.rate(c[i]))));
        row.extend(h.all_entry.iter().map(|c| Cell::from(h.rate(c[i]))));
        row.push(integrated[i].into());
        row.extend(h.first_segment_entry.iter().map(|c| Cell::from(h.rate(c[i]))));
        table.push(row);
    }
    let s = &r.statistics;
    let colliding = s.n_traj - s.count(0);
    let multiplicity: Vec<_> = (1..s.multiplicity.len())
        .map(|k| {
            json!({
                "entries": k,
                "count": s.count(k),
                "probability": s.probability(k),
                "fraction_of_colliding": if colliding > 0 { s.count(k) as f64 / colliding as f64 } else { 0.0 },
            })
        })
        .collect();
    let by_segment: serde_json::Map<_, _> = SegmentId::ALL
        .into_iter()
        .map(|id| (id.name().to_string(), json!(s.first_entry_by_segment[id.index()])))
        .collect();
    let stats = json!({
        "n_traj": s.n_traj,
        "seed": seed,
        "no_entry": s.count(0),
        "multiplicity": multiplicity,
        "colliding": colliding,
        "p_any_entry": s.probability_any(),
        "expected_entries": s.expected_entries(),
        "first_entry_by_segment": by_segment,
    });
    Ok(Outputs {
        files: vec![("histogram.csv".into(), table.render()), ("stats.json".into(), to_json(&stats))],
        details: json!({}),
    })
}

fn sample_curve(scenario: &Scenario, o: &SamplingOpts) -> CliResult<(RateCurve, serde_json::Value)> {
    if o.adaptive {
        let params = AdaptiveParams { dt1: o.dt1, dt2: o.dt2, rate_floor: o.floor };
        let a = scenario.adaptive_curve(o.method, params)?;
        let details = json!({ "evaluations_used": a.evaluations, "sampling_status": a.status });
        Ok((a.curve, details))
    } else {
        let c = scenario.dense_curve(o.method, o.dt)?;
        let details = json!({ "evaluations_used": c.len() });
        Ok((c, details))
    }
}

fn intensity(scenario: &Scenario, o: &SamplingOpts) -> CliResult<Outputs> {
    let (curve, details) = sample_curve(scenario, o)?;
    let mut header = vec!["t_s".to_string(), "mu_total".into()];
    header.extend(segment_columns("mu"));
    header.push("method".into());
    let mut table = CsvTable::new(header);
    for s in &curve.samples {
        let mut row: Vec<Cell> = vec![s.t.into(), s.mu_plus.into()];
        row.extend(s.per_segment.iter().map(|&v| Cell::from(v)));
        row.push(s.method.name().into());
        table.push(row);
    }
    Ok(Outputs { files: vec![("intensity.csv".into(), table.render())], details })
}

fn probability(scenario: &Scenario, o: &ProbabilityOpts) -> CliResult<Outputs> {
    let (curve, details) = sample_curve(scenario, &o.sampling)?;
    let bound = integrate_intensity(&curve, o.t1, o.t2)?;
    let per_segment: serde_json::Map<_, _> =
        SegmentId::ALL.into_iter().map(|id| (id.name().to_string(), json!(bound.per_segment[id.index()]))).collect();
    let doc = json!({
        "t1": bound.t1,
        "t2": bound.t2,
        "method": o.sampling.method,
        "p_upper": bound.p_upper,
        "p_upper_capped": bound.p_upper_capped,
        "per_segment": per_segment,
        "evaluations_used": bound.evaluations_used,
    });
    print!("{}", to_json(&doc));
    Ok(Outputs { files: vec![("probability.json".into(), to_json(&doc))], details })
}

fn seeds_json(scenario: &Scenario) -> String {
    let seeds: Vec<_> = deterministic_ttc_seeds(&scenario.config.initial_mean, scenario.rect())
        .into_iter()
        .map(|s| json!({ "segment": s.segment.name(), "time_s": s.time }))
        .collect();
    to_json(&json!({ "seeds": seeds }))
}

fn ttc(scenario: &Scenario, seed: u64) -> CliResult<Outputs> {
    let h = ttc_monte_carlo(scenario, seed)?;
    let mut header = vec!["bin_start_s".to_string(), "bin_mid_s".into(), "ttc_rate_total".into()];
    header.extend(segment_columns("ttc_rate"));
    let mut table = CsvTable::new(header);
    for i in 0..h.n_bins {
        let mut row: Vec<Cell> = vec![(i as f64 * h.bin_width).into(), h.bin_mid(i).into(), h.rate(h.total(i)).into()];
        row.extend(h.per_segment.iter().map(|c| Cell::from(h.rate(c[i]))));
        table.push(row);
    }
    Ok(Outputs {
        files: vec![("ttc_histogram.csv".into(), table.render()), ("ttc_seeds.json".into(), seeds_json(scenario))],
        details: json!({}),
    })
}

fn default_corners() -> Vec<SalientOffset> {
    [(2.0, -0.9), (2.0, 0.9), (-2.0, -0.9), (-2.0, 0.9)].into_iter().map(|(x, y)| SalientOffset::new(x, y)).collect()
}

fn salient(scenario: &Scenario, o: &SalientOpts) -> CliResult<Outputs> {
    let offsets = if o.offsets.is_empty() { default_corners() } else { o.offsets.clone() };
    let times = crossrate::scenario::uniform_grid(scenario.config.horizon, o.dt)?;
    let mut files = Vec::new();
    for (k, off) in offsets.iter().enumerate() {
        let mut header = vec!["t_s".to_string()];
        header.extend(Method::ALL.iter().map(|m| format!("mu_total_{}", m.name())));
        let mut table = CsvTable::new(header);
        for &t in &times {
            let mut row: Vec<Cell> = vec![t.into()];
            for m in Method::ALL {
                row.push(scenario.salient_intensity_at(t, off, m)?.mu_plus.into());
            }
            table.push(row);
        }
        files.push((format!("salient_{k}.csv"), table.render()));
    }
    Ok(Outputs { files, details: json!({ "offsets": offsets }) })
}

fn compare(scenario: &Scenario, seed: u64) -> CliResult<Outputs> {
    let mc = run_campaign(scenario, seed)?;
    let ttc = ttc_monte_carlo(scenario, seed)?;
    let h = &mc.histogram;
    let mut header = vec!["t_s".to_string(), "mc_first_entry_rate".into()];
    header.extend(Method::ALL.iter().map(|m| format!("mu_{}", m.name())));
    header.push("spatial_overlap".into());
    header.push("ttc_mc_rate".into());
    let mut table = CsvTable::new(header);
    let mut peaks = vec![(0.0, f64::NEG_INFINITY); Method::ALL.len() + 3];
    for i in 0..h.n_bins {
        let t = h.bin_mid(i);
        let mut values = vec![h.rate(h.first_entry_total(i))];
        for m in Method::ALL {
            values.push(scenario.intensity_at(t, m)?.mu_plus);
        }
        values.push(scenario.spatial_overlap_at(t)?);
        values.push(ttc.rate(ttc.total(i)));
        for (p, &v) in peaks.iter_mut().zip(&values) {
            if v > p.1 {
                *p = (t, v);
            }
        }
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(values.into_iter().map(Cell::from));
        table.push(row);
    }
    let names = table.header()[1..].to_vec();
    let peak_times: serde_json::Map<_, _> = names.iter().zip(&peaks).map(|(n, p)| (n.clone(), json!(p.0))).collect();
    let summary = json!({
        "peak_time_s": peak_times,
        "deterministic_ttc": serde_json::from_str::<serde_json::Value>(&seeds_json(scenario)).expect("valid json")["seeds"],
    });
    Ok(Outputs {
        files: vec![("compare.csv".into(), table.render()), ("compare.json".into(), to_json(&summary))],
        details: json!({}),
    })
}

fn rerun(manifest: &Path, out: &Path) -> CliResult<()> {
    let text = read_file(manifest)?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::config(manifest.display().to_string(), e.to_string()))?;
    let run: Run = serde_json::from_value(m.run).map_err(|e| Error::config("run", e.to_string()))?;
    m.config.validate()?;
    execute(&run, m.config, m.seed, out)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Argument(format!("--threads: {e}")))?;
    }
    let (run, source, terminate) = match cli.command {
        Command::Simulate { source, opts } => {
            let t = opts.terminate_on_entry;
            (Run::Simulate(opts), source, t)
        }
        Command::Intensity { source, opts } => (Run::Intensity(opts), source, false),
        Command::Probability { source, opts } => (Run::Probability(opts), source, false),
        Command::Ttc { source } => (Run::Ttc, source, false),
        Command::Salient { source, opts } => (Run::Salient(opts), source, false),
        Command::Compare { source } => (Run::Compare, source, false),
        Command::Rerun { manifest, out } => return rerun(&manifest, &out),
    };
    let (config, seed) = resolve(&source, terminate)?;
    execute(&run, config, seed, &source.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crossrate: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
