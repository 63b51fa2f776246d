//! `nightsched` command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 a search limit stopped a solve
//! before optimality was proven, 1 anything else.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nightsched::campaign::{run_campaign, write_records_csv, Algorithm, CampaignConfig, CampaignInput};
use nightsched::generator::{derive_seeds, generate, GenParams};
use nightsched::model::{gain_curve, GainCurve};
use nightsched::oracle::{brute_force_etg, OracleOptions};
use nightsched::reactive::{reactive_vs_stochastic_expectation_with, sweep_binomial_with, uniform_grid, BinomialWeather};
use nightsched::report::{write_curve_csv, write_sweep_csv, Manifest, ManifestEntry, RunHeader};
use nightsched::strategies::{greedy_schedule, improvement, omniscient_curve_with, stochastic_outcome, upgrade};
use nightsched::{solve_stochastic, validate_instance, Error, Execution, Instance, SolverConfig, TOLERANCE};

#[derive(Parser)]
#[command(name = "nightsched", version, about = "Observation scheduling over an uncertain number of nights")]
struct Cli {
    /// Run every batch sequentially instead of on the worker pool.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded random instances and a manifest.
    Generate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Maximize the Expected Total Gain of one instance.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Cross-check against exhaustive enumeration (small instances only).
        #[arg(long, hide = true)]
        oracle: bool,
    },
    /// Greedy, stochastic and omniscient on one instance, with curve CSVs.
    Compare {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for `curve_<algorithm>.csv`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Reactive re-planning over every clear/bad night sequence.
    Reactive {
        instance: PathBuf,
        #[arg(long)]
        p_clear: f64,
        /// Number of nights; defaults to the instance's.
        #[arg(long)]
        nights: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the scenario leaves as a JSON array.
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Reactive versus static expectation over a grid of clear-night probabilities.
    Sweep {
        instance: PathBuf,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long)]
        nights: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run algorithms over many instances and aggregate the gaps.
    Campaign {
        /// Manifest written by `generate`; otherwise instances are generated from the parameters.
        #[arg(long, conflicts_with = "count")]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "greedy,stochastic,omniscient,reactive")]
        algorithms: Vec<AlgorithmArg>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for `stats.json` and `instances.csv`.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long, default_value_t = 4)]
    nights: usize,
    #[arg(long, default_value_t = 20)]
    observations: usize,
    #[arg(long, default_value_t = 5)]
    len_night: i64,
    #[arg(long, default_value_t = 10)]
    max_gain: i64,
    /// Master seed; per-instance seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ProbabilityArg::Uniform)]
    probabilities: ProbabilityArg,
    /// Fixes the binomial clear-night probability instead of drawing it.
    #[arg(long)]
    p_clear: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbabilityArg {
    Uniform,
    Binomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Greedy,
    Stochastic,
    Omniscient,
    Reactive,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Greedy => Algorithm::Greedy,
            AlgorithmArg::Stochastic => Algorithm::Stochastic,
            AlgorithmArg::Omniscient => Algorithm::Omniscient,
            AlgorithmArg::Reactive => Algorithm::Reactive,
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Seconds per solve; 0 means unlimited.
    #[arg(long, default_value_t = 0.0)]
    time_limit: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, overrides_with = "no_dg")]
    dg: bool,
    #[arg(long)]
    no_dg: bool,
    #[arg(long, overrides_with = "no_bo")]
    bo: bool,
    #[arg(long)]
    no_bo: bool,
    #[arg(long, overrides_with = "no_icg")]
    icg: bool,
    #[arg(long)]
    no_icg: bool,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        if !(self.time_limit >= 0.0) {
            return Err(Failure::invalid(anyhow!("--time-limit must be >= 0")));
        }
        Ok(SolverConfig {
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            use_dg: !self.no_dg,
            use_bo: !self.no_bo,
            use_icg: !self.no_icg,
        })
    }
}

fn describe(header: RunHeader, config: &SolverConfig) -> RunHeader {
    header
        .set("time_limit", config.time_limit)
        .set("node_limit", config.node_limit.map_or("none".to_owned(), |n| n.to_string()))
        .set("dg", config.use_dg)
        .set("bo", config.use_bo)
        .set("icg", config.use_icg)
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn invalid(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::InvalidInstance(_) | Error::InvalidParameters(_) | Error::OracleGuard(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            error: error.into(),
        }
    }
}

/// Outcome of a successful run: whether every solve was proven optimal.
type Outcome = Result<bool, Failure>;

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::invalid)?;
    let instance = Instance::from_json(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::invalid)?;
    let report = validate_instance(&instance);
    if !report.is_valid() {
        return Err(Error::InvalidInstance(report).into());
    }
    Ok(instance)
}

fn write_file(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    // write-then-rename so readers never see a partial file
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn print_text(text: &str) -> anyhow::Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    print_text(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn gen_params(args: &ParamArgs) -> GenParams {
    let params = GenParams::new(args.nights, args.observations, args.len_night, args.max_gain, args.seed);
    match args.probabilities {
        ProbabilityArg::Uniform => params,
        ProbabilityArg::Binomial => params.binomial(args.p_clear),
    }
}

fn cmd_generate(args: &ParamArgs, count: usize, out_dir: &Path) -> Outcome {
    let params = gen_params(args);
    params.validate()?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let seeds = derive_seeds(params.seed, count);
    let width = count.max(1).to_string().len().max(4);
    let mut entries = Vec::with_capacity(count);
    for (i, &seed) in seeds.iter().enumerate() {
        let p = params.with_seed(seed);
        let g = generate(&p)?;
        let file = format!("instance_{i:0width$}.json");
        write_file(&out_dir.join(&file), g.instance.to_json().as_bytes())?;
        entries.push(ManifestEntry {
            file,
            params: p,
            p_clear: g.p_clear,
        });
    }
    let manifest = Manifest {
        header: RunHeader::new("generate")
            .seeds(seeds)
            .set("master_seed", params.seed)
            .set("count", count),
        master_seed: params.seed,
        entries,
    };
    write_file(&out_dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    println!("wrote {count} instances and manifest.json to {}", out_dir.display());
    Ok(true)
}

fn cmd_solve(path: &Path, solver: &SolverArgs, oracle: bool) -> Outcome {
    let instance = load_instance(path)?;
    let config = solver.config()?;
    let result = solve_stochastic(&instance, &config);
    let header = describe(RunHeader::new("solve").set("instance", path.display()), &config);
    let mut out = json!({ "header": header, "result": result });
    if oracle {
        let (value, _) = brute_force_etg(
            &instance,
            OracleOptions {
                decreasing_gain: config.use_dg,
            },
        )?;
        out["oracle"] = json!({
            "etg": value,
            "agrees": (value - result.etg).abs() <= TOLERANCE,
        });
    }
    print_json(&out)?;
    Ok(result.proven_optimal)
}

fn metric(value: Result<f64, Error>) -> Option<f64> {
    value.ok()
}

fn cmd_compare(path: &Path, solver: &SolverArgs, out_dir: Option<&Path>, exec: Execution) -> Outcome {
    let instance = load_instance(path)?;
    let config = solver.config()?;
    let pi = &instance.probabilities;
    let greedy = greedy_schedule(&instance);
    let stochastic = stochastic_outcome(&instance, &solve_stochastic(&instance, &config));
    let omniscient = omniscient_curve_with(&instance, &config, exec);
    let o = omniscient.etg(pi);
    let curves: [(&str, GainCurve); 3] = [
        ("greedy", greedy.curve(&instance)),
        ("stochastic", gain_curve(&instance, &stochastic.per_night_gains)),
        ("omniscient", omniscient.curve(pi)),
    ];
    let envelope = curves[2].1.cumulative();
    let dominated = curves
        .iter()
        .all(|(_, c)| c.cumulative().iter().zip(&envelope).all(|(g, e)| g <= e));
    let header = describe(RunHeader::new("compare").set("instance", path.display()), &config);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, curve) in &curves {
            let mut buf = Vec::new();
            let lines = header.clone().set("algorithm", name).lines();
            write_curve_csv(&mut buf, &lines, curve)?;
            write_file(&dir.join(format!("curve_{name}.csv")), &buf)?;
        }
    }
    let (g, s) = (greedy.etg, stochastic.etg);
    print_json(&json!({
        "header": header,
        "etg": { "greedy": g, "stochastic": s, "omniscient": o },
        "per_night_gains": {
            "greedy": greedy.per_night_gains,
            "stochastic": stochastic.per_night_gains,
        },
        "omniscient_optimum": omniscient.optimum,
        "upgrade": {
            "stochastic_over_greedy": metric(upgrade(s, g)),
            "omniscient_over_stochastic": metric(upgrade(o, s)),
            "omniscient_over_greedy": metric(upgrade(o, g)),
        },
        "improvement": {
            "stochastic_over_greedy": metric(improvement(s, g, o)),
        },
        "curves_below_omniscient": dominated,
        "stochastic_schedule": stochastic.schedule,
    }))?;
    Ok(stochastic.proven_optimal && omniscient.proven_optimal)
}

fn nights_of(instance: &Instance, nights: Option<usize>) -> Result<usize, Failure> {
    match nights {
        Some(0) => Err(Failure::invalid(anyhow!("--nights must be >= 1"))),
        Some(n) => Ok(n),
        None => Ok(instance.nights),
    }
}

fn cmd_reactive(
    path: &Path,
    p_clear: f64,
    nights: Option<usize>,
    solver: &SolverArgs,
    scenarios: Option<&Path>,
    exec: Execution,
) -> Outcome {
    let instance = load_instance(path)?;
    let nights = nights_of(&instance, nights)?;
    let config = solver.config()?;
    let weather = BinomialWeather::new(p_clear)?;
    let cmp = reactive_vs_stochastic_expectation_with(&instance.observations, nights, weather, &config, exec);
    let header = describe(
        RunHeader::new("reactive")
            .set("instance", path.display())
            .set("nights", nights)
            .set("p_clear", p_clear),
        &config,
    );
    if let Some(file) = scenarios {
        write_file(file, serde_json::to_string_pretty(&cmp.reactive.scenarios).expect("scenarios serialize").as_bytes())?;
    }
    print_json(&json!({
        "header": header,
        "etg_reactive": cmp.etg_reactive,
        "etg_stochastic": cmp.etg_stochastic,
        "upgrade": cmp.upgrade(),
        "solver_calls": cmp.reactive.solver_calls,
        "proven_optimal": cmp.reactive.proven_optimal,
        "static_night_gains": cmp.reactive.static_night_gains,
        "scenarios": cmp.reactive.scenarios,
    }))?;
    Ok(cmp.reactive.proven_optimal)
}

fn cmd_sweep(
    path: &Path,
    grid: usize,
    nights: Option<usize>,
    solver: &SolverArgs,
    out: Option<&Path>,
    exec: Execution,
) -> Outcome {
    let instance = load_instance(path)?;
    let nights = nights_of(&instance, nights)?;
    let config = solver.config()?;
    if grid < 2 {
        return Err(Failure::invalid(anyhow!("--grid must be >= 2")));
    }
    let points = sweep_binomial_with(&instance.observations, nights, &uniform_grid(grid), &config, exec)?;
    let header = describe(
        RunHeader::new("sweep")
            .set("instance", path.display())
            .set("nights", nights)
            .set("grid", grid),
        &config,
    );
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &header.lines(), &points)?;
    match out {
        Some(file) => write_file(file, &buf)?,
        None => print_text(&String::from_utf8(buf).expect("csv is utf-8"))?,
    }
    Ok(points.iter().all(|p| p.proven_optimal))
}

fn campaign_inputs(
    manifest: Option<&Path>,
    params: &ParamArgs,
    count: Option<usize>,
) -> Result<(Vec<CampaignInput>, RunHeader), Failure> {
    if let Some(path) = manifest {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::invalid)?;
        let manifest = Manifest::from_json(&text).map_err(|e| Failure::invalid(e.into()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let inputs = manifest
            .entries
            .iter()
            .map(|e| {
                Ok(CampaignInput {
                    name: e.file.clone(),
                    instance: load_instance(&dir.join(&e.file))?,
                    seed: Some(e.params.seed),
                    p_clear: e.p_clear,
                })
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let header = RunHeader::new("campaign")
            .seeds(manifest.entries.iter().map(|e| e.params.seed))
            .set("manifest", path.display())
            .set("master_seed", manifest.master_seed);
        return Ok((inputs, header));
    }
    let count = count.ok_or_else(|| Failure::invalid(anyhow!("either --manifest or --count is required")))?;
    let params = gen_params(params);
    params.validate()?;
    let seeds = derive_seeds(params.seed, count);
    let inputs = seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| {
            let g = generate(&params.with_seed(seed))?;
            Ok(CampaignInput {
                name: format!("instance_{i:04}"),
                instance: g.instance,
                seed: Some(seed),
                p_clear: g.p_clear,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let header = RunHeader::new("campaign")
        .seeds(seeds)
        .set("master_seed", params.seed)
        .set("params", serde_json::to_string(&params).expect("params serialize"));
    Ok((inputs, header))
}

fn cmd_campaign(
    manifest: Option<&Path>,
    params: &ParamArgs,
    count: Option<usize>,
    algorithms: &[AlgorithmArg],
    solver: &SolverArgs,
    out_dir: &Path,
    exec: Execution,
) -> Outcome {
    let config = solver.config()?;
    let (inputs, header) = campaign_inputs(manifest, params, count)?;
    let mut algorithms: Vec<Algorithm> = algorithms.iter().map(|&a| a.into()).collect();
    algorithms.sort();
    algorithms.dedup();
    let names: Vec<&str> = algorithms.iter().map(|a| a.name()).collect();
    let header = describe(header.set("algorithms", names.join(",")), &config);
    let stats = run_campaign(
        &inputs,
        &CampaignConfig {
            solver: config,
            algorithms,
            exec,
        },
    )?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut csv = Vec::new();
    write_records_csv(&mut csv, &header.lines(), &stats.records)?;
    write_file(&out_dir.join("instances.csv"), &csv)?;
    let doc = json!({ "header": header, "stats": stats });
    write_file(&out_dir.join("stats.json"), serde_json::to_string_pretty(&doc).expect("stats serialize").as_bytes())?;
    for p in &stats.pairs {
        println!(
            "{} vs {}: nonzero gap {}/{}, mean improvement {}, mean upgrade {}",
            p.a1.name(),
            p.a2.name(),
            p.n_nonzero_gap,
            p.n_compared,
            p.mean_improvement.map_or("n/a".to_owned(), |v| format!("{v:.4}")),
            p.mean_upgrade.map_or("n/a".to_owned(), |v| format!("{v:.4}")),
        );
    }
    Ok(stats.records.iter().all(|r| r.proven_optimal))
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("NIGHTSCHED_THREADS") {
        let n: usize = value
            .parse()
            .with_context(|| format!("NIGHTSCHED_THREADS={value:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads().map_err(Failure::invalid)?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &cli.command {
        Command::Generate { params, count, out_dir } => cmd_generate(params, *count, out_dir),
        Command::Solve { instance, solver, oracle } => cmd_solve(instance, solver, *oracle),
        Command::Compare { instance, solver, out_dir } => cmd_compare(instance, solver, out_dir.as_deref(), exec),
        Command::Reactive {
            instance,
            p_clear,
            nights,
            solver,
            scenarios,
        } => cmd_reactive(instance, *p_clear, *nights, solver, scenarios.as_deref(), exec),
        Command::Sweep {
            instance,
            grid,
            nights,
            solver,
            out,
        } => cmd_sweep(instance, *grid, *nights, solver, out.as_deref(), exec),
        Command::Campaign {
            manifest,
            params,
            count,
            algorithms,
            solver,
            out_dir,
        } => cmd_campaign(manifest.as_deref(), params, *count, algorithms, solver, out_dir, exec),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: a search limit was hit before optimality was proven");
            ExitCode::from(3)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
