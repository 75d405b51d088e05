use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use qrelax::analysis::{AnalysisOptions, ErrorReport, Product};
use qrelax::io::{
    export_lp_file, parse_boxqp, parse_native, read_csv, read_lp_file, summarize_runs, write_csv,
    write_lp_string, ErrorReportRow, RunRecord,
};
use qrelax::model::{Method, MiqcqpInstance, RelaxConfig};
use qrelax::relaxer::{build_relaxation, relax_and_solve, ProductFragment, RelaxationResult};
use qrelax::solver::{compute_gap, solve_mip, MipResult, SolveLimits};

#[derive(Parser)]
#[command(
    name = "qrelax",
    version,
    about = "MIP relaxations of non-convex MIQCQPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a relaxation and write it in LP format with a JSON sidecar.
    Relax {
        instance: PathBuf,
        #[command(flatten)]
        relax: RelaxArgs,
        /// LP output; the sidecar goes next to it with a `.json` suffix.
        /// Without it the model is printed to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an LP-format model, or relax and solve an instance.
    Solve {
        path: PathBuf,
        #[command(flatten)]
        relax: RelaxArgs,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Measure the error of a single-term relaxation; prints one CSV row.
    Analyze {
        /// One of mc, mc-sq, nmdt, dnmdt, nmdt-sq, dnmdt-sq, sawtooth.
        #[arg(long)]
        method: Product,
        #[arg(long = "L", default_value_t = 1)]
        depth: u32,
        #[arg(long, default_value_t = qrelax::analysis::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, env = "QRELAX_SEED", default_value_t = qrelax::analysis::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = qrelax::analysis::DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Solve every instance in a directory with every method and depth.
    Bench {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "nmdt,tnmdt,dnmdt,tdnmdt")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
        depths: Vec<u32>,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Parallel jobs; rows then appear in completion order.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        maximize: bool,
        /// Run CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Performance-profile steps and shifted geometric means of a run CSV.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        shift: f64,
        /// Profile CSV; stdout when absent.
        #[arg(long)]
        profile_out: Option<PathBuf>,
        /// Shifted-geomean CSV; stdout when absent.
        #[arg(long)]
        sgm_out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RelaxArgs {
    #[arg(long, default_value = "dnmdt")]
    method: Method,
    #[arg(long = "L", default_value_t = 2)]
    depth: u32,
    #[arg(long = "L1")]
    tight_depth: Option<u32>,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Read boxQP files as maximization problems.
    #[arg(long)]
    maximize: bool,
}

impl RelaxArgs {
    fn config(&self) -> qrelax::Result<RelaxConfig> {
        let mut cfg = RelaxConfig::new(self.method, self.depth).with_lambda(self.lambda);
        if let Some(l1) = self.tight_depth {
            cfg = cfg.with_tight_depth(l1);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct LimitArgs {
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
}

impl LimitArgs {
    fn limits(&self) -> SolveLimits {
        let mut l = SolveLimits {
            rel_gap: self.gap,
            ..SolveLimits::default()
        };
        if let Some(n) = self.node_limit {
            l.max_nodes = n;
        }
        if let Some(t) = self.time_limit {
            l.max_seconds = t;
        }
        l
    }
}

fn is_lp(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("lp"))
}

/// `.json` files use the native format; anything else is read as boxQP.
fn load_instance(path: &Path, maximize: bool) -> Result<MiqcqpInstance> {
    let json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let inst = if json {
        parse_native(path)?
    } else {
        let b = parse_boxqp(path, maximize)?;
        for w in &b.warnings {
            warn!("{}: {w}", path.display());
        }
        b.instance
    };
    Ok(inst)
}

fn sidecar(r: &RelaxationResult) -> serde_json::Value {
    let name = |v: qrelax::model::VarId| r.model.var(v).name.clone();
    let terms: Vec<_> = r
        .term_map
        .terms
        .iter()
        .map(|t| {
            let discretized: Vec<usize> = match &t.product {
                ProductFragment::McCormick { .. } => vec![],
                ProductFragment::Nmdt { discretized, .. } => vec![discretized + 1],
                ProductFragment::Dnmdt(_) => {
                    if t.i == t.k {
                        vec![t.i + 1]
                    } else {
                        vec![t.i + 1, t.k + 1]
                    }
                }
            };
            json!({ "i": t.i + 1, "k": t.k + 1, "aux": name(t.aux), "discretized": discretized })
        })
        .collect();
    let digits: Vec<_> = r
        .term_map
        .digits
        .iter()
        .map(|(i, d)| {
            json!({
                "variable": i + 1,
                "binaries": d.beta.iter().map(|&b| name(b)).collect::<Vec<_>>(),
                "residual": name(d.delta),
            })
        })
        .collect();
    json!({
        "method": r.config.method.short_name(),
        "L": r.config.depth,
        "L1": r.config.method.is_tightened().then(|| r.config.l1()),
        "lambda": r.config.lambda,
        "variables": r.model.num_vars(),
        "rows": r.model.num_rows(),
        "binaries": r.model.num_binaries(),
        "term_counts": { "actual": r.actual_counts, "dense_prediction": r.predicted_counts },
        "x": r.x_vars.iter().map(|&v| name(v)).collect::<Vec<_>>(),
        "y": r.y_vars.iter().map(|&v| name(v)).collect::<Vec<_>>(),
        "terms": terms,
        "digits": digits,
    })
}

fn print_mip(out: &mut impl Write, res: &MipResult) -> io::Result<()> {
    writeln!(out, "status      {}", res.status)?;
    writeln!(out, "dual bound  {:.10}", res.dual_bound)?;
    writeln!(out, "incumbent   {:.10}", res.primal_bound())?;
    writeln!(out, "gap         {:.3e}", res.gap)?;
    writeln!(out, "nodes       {}", res.node_count)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Relax {
            instance,
            relax,
            out,
        } => {
            let cfg = relax.config()?;
            let inst = load_instance(&instance, relax.maximize)?;
            let r = build_relaxation(&inst, &cfg)?;
            match out {
                Some(path) => {
                    export_lp_file(&r.model, &path)?;
                    let side = path.with_extension("json");
                    std::fs::write(&side, serde_json::to_string_pretty(&sidecar(&r))? + "\n")?;
                    writeln!(
                        stdout,
                        "wrote {} ({} variables, {} rows, {} binaries) and {}",
                        path.display(),
                        r.model.num_vars(),
                        r.model.num_rows(),
                        r.model.num_binaries(),
                        side.display()
                    )?;
                }
                None => stdout.write_all(write_lp_string(&r.model).as_bytes())?,
            }
        }
        Command::Solve {
            path,
            relax,
            limits,
        } => {
            let limits = limits.limits();
            if is_lp(&path) {
                let model = read_lp_file(&path)?;
                print_mip(&mut stdout, &solve_mip(&model, &limits)?)?;
            } else {
                let cfg = relax.config()?;
                let inst = load_instance(&path, relax.maximize)?;
                let s = relax_and_solve(&inst, &cfg, &limits)?;
                print_mip(&mut stdout, &s.mip)?;
                match &s.recovery {
                    Some(rec) => {
                        let verdict = if rec.feasible {
                            "feasible"
                        } else {
                            "infeasible"
                        };
                        writeln!(
                            stdout,
                            "recovered   {:.10} ({verdict}, max violation {:.3e})",
                            rec.objective, rec.max_violation
                        )?;
                        writeln!(stdout, "x           {:?}", rec.x)?;
                        if !rec.y.is_empty() {
                            writeln!(stdout, "y           {:?}", rec.y)?;
                        }
                        if let Some(p) = s.primal_bound() {
                            writeln!(
                                stdout,
                                "instance gap {:.3e}",
                                compute_gap(p, s.mip.dual_bound)
                            )?;
                        }
                    }
                    None => writeln!(stdout, "recovered   none (no relaxation incumbent)")?,
                }
            }
        }
        Command::Analyze {
            method,
            depth,
            samples,
            seed,
            resolution,
        } => {
            let opts = AnalysisOptions {
                samples,
                seed,
                resolution,
            };
            let report = ErrorReport::compute(method, depth, &opts)?;
            write_csv(&mut stdout, &[ErrorReportRow::from(&report)])?;
        }
        Command::Bench {
            instances,
            methods,
            depths,
            time_limit,
            node_limit,
            jobs,
            maximize,
            out,
        } => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&instances)
                .with_context(|| format!("reading {}", instances.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            if files.is_empty() {
                bail!("no instance files in {}", instances.display());
            }
            let mut jobs_list = Vec::new();
            for f in &files {
                for &m in &methods {
                    for &l in &depths {
                        jobs_list.push((f.clone(), m, l));
                    }
                }
            }
            let limits = SolveLimits {
                max_seconds: time_limit,
                max_nodes: node_limit.unwrap_or(SolveLimits::default().max_nodes),
                ..SolveLimits::default()
            };
            let writer = Mutex::new(csv::Writer::from_writer(output(&out)?));
            let one = |(file, method, depth): &(PathBuf, Method, u32)| -> Result<()> {
                let rec = bench_one(file, *method, *depth, maximize, &limits)?;
                let mut w = writer.lock().expect("writer poisoned");
                w.serialize(&rec)?;
                w.flush()?;
                Ok(())
            };
            if jobs <= 1 {
                jobs_list.iter().try_for_each(one)?;
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()?
                    .install(|| jobs_list.par_iter().try_for_each(one))?;
            }
        }
        Command::Report {
            runs,
            shift,
            profile_out,
            sgm_out,
        } => {
            let records: Vec<RunRecord> = read_csv(
                File::open(&runs).with_context(|| format!("opening {}", runs.display()))?,
            )?;
            let summary = summarize_runs(&records, shift)?;
            write_csv(output(&profile_out)?, &summary.profile)?;
            if profile_out.is_none() && sgm_out.is_none() {
                writeln!(io::stdout())?;
            }
            write_csv(output(&sgm_out)?, &summary.sgm)?;
        }
    }
    Ok(())
}

fn bench_one(
    file: &Path,
    method: Method,
    depth: u32,
    maximize: bool,
    limits: &SolveLimits,
) -> Result<RunRecord> {
    let inst = load_instance(file, maximize)?;
    let cfg = RelaxConfig::new(method, depth);
    let name = file.file_stem().map_or_else(
        || file.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    let start = Instant::now();
    let s = relax_and_solve(&inst, &cfg, limits)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let dual = s.mip.dual_bound;
    let primal = s.primal_bound();
    info!("{name} {method} L={depth}: dual {dual:.6} in {wall_seconds:.2}s");
    Ok(RunRecord {
        instance: name,
        method: method.short_name().to_string(),
        depth,
        tight_depth: method.is_tightened().then(|| cfg.l1()),
        status: s.mip.status.to_string(),
        dual_bound: dual.is_finite().then_some(dual),
        primal_bound: primal,
        gap: primal
            .map(|p| compute_gap(p, dual))
            .filter(|g| g.is_finite()),
        nodes: s.mip.node_count,
        wall_seconds,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Invalid option combinations are usage errors, like clap's own.
            match e.downcast_ref::<qrelax::Error>() {
                Some(qrelax::Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
