use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::config::{CaseName, Command, GenKind, RunConfig};
use super::THREADS_ENV;
use crate::error::{NmdError, Result};
use crate::io::{
    inject_noise, load_dense_csv, load_matrix, sha256_file, sha256_matrix, synth_blobs, synth_relu, write_dense_csv,
    write_matrix, write_trace, TraceMeta,
};
use crate::matmodel::ObservedMatrix;
use crate::regularizers::{GraphLaplacian, RegularizerCase};
use crate::solvers::{SolveOutput, Solver, TraceRecord};
use crate::tasks::{cluster_pipeline_with, compress_pipeline, knn_graph_laplacian, ClusterConfig};

/// Concurrent bench runs allowed by `RELU_NMD_THREADS` (default: available
/// cores).
pub fn bench_threads() -> std::result::Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got `{v}`")),
        },
    }
}

/// One line of `comparison.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub solver: Solver,
    pub iterations: usize,
    pub final_rel_error: f64,
    pub best_rel_error: f64,
    pub final_objective: f64,
    pub wall_time: f64,
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        Command::Generate => generate(cfg),
        Command::Decompose => decompose(cfg),
        Command::Cluster => cluster(cfg),
        Command::Compress => compress(cfg),
        Command::Bench => bench(cfg),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| NmdError::io(path, e))
}

fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| NmdError::io(dir, e))
}

fn required<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| NmdError::invalid(format!("{what} is required")))
}

fn load_input(path: &Path) -> Result<(ObservedMatrix, String)> {
    let data = load_matrix(path)?;
    let sha = sha256_file(path)?;
    Ok((ObservedMatrix::new(data)?, sha))
}

fn build_case(cfg: &RunConfig, data: &Array2<f64>) -> Result<RegularizerCase> {
    let (eta1, eta2) = (cfg.eta1, cfg.eta2);
    Ok(match cfg.case {
        CaseName::None => RegularizerCase::None,
        CaseName::Tikhonov => RegularizerCase::Tikhonov { eta1, eta2 },
        CaseName::L1L1 => RegularizerCase::L1L1 { eta1, eta2 },
        CaseName::L1MinusFro => RegularizerCase::L1MinusFro { eta1, eta2 },
        CaseName::Sparsity => RegularizerCase::sparsity(cfg.s1, cfg.s2, cfg.s_scope),
        CaseName::Graph => {
            let lap = GraphLaplacian::new(knn_graph_laplacian(data, cfg.neighbors)?)?;
            RegularizerCase::graph(cfg.mu0, eta1, eta2, lap)
        }
    })
}

fn case_label(case: &RegularizerCase) -> String {
    match case {
        RegularizerCase::None => "none".into(),
        RegularizerCase::Tikhonov { eta1, eta2 }
        | RegularizerCase::L1L1 { eta1, eta2 }
        | RegularizerCase::L1MinusFro { eta1, eta2 } => format!("{}(eta1={eta1:?};eta2={eta2:?})", case.name()),
        RegularizerCase::GraphTikhonov { mu0, eta1, eta2, .. } => {
            format!("graph(mu0={mu0:?};eta1={eta1:?};eta2={eta2:?})")
        }
        RegularizerCase::SparsityConstraint { s1, s2, scope } => {
            let s = |x: &Option<usize>| x.map_or("off".to_string(), |v| v.to_string());
            format!("sparsity(s1={};s2={};scope={})", s(s1), s(s2), scope.name())
        }
    }
}

fn meta_for(cfg: &RunConfig, solver: Solver, case: &str, sha: &str, out: &SolveOutput) -> TraceMeta {
    let beta = match solver {
        Solver::Apb | Solver::Ppalm => 0.0,
        _ => cfg.beta,
    };
    TraceMeta::new(solver.name(), case, cfg.seed, cfg.lambda, beta, sha)
        .with("rank", out.pair.rank())
        .with("phi_star", "running_min")
        .with("phi_min", format!("{:?}", out.phi_min))
        .with("beta_fallbacks", out.beta_fallbacks)
        .with("stop", format!("{:?}", out.stop))
        .with("timing", cfg.timing)
}

/// Wall-clock times are zeroed unless timing was requested, so repeated
/// runs produce identical files.
fn trace_rows(cfg: &RunConfig, trace: &[TraceRecord]) -> Vec<TraceRecord> {
    trace
        .iter()
        .map(|r| TraceRecord {
            wall_time: if cfg.timing { r.wall_time } else { 0.0 },
            ..*r
        })
        .collect()
}

fn generate(cfg: &RunConfig) -> Result<()> {
    match cfg.kind {
        GenKind::Relu => {
            let (m, u, v) = synth_relu(cfg.m, cfg.n, cfg.r_star, cfg.seed)?;
            prepare_output(&cfg.output)?;
            write_matrix(cfg.output.join("M.mtx"), &m)?;
            write_dense_csv(cfg.output.join("U_star.csv"), &u)?;
            write_dense_csv(cfg.output.join("V_star.csv"), &v)?;
        }
        GenKind::Blobs => {
            let (x, labels) = synth_blobs(cfg.m, cfg.k, cfg.dim, cfg.separation, cfg.seed)?;
            let x = if cfg.noise_cols > 0 {
                inject_noise(&x, cfg.noise_cols, cfg.noise_scale, cfg.seed.wrapping_add(1))?
            } else {
                x
            };
            prepare_output(&cfg.output)?;
            write_dense_csv(cfg.output.join("M.csv"), &x)?;
            write_labels(&cfg.output.join("labels.csv"), &labels)?;
        }
    }
    Ok(())
}

fn decompose(cfg: &RunConfig) -> Result<()> {
    let (obs, sha) = load_input(required(&cfg.input, "input")?)?;
    let case = build_case(cfg, obs.data())?;
    let opts = cfg.solve_options(*required(&cfg.rank, "rank")?);
    let out = cfg.solver.run(&obs, &case, &opts)?;
    prepare_output(&cfg.output)?;
    write_dense_csv(cfg.output.join("U.csv"), out.pair.u())?;
    write_dense_csv(cfg.output.join("V.csv"), out.pair.v())?;
    let meta = meta_for(cfg, cfg.solver, &case_label(&case), &sha, &out);
    write_trace(cfg.output.join("trace.csv"), &trace_rows(cfg, &out.trace), &meta)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let a = load_dense_csv(path)?;
    if a.ncols() != 1 {
        return Err(NmdError::invalid(format!("{}: labels need exactly one column", path.display())));
    }
    a.iter()
        .map(|&x| {
            if x >= 0.0 && x.fract() == 0.0 && x < usize::MAX as f64 {
                Ok(x as usize)
            } else {
                Err(NmdError::invalid(format!("{}: label {x} is not a nonnegative integer", path.display())))
            }
        })
        .collect()
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 2);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    write_text(path, &s)
}

fn bregman_opts(cfg: &RunConfig, rank: usize, what: &str) -> Result<crate::solvers::SolveOptions> {
    let mut opts = cfg.solve_options(rank);
    match cfg.solver {
        Solver::Aapb => {}
        Solver::Apb => opts.beta = 0.0,
        other => {
            return Err(NmdError::Unsupported(format!("{what} runs aapb or apb, not {other}")));
        }
    }
    Ok(opts)
}

fn cluster(cfg: &RunConfig) -> Result<()> {
    let (obs, sha) = load_input(required(&cfg.input, "input")?)?;
    let truth = read_labels(required(&cfg.labels, "labels")?)?;
    let classes = truth.iter().max().map_or(1, |&k| k + 1);
    let opts = bregman_opts(cfg, cfg.rank.unwrap_or(classes), "cluster")?;
    let config = ClusterConfig {
        mu0: cfg.mu0,
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        neighbors: cfg.neighbors,
        ..Default::default()
    };
    let res = cluster_pipeline_with(&obs, &truth, &config, &opts)?;
    prepare_output(&cfg.output)?;
    write_labels(&cfg.output.join("labels.csv"), &res.labels)?;
    write_text(&cfg.output.join("accuracy.txt"), &format!("{:?}\n", res.accuracy_percent))?;
    write_dense_csv(cfg.output.join("U.csv"), res.factor.u())?;
    let case = format!("graph(mu0={:?};eta1={:?};eta2={:?};p={})", cfg.mu0, cfg.eta1, cfg.eta2, cfg.neighbors);
    let meta = meta_for(cfg, cfg.solver, &case, &sha, &res.solve);
    write_trace(cfg.output.join("trace.csv"), &trace_rows(cfg, &res.solve.trace), &meta)
}

fn compress(cfg: &RunConfig) -> Result<()> {
    let input = required(&cfg.input, "input")?;
    let u_tilde = load_matrix(input)?;
    let sha = sha256_file(input)?;
    let original = cfg.data.as_deref().map(load_matrix).transpose()?;
    let r = u_tilde.ncols();
    let s2 = cfg.s2.unwrap_or((r as f64 / 1.2).floor() as usize);
    let r_prime = *required(&cfg.r_prime, "r_prime")?;
    let opts = bregman_opts(cfg, r_prime, "compress")?;
    let res = compress_pipeline(&u_tilde, r_prime, s2, &opts, original.as_ref())?;
    prepare_output(&cfg.output)?;
    write_dense_csv(cfg.output.join("U.csv"), res.factor.u())?;
    write_dense_csv(cfg.output.join("V.csv"), res.factor.v())?;
    let mut tol = format!("tol_nmd={:?}\n", res.tol_nmd);
    if let Some(t) = res.tol_nmf {
        tol.push_str(&format!("tol_nmf={t:?}\n"));
    }
    write_text(&cfg.output.join("tol.txt"), &tol)?;
    let case = crate::tasks::compression_case(s2);
    let meta = meta_for(cfg, cfg.solver, &case_label(&case), &sha, &res.solve);
    write_trace(cfg.output.join("trace.csv"), &trace_rows(cfg, &res.solve.trace), &meta)
}

/// Runs `solvers` on one problem with at most `threads` concurrent runs.
/// Results keep the order of `solvers`.
pub fn run_bench(
    obs: &ObservedMatrix,
    case: &RegularizerCase,
    opts: &crate::solvers::SolveOptions,
    solvers: &[Solver],
    threads: usize,
) -> Result<Vec<SolveOutput>> {
    let mut results: Vec<Option<Result<SolveOutput>>> = (0..solvers.len()).map(|_| None).collect();
    for (chunk_solvers, chunk_out) in solvers.chunks(threads.max(1)).zip(results.chunks_mut(threads.max(1))) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk_solvers
                .iter()
                .map(|solver| s.spawn(move || solver.run(obs, case, opts)))
                .collect();
            for (slot, h) in chunk_out.iter_mut().zip(handles) {
                *slot = Some(h.join().unwrap_or_else(|_| Err(NmdError::invalid("solver thread panicked"))));
            }
        });
    }
    results.into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn bench(cfg: &RunConfig) -> Result<()> {
    let threads = bench_threads().map_err(NmdError::invalid)?;
    let (obs, sha) = match &cfg.input {
        Some(p) => load_input(p)?,
        None => {
            let (m, _, _) = synth_relu(cfg.m, cfg.n, cfg.r_star, cfg.seed)?;
            let sha = sha256_matrix(&m);
            (ObservedMatrix::new(m)?, sha)
        }
    };
    let case = build_case(cfg, obs.data())?;
    let opts = cfg.solve_options(*required(&cfg.rank, "rank")?);
    let outputs = run_bench(&obs, &case, &opts, &cfg.solvers, threads)?;

    let rows: Vec<BenchRow> = cfg
        .solvers
        .iter()
        .zip(&outputs)
        .map(|(&solver, out)| {
            let last = out.trace.last();
            BenchRow {
                solver,
                iterations: out.trace.len(),
                final_rel_error: last.map_or(f64::NAN, |r| r.rel_error),
                best_rel_error: out.trace.iter().map(|r| r.rel_error).fold(f64::INFINITY, f64::min),
                final_objective: last.map_or(f64::NAN, |r| r.objective),
                wall_time: if cfg.timing { last.map_or(0.0, |r| r.wall_time) } else { 0.0 },
            }
        })
        .collect();
    let e_min = rows.iter().map(|r| r.best_rel_error).fold(f64::INFINITY, f64::min);

    prepare_output(&cfg.output)?;
    let mut csv = String::from("solver,iterations,final_rel_error,best_rel_error,final_objective,wall_time\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{:?},{:?},{:?},{:?}\n",
            r.solver, r.iterations, r.final_rel_error, r.best_rel_error, r.final_objective, r.wall_time
        ));
    }
    write_text(&cfg.output.join("comparison.csv"), &csv)?;
    write_text(&cfg.output.join("e_min.txt"), &format!("{e_min:?}\n"))?;
    for (&solver, out) in cfg.solvers.iter().zip(&outputs) {
        let meta = meta_for(cfg, solver, &case_label(&case), &sha, out).with("e_min", format!("{e_min:?}"));
        write_trace(
            cfg.output.join(format!("trace_{solver}.csv")),
            &trace_rows(cfg, &out.trace),
            &meta,
        )?;
    }
    Ok(())
}
