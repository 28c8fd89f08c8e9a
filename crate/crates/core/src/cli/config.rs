use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::regularizers::SparsityScope;
use crate::solvers::{SolveOptions, Solver};

/// Every key accepted on the command line (as `--key`, dashes for
/// underscores) and in a config file (as `key=value`).
pub const KEYS: &[&str] = &[
    "input", "labels", "data", "output", "rank", "case", "eta1", "eta2", "mu0", "s1", "s2", "s_scope",
    "solver", "solvers", "lambda", "beta", "max_iter", "max_time", "tol", "seed", "assumption_check",
    "timing", "kind", "m", "n", "r_star", "k", "dim", "separation", "noise_cols", "noise_scale",
    "neighbors", "r_prime",
];

#[derive(Debug, Parser)]
#[command(name = "relu-nmd", version, about = "ReLU nonlinear matrix decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandLine,
}

#[derive(Debug, Subcommand)]
pub enum CommandLine {
    /// Write a synthetic ReLU matrix or clustering fixture.
    Generate(Flags),
    /// Factor a matrix and write U, V and the trace.
    Decompose(Flags),
    /// Graph-regularized clustering of the rows of a matrix.
    Cluster(Flags),
    /// Sparse compression of a nonnegative basis.
    Compress(Flags),
    /// Run several solvers on one problem and compare them.
    Bench(Flags),
}

/// Flags shared by every command. Values stay strings until validation so
/// that all problems are reported together.
#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Flat `key=value` file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<String>,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub labels: Option<String>,
    /// Original data for the compressed basis.
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub rank: Option<String>,
    /// none | tikhonov | l1l1 | graph | l1-minus-fro | sparsity
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub eta1: Option<String>,
    #[arg(long)]
    pub eta2: Option<String>,
    #[arg(long)]
    pub mu0: Option<String>,
    #[arg(long)]
    pub s1: Option<String>,
    #[arg(long)]
    pub s2: Option<String>,
    /// global | per-column
    #[arg(long)]
    pub s_scope: Option<String>,
    /// aapb | apb | ppalm | ippalm
    #[arg(long)]
    pub solver: Option<String>,
    /// Comma-separated list for bench.
    #[arg(long)]
    pub solvers: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    /// Seconds.
    #[arg(long)]
    pub max_time: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub assumption_check: Option<String>,
    /// Record real wall-clock times in traces (breaks bitwise reproducibility).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<String>,
    /// relu | blobs
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub r_star: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long)]
    pub separation: Option<String>,
    #[arg(long)]
    pub noise_cols: Option<String>,
    #[arg(long)]
    pub noise_scale: Option<String>,
    #[arg(long)]
    pub neighbors: Option<String>,
    #[arg(long)]
    pub r_prime: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("input", &self.input),
            ("labels", &self.labels),
            ("data", &self.data),
            ("output", &self.output),
            ("rank", &self.rank),
            ("case", &self.case),
            ("eta1", &self.eta1),
            ("eta2", &self.eta2),
            ("mu0", &self.mu0),
            ("s1", &self.s1),
            ("s2", &self.s2),
            ("s_scope", &self.s_scope),
            ("solver", &self.solver),
            ("solvers", &self.solvers),
            ("lambda", &self.lambda),
            ("beta", &self.beta),
            ("max_iter", &self.max_iter),
            ("max_time", &self.max_time),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("assumption_check", &self.assumption_check),
            ("timing", &self.timing),
            ("kind", &self.kind),
            ("m", &self.m),
            ("n", &self.n),
            ("r_star", &self.r_star),
            ("k", &self.k),
            ("dim", &self.dim),
            ("separation", &self.separation),
            ("noise_cols", &self.noise_cols),
            ("noise_scale", &self.noise_scale),
            ("neighbors", &self.neighbors),
            ("r_prime", &self.r_prime),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Decompose,
    Cluster,
    Compress,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    None,
    Tikhonov,
    L1L1,
    Graph,
    L1MinusFro,
    Sparsity,
}

impl CaseName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "none" => CaseName::None,
            "tikhonov" => CaseName::Tikhonov,
            "l1l1" => CaseName::L1L1,
            "graph" => CaseName::Graph,
            "l1-minus-fro" | "l1minusfro" => CaseName::L1MinusFro,
            "sparsity" => CaseName::Sparsity,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Relu,
    Blobs,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub output: PathBuf,
    pub rank: Option<usize>,
    pub case: CaseName,
    pub eta1: f64,
    pub eta2: f64,
    pub mu0: f64,
    pub s1: Option<usize>,
    pub s2: Option<usize>,
    pub s_scope: SparsityScope,
    pub solver: Solver,
    pub solvers: Vec<Solver>,
    pub lambda: f64,
    pub beta: f64,
    pub max_iter: usize,
    pub max_time: f64,
    pub tol: f64,
    pub seed: u64,
    pub assumption_check: bool,
    pub timing: bool,
    pub kind: GenKind,
    pub m: usize,
    pub n: usize,
    pub r_star: usize,
    pub k: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise_cols: usize,
    pub noise_scale: f64,
    pub neighbors: usize,
    pub r_prime: Option<usize>,
}

impl RunConfig {
    /// Solver options for `rank`.
    pub fn solve_options(&self, rank: usize) -> SolveOptions {
        SolveOptions {
            rank,
            lambda: self.lambda,
            beta: self.beta,
            max_iter: self.max_iter,
            max_time: self.max_time,
            tol: self.tol,
            seed: self.seed,
            assumption_check: self.assumption_check,
            ..Default::default()
        }
    }
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String, usize)>, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read config file {}: {e}", path.display())])?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.split_once('=') {
            Some((k, v)) => out.push((k.trim().replace('-', "_"), v.trim().to_string(), i + 1)),
            None => errors.push(format!("{}:{}: expected key=value", path.display(), i + 1)),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

struct Fields {
    values: BTreeMap<&'static str, String>,
    errors: Vec<String>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let raw = self.values.get(key)?.clone();
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("{key}: cannot parse `{raw}`"));
                None
            }
        }
    }

    fn num(&mut self, key: &str, default: f64, ok: impl Fn(f64) -> bool, range: &str) -> f64 {
        match self.parse::<f64>(key) {
            Some(v) if ok(v) => v,
            Some(v) => {
                self.errors.push(format!("{key}: {v} is out of range ({range})"));
                default
            }
            None => default,
        }
    }

    fn count(&mut self, key: &str, min: usize) -> Option<usize> {
        let v = self.parse::<usize>(key)?;
        if v < min {
            self.errors.push(format!("{key}: must be at least {min}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn flag(&mut self, key: &str) -> bool {
        match self.raw(key).map(|s| s.to_ascii_lowercase()) {
            None => false,
            Some(s) if s == "true" || s == "1" || s == "yes" => true,
            Some(s) if s == "false" || s == "0" || s == "no" => false,
            Some(s) => {
                self.errors.push(format!("{key}: expected true or false, got `{s}`"));
                false
            }
        }
    }

    fn path(&mut self, key: &str, must_exist: bool) -> Option<PathBuf> {
        let p = PathBuf::from(self.raw(key)?);
        if must_exist && !p.is_file() {
            self.errors.push(format!("{key}: file {} does not exist", p.display()));
        }
        Some(p)
    }
}

fn known_key(k: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|&key| key == k)
}

/// Merges the config file (if any) with the flags, flags winning, and
/// validates everything. Returns every problem found.
pub fn parse_config(command: Command, flags: &Flags) -> Result<RunConfig, Vec<String>> {
    let mut values = BTreeMap::new();
    let mut errors = Vec::new();
    if let Some(path) = &flags.config {
        match read_config_file(path) {
            Ok(entries) => {
                for (k, v, line) in entries {
                    match known_key(&k) {
                        Some(key) => {
                            values.insert(key, v);
                        }
                        None => errors.push(format!("{}:{line}: unknown key `{k}`", path.display())),
                    }
                }
            }
            Err(e) => errors.extend(e),
        }
    }
    for (key, v) in flags.pairs() {
        if let Some(v) = v {
            values.insert(key, v.clone());
        }
    }
    let mut f = Fields { values, errors };
    let cfg = build(command, &mut f);
    if f.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(f.errors)
    }
}

fn build(command: Command, f: &mut Fields) -> RunConfig {
    let needs_input = matches!(command, Command::Decompose | Command::Cluster | Command::Compress);
    let input = f.path("input", true);
    if needs_input && input.is_none() {
        f.errors.push("input: required for this command".into());
    }
    let labels = f.path("labels", true);
    if command == Command::Cluster && labels.is_none() {
        f.errors.push("labels: required for cluster".into());
    }
    let data = f.path("data", true);
    let output = PathBuf::from(f.raw("output").unwrap_or("out"));

    let rank = f.count("rank", 1);
    if matches!(command, Command::Decompose | Command::Bench) && rank.is_none() && f.raw("rank").is_none() {
        f.errors.push("rank: required for this command".into());
    }
    let default_case = match command {
        Command::Cluster => CaseName::Graph,
        Command::Compress => CaseName::Sparsity,
        _ => CaseName::None,
    };
    let case = match f.raw("case").map(|s| s.to_string()) {
        None => default_case,
        Some(s) => CaseName::parse(&s).unwrap_or_else(|| {
            f.errors.push(format!(
                "case: unknown `{s}` (expected none, tikhonov, l1l1, graph, l1-minus-fro, sparsity)"
            ));
            default_case
        }),
    };
    let nonneg = |x: f64| x >= 0.0 && x.is_finite();
    let eta_default = if command == Command::Cluster { 0.1 } else { 0.0 };
    let eta1 = f.num("eta1", eta_default, nonneg, ">= 0");
    let eta2 = f.num("eta2", eta_default, nonneg, ">= 0");
    let mu0 = f.num("mu0", 100.0, nonneg, ">= 0");
    let s1 = f.count("s1", 0);
    let s2 = f.count("s2", 0);
    let s_scope = match f.raw("s_scope").map(|s| s.to_ascii_lowercase()) {
        None if command == Command::Compress => SparsityScope::PerColumn,
        None => SparsityScope::Global,
        Some(s) if s == "global" => SparsityScope::Global,
        Some(s) if s == "per-column" || s == "per_column" || s == "column" => SparsityScope::PerColumn,
        Some(s) => {
            f.errors.push(format!("s_scope: unknown `{s}` (expected global or per-column)"));
            SparsityScope::Global
        }
    };
    let solver = match f.raw("solver").map(|s| s.to_string()) {
        None => Solver::Aapb,
        Some(s) => s.parse().unwrap_or_else(|e: crate::NmdError| {
            f.errors.push(e.to_string());
            Solver::Aapb
        }),
    };
    if matches!(command, Command::Cluster | Command::Compress) && !matches!(solver, Solver::Aapb | Solver::Apb) {
        f.errors.push(format!("solver: {command:?} runs aapb or apb, not {solver}").to_lowercase());
    }
    let solvers = match f.raw("solvers").map(|s| s.to_string()) {
        None => Solver::ALL.to_vec(),
        Some(list) => {
            let mut out = Vec::new();
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match name.parse::<Solver>() {
                    Ok(s) if !out.contains(&s) => out.push(s),
                    Ok(_) => f.errors.push(format!("solvers: `{name}` listed twice")),
                    Err(e) => f.errors.push(e.to_string()),
                }
            }
            if out.is_empty() {
                f.errors.push("solvers: list is empty".into());
            }
            out
        }
    };
    let lambda = f.num("lambda", 1.0, |x| x > 0.0 && x <= 1.0, "0 < lambda <= 1");
    let beta = f.num("beta", 0.6, |x| (0.0..1.0).contains(&x), "0 <= beta < 1");
    let max_iter = f.count("max_iter", 0).unwrap_or(1000);
    let max_time = f.num("max_time", f64::INFINITY, |x| x > 0.0, "> 0");
    let tol = f.num("tol", 1e-4, nonneg, ">= 0");
    let seed = f.parse::<u64>("seed").unwrap_or(0);
    let assumption_check = f.flag("assumption_check");
    let timing = f.flag("timing");
    let kind = match f.raw("kind").map(|s| s.to_ascii_lowercase()) {
        None => GenKind::Relu,
        Some(s) if s == "relu" => GenKind::Relu,
        Some(s) if s == "blobs" => GenKind::Blobs,
        Some(s) => {
            f.errors.push(format!("kind: unknown `{s}` (expected relu or blobs)"));
            GenKind::Relu
        }
    };
    let m = f.count("m", 1).unwrap_or(200);
    let n = f.count("n", 1).unwrap_or(100);
    let r_star = f.count("r_star", 1).unwrap_or(5);
    let k = f.count("k", 1).unwrap_or(3);
    let dim = f.count("dim", 1).unwrap_or(5);
    let separation = f.num("separation", 6.0, nonneg, ">= 0");
    let noise_cols = f.count("noise_cols", 0).unwrap_or(0);
    let noise_scale = f.num("noise_scale", 1.0, nonneg, ">= 0");
    let neighbors = f.count("neighbors", 1).unwrap_or(5);
    let r_prime = f.count("r_prime", 1);
    if command == Command::Compress && r_prime.is_none() && f.raw("r_prime").is_none() {
        f.errors.push("r_prime: required for compress".into());
    }
    if command == Command::Generate && kind == GenKind::Relu && r_star > m.min(n) {
        f.errors.push(format!("r_star: {r_star} exceeds min(m, n) = {}", m.min(n)));
    }
    if command == Command::Generate && kind == GenKind::Blobs && k > m {
        f.errors.push(format!("k: {k} exceeds m = {m}"));
    }
    if command == Command::Bench && input.is_none() && r_star > m.min(n) {
        f.errors.push(format!("r_star: {r_star} exceeds min(m, n) = {}", m.min(n)));
    }

    RunConfig {
        command,
        input,
        labels,
        data,
        output,
        rank,
        case,
        eta1,
        eta2,
        mu0,
        s1,
        s2,
        s_scope,
        solver,
        solvers,
        lambda,
        beta,
        max_iter,
        max_time,
        tol,
        seed,
        assumption_check,
        timing,
        kind,
        m,
        n,
        r_star,
        k,
        dim,
        separation,
        noise_cols,
        noise_scale,
        neighbors,
        r_prime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> (Command, Flags) {
        let mut v = vec!["relu-nmd"];
        v.extend_from_slice(args);
        let cli = Cli::try_parse_from(v).unwrap();
        super::super::split(cli)
    }

    #[test]
    fn decompose_example() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("M.mtx");
        std::fs::write(&input, "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n").unwrap();
        let input = input.to_str().unwrap();
        let (c, f) = flags(&[
            "decompose", "--input", input, "--rank", "12", "--case", "l1l1", "--eta1", "0.01", "--eta2", "0.015",
        ]);
        let cfg = parse_config(c, &f).unwrap();
        assert_eq!(cfg.rank, Some(12));
        assert_eq!(cfg.case, CaseName::L1L1);
        assert_eq!((cfg.eta1, cfg.eta2), (0.01, 0.015));
        assert_eq!((cfg.beta, cfg.lambda, cfg.tol), (0.6, 1.0, 1e-4));
    }

    #[test]
    fn all_errors_are_reported() {
        let (c, f) = flags(&["decompose", "--beta", "1.0", "--lambda", "2", "--case", "nope"]);
        let errs = parse_config(c, &f).unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("beta")));
        assert!(errs.iter().any(|e| e.starts_with("lambda")));
        assert!(errs.iter().any(|e| e.starts_with("case")));
        assert!(errs.iter().any(|e| e.starts_with("input")));
        assert!(errs.iter().any(|e| e.starts_with("rank")));
    }

    #[test]
    fn flags_override_file_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let cfgfile = dir.path().join("run.cfg");
        std::fs::write(&cfgfile, "# comment\nrank=3\nbeta=0.2\nmax-iter=7\n").unwrap();
        let p = cfgfile.to_str().unwrap();
        let (c, f) = flags(&["bench", "--config", p, "--beta", "0.5"]);
        let cfg = parse_config(c, &f).unwrap();
        assert_eq!(cfg.beta, 0.5);
        assert_eq!(cfg.rank, Some(3));
        assert_eq!(cfg.max_iter, 7);

        std::fs::write(&cfgfile, "rank=3\ncolour=blue\n").unwrap();
        let (c, f) = flags(&["bench", "--config", p]);
        let errs = parse_config(c, &f).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("unknown key `colour`"));
    }

    #[test]
    fn missing_input_file_is_an_error() {
        let (c, f) = flags(&["decompose", "--input", "/nonexistent/M.mtx", "--rank", "2"]);
        let errs = parse_config(c, &f).unwrap_err();
        assert!(errs[0].contains("does not exist"));
    }
}
