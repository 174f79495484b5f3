//! `ispec`: critical temperatures, correlations and oracle checks for
//! periodic 2D Ising models.

mod output;
mod validate;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ispec::correlation::{self, LatticeEdge};
use ispec::fishergraph::{BRIDGE, EDGES_PER_SITE};
use ispec::model::parse_model;
use ispec::oracle::{self, Boundary};
use ispec::spectral;
use ispec::{Error, PeriodicIsingModel, WeightKind};

use output::{json_array, num};

#[derive(Parser, Debug)]
#[command(name = "ispec", version, about = "Exact critical temperatures and spin correlations of periodic 2D Ising models")]
struct Cli {
    /// Worker threads for parallel scans and symbol construction (0 = all cores).
    #[arg(long, global = true, env = "ISPEC_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Model document `{"m", "n", "Jh", "Jv"}`.
    model: PathBuf,
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical inverse temperature from the sign change of Pf K(1,1).
    CriticalTemp {
        #[command(flatten)]
        common: Common,
        /// Bisection tolerance on beta.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Squared spin correlations along the vertical line through column 0.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: f64,
        /// Largest separation (rounded down to a multiple of the vertical period).
        #[arg(long, default_value_t = 32)]
        max_n: usize,
        /// Circle points per direction for the symbol quadrature.
        #[arg(long, default_value_t = correlation::DEFAULT_GRID)]
        grid: usize,
        /// Symbol bandwidth.
        #[arg(long, default_value_t = correlation::DEFAULT_K_MAX)]
        k_max: usize,
        /// Window size (in blocks) for the Widom constant.
        #[arg(long, default_value_t = 64)]
        truncation: usize,
    },
    /// |P(z, w)| on a grid over the unit torus.
    SpectralScan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Weights::High)]
        weights: Weights,
    },
    /// Infinite-volume covariance of two dimer edges along the vertical axis.
    EdgeCorr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: f64,
        /// Template edge index at each site (0..9; 6 is the A-B bridge).
        #[arg(long, default_value_t = BRIDGE)]
        template: usize,
        /// Largest vertical separation in sites.
        #[arg(long, default_value_t = 12)]
        max_sep: usize,
        /// Quadrature points per direction.
        #[arg(long, default_value_t = correlation::DEFAULT_EDGE_GRID)]
        grid: usize,
    },
    /// Runs every oracle cross-check that fits the size limits.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Largest lattice enumerated spin by spin.
        #[arg(long, default_value_t = 16)]
        max_sites: usize,
        /// Bisection tolerance used to locate the critical point.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Roots of the Lee-Yang fugacity polynomial by exhaustive enumeration.
    LeeYang {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: f64,
        /// Horizontal replication (0 = largest fitting 16 sites).
        #[arg(long, default_value_t = 0)]
        s: usize,
        /// Vertical replication (0 = largest fitting 16 sites).
        #[arg(long, default_value_t = 0)]
        t: usize,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Torus)]
        boundary: BoundaryArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Weights {
    /// tanh(beta J) on the lattice.
    High,
    /// exp(-2 beta J) on the dual lattice.
    Low,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundaryArg {
    Torus,
    Free,
}

/// Failure of a run, with its exit status.
enum Failure {
    Usage(String),
    Numeric(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MalformedDocument(_)
            | Error::DimensionMismatch(_)
            | Error::NonPositiveCoupling { .. }
            | Error::InvalidArgument(_)
            | Error::TooLarge(_) => Failure::Usage(format!("{{\"error\":\"{}\",\"message\":{}}}", e.code(), output::string(&e.to_string()))),
            e => Failure::Numeric(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("{{\"error\":\"thread_pool\",\"message\":{}}}", output::string(&e.to_string()));
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("{{\"error\":\"{}\",\"message\":{}}}", e.code(), output::string(&e.to_string()));
            ExitCode::from(2)
        }
        Err(Failure::Validation) => ExitCode::from(2),
    }
}

fn load(path: &PathBuf) -> Result<PeriodicIsingModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Usage(format!(
            "{{\"error\":\"io\",\"message\":{}}}",
            output::string(&format!("{}: {e}", path.display()))
        ))
    })?;
    Ok(parse_model(&text)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    let res = match out {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| Failure::Usage(format!("{{\"error\":\"io\",\"message\":{}}}", output::string(&e.to_string()))))
}

fn positive_beta(beta: f64) -> Result<f64, Failure> {
    if beta > 0.0 && beta.is_finite() {
        Ok(beta)
    } else {
        Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")).into())
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::CriticalTemp { common, tol } => {
            let model = load(&common.model)?;
            let cp = spectral::critical_beta(&model, tol)?;
            let text = format!(
                "{{\"beta_c\":{},\"corner\":[{},{}],\"pf\":{},\"iterations\":{}}}\n",
                num(cp.beta_c),
                cp.report.argmin.0,
                cp.report.argmin.1,
                json_array(&cp.report.flat()),
                cp.iterations
            );
            emit(&common.out, &text)
        }
        Command::Correlate { common, beta, max_n, grid, k_max, truncation } => {
            let model = load(&common.model)?;
            let beta = positive_beta(beta)?;
            let symbol = correlation::build_symbol(&model, beta, grid, k_max)?;
            let l0 = symbol.l0();
            let ns: Vec<usize> = (1..=max_n / l0).map(|b| b * l0).collect();
            let series = correlation::spin_corr_series(&symbol, &ns)?;
            let (g, e) = correlation::widom_limit(&symbol, truncation)?;
            let points: Vec<(f64, f64)> = series.iter().map(|r| (r.n as f64, r.corr_sq)).collect();
            let alpha = correlation::decay_fit(&points, e.max(0.0)).ok().map(|f| f.alpha);
            let mut text = String::from("N,corr_sq,corr\n");
            for r in &series {
                text += &format!("{},{},{}\n", r.n, num(r.corr_sq), num(r.corr));
            }
            emit(&common.out, &text)?;
            eprintln!(
                "{{\"G\":{},\"E\":{},\"alpha\":{}}}",
                num(g),
                num(e),
                alpha.map_or("null".into(), num)
            );
            Ok(())
        }
        Command::SpectralScan { common, beta, grid, weights } => {
            let model = load(&common.model)?;
            let beta = positive_beta(beta)?;
            let w = match weights {
                Weights::High => model.weights(beta, WeightKind::HighTemp)?,
                Weights::Low => model.weights(beta, WeightKind::LowTemp)?.on_dual_lattice(),
            };
            let op = spectral::operator_from_weights(&w)?;
            let scan = spectral::scan_torus(&op, grid)?;
            let mut text = String::from("a,b,abs_p\n");
            for a in 0..grid {
                for b in 0..grid {
                    text += &format!("{a},{b},{}\n", num(scan.values[a * grid + b]));
                }
            }
            emit(&common.out, &text)?;
            let corner = scan.corner.map_or("null".into(), |(a, b)| format!("[{a},{b}]"));
            eprintln!(
                "{{\"min_abs\":{},\"argmin\":[{},{}],\"corner\":{}}}",
                num(scan.min_abs),
                scan.argmin.0,
                scan.argmin.1,
                corner
            );
            Ok(())
        }
        Command::EdgeCorr { common, beta, template, max_sep, grid } => {
            let model = load(&common.model)?;
            let beta = positive_beta(beta)?;
            if template >= EDGES_PER_SITE {
                return Err(Error::InvalidArgument(format!("template {template} out of range 0..{EDGES_PER_SITE}")).into());
            }
            let op = spectral::assemble(&model, beta, WeightKind::HighTemp)?;
            let e0 = LatticeEdge::new(0, 0, template);
            let p0 = correlation::edge_probability(&op, &[e0], grid)?;
            let mut text = String::from("d,p_joint,p_product,covariance\n");
            let mut points = Vec::new();
            for d in 1..=max_sep {
                let e1 = LatticeEdge::new(0, d as i64, template);
                let joint = correlation::edge_probability(&op, &[e0, e1], grid)?;
                let p1 = correlation::edge_probability(&op, &[e1], grid)?;
                let cov = joint - p0 * p1;
                points.push((d as f64, cov.abs()));
                text += &format!("{d},{},{},{}\n", num(joint), num(p0 * p1), num(cov));
            }
            emit(&common.out, &text)?;
            let tail: Vec<(f64, f64)> = points.into_iter().filter(|p| p.0 >= 2.0).collect();
            let alpha = correlation::decay_fit(&tail, 0.0).ok().map(|f| f.alpha);
            eprintln!("{{\"p_single\":{},\"alpha\":{}}}", num(p0), alpha.map_or("null".into(), num));
            Ok(())
        }
        Command::Validate { common, max_sites, tol } => {
            let model = load(&common.model)?;
            let checks = validate::run_checks(&model, max_sites, tol)?;
            let mut text = String::new();
            for c in &checks {
                text += &format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            emit(&common.out, &text)?;
            if checks.iter().all(|c| c.pass) {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
        Command::LeeYang { common, beta, s, t, boundary } => {
            let model = load(&common.model)?;
            let beta = positive_beta(beta)?;
            let (s, t) = match (s, t) {
                (0, _) | (_, 0) => validate::largest_replication(&model, oracle::MAX_LEE_YANG_SITES)
                    .ok_or_else(|| Error::TooLarge(format!("model has more than {} sites", oracle::MAX_LEE_YANG_SITES)))?,
                st => st,
            };
            let b = match boundary {
                BoundaryArg::Torus => Boundary::Torus,
                BoundaryArg::Free => Boundary::Free,
            };
            let rep = oracle::lee_yang_check(&model, beta, s, t, b)?;
            let roots: Vec<String> = rep.roots.iter().map(|r| format!("[{},{}]", num(r.re), num(r.im))).collect();
            let text = format!(
                "{{\"s\":{s},\"t\":{t},\"sites\":{},\"max_deviation\":{},\"roots\":[{}]}}\n",
                s * t * model.sites(),
                num(rep.max_deviation),
                roots.join(",")
            );
            emit(&common.out, &text)
        }
    }
}
