//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on numerical failure (a diagnostic JSON object
//! goes to stderr), 2 on invalid input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::continuation::{random_perturbation, solve_for_g, trace_branch, NewtonConfig};
use crate::error::{Error, Result};
use crate::geometry::{Kind, ProblemParams, ShapeCoeffs};
use crate::harmonics::exact::invariant_harmonic_poly;
use crate::overdet::{
    decomposition_defect, divergence_identity_gap, extract_d, heintze_karcher_gap, phi_of,
    serrin_residual,
};
use crate::radial;
use crate::solver::{solve_transmission, Discretization, Phase, SpectralSolution};

#[derive(Debug, Parser)]
#[command(
    name = "overdet",
    version,
    about = "Two-phase curvature-overdetermined free boundaries"
)]
struct Cli {
    /// Cap on worker threads for parallel Jacobians.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical conductivities s_k as CSV.
    CriticalValues {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = radial::DEFAULT_KMAX)]
        kmax: usize,
    },
    /// Linearized spectrum beta_k as CSV.
    Beta {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Concentric-ball state as JSON.
    Trivial {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        sigma: f64,
        /// Radii at which to tabulate u.
        #[arg(long, value_delimiter = ',')]
        points: Vec<f64>,
    },
    /// Solve the state problem of a problem file.
    Solve(ProblemArgs),
    /// Verification report for the state of a problem file.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Print a table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Solve for the outer boundary g given the core perturbation f.
    FindG {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Largest unknown degree (default: half the truncation).
        #[arg(long)]
        modes: Option<usize>,
        /// Also restart from a perturbed solution drawn with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Sup-norm of the restart perturbation.
        #[arg(long, default_value_t = 0.01)]
        restart_amplitude: f64,
    },
    /// Trace a bifurcation branch as CSV.
    Branch {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        truncation: usize,
        #[arg(long)]
        collocation: Option<usize>,
        #[arg(long, default_value_t = 16)]
        modes: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Exact invariant harmonic polynomial as JSON.
    HarmonicPoly {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        degree: usize,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Numerical tolerances of a problem file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub newton: f64,
    pub rank: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton: 1e-9,
            rank: 1e-14,
            max_iter: 25,
        }
    }
}

/// Problem description read by `solve`, `verify` and `find-g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub core_radius: f64,
    pub sigma: f64,
    pub truncation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collocation: Option<usize>,
    #[serde(default)]
    pub f_modes: Vec<(usize, Kind, f64)>,
    #[serde(default)]
    pub g_modes: Vec<(usize, Kind, f64)>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param("problem", e.to_string()))
    }

    pub fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.dim, self.core_radius, self.sigma)
    }

    pub fn discretization(&self) -> Discretization {
        let mut d = Discretization::new(self.dim, self.truncation);
        if let Some(m) = self.collocation {
            d.collocation = m;
        }
        d.rank_tol = self.tolerances.rank;
        d
    }

    pub fn shapes(&self) -> Result<(ShapeCoeffs, ShapeCoeffs)> {
        Ok((
            ShapeCoeffs::from_modes(self.dim, &self.f_modes, 0)?,
            ShapeCoeffs::from_modes(self.dim, &self.g_modes, 0)?,
        ))
    }
}

/// Output of `trivial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialOutput {
    pub params: ProblemParams,
    pub u_origin: f64,
    pub d: f64,
    pub profile: Vec<(f64, f64)>,
}

/// Output of `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub params: ProblemParams,
    pub truncation: usize,
    pub collocation: usize,
    pub residual: ResidualOutput,
    pub inner: ExpansionOutput,
    pub outer_growing: ExpansionOutput,
    pub outer_decaying: ExpansionOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualOutput {
    pub value_jump: f64,
    pub flux_jump: f64,
    pub dirichlet: f64,
    pub max: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionOutput {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

/// Output of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub state_residual: f64,
    pub phi_sup: f64,
    pub phi_mean: f64,
    pub d_integral: Option<f64>,
    pub d_pointwise_mean: Option<f64>,
    pub d_spread: Option<f64>,
    pub heintze_karcher_gap: Option<f64>,
    pub divergence_gap: f64,
    pub interface_flux: f64,
    pub serrin_sup: f64,
    pub serrin_c: f64,
    pub decomposition_defect: f64,
}

/// Output of `find-g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindGOutput {
    pub g_modes: Vec<(usize, Kind, f64)>,
    pub residual: f64,
    pub d_integral: f64,
    pub d_spread: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartOutput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartOutput {
    pub seed: u64,
    pub amplitude: f64,
    pub iterations: usize,
    /// Largest coefficient difference to the first solution.
    pub distance: f64,
}

/// Output of `harmonic-poly`: coefficients of `x_1^{2i+ε}|x'|^{2(j-i)}` as `[num, den]` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPolyOutput {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<(String, String)>,
}

#[derive(Debug, Serialize)]
struct Diagnostic {
    error: String,
    kind: &'static str,
}

/// Parse arguments, run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report(&Error::param("threads", "must be at least 1"));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    let input = e.is_input_error();
    let diag = Diagnostic {
        error: e.to_string(),
        kind: if input { "invalid-input" } else { "numerical" },
    };
    eprintln!(
        "{}",
        serde_json::to_string(&diag).expect("diagnostic serializes")
    );
    if input {
        2
    } else {
        1
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::param("output", e.to_string())
}

fn emit_json<T: Serialize>(value: &T, output: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    match output {
        Some(path) => std::fs::write(path, text + "\n").map_err(io_err),
        None => writeln!(out, "{text}").map_err(io_err),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn load(args: &ProblemArgs) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(&args.problem)
        .map_err(|e| Error::param("problem", format!("{}: {e}", args.problem.display())))?;
    ProblemFile::parse(&text)
}

fn solve_problem(pf: &ProblemFile) -> Result<SpectralSolution> {
    let (f, g) = pf.shapes()?;
    solve_transmission(&pf.params()?, &f, &g, &pf.discretization())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::CriticalValues { dim, radius, kmax } => {
            if kmax < 2 {
                return Err(Error::param("kmax", "must be at least 2"));
            }
            writeln!(out, "k,s_k,admissible,slope").map_err(io_err)?;
            for k in 2..=kmax {
                let cv = radial::critical_value(k, dim, radius)?;
                let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{}",
                    k,
                    opt(cv.s_k),
                    cv.admissible,
                    opt(cv.slope)
                )
                .map_err(io_err)?;
            }
            Ok(())
        }
        Command::Beta {
            dim,
            radius,
            sigma,
            kmax,
        } => {
            let params = ProblemParams::new(dim, radius, sigma)?;
            writeln!(out, "k,beta").map_err(io_err)?;
            for k in 1..=kmax {
                writeln!(out, "{},{}", k, fmt(radial::beta(k, &params))).map_err(io_err)?;
            }
            Ok(())
        }
        Command::Trivial {
            dim,
            radius,
            sigma,
            points,
        } => {
            let params = ProblemParams::new(dim, radius, sigma)?;
            if let Some(r) = points.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(Error::param(
                    "points",
                    format!("radius {r} is outside [0, 1]"),
                ));
            }
            let value = TrivialOutput {
                params,
                u_origin: radial::trivial_u(&params, 0.0),
                d: radial::trivial_d(&params),
                profile: points
                    .iter()
                    .map(|&r| (r, radial::trivial_u(&params, r)))
                    .collect(),
            };
            emit_json(&value, None, out)
        }
        Command::Solve(args) => {
            let pf = load(&args)?;
            let sol = solve_problem(&pf)?;
            let exp = |e: &crate::solver::Expansion| ExpansionOutput {
                cos: e.cos.clone(),
                sin: e.sin.clone(),
            };
            let r = sol.residual;
            let value = SolveOutput {
                params: sol.params,
                truncation: sol.discretization.truncation,
                collocation: sol.discretization.collocation,
                residual: ResidualOutput {
                    value_jump: r.value_jump,
                    flux_jump: r.flux_jump,
                    dirichlet: r.dirichlet,
                    max: r.max,
                    warning: r.warning,
                },
                inner: exp(&sol.inner),
                outer_growing: exp(&sol.outer_growing),
                outer_decaying: exp(&sol.outer_decaying),
            };
            emit_json(&value, args.output.as_ref(), out)
        }
        Command::Verify { problem, table } => {
            let pf = load(&problem)?;
            let sol = solve_problem(&pf)?;
            let value = verify_report(&sol)?;
            if table {
                write_table(&value, out)
            } else {
                emit_json(&value, problem.output.as_ref(), out)
            }
        }
        Command::FindG {
            problem,
            modes,
            seed,
            restart_amplitude,
        } => {
            let pf = load(&problem)?;
            let params = pf.params()?;
            let (f, _) = pf.shapes()?;
            let mut cfg = NewtonConfig::new(
                pf.dim,
                pf.truncation,
                modes.unwrap_or((pf.truncation / 2).max(1)),
            );
            cfg.discretization = pf.discretization();
            cfg.tol = pf.tolerances.newton;
            cfg.max_iter = pf.tolerances.max_iter;
            let sol = solve_for_g(&params, &f, None, &cfg)?;
            let restart = match seed {
                Some(seed) => {
                    let noise = random_perturbation(pf.dim, cfg.modes, restart_amplitude, seed);
                    let again = solve_for_g(&params, &f, Some(&sol.g.add(&noise)), &cfg)?;
                    Some(RestartOutput {
                        seed,
                        amplitude: restart_amplitude,
                        iterations: again.report.iterations,
                        distance: again.g.sub(&sol.g).max_abs(),
                    })
                }
                None => None,
            };
            let value = FindGOutput {
                g_modes: sol.g.modes(),
                residual: sol.residual,
                d_integral: sol.d.integral,
                d_spread: sol.d.spread,
                iterations: sol.report.iterations,
                history: sol.report.history.clone(),
                restart,
            };
            emit_json(&value, problem.output.as_ref(), out)
        }
        Command::Branch {
            dim,
            radius,
            k,
            eps,
            truncation,
            collocation,
            modes,
            tol,
        } => {
            let mut cfg = NewtonConfig::new(dim, truncation, modes);
            if let Some(m) = collocation {
                cfg.discretization.collocation = m;
            }
            cfg.tol = tol;
            let branch = trace_branch(dim, radius, k, &eps, &cfg)?;
            let kind = if dim == 2 { Kind::Cos } else { Kind::Zonal };
            let degrees: Vec<usize> = (k..=modes).step_by(k).collect();
            let header: Vec<String> = degrees.iter().map(|d| format!("coeff_{d}")).collect();
            writeln!(out, "eps,sigma,lambda,d,residual,{}", header.join(",")).map_err(io_err)?;
            for p in &branch.points {
                let coeffs: Vec<String> = degrees.iter().map(|&d| fmt(p.g.get(d, kind))).collect();
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt(p.eps),
                    fmt(p.sigma),
                    fmt(p.lambda),
                    fmt(p.d),
                    fmt(p.residual),
                    coeffs.join(",")
                )
                .map_err(io_err)?;
            }
            match branch.failure {
                Some((eps, e)) => {
                    eprintln!("branch stopped at eps = {eps}");
                    Err(e)
                }
                None => Ok(()),
            }
        }
        Command::HarmonicPoly { dim, degree } => {
            if dim < 2 || degree < 1 {
                return Err(Error::param("degree", "need dim >= 2 and degree >= 1"));
            }
            let p = invariant_harmonic_poly(degree, dim);
            let value = HarmonicPolyOutput {
                dim,
                degree,
                coeffs: p
                    .coeffs
                    .iter()
                    .map(|c| (c.numer().to_string(), c.denom().to_string()))
                    .collect(),
            };
            emit_json(&value, None, out)
        }
    }
}

fn verify_report(sol: &SpectralSolution) -> Result<VerifyOutput> {
    let kmax = sol.discretization.truncation;
    let phi = phi_of(sol, kmax)?;
    let d = extract_d(sol).ok();
    let gaps = divergence_identity_gap(sol);
    let serrin = serrin_residual(sol);
    Ok(VerifyOutput {
        state_residual: sol.residual.max,
        phi_sup: phi.sup_norm,
        phi_mean: phi.mean,
        d_integral: d.map(|d| d.integral),
        d_pointwise_mean: d.map(|d| d.pointwise_mean),
        d_spread: d.map(|d| d.spread),
        heintze_karcher_gap: heintze_karcher_gap(&sol.outer_curve).ok(),
        divergence_gap: gaps.outer,
        interface_flux: gaps.interface,
        serrin_sup: serrin.sup_norm,
        serrin_c: serrin.c_estimate,
        decomposition_defect: decomposition_defect(sol, &sol.outer_curve, Phase::Outer),
    })
}

fn write_table(v: &VerifyOutput, out: &mut dyn Write) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_else(|| "n/a".into());
    let rows = [
        ("state residual", fmt(v.state_residual)),
        ("phi sup-norm", fmt(v.phi_sup)),
        ("phi mean", fmt(v.phi_mean)),
        ("d (integral)", opt(v.d_integral)),
        ("d (pointwise mean)", opt(v.d_pointwise_mean)),
        ("d spread", opt(v.d_spread)),
        ("Heintze-Karcher gap", opt(v.heintze_karcher_gap)),
        ("divergence gap", fmt(v.divergence_gap)),
        ("interface flux", fmt(v.interface_flux)),
        ("Serrin residual", fmt(v.serrin_sup)),
        ("Serrin c", fmt(v.serrin_c)),
        ("decomposition defect", fmt(v.decomposition_defect)),
    ];
    for (name, value) in rows {
        writeln!(out, "{name:<22} {value}").map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_to_string(args: &[&str]) -> Result<String> {
        let cli =
            Cli::try_parse_from(std::iter::once("overdet").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        execute(cli.command, &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn problem_file_is_strict() {
        let ok =
            r#"{"dim":2,"core_radius":0.5,"sigma":2,"truncation":16,"f_modes":[[3,"cos",0.05]]}"#;
        let pf = ProblemFile::parse(ok).unwrap();
        assert_eq!(pf.f_modes, vec![(3, Kind::Cos, 0.05)]);
        assert_eq!(pf.tolerances, Tolerances::default());
        let extra = r#"{"dim":2,"core_radius":0.5,"sigma":2,"truncation":16,"colour":1}"#;
        assert!(ProblemFile::parse(extra)
            .unwrap_err()
            .to_string()
            .contains("colour"));
        let bad_kind =
            r#"{"dim":2,"core_radius":0.5,"sigma":2,"truncation":16,"g_modes":[[2,"tan",0.1]]}"#;
        assert!(ProblemFile::parse(bad_kind).is_err());
        let again = ProblemFile::parse(&serde_json::to_string(&pf).unwrap()).unwrap();
        assert_eq!(again, pf);
    }

    #[test]
    fn critical_values_csv() {
        let s = run_to_string(&[
            "critical-values",
            "--dim",
            "2",
            "--radius",
            "0.8",
            "--kmax",
            "6",
        ])
        .unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("k,s_k,admissible,slope"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "2");
        assert!((row[1].parse::<f64>().unwrap() - 9.7413).abs() < 5e-4);
        assert_eq!(row[2], "true");
        assert!(row[3].parse::<f64>().unwrap() < 0.0);
    }

    #[test]
    fn trivial_and_harmonic_poly_json() {
        let s =
            run_to_string(&["trivial", "--dim", "2", "--radius", "0.5", "--sigma", "2"]).unwrap();
        let t: TrivialOutput = serde_json::from_str(&s).unwrap();
        assert_eq!(t.u_origin, 0.21875);
        assert_eq!(t.d, 0.5);
        let s = run_to_string(&["harmonic-poly", "--dim", "3", "--degree", "3"]).unwrap();
        let h: HarmonicPolyOutput = serde_json::from_str(&s).unwrap();
        assert_eq!(
            h.coeffs,
            vec![("-3".into(), "2".into()), ("1".into(), "1".into())]
        );
    }

    #[test]
    fn input_errors_are_classified() {
        assert!(
            run_to_string(&["beta", "--dim", "1", "--radius", "0.5", "--sigma", "2"])
                .unwrap_err()
                .is_input_error()
        );
        assert!(
            run_to_string(&["critical-values", "--dim", "2", "--radius", "1.5"])
                .unwrap_err()
                .is_input_error()
        );
    }
}
