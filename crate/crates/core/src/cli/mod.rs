//! The `charge-diagram` command-line front end.
//!
//! Every command prints one JSON report on standard output (CSV for grid and
//! sweep data) and exits with 0 on success, 1 when the answer is "infeasible"
//! or a solver gives up, 2 on malformed input and 3 when a Hilbert space would
//! exceed the dimension cap.

mod input;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

pub use input::{charges_from_value, load_charges, ScenarioFile, FILE_TOL};
pub use output::{csv_float, float, to_json};

use crate::bathrate::{self, RateOptions};
use crate::diagram::{self, DiagramOptions, MembershipReport, PhasePoint, SupportOracle};
use crate::error::{Error, Result};
use crate::finite::{self, AetOptions, AmcParams, Ensemble, TrimOptions, TypicalityParams};
use crate::gibbs::{self, GgsSolution, SolverOptions};
use crate::linalg;
use crate::operators::{self, ChargeSet, DensityState, Projector};
use crate::thermo::{self, BathFinal};

#[derive(Parser, Debug)]
#[command(name = "charge-diagram", version, about = "Thermodynamics with several non-commuting conserved charges")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Charge-set file for the (elementary) bath.
    #[arg(long, global = true)]
    bath: Option<PathBuf>,
    /// Charge-set file; overrides the scenario's system charges.
    #[arg(long, global = true)]
    charges: Option<PathBuf>,
    /// RNG seed for sampling commands
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Newton iteration limit
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Largest |beta| before a target counts as on the boundary
    #[arg(long, global = true)]
    beta_max: Option<f64>,
    /// Finite-difference step for derivatives
    #[arg(long, global = true)]
    fd_step: Option<f64>,
    /// Largest Hilbert-space dimension any command may build.
    #[arg(long, global = true)]
    dim_cap: Option<usize>,
    /// Report entropies in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    /// Also write grid or sweep data to this CSV file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generalized Gibbs states.
    #[command(subcommand)]
    Ggs(GgsCmd),
    /// Charge-entropy phase diagrams.
    #[command(subcommand)]
    Diagram(DiagramCmd),
    /// First and second law for a work transformation.
    #[command(subcommand)]
    Thermo(ThermoCmd),
    /// Optimal bath rate.
    #[command(subcommand)]
    Bathrate(BathrateCmd),
    /// Finite-copy constructions.
    #[command(subcommand)]
    Finite(FiniteCmd),
    /// Check a scenario or charge-set file.
    Validate { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum GgsCmd {
    /// Inverse temperatures for target charge values.
    Solve {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        target: Vec<f64>,
    },
    /// Gibbs state for given inverse temperatures.
    FromBeta {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        beta: Vec<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum DiagramCmd {
    /// Membership of `a_1,...,a_c,s` in the phase diagram.
    Member {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
    },
    /// Membership in the diagram conditioned on a partner with entropy `s0`.
    Extended {
        #[arg(long, allow_negative_numbers = true)]
        s0: f64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
    },
    /// Entropy ceiling over a grid of charge values, as CSV.
    Sample {
        /// `lo:hi:steps`, once per charge.
        #[arg(long, required = true, allow_hyphen_values = true)]
        grid: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ThermoCmd {
    /// Second-law gap `delta`; exits 1 when negative.
    SecondLaw,
    /// Charge ledger against a final bath point (default: unchanged bath).
    FirstLaw {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        bath_point: Option<Vec<f64>>,
        /// Final entropy rate of system and bath (default: the balanced value).
        #[arg(long, allow_negative_numbers = true)]
        s_final: Option<f64>,
    },
    /// Feasibility with a fixed, possibly correlated bath; exits 1 when infeasible.
    FixedBath {
        /// Entropy rate of the final system (default: `S(sigma_S)`).
        #[arg(long)]
        s_sigma: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum BathrateCmd {
    /// Smallest number of elementary baths per system copy.
    Optimal {
        /// Re-solve with `delta = 10^-k` for `k` in `k1..=k2`.
        #[arg(long)]
        delta_sweep: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SupportChoice {
    Identity,
    Typical,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EnsembleChoice {
    HilbertSchmidt,
    Diagonal,
}

#[derive(Subcommand, Debug)]
enum FiniteCmd {
    /// Typical projector of `rho_S^n` and its three bounds.
    Typical {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Trimmed, flattened version of `rho_S^n`.
    Trim {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        bins: Option<u64>,
        #[arg(long, value_enum, default_value = "identity")]
        support: SupportChoice,
    },
    /// Unitary taking `rho_S^n` to `sigma_S^n` with ancillas.
    Aet {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.3)]
        eta: f64,
        #[arg(long, default_value_t = 1e-9)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-9)]
        gamma_charge: f64,
        #[arg(long)]
        bins: Option<u64>,
    },
    /// Approximate microcanonical subspace for the system charges.
    Amc {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        eta_prime: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, value_enum, default_value = "hilbert-schmidt")]
        ensemble: EnsembleChoice,
    },
}

/// What a command produced.
struct Outcome {
    stdout: String,
    code: i32,
}

impl Outcome {
    fn json(v: Value) -> Self {
        Self {
            stdout: to_json(&v),
            code: 0,
        }
    }

    fn failing_if(mut self, bad: bool) -> Self {
        if bad {
            self.code = 1;
        }
        self
    }
}

/// Runs the command line `argv` (program name first), printing to the process's
/// standard streams. Returns the exit code.
pub fn execute<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`execute`] with explicit output streams.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(o) => {
            if out.write_all(o.stdout.as_bytes()).is_err() {
                return 2;
            }
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Loaded inputs and the options derived from files and flags.
struct Context {
    file: ScenarioFile,
    bits: bool,
    seed: u64,
    dim_cap: usize,
    diagram: DiagramOptions<f64>,
}

impl Context {
    fn new(g: &Global) -> Result<Self> {
        let mut file = match &g.scenario {
            Some(p) => ScenarioFile::load(p)?,
            None => ScenarioFile::default(),
        };
        if let Some(p) = &g.charges {
            file.system_charges = Some(load_charges(p)?);
        }
        let o = &file.options;
        let mut solver = SolverOptions::<f64>::default();
        if let Some(t) = g.tol.or(o.tol) {
            solver.tol = t;
        }
        if let Some(m) = g.max_iter.or(o.max_iter) {
            solver.max_iter = m;
        }
        if let Some(b) = g.beta_max.or(o.beta_max) {
            solver.beta_max = b;
        }
        if let Some(h) = g.fd_step.or(o.fd_step) {
            solver.fd_step = h;
        }
        let seed = g.seed.or(o.seed).unwrap_or(0);
        let mut diagram = DiagramOptions {
            seed,
            solver,
            ..DiagramOptions::default()
        };
        if let Some(k) = o.n_dirs {
            diagram.n_dirs = k;
        }
        Ok(Self {
            dim_cap: input::dim_cap(g.dim_cap, o.dim_cap)?,
            file,
            bits: g.bits,
            seed,
            diagram,
        })
    }

    /// Entropy in the display unit.
    fn ent(&self, x: f64) -> f64 {
        if self.bits {
            x / std::f64::consts::LN_2
        } else {
            x
        }
    }

    /// Entropy given in the display unit, back to nats.
    fn ent_in(&self, x: f64) -> f64 {
        if self.bits {
            x * std::f64::consts::LN_2
        } else {
            x
        }
    }

    fn unit(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }

    fn bath(&self, g: &Global) -> Result<ChargeSet<f64>> {
        match &g.bath {
            Some(p) => load_charges(p),
            None => self.file.bath_charges().cloned(),
        }
    }

    fn ggs(&self, s: &GgsSolution<f64>) -> Value {
        json!({
            "beta": s.beta,
            "charge_values": s.charge_values,
            "entropy": self.ent(s.entropy),
            "log_partition": s.log_partition,
            "converged": s.converged,
            "residual": s.residual,
            "iterations": s.iterations,
            "spectrum": s.tau.eigenvalues(),
        })
    }

    fn membership(&self, r: &MembershipReport<f64>) -> Value {
        json!({
            "inside": r.inside,
            "on_boundary": r.on_boundary,
            "margin": r.margin,
            "witness": r.witness.as_ref().map(|w| self.ggs(w)),
        })
    }

    fn point(&self, p: &PhasePoint<f64>) -> Value {
        json!({ "a": p.a, "s": self.ent(p.s) })
    }
}

fn with_header(command: &str, ctx: &Context, body: Value) -> Value {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("command".into(), json!(command));
    map.insert("entropy_unit".into(), json!(ctx.unit()));
    Value::Object(map)
}

fn arg_error(path: &str, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: msg.into(),
    }
}

fn split_point(ctx: &Context, charges: &ChargeSet<f64>, point: &[f64]) -> Result<PhasePoint<f64>> {
    if point.len() != charges.len() + 1 {
        return Err(arg_error(
            "--point",
            format!("expected {} values (charges then entropy), got {}", charges.len() + 1, point.len()),
        ));
    }
    let (a, s) = point.split_at(charges.len());
    Ok(PhasePoint::new(a.to_vec(), ctx.ent_in(s[0])))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || arg_error("--grid", format!("expected lo:hi:steps, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

fn parse_sweep(spec: &str) -> Result<Vec<i32>> {
    let bad = || arg_error("--delta-sweep", format!("expected k1:k2, got {spec:?}"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    let k1: i32 = a.trim().parse().map_err(|_| bad())?;
    let k2: i32 = b.trim().parse().map_err(|_| bad())?;
    if k2 < k1 {
        return Err(bad());
    }
    Ok((k1..=k2).collect())
}

fn write_csv(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn copies(st: &DensityState<f64>, n: usize) -> Result<Vec<DensityState<f64>>> {
    if n == 0 {
        return Err(arg_error("--n", "must be at least 1"));
    }
    Ok(vec![st.clone(); n])
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    if let Command::Validate { file } = &cli.command {
        return validate(file);
    }
    let ctx = Context::new(g)?;
    match &cli.command {
        Command::Validate { .. } => unreachable!(),
        Command::Ggs(cmd) => ggs(&ctx, cmd),
        Command::Diagram(cmd) => diagram_cmd(&ctx, g, cmd),
        Command::Thermo(cmd) => thermo_cmd(&ctx, g, cmd),
        Command::Bathrate(BathrateCmd::Optimal { delta_sweep }) => bathrate_cmd(&ctx, g, delta_sweep.as_deref()),
        Command::Finite(cmd) => finite_cmd(&ctx, cmd),
    }
}

fn validate(path: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| arg_error("$", e.to_string()))?;
    let is_charge_file = v.is_array() || v.get("charges").is_some();
    let report = if is_charge_file {
        let c = charges_from_value(v)?;
        json!({ "status": "ok", "kind": "charges", "charges": c.len(), "dim": c.dim() })
    } else {
        let f = ScenarioFile::from_value(v)?;
        if f.is_complete() {
            f.scenario()?;
        }
        json!({
            "status": "ok",
            "kind": "scenario",
            "complete": f.is_complete(),
            "charges": f.system_charges.as_ref().map(|c| c.len()),
        })
    };
    Ok(Outcome::json(report))
}

fn ggs(ctx: &Context, cmd: &GgsCmd) -> Result<Outcome> {
    let charges = ctx.file.system_charges()?;
    let (name, sol) = match cmd {
        GgsCmd::Solve { target } => ("ggs solve", gibbs::solve_beta(charges, target, &ctx.diagram.solver)?),
        GgsCmd::FromBeta { beta } => ("ggs from-beta", gibbs::ggs_from_beta(charges, beta)?),
    };
    Ok(Outcome::json(with_header(name, ctx, ctx.ggs(&sol))))
}

fn diagram_cmd(ctx: &Context, g: &Global, cmd: &DiagramCmd) -> Result<Outcome> {
    let charges = ctx.file.system_charges()?;
    match cmd {
        DiagramCmd::Member { point } => {
            let p = split_point(ctx, charges, point)?;
            let r = diagram::phase_member(charges, &p, &ctx.diagram)?;
            Ok(Outcome::json(with_header("diagram member", ctx, ctx.membership(&r))))
        }
        DiagramCmd::Extended { s0, point } => {
            let p = split_point(ctx, charges, point)?;
            let r = diagram::extended_member(charges, ctx.ent_in(*s0), &p, &ctx.diagram)?;
            Ok(Outcome::json(with_header("diagram extended", ctx, ctx.membership(&r))))
        }
        DiagramCmd::Sample { grid } => {
            if grid.len() != charges.len() {
                return Err(arg_error(
                    "--grid",
                    format!("given {} times but there are {} charges", grid.len(), charges.len()),
                ));
            }
            let axes = grid.iter().map(|s| parse_grid(s)).collect::<Result<Vec<_>>>()?;
            let total: usize = axes.iter().map(Vec::len).product();
            if total > ctx.dim_cap.max(1) * 64 {
                return Err(Error::Capacity {
                    dim: total as u128,
                    cap: ctx.dim_cap * 64,
                });
            }
            let oracle = SupportOracle::new(charges, &ctx.diagram);
            let mut rows = Vec::with_capacity(total);
            let mut idx = vec![0usize; axes.len()];
            for _ in 0..total {
                let a: Vec<f64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
                let s_max = if oracle.margin(&a).0 >= -ctx.diagram.tol {
                    diagram::entropy_ceiling(charges, &a, &ctx.diagram).map_or(f64::NAN, |s| ctx.ent(s))
                } else {
                    f64::NAN
                };
                let mut row = a;
                row.push(s_max);
                rows.push(row);
                // last axis fastest
                for k in (0..idx.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            let mut header: Vec<String> = (1..=charges.len()).map(|j| format!("a{j}")).collect();
            header.push("s_max".into());
            let text = output::csv(&header, &rows);
            if let Some(p) = &g.csv {
                write_csv(p, &text)?;
            }
            Ok(Outcome { stdout: text, code: 0 })
        }
    }
}

fn thermo_cmd(ctx: &Context, g: &Global, cmd: &ThermoCmd) -> Result<Outcome> {
    let sc = ctx.file.scenario()?;
    match cmd {
        ThermoCmd::SecondLaw => {
            let before = gibbs::free_entropy(&sc.rho_s, &sc.system_charges, &sc.beta)?;
            let after = gibbs::free_entropy(&sc.sigma_s, &sc.system_charges, &sc.beta)?;
            let delta = thermo::second_law_gap(&sc)?;
            let body = json!({
                "delta": ctx.ent(delta),
                "delta_free_entropy_S": ctx.ent(after - before),
                "free_entropy_rho_S": ctx.ent(before),
                "free_entropy_sigma_S": ctx.ent(after),
                "delta_s_S": ctx.ent(sc.delta_s()),
                "delta_a_S": sc.delta_a(),
                "feasible": delta >= 0.0,
            });
            Ok(Outcome::json(with_header("thermo second-law", ctx, body)).failing_if(delta < 0.0))
        }
        ThermoCmd::FirstLaw { bath_point, s_final } => {
            let tau = sc.bath_thermal()?;
            let final_b = match bath_point {
                Some(a) => BathFinal::Point(PhasePoint::new(a.clone(), tau.entropy)),
                None => BathFinal::State(tau.tau.clone()),
            };
            let balanced = operators::entropy(&sc.rho_s) + tau.entropy;
            let s_final = s_final.map_or(balanced, |s| ctx.ent_in(s));
            let l = thermo::first_law_ledger(&sc, &final_b, s_final)?;
            let tol = 1e-9;
            let consistent = l.first_law_consistent(tol);
            let body = json!({
                "delta_s_S": ctx.ent(l.delta_s_s),
                "delta_a_S": l.delta_a_s,
                "delta_a_B": l.delta_a_b,
                "work": l.work,
                "entropy_balance_residual": ctx.ent(l.entropy_balance_residual),
                "consistent": consistent,
            });
            Ok(Outcome::json(with_header("thermo first-law", ctx, body)).failing_if(!consistent))
        }
        ThermoCmd::FixedBath { s_sigma } => {
            let bath = ctx.bath(g)?;
            let s_sigma = s_sigma.map_or_else(|| operators::entropy(&sc.sigma_s), |s| ctx.ent_in(s));
            let p = thermo::fixed_bath_point(&sc, &bath)?;
            let r = thermo::fixed_bath_feasible(&sc, &bath, s_sigma, &ctx.diagram)?;
            let body = json!({
                "point": ctx.point(&p),
                "s_sigma_S": ctx.ent(s_sigma),
                "membership": ctx.membership(&r),
                "feasible": r.inside,
            });
            Ok(Outcome::json(with_header("thermo fixed-bath", ctx, body)).failing_if(!r.inside))
        }
    }
}

fn bathrate_cmd(ctx: &Context, g: &Global, sweep: Option<&str>) -> Result<Outcome> {
    let sc = ctx.file.scenario()?;
    let bath = ctx.bath(g)?;
    let opts = RateOptions {
        diagram: ctx.diagram.clone(),
        ..RateOptions::default()
    };
    let ray = thermo::BathRay::new(&bath, &sc.beta, sc.delta_s(), sc.displacement())?;
    let oracle = SupportOracle::new(&bath, &opts.diagram);
    let rep = bathrate::optimal_rate_on_ray(&ray, &oracle, &opts)?;
    let mut body = json!({
        "r_star": rep.r_star,
        "boundary_point": ctx.point(&rep.boundary_point),
        "boundary_margin": rep.boundary_margin,
        "delta": ctx.ent(rep.delta),
        "quadratic_estimate": rep.quadratic_estimate,
        "relative_gap": rep.relative_gap,
    });
    if let Some(spec) = sweep {
        let ks = parse_sweep(spec)?;
        let rows = bathrate::delta_sweep(&ray, &oracle, ks, &opts)?;
        let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![ctx.ent(r.delta), r.exact, r.quadratic]).collect();
        body["sweep"] = json!(rows
            .iter()
            .map(|r| json!({ "delta": ctx.ent(r.delta), "exact": r.exact, "quadratic": r.quadratic }))
            .collect::<Vec<_>>());
        if let Some(p) = &g.csv {
            let header = ["delta", "r_star_exact", "r_quadratic"].map(String::from);
            write_csv(p, &output::csv(&header, &table))?;
        }
    }
    Ok(Outcome::json(with_header("bathrate optimal", ctx, body)))
}

fn finite_cmd(ctx: &Context, cmd: &FiniteCmd) -> Result<Outcome> {
    match cmd {
        FiniteCmd::Typical { n, alpha } => {
            let factors = copies(ctx.file.rho_s()?, *n)?;
            let mut params = TypicalityParams::new(*alpha, *n);
            params.dim_cap = ctx.dim_cap;
            let (p, stats) = finite::typical_projector(&factors, &params)?;
            let mut body = value(&stats);
            body["n"] = json!(n);
            body["dim"] = json!(p.dim());
            body["all_ok"] = json!(stats.all_ok());
            Ok(Outcome::json(with_header("finite typical", ctx, body)))
        }
        FiniteCmd::Trim { n, alpha, bins, support } => {
            let factors = copies(ctx.file.rho_s()?, *n)?;
            let mut params = TypicalityParams::new(*alpha, *n);
            params.dim_cap = ctx.dim_cap;
            let dim = linalg::checked_power(factors[0].dim(), *n);
            if dim > ctx.dim_cap as u128 {
                return Err(Error::Capacity { dim, cap: ctx.dim_cap });
            }
            let dim = dim as usize;
            let support = match support {
                SupportChoice::Identity => Projector::identity(dim),
                SupportChoice::Typical => finite::typical_projector(&factors, &params)?.0,
            };
            let r = finite::trim_state(&factors, &params, &support, &TrimOptions { bins: *bins })?;
            let body = json!({
                "n": n,
                "tau_rank": r.tau_rank,
                "l_nominal": r.l_nominal,
                "omega_spectrum": r.omega.eigenvalues().into_iter().rev().collect::<Vec<_>>(),
                "kept_weight": r.kept_weight,
                "discarded": r.discarded,
                "discarded_weight": r.discarded_weight(),
                "discarded_bound": r.discarded_bound,
                "epsilon": r.epsilon,
                "trace_distance_to_input": r.trace_distance_to_input,
                "distance_bound": r.distance_bound,
                "bins": r.bins,
                "bins_overridden": r.bins_overridden,
                "bin_table": value(&r.bin_table),
                "flat": r.is_flat(),
                "reconstruction_error": r.reconstruction_error,
                "unitarity_error": r.unitarity_error,
            });
            Ok(Outcome::json(with_header("finite trim", ctx, body)))
        }
        FiniteCmd::Aet {
            n,
            alpha,
            eta,
            gamma,
            gamma_charge,
            bins,
        } => {
            let rho = copies(ctx.file.rho_s()?, *n)?;
            let sigma = copies(ctx.file.sigma_s()?, *n)?;
            let charges = ctx.file.system_charges()?;
            let mut params = TypicalityParams::new(*alpha, *n);
            params.dim_cap = ctx.dim_cap;
            let opts = AetOptions {
                gamma: *gamma,
                gamma_charge: *gamma_charge,
                eta: *eta,
                bins: *bins,
                seed: ctx.seed,
                ..AetOptions::default()
            };
            let (u, rep) = finite::aet_transform(&rho, &sigma, charges, &params, &opts)?;
            let mut body = value(&rep);
            body["total_dim"] = json!(u.dim());
            Ok(Outcome::json(with_header("finite aet", ctx, body)))
        }
        FiniteCmd::Amc {
            n,
            values,
            eta,
            eta_prime,
            s,
            t,
            samples,
            trials,
            ensemble,
        } => {
            let charges = ctx.file.system_charges()?;
            let mut params = AmcParams::new(values.clone(), *eta, *eta_prime, *s, *t, *n);
            params.samples = *samples;
            params.seed = ctx.seed;
            params.dim_cap = ctx.dim_cap;
            params.ensemble = match ensemble {
                EnsembleChoice::HilbertSchmidt => Ensemble::HilbertSchmidt,
                EnsembleChoice::Diagonal => Ensemble::Diagonal,
            };
            let p = finite::amc_construct(charges, &params)?;
            let rep = finite::amc_validate(&p, charges, &params, *trials)?;
            let mut body = value(&rep);
            body["n"] = json!(n);
            body["dim"] = json!(p.dim());
            Ok(Outcome::json(with_header("finite amc", ctx, body)))
        }
    }
}

fn value<S: serde::Serialize>(v: &S) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
