//! Experiment drivers behind the `igrm` binary: single runs with JSON
//! reports and sampled solution grids, convergence tables, the
//! adaptive boundary-layer study, the weight sweep of the iterative
//! solver, and the spectral diagnostic of the splitting. Every driver
//! returns its table as a CSV string plus a flag telling whether any
//! row failed to converge (the binary maps that to exit code 2).
//!
//! All pipelines are deterministic: reruns produce byte-identical
//! output except for the wall-clock columns.

use igrm_core::assembly::WeakFormConfig;
use igrm_core::igrm::{
    self, build_saddle_system, EtaSpec, InnerPreconditioner, InnerSolver, RunReport, SolverConfig,
};
use igrm_core::kron;
use igrm_core::problems::{
    adaptive_sequence, eriksson_problem, error_norms, manufactured_problem, vortical_problem,
    ProblemDefinition,
};
use igrm_core::splines::{uniform_breakpoints, SplineSpace1D, TensorSpace2D};
use igrm_core::supg;
use std::fmt;
use std::io::Write;

#[derive(Debug)]
pub enum CliError {
    Core(igrm_core::Error),
    Io(std::io::Error),
    Invalid(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Invalid(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<igrm_core::Error> for CliError {
    fn from(e: igrm_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Manufactured,
    Eriksson,
    Vortical,
}

impl std::str::FromStr for ProblemId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "manufactured" => Ok(Self::Manufactured),
            "eriksson" => Ok(Self::Eriksson),
            "vortical" => Ok(Self::Vortical),
            other => Err(format!(
                "unknown problem '{other}' (expected manufactured | eriksson | vortical)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Igrm,
    Supg,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Igrm => write!(f, "igrm"),
            Method::Supg => write!(f, "supg"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "igrm" => Ok(Self::Igrm),
            "supg" => Ok(Self::Supg),
            other => Err(format!("unknown method '{other}' (expected igrm | supg)")),
        }
    }
}

/// Inner-solver choice exposed on the command line; `Auto` switches to
/// the dense factorization once the trial space is large enough that
/// the factorization amortizes over the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerChoice {
    Auto,
    Pcg,
    Direct,
}

impl std::str::FromStr for InnerChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "pcg" => Ok(Self::Pcg),
            "direct" => Ok(Self::Direct),
            other => Err(format!("unknown inner solver '{other}' (auto | pcg | direct)")),
        }
    }
}

const DIRECT_THRESHOLD: usize = 300;

fn resolve_inner(choice: InnerChoice, n_trial: usize) -> InnerSolver {
    match choice {
        InnerChoice::Pcg => InnerSolver::Pcg,
        InnerChoice::Direct => InnerSolver::Direct,
        InnerChoice::Auto => {
            if n_trial > DIRECT_THRESHOLD {
                InnerSolver::Direct
            } else {
                InnerSolver::Pcg
            }
        }
    }
}

/// Everything needed to run one experiment cell.
#[derive(Clone)]
pub struct RunSpec {
    pub problem: ProblemId,
    pub method: Method,
    pub breakpoints_x: Vec<f64>,
    pub breakpoints_y: Vec<f64>,
    pub trial: (usize, i32),
    pub test: Option<(usize, i32)>,
    pub pe: f64,
    pub eta: EtaSpec,
    pub weak: WeakFormConfig,
    pub outer_tol: f64,
    pub outer_max: usize,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub inner: InnerChoice,
    pub jacobi: bool,
    pub mirror_inflow: bool,
    pub wind_force: f64,
    /// Use the printed-sign stabilization residual for SUPG runs.
    pub printed_supg_residual: bool,
}

impl RunSpec {
    pub fn new(problem: ProblemId, method: Method, nx: usize, ny: usize) -> Self {
        let (xr, yr) = domain_of(problem);
        let defaults = SolverConfig::default();
        Self {
            problem,
            method,
            breakpoints_x: uniform_breakpoints(xr.0, xr.1, nx),
            breakpoints_y: uniform_breakpoints(yr.0, yr.1, ny),
            trial: (2, 1),
            test: None,
            pe: 100.0,
            eta: EtaSpec::HSquared,
            weak: WeakFormConfig::default(),
            outer_tol: defaults.outer_tol,
            outer_max: defaults.outer_max,
            inner_tol: defaults.inner_tol,
            inner_max: defaults.inner_max,
            inner: InnerChoice::Auto,
            jacobi: true,
            mirror_inflow: false,
            wind_force: 1.0,
            printed_supg_residual: false,
        }
    }
}

pub fn domain_of(problem: ProblemId) -> ((f64, f64), (f64, f64)) {
    match problem {
        ProblemId::Vortical => ((0.0, 1.0), (-1.0, 1.0)),
        _ => ((0.0, 1.0), (0.0, 1.0)),
    }
}

fn build_problem(spec: &RunSpec) -> Result<ProblemDefinition> {
    Ok(match spec.problem {
        ProblemId::Manufactured => manufactured_problem(spec.pe)?,
        ProblemId::Eriksson => eriksson_problem(spec.pe)?,
        ProblemId::Vortical => vortical_problem(spec.pe, spec.wind_force, spec.mirror_inflow)?,
    })
}

fn make_tensor(bx: &[f64], by: &[f64], (p, c): (usize, i32)) -> Result<TensorSpace2D> {
    Ok(TensorSpace2D::new(
        SplineSpace1D::new(bx, p, c)?,
        SplineSpace1D::new(by, p, c)?,
    ))
}

/// Result of one experiment cell.
pub struct SingleOutcome {
    pub report: RunReport,
    pub solution: Vec<f64>,
    pub trial: TensorSpace2D,
    pub problem: ProblemDefinition,
    /// Set when the solver exhausted a budget.
    pub flagged: bool,
}

/// Runs one cell: assembles, solves, attaches relative errors when the
/// problem has a closed-form solution.
pub fn run_single(spec: &RunSpec) -> Result<SingleOutcome> {
    let problem = build_problem(spec)?;
    let trial = make_tensor(&spec.breakpoints_x, &spec.breakpoints_y, spec.trial)?;
    match spec.method {
        Method::Igrm => {
            let test_pc = spec.test.ok_or_else(|| {
                CliError::Invalid("the residual-minimization method needs --test p,c".into())
            })?;
            let test = make_tensor(&spec.breakpoints_x, &spec.breakpoints_y, test_pc)?;
            // the residual space must be strictly richer per direction
            if test.x.dimension() <= trial.x.dimension()
                || test.y.dimension() <= trial.y.dimension()
            {
                return Err(CliError::Invalid(format!(
                    "test space ({},{}) is not richer than trial ({},{}) per direction",
                    test_pc.0, test_pc.1, spec.trial.0, spec.trial.1
                )));
            }
            let eta = spec.eta.resolve(&trial);
            let sys = build_saddle_system(&problem, &trial, &test, &spec.weak, eta)?;
            let cfg = SolverConfig {
                eta: spec.eta,
                outer_tol: spec.outer_tol,
                outer_max: spec.outer_max,
                inner_tol: spec.inner_tol,
                inner_max: spec.inner_max,
                preconditioner: if spec.jacobi {
                    InnerPreconditioner::Jacobi
                } else {
                    InnerPreconditioner::None
                },
                inner_solver: resolve_inner(spec.inner, sys.n_trial()),
            };
            let (u, _, mut report) = igrm::solve(&sys, &cfg)?;
            if let Some(exact) = problem.exact.as_ref() {
                let (l2, h1) = error_norms(&u, &trial, exact)?;
                report.l2_rel_pct = Some(l2);
                report.h1_rel_pct = Some(h1);
            }
            let flagged = !report.converged;
            Ok(SingleOutcome {
                report,
                solution: u,
                trial,
                problem,
                flagged,
            })
        }
        Method::Supg => {
            let residual = if spec.printed_supg_residual {
                supg::StabilizationResidual::AsPrinted
            } else {
                supg::StabilizationResidual::Consistent
            };
            let (u, mut report) = supg::solve_with(&problem, &trial, &spec.weak, residual)?;
            if let Some(exact) = problem.exact.as_ref() {
                let (l2, h1) = error_norms(&u, &trial, exact)?;
                report.l2_rel_pct = Some(l2);
                report.h1_rel_pct = Some(h1);
            }
            Ok(SingleOutcome {
                report,
                solution: u,
                trial,
                problem,
                flagged: false,
            })
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Convergence table over a mesh-by-space grid of cells, one CSV row
/// per cell. Rows are emitted in the order the cells were requested.
pub fn run_convergence_table(
    base: &RunSpec,
    meshes: &[(usize, usize)],
    trials: &[(usize, i32)],
) -> Result<(String, bool)> {
    let mut csv = String::from(
        "nx,ny,trial_p,trial_c,test_p,test_c,dof_trial,dof_test,dof_total,l2_rel_pct,h1_rel_pct,outer_iters,inner_iters_total,wall_ms,status\n",
    );
    let mut any_flagged = false;
    let (xr, yr) = domain_of(base.problem);
    for &(nx, ny) in meshes {
        for &trial in trials {
            let mut spec = base.clone();
            spec.breakpoints_x = uniform_breakpoints(xr.0, xr.1, nx);
            spec.breakpoints_y = uniform_breakpoints(yr.0, yr.1, ny);
            spec.trial = trial;
            if spec.method == Method::Supg {
                spec.test = None;
            }
            let out = run_single(&spec)?;
            any_flagged |= out.flagged;
            let r = &out.report;
            let (test_p, test_c) = match (spec.method, spec.test) {
                (Method::Igrm, Some(t)) => t,
                _ => trial,
            };
            csv.push_str(&format!(
                "{nx},{ny},{},{},{},{},{},{},{},{},{},{},{},{:.3},{}\n",
                trial.0,
                trial.1,
                test_p,
                test_c,
                r.dof_trial,
                r.dof_test,
                r.dof_total,
                fmt_opt(r.l2_rel_pct),
                fmt_opt(r.h1_rel_pct),
                r.outer_iters,
                r.inner_iters_total,
                r.wall_ms,
                if out.flagged { "no-convergence" } else { "ok" }
            ));
        }
    }
    Ok((csv, any_flagged))
}

/// FNV-1a over the breakpoint bit patterns; identifies a mesh in the
/// study tables.
pub fn knot_hash(bx: &[f64], by: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bits: u64| {
        for byte in bits.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for &v in bx {
        eat(v.to_bits());
    }
    eat(u64::MAX); // separator
    for &v in by {
        eat(v.to_bits());
    }
    h
}

/// Mesh sequence for the boundary-layer study: uniform initial mesh,
/// then one halved interval per step. `layer_eps = 0` keeps refining
/// in x, which is the sequence the study tables are built on; a
/// positive value switches to y once the smallest x-interval drops to
/// that size.
pub fn study_meshes(
    initial: (usize, usize),
    n_steps: usize,
    layer_eps: f64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let bx = uniform_breakpoints(0.0, 1.0, initial.0);
    let by = uniform_breakpoints(0.0, 1.0, initial.1);
    adaptive_sequence(&bx, &by, n_steps, layer_eps)
}

/// Adaptive study: one row per (step, method).
pub fn run_adaptive_study(
    base: &RunSpec,
    methods: &[Method],
    initial: (usize, usize),
    n_steps: usize,
    layer_eps: f64,
) -> Result<(String, bool)> {
    if base.problem != ProblemId::Eriksson {
        return Err(CliError::Invalid(
            "the adaptive study is defined for the eriksson problem".into(),
        ));
    }
    let mut csv = String::from("step,method,dof,l2_rel_pct,h1_rel_pct,knots_hash,status\n");
    let mut any_flagged = false;
    let meshes = study_meshes(initial, n_steps, layer_eps);
    for (k, (bx, by)) in meshes.iter().enumerate() {
        for &method in methods {
            let mut spec = base.clone();
            spec.method = method;
            spec.breakpoints_x = bx.clone();
            spec.breakpoints_y = by.clone();
            if method == Method::Supg {
                spec.test = None;
            }
            let out = run_single(&spec)?;
            any_flagged |= out.flagged;
            let r = &out.report;
            csv.push_str(&format!(
                "{},{},{},{},{},{:016x},{}\n",
                k + 1,
                method,
                r.dof_total,
                fmt_opt(r.l2_rel_pct),
                fmt_opt(r.h1_rel_pct),
                knot_hash(bx, by),
                if out.flagged { "no-convergence" } else { "ok" }
            ));
        }
    }
    Ok((csv, any_flagged))
}

/// Weight sweep of the iterative solver on selected study meshes. The
/// iteration columns mirror the budget notation: `>N` when the outer
/// loop exhausted its `N` iterations. The inner column reports the
/// final outer step's count.
pub fn run_eta_sweep(
    base: &RunSpec,
    grid_steps: &[usize],
    etas: &[f64],
    initial: (usize, usize),
) -> Result<(String, bool)> {
    let mut csv = String::from("grid_step,eta,outer,inner,l2_rel_pct,h1_rel_pct,wall_ms,status\n");
    let mut any_flagged = false;
    let max_step = grid_steps.iter().copied().max().unwrap_or(1);
    let meshes = study_meshes(initial, max_step, 0.0);
    for &step in grid_steps {
        if step == 0 || step > meshes.len() {
            return Err(CliError::Invalid(format!("grid step {step} out of range")));
        }
        let (bx, by) = &meshes[step - 1];
        for &eta in etas {
            let mut spec = base.clone();
            spec.breakpoints_x = bx.clone();
            spec.breakpoints_y = by.clone();
            spec.eta = EtaSpec::Value(eta);
            spec.inner = InnerChoice::Pcg;
            let out = run_single(&spec)?;
            any_flagged |= out.flagged;
            let r = &out.report;
            let (outer, inner) = if r.converged {
                (
                    r.outer_iters.to_string(),
                    r.inner_iters.last().copied().unwrap_or(0).to_string(),
                )
            } else {
                (format!(">{}", spec.outer_max), format!(">{}", spec.outer_max))
            };
            csv.push_str(&format!(
                "{},{:e},{},{},{},{},{:.3},{}\n",
                step,
                eta,
                outer,
                inner,
                fmt_opt(r.l2_rel_pct),
                fmt_opt(r.h1_rel_pct),
                r.wall_ms,
                if out.flagged { "no-convergence" } else { "ok" }
            ));
        }
    }
    Ok((csv, any_flagged))
}

/// Spectral diagnostic table of the splitting over a weight sweep.
pub fn run_spectral_table(
    nx: usize,
    ny: usize,
    test_pc: (usize, i32),
    etas: &[f64],
) -> Result<String> {
    let mut csv = String::from("nx,ny,test_p,test_c,eta,rho_formula,rho_numeric\n");
    let test = make_tensor(
        &uniform_breakpoints(0.0, 1.0, nx),
        &uniform_breakpoints(0.0, 1.0, ny),
        test_pc,
    )?;
    for &eta in etas {
        let gramm = igrm_core::assembly::assemble_gramm(&test, eta)?;
        let (rho_f, rho_n) = kron::spectral_radius(&gramm)?;
        csv.push_str(&format!(
            "{nx},{ny},{},{},{:e},{:.12e},{:.12e}\n",
            test_pc.0, test_pc.1, eta, rho_f, rho_n
        ));
    }
    Ok(csv)
}

/// Samples the solution on a uniform lattice: header `x y u`, then
/// `resolution^2` tab-separated rows (y fastest).
pub fn export_solution_grid<W: Write>(
    solution: &[f64],
    space: &TensorSpace2D,
    resolution: usize,
    out: &mut W,
) -> Result<()> {
    if resolution < 2 {
        return Err(CliError::Invalid("grid resolution must be at least 2".into()));
    }
    let (x0, x1) = space.x.domain();
    let (y0, y1) = space.y.domain();
    writeln!(out, "x y u")?;
    for i in 0..resolution {
        let x = x0 + (x1 - x0) * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let y = y0 + (y1 - y0) * j as f64 / (resolution - 1) as f64;
            let u = space.eval(solution, x, y)?;
            writeln!(out, "{x}\t{y}\t{u}")?;
        }
    }
    Ok(())
}

/// A 1D cut through the solution at a fixed `x` or `y` line, same
/// three-column format as the full grid.
pub fn export_cross_section<W: Write>(
    solution: &[f64],
    space: &TensorSpace2D,
    section: CrossSection,
    resolution: usize,
    out: &mut W,
) -> Result<()> {
    if resolution < 2 {
        return Err(CliError::Invalid("grid resolution must be at least 2".into()));
    }
    writeln!(out, "x y u")?;
    match section {
        CrossSection::FixedX(x) => {
            let (y0, y1) = space.y.domain();
            for j in 0..resolution {
                let y = y0 + (y1 - y0) * j as f64 / (resolution - 1) as f64;
                let u = space.eval(solution, x, y)?;
                writeln!(out, "{x}\t{y}\t{u}")?;
            }
        }
        CrossSection::FixedY(y) => {
            let (x0, x1) = space.x.domain();
            for i in 0..resolution {
                let x = x0 + (x1 - x0) * i as f64 / (resolution - 1) as f64;
                let u = space.eval(solution, x, y)?;
                writeln!(out, "{x}\t{y}\t{u}")?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossSection {
    FixedX(f64),
    FixedY(f64),
}

impl std::str::FromStr for CrossSection {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (axis, value) = s
            .split_once('=')
            .ok_or_else(|| format!("cross-section '{s}' must look like x=0.5 or y=0.2"))?;
        let v: f64 = value
            .parse()
            .map_err(|_| format!("cross-section value '{value}' is not a number"))?;
        match axis {
            "x" => Ok(CrossSection::FixedX(v)),
            "y" => Ok(CrossSection::FixedY(v)),
            other => Err(format!("cross-section axis '{other}' must be x or y")),
        }
    }
}

impl fmt::Display for CrossSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossSection::FixedX(v) => write!(f, "x{v}"),
            CrossSection::FixedY(v) => write!(f, "y{v}"),
        }
    }
}

/// Parses `--eta` values: a literal weight or the token `h2`.
pub fn parse_eta(s: &str) -> std::result::Result<EtaSpec, String> {
    if s == "h2" {
        return Ok(EtaSpec::HSquared);
    }
    s.parse::<f64>()
        .map(EtaSpec::Value)
        .map_err(|_| format!("eta must be a positive real or 'h2', got '{s}'"))
}

/// Parses `p,c` space descriptors.
pub fn parse_space(s: &str) -> std::result::Result<(usize, i32), String> {
    let (p, c) = s
        .split_once(',')
        .ok_or_else(|| format!("space '{s}' must look like p,c (e.g. 2,1)"))?;
    let p: usize = p.trim().parse().map_err(|_| format!("bad degree in '{s}'"))?;
    let c: i32 = c.trim().parse().map_err(|_| format!("bad continuity in '{s}'"))?;
    Ok((p, c))
}

/// Parses `NX,NY` mesh descriptors.
pub fn parse_mesh(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("mesh '{s}' must look like NX,NY"))?;
    let nx: usize = a.trim().parse().map_err(|_| format!("bad NX in '{s}'"))?;
    let ny: usize = b.trim().parse().map_err(|_| format!("bad NY in '{s}'"))?;
    if nx == 0 || ny == 0 {
        return Err("mesh dimensions must be positive".into());
    }
    Ok((nx, ny))
}
