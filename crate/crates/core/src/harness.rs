//! Experiment orchestration: convergence metrics against the limit, single
//! solves and `h` sweeps.

use std::time::Instant;

use crate::agmon::{verify_decay, DecayReport};
use crate::eigen::eigenvalues_below_with;
use crate::error::{Error, Result};
use crate::limit::{solve_limit, LimitSolution, Tent};
use crate::model::{GridFunction, Problem};
use crate::par::{self, Exec};
use crate::params::SystemParams;
use crate::poisson::Measure;
use crate::scf::{energy_slack, scf_solve_with, trace_term, ScfSolution};

/// Largest number of nodes entering the all-pairs part of the Hölder seminorm.
pub const HOLDER_SUBSAMPLE: usize = 2000;

/// Built-in test functions for the weak* pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    One,
    X,
    /// `sin(π x / L)`.
    Sin,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [TestFunction::One, TestFunction::X, TestFunction::Sin];

    pub fn eval(self, x: f64, length: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::X => x,
            TestFunction::Sin => (std::f64::consts::PI * x / length).sin(),
        }
    }

    pub fn lipschitz(self, length: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::X => 1.0,
            TestFunction::Sin => std::f64::consts::PI / length,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "const",
            TestFunction::X => "x",
            TestFunction::Sin => "sin",
        }
    }
}

/// `max_j |V^h(x_j) - V₀(x_j)|`.
pub fn metric_sup(vh: &GridFunction, tent: &Tent) -> f64 {
    vh.values()
        .iter()
        .enumerate()
        .fold(0.0, |m, (j, v)| m.max((v - tent.eval(vh.x(j))).abs()))
}

/// Discrete `C^{0,α}` norm of node values `u` on a uniform grid of spacing
/// `dx`: the sup norm plus the Hölder seminorm. The seminorm takes all pairs of
/// an evenly strided subsample (endpoints included) of at most
/// [`HOLDER_SUBSAMPLE`] nodes, together with every adjacent pair.
pub fn holder_norm(u: &[f64], dx: f64, alpha: f64, exec: Exec) -> f64 {
    let n = u.len();
    if n == 0 {
        return 0.0;
    }
    let sup = u.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if n == 1 {
        return sup;
    }
    let adjacent = u
        .windows(2)
        .fold(0.0, |m: f64, w| m.max((w[1] - w[0]).abs()))
        / dx.powf(alpha);
    let stride = n.div_ceil(HOLDER_SUBSAMPLE).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let pairs = par::max_indexed(exec, idx.len(), |a| {
        let i = idx[a];
        idx[a + 1..].iter().fold(0.0, |m: f64, &j| {
            let dist = (j - i) as f64 * dx;
            m.max((u[j] - u[i]).abs() / dist.powf(alpha))
        })
    });
    sup + adjacent.max(pairs)
}

/// `‖V^h - V₀‖_{0,α}` with the difference taken at all nodes.
pub fn metric_holder(vh: &GridFunction, tent: &Tent, alpha: f64) -> f64 {
    metric_holder_with(vh, tent, alpha, Exec::default())
}

pub fn metric_holder_with(vh: &GridFunction, tent: &Tent, alpha: f64, exec: Exec) -> f64 {
    let dx = vh.dx();
    let diff: Vec<f64> = vh
        .node_values()
        .iter()
        .enumerate()
        .map(|(j, v)| v - tent.eval(j as f64 * dx))
        .collect();
    holder_norm(&diff, dx, alpha, exec)
}

/// `|Δx Σ d_j φ(x_j) - ∫ φ dμ|`.
pub fn weakstar_pairing(density: &GridFunction, mu: &Measure, phi: TestFunction) -> f64 {
    let length = density.length();
    let lhs = density.dx()
        * density
            .values()
            .iter()
            .enumerate()
            .map(|(j, d)| d * phi.eval(density.x(j), length))
            .sum::<f64>();
    (lhs - mu.pair(|x| phi.eval(x, length))).abs()
}

/// One full solve at a single `h`.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub params: SystemParams,
    pub n_grid: usize,
    /// The grid hit `n_max`.
    pub capped: bool,
    pub scf: ScfSolution,
    /// Eigenvalues of `H₀^h` (no Poisson potential) below `linear_threshold`.
    pub linear_values: Vec<f64>,
    pub linear_threshold: f64,
    /// `Σ F(e_i^h)` over linear levels below `ε_S`.
    pub linear_trace: f64,
    /// Decay reports for the occupied states, by zero-based index.
    pub decay: Vec<(usize, DecayReport)>,
    /// Failed invariant checks, empty when all hold.
    pub violations: Vec<String>,
    pub runtime_ms: f64,
}

impl SingleRun {
    pub fn h(&self) -> f64 {
        self.params.h
    }

    pub fn occupied(&self) -> usize {
        self.scf.spectrum.count()
    }

    /// Linear levels below `threshold`.
    pub fn linear_count_below(&self, threshold: f64) -> usize {
        self.linear_values
            .iter()
            .filter(|&&e| e < threshold)
            .count()
    }

    pub fn occupation_sum(&self) -> f64 {
        let f = crate::model::PartitionFunction::from_params(&self.params);
        self.scf.occupation_sum(&f)
    }
}

/// Solves at `p.h` starting from `V = 0`. Linear levels are collected below
/// `ε_S`.
pub fn run_single(p: &SystemParams) -> Result<SingleRun> {
    run_single_with(p, p.eps_s, Exec::default())
}

/// Like [`run_single`], collecting linear levels below
/// `max(ε_S, linear_threshold)`.
pub fn run_single_with(p: &SystemParams, linear_threshold: f64, exec: Exec) -> Result<SingleRun> {
    let started = Instant::now();
    let problem = Problem::new(p)?;
    let zero = GridFunction::zeros(problem.grid());
    let scf = scf_solve_with(&problem, &zero, exec)?;
    let lin_op = problem.hamiltonian(None)?;
    let threshold = linear_threshold.max(p.eps_s);
    let linear_values = eigenvalues_below_with(&lin_op, threshold, p.tol_eig, exec);
    let occupied_linear: Vec<f64> = linear_values
        .iter()
        .copied()
        .filter(|&e| e < p.eps_s)
        .collect();
    let linear_trace = trace_term(&occupied_linear, &problem.partition);
    let decay = scf
        .spectrum
        .values
        .iter()
        .zip(&scf.spectrum.vectors)
        .enumerate()
        .filter_map(|(i, (&e, psi))| verify_decay(psi, e, p.eps_s, p).ok().map(|r| (i, r)))
        .collect();
    let mut run = SingleRun {
        params: p.clone(),
        n_grid: problem.grid().n(),
        capped: problem.grid().capped(),
        scf,
        linear_values,
        linear_threshold: threshold,
        linear_trace,
        decay,
        violations: Vec::new(),
        runtime_ms: 0.0,
    };
    run.violations = check_invariants(&run);
    run.runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(run)
}

/// The self-consistent solution's invariants, restated as checks.
pub fn check_invariants(run: &SingleRun) -> Vec<String> {
    let p = &run.params;
    let s = &run.scf;
    let mut out = Vec::new();
    if s.potential.min() < -1e-12 {
        out.push(format!(
            "potential has negative value {:e}",
            s.potential.min()
        ));
    }
    if s.residual > p.tol_scf {
        out.push(format!("residual {:e} above tol_scf", s.residual));
    }
    for (i, (lin, nl)) in run.linear_values.iter().zip(&s.spectrum.values).enumerate() {
        if *lin > nl + 1e-12 {
            out.push(format!("level {} linear {lin} above nonlinear {nl}", i + 1));
        }
    }
    if let Some(&e1) = s.spectrum.values.first() {
        if e1 >= p.eps_s {
            out.push(format!("ground level {e1} not below eps_S"));
        }
    }
    let h1 = s.potential.h1_seminorm_sq();
    if h1 > 2.0 * run.linear_trace * (1.0 + 1e-8) {
        out.push(format!(
            "H1 energy {h1:e} above 2 Tr F(H0) = {:e}",
            2.0 * run.linear_trace
        ));
    }
    for w in s.energy_history.windows(2) {
        if w[1] > w[0] + energy_slack(w[0]) {
            out.push(format!("J increased from {} to {}", w[0], w[1]));
            break;
        }
    }
    let sum = run.occupation_sum();
    let mass = s.density.integral();
    if (mass - sum).abs() > 1e-12 * sum.max(f64::MIN_POSITIVE) {
        out.push(format!(
            "density mass {mass} differs from occupation sum {sum}"
        ));
    }
    out
}

/// Errors of one sweep row against the limit.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMetrics {
    pub sup_err: f64,
    pub holder_err: f64,
    /// Pairing errors in the order of [`TestFunction::ALL`].
    pub pairings: [f64; 3],
    pub mass: f64,
    /// `|ε_i^h - (e_i + θ)|` for `i ≤ min(N₁, N^h)`.
    pub level_gaps: Vec<f64>,
    /// `|e_i^h - e_i|` for the linear levels.
    pub linear_gaps: Vec<f64>,
    /// Linear levels below half the top reference level.
    pub linear_count: usize,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub h: f64,
    pub outcome: std::result::Result<(SingleRun, RowMetrics), String>,
}

impl SweepRow {
    pub fn run(&self) -> Option<&SingleRun> {
        self.outcome.as_ref().ok().map(|(r, _)| r)
    }

    pub fn metrics(&self) -> Option<&RowMetrics> {
        self.outcome.as_ref().ok().map(|(_, m)| m)
    }

    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Sweep rows, sorted by decreasing `h`, plus the limit they are compared to.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub params: SystemParams,
    pub limit: LimitSolution,
    /// Linear levels are counted below this value, half the top reference level.
    pub count_threshold: f64,
    pub rows: Vec<SweepRow>,
}

impl ConvergenceReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(SweepRow::is_ok)
    }

    /// The chosen metric for every row, `None` for failed rows.
    pub fn series<F: Fn(&RowMetrics) -> f64>(&self, f: F) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.metrics().map(&f)).collect()
    }

    /// Linear counts equal `N` on the last `tail` rows.
    pub fn linear_counts_stable(&self, tail: usize) -> bool {
        let n = self.limit.reference.count();
        self.tail(tail)
            .all(|r| r.metrics().is_some_and(|m| m.linear_count == n))
    }

    /// Occupied nonlinear counts equal `N₁` on the last `tail` rows.
    pub fn occupied_counts_stable(&self, tail: usize) -> bool {
        let n1 = self.limit.n_occupied;
        self.tail(tail)
            .all(|r| r.run().is_some_and(|run| run.occupied() == n1))
    }

    fn tail(&self, tail: usize) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().skip(self.rows.len().saturating_sub(tail))
    }
}

/// True when every entry is present and each is strictly below the previous.
pub fn strictly_decreasing(values: &[Option<f64>]) -> bool {
    values.iter().all(Option::is_some)
        && values.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        })
}

/// Metrics of one finished run against the limit.
pub fn row_metrics(
    run: &SingleRun,
    limit: &LimitSolution,
    count_threshold: f64,
    exec: Exec,
) -> RowMetrics {
    let s = &run.scf;
    let tent = &limit.potential;
    let mut pairings = [0.0; 3];
    for (slot, phi) in pairings.iter_mut().zip(TestFunction::ALL) {
        *slot = weakstar_pairing(&s.density, &limit.measure, phi);
    }
    let shifted = limit.shifted_levels();
    RowMetrics {
        sup_err: metric_sup(&s.potential, tent),
        holder_err: metric_holder_with(&s.potential, tent, run.params.holder_alpha, exec),
        pairings,
        mass: s.density.integral(),
        level_gaps: s
            .spectrum
            .values
            .iter()
            .zip(&shifted)
            .map(|(e, t)| (e - t).abs())
            .collect(),
        linear_gaps: run
            .linear_values
            .iter()
            .zip(&limit.reference.values)
            .map(|(a, b)| (a - b).abs())
            .collect(),
        linear_count: run.linear_count_below(count_threshold),
    }
}

/// Computes the limit once and then one row per `h`, in parallel when `exec`
/// allows. Failed rows are kept with their error message.
pub fn run_sweep(p: &SystemParams, hs: &[f64], exec: Exec) -> Result<ConvergenceReport> {
    let limit = solve_limit(p)?;
    run_sweep_with_limit(p, hs, limit, exec)
}

pub fn run_sweep_with_limit(
    p: &SystemParams,
    hs: &[f64],
    limit: LimitSolution,
    exec: Exec,
) -> Result<ConvergenceReport> {
    if hs.is_empty() {
        return Err(Error::Config("empty h list".into()));
    }
    let mut hs = hs.to_vec();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();
    let top = *limit
        .reference
        .values
        .last()
        .expect("limit has a bound state");
    let count_threshold = 0.5 * top;
    let rows = par::map_slice(exec, &hs, |&h| {
        let ph = p.with_h(h);
        let outcome = run_single_with(&ph, count_threshold, exec)
            .map(|run| {
                let m = row_metrics(&run, &limit, count_threshold, exec);
                (run, m)
            })
            .map_err(|e| e.to_string());
        SweepRow { h, outcome }
    });
    Ok(ConvergenceReport {
        params: p.clone(),
        limit,
        count_threshold,
        rows,
    })
}

/// The default sweep.
pub const DEFAULT_SWEEP: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
