//! The numbered acceptance checks. Each returns an [`Outcome`] with a short
//! detail line; `sp1d verify` and the `acceptance` test target print them.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agmon::comparison_margin;
use crate::eigen::eigenvalues_below;
use crate::emit::sweep_files;
use crate::harness::{
    run_single_with, run_sweep, strictly_decreasing, ConvergenceReport, DEFAULT_SWEEP,
};
use crate::limit::{solve_limit, theta_residual};
use crate::model::{Grid, GridFunction, PartitionFunction, Problem, TridiagOperator};
use crate::oracle::{dense_tridiagonal, jacobi_eigenvalues};
use crate::par::Exec;
use crate::params::SystemParams;
use crate::poisson::{poisson_solve_density, poisson_solve_measure};
use crate::scf::{energy_slack, scf_solve, uniform_mass_potential};

const SEED: u64 = 0x005e_ed1d;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, failures: Vec<String>, summary: String) -> Outcome {
    let passed = failures.is_empty();
    let detail = if passed {
        summary
    } else {
        format!("{summary}; {}", failures.join("; "))
    };
    Outcome {
        id,
        name,
        passed,
        detail,
    }
}

fn fail_with(id: u8, name: &'static str, err: impl fmt::Display) -> Outcome {
    Outcome {
        id,
        name,
        passed: false,
        detail: format!("error: {err}"),
    }
}

/// Shared state: the configuration and the default sweep, computed on first use.
pub struct Suite {
    pub params: SystemParams,
    sweep: OnceCell<Result<ConvergenceReport, String>>,
}

impl Suite {
    pub fn new(params: SystemParams) -> Self {
        Suite {
            params,
            sweep: OnceCell::new(),
        }
    }

    pub fn sweep(&self) -> Result<&ConvergenceReport, String> {
        self.sweep
            .get_or_init(|| {
                run_sweep(&self.params, &DEFAULT_SWEEP, Exec::default()).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn run(&self, id: u8) -> Outcome {
        match id {
            1 => box_spectrum(),
            2 => eigen_oracle(),
            3 => poisson_exactness(),
            4 => scf_contracts(&self.params),
            5 => uniqueness(&self.params),
            6 => limit_block(&self.params),
            7 => self.convergence(),
            8 => self.stabilization(),
            9 => self.agmon_suite(),
            10 => self.mass_identity(),
            11 => self.determinism(),
            _ => panic!("no acceptance criterion {id}"),
        }
    }

    pub fn run_all(&self) -> Vec<Outcome> {
        (1..=CRITERIA).map(|id| self.run(id)).collect()
    }

    fn convergence(&self) -> Outcome {
        const NAME: &str = "convergence across the sweep";
        let r = match self.sweep() {
            Ok(r) => r,
            Err(e) => return fail_with(7, NAME, e),
        };
        let mut failures = Vec::new();
        let checks: [(&str, Vec<Option<f64>>); 5] = [
            ("sup", r.series(|m| m.sup_err)),
            ("holder", r.series(|m| m.holder_err)),
            ("pair_const", r.series(|m| m.pairings[0])),
            ("pair_x", r.series(|m| m.pairings[1])),
            ("pair_sin", r.series(|m| m.pairings[2])),
        ];
        for (name, s) in &checks {
            if !strictly_decreasing(s) {
                failures.push(format!("{name} not strictly decreasing: {s:?}"));
            }
        }
        for i in 0..r.limit.n_occupied {
            let s = r.series(|m| m.level_gaps.get(i).copied().unwrap_or(f64::NAN));
            let s: Vec<Option<f64>> = s.into_iter().map(|v| v.filter(|x| x.is_finite())).collect();
            if !strictly_decreasing(&s) {
                failures.push(format!(
                    "level {} gap not strictly decreasing: {s:?}",
                    i + 1
                ));
            }
        }
        let last_sup = checks[0]
            .1
            .last()
            .copied()
            .flatten()
            .unwrap_or(f64::INFINITY);
        let bound = 5e-2 * r.limit.theta;
        if last_sup > bound {
            failures.push(format!("final sup error {last_sup:e} above {bound:e}"));
        }
        outcome(
            7,
            NAME,
            failures,
            format!("final sup error {last_sup:.3e} <= {bound:.3e}, all metrics decreasing"),
        )
    }

    fn stabilization(&self) -> Outcome {
        const NAME: &str = "spectral stabilization";
        let r = match self.sweep() {
            Ok(r) => r,
            Err(e) => return fail_with(8, NAME, e),
        };
        let mut failures = Vec::new();
        if !r.linear_counts_stable(2) {
            failures.push(format!(
                "linear counts {:?} differ from N = {}",
                r.rows
                    .iter()
                    .map(|row| row.metrics().map(|m| m.linear_count))
                    .collect::<Vec<_>>(),
                r.limit.reference.count()
            ));
        }
        if !r.occupied_counts_stable(2) {
            failures.push(format!(
                "occupied counts {:?} differ from N1 = {}",
                r.rows
                    .iter()
                    .map(|row| row.run().map(|x| x.occupied()))
                    .collect::<Vec<_>>(),
                r.limit.n_occupied
            ));
        }
        outcome(
            8,
            NAME,
            failures,
            format!(
                "N = {}, N1 = {} on the two smallest h",
                r.limit.reference.count(),
                r.limit.n_occupied
            ),
        )
    }

    fn agmon_suite(&self) -> Outcome {
        const NAME: &str = "Agmon decay";
        let r = match self.sweep() {
            Ok(r) => r,
            Err(e) => return fail_with(9, NAME, e),
        };
        let p = &self.params;
        let mut failures = Vec::new();
        let mut worst_margin = f64::INFINITY;
        for h in [0.05, 0.025] {
            let ph = p.with_h(h);
            match Problem::new(&ph) {
                Ok(problem) => {
                    let m = comparison_margin(&problem.grid().nodes(), ph.eps_s, &ph);
                    worst_margin = worst_margin.min(m);
                    if m < -1e-12 {
                        failures.push(format!("distance bound fails at h = {h} by {m:e}"));
                    }
                }
                Err(e) => failures.push(format!("h = {h}: {e}")),
            }
        }
        let mut rates = Vec::new();
        for h in [0.05, 0.025] {
            let ground = r
                .rows
                .iter()
                .find(|row| row.h == h)
                .and_then(|row| row.run())
                .and_then(|run| {
                    run.decay
                        .iter()
                        .find(|(i, _)| *i == 0)
                        .map(|(_, d)| d.clone())
                });
            match ground {
                Some(d) => {
                    rates.push(d.rate_times_h(h));
                    if !d.passes(h) {
                        failures.push(format!(
                            "h = {h}: rate*h {:.4} below {:.4}",
                            d.rate_times_h(h),
                            d.target
                        ));
                    }
                }
                None => failures.push(format!("no ground-state decay report at h = {h}")),
            }
        }
        let norms: Vec<Option<f64>> = r
            .rows
            .iter()
            .map(|row| {
                row.run()
                    .and_then(|run| run.decay.iter().find(|(i, _)| *i == 0))
                    .map(|(_, d)| d.weighted_norm)
            })
            .collect();
        let mut worst_ratio: f64 = 1.0;
        for w in norms.windows(2) {
            match (w[0], w[1]) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => {
                    worst_ratio = worst_ratio.max(a / b).max(b / a)
                }
                _ => failures.push("missing weighted norm".into()),
            }
        }
        if worst_ratio > 2.0 {
            failures.push(format!("weighted norm ratio {worst_ratio:.3} above 2"));
        }
        outcome(
            9,
            NAME,
            failures,
            format!(
                "distance margin {worst_margin:.1e}, rate*h {:?}, norm ratio {worst_ratio:.3}",
                rates.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
            ),
        )
    }

    fn mass_identity(&self) -> Outcome {
        const NAME: &str = "mass identity";
        let r = match self.sweep() {
            Ok(r) => r,
            Err(e) => return fail_with(10, NAME, e),
        };
        let mut failures = Vec::new();
        let mut worst: f64 = 0.0;
        for row in &r.rows {
            match row.run() {
                Some(run) => {
                    let sum = run.occupation_sum();
                    let rel = (run.scf.density.integral() - sum).abs() / sum;
                    worst = worst.max(rel);
                    if !(rel <= 1e-12) {
                        failures.push(format!("h = {}: relative gap {rel:e}", row.h));
                    }
                }
                None => failures.push(format!("h = {} failed", row.h)),
            }
        }
        outcome(
            10,
            NAME,
            failures,
            format!("worst relative gap {worst:.1e}"),
        )
    }

    fn determinism(&self) -> Outcome {
        const NAME: &str = "determinism";
        let first = match self.sweep() {
            Ok(r) => r,
            Err(e) => return fail_with(11, NAME, e),
        };
        let second = match run_sweep(&self.params, &DEFAULT_SWEEP, Exec::default()) {
            Ok(r) => r,
            Err(e) => return fail_with(11, NAME, e),
        };
        let csv = |r: &ConvergenceReport| {
            sweep_files(r, false)
                .into_iter()
                .filter(|(name, _)| name.ends_with(".csv"))
                .collect::<Vec<_>>()
        };
        let a = csv(first);
        let b = csv(&second);
        let failures = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| x.1 != y.1)
            .map(|(x, _)| format!("{} differs", x.0))
            .collect();
        outcome(
            11,
            NAME,
            failures,
            format!("{} CSV files byte-identical", a.len()),
        )
    }
}

pub const CRITERIA: u8 = 11;

fn box_spectrum() -> Outcome {
    const NAME: &str = "box spectrum";
    let h: f64 = 0.05;
    let p = SystemParams {
        u0: 0.0,
        h,
        ..SystemParams::default()
    };
    let grid = Grid::uniform(1.0, 999);
    let dx = grid.dx();
    let problem = Problem::with_grid(&p, grid);
    let t = match problem.hamiltonian(None) {
        Ok(t) => t,
        Err(e) => return fail_with(1, NAME, e),
    };
    // between the third and fourth levels
    let values = eigenvalues_below(&t, 12.5 * (h * PI).powi(2), 1e-14);
    let mut failures = Vec::new();
    if values.len() != 3 {
        failures.push(format!("found {} levels, expected 3", values.len()));
    }
    let (mut worst_disc, mut worst_cont): (f64, f64) = (0.0, 0.0);
    for (k, &e) in values.iter().enumerate() {
        let i = (k + 1) as f64;
        let disc = 4.0 * h * h / (dx * dx) * (i * PI * dx / 2.0).sin().powi(2);
        let cont = (h * i * PI).powi(2);
        let rd = (e - disc).abs() / disc;
        let rc = (e - cont).abs() / cont;
        worst_disc = worst_disc.max(rd);
        worst_cont = worst_cont.max(rc);
        if rd > 1e-10 {
            failures.push(format!("level {i}: discrete relative error {rd:e}"));
        }
        if rc > 1e-5 {
            failures.push(format!("level {i}: continuum relative error {rc:e}"));
        }
    }
    outcome(
        1,
        NAME,
        failures,
        format!("relative errors {worst_disc:.1e} (discrete), {worst_cont:.1e} (continuum)"),
    )
}

fn eigen_oracle() -> Outcome {
    const NAME: &str = "eigensolver oracle";
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(1..=12);
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
        let threshold = rng.random_range(-6.0..6.0);
        let dense = jacobi_eigenvalues(dense_tridiagonal(&diag, &off), n);
        let expected: Vec<f64> = dense.into_iter().filter(|&e| e < threshold).collect();
        let t = match TridiagOperator::new(diag, off) {
            Ok(t) => t,
            Err(e) => return fail_with(2, NAME, e),
        };
        let got = eigenvalues_below(&t, threshold, 1e-14);
        if got.len() != expected.len() {
            failures.push(format!(
                "case {case}: count {} vs {}",
                got.len(),
                expected.len()
            ));
            continue;
        }
        for (a, b) in got.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
            if (a - b).abs() > 1e-10 {
                failures.push(format!("case {case}: {a} vs {b}"));
            }
        }
    }
    outcome(
        2,
        NAME,
        failures,
        format!("50 cases, worst deviation {worst:.1e}"),
    )
}

fn poisson_exactness() -> Outcome {
    const NAME: &str = "Poisson exactness";
    let grid = Grid::uniform(1.0, 999);
    let mut failures = Vec::new();
    let one = GridFunction::from_fn(&grid, |_| 1.0);
    let v = match poisson_solve_density(&grid, &one) {
        Ok(v) => v,
        Err(e) => return fail_with(3, NAME, e),
    };
    let exact = GridFunction::from_fn(&grid, |x| x * (1.0 - x) / 2.0);
    let err_const = v.max_abs_diff(&exact);
    if err_const > 1e-12 {
        failures.push(format!("constant source error {err_const:e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let modes: Vec<(f64, f64)> = (1..=4)
        .map(|_| (rng.random_range(0.0..0.2), rng.random_range(0.0..2.0 * PI)))
        .collect();
    let rho = GridFunction::from_fn(&grid, |x| {
        1.0 + modes
            .iter()
            .enumerate()
            .map(|(k, (a, ph))| a * ((k + 1) as f64 * PI * x + ph).sin())
            .sum::<f64>()
    });
    let err_cross = match (
        poisson_solve_density(&grid, &rho),
        poisson_solve_measure(&grid, &crate::poisson::Measure::from_density(rho.clone())),
    ) {
        (Ok(a), Ok(b)) => a.max_abs_diff(&b),
        (Err(e), _) | (_, Err(e)) => return fail_with(3, NAME, e),
    };
    if err_cross > 1e-4 {
        failures.push(format!("stencil vs Green quadrature {err_cross:e}"));
    }
    outcome(
        3,
        NAME,
        failures,
        format!("constant source {err_const:.1e}, stencil vs Green {err_cross:.1e}"),
    )
}

fn scf_contracts(p: &SystemParams) -> Outcome {
    const NAME: &str = "SCF contracts at h = 0.05";
    let ph = p.with_h(0.05);
    let run = match run_single_with(&ph, ph.eps_s, Exec::default()) {
        Ok(r) => r,
        Err(e) => return fail_with(4, NAME, e),
    };
    let s = &run.scf;
    let mut failures = Vec::new();
    if s.iterations > 500 || s.residual > 1e-10 {
        failures.push(format!(
            "iterations {}, residual {:e}",
            s.iterations, s.residual
        ));
    }
    if s.potential.min() < -1e-12 {
        failures.push(format!("min V = {:e}", s.potential.min()));
    }
    for (i, (lin, nl)) in run.linear_values.iter().zip(&s.spectrum.values).enumerate() {
        if *lin > nl + 1e-12 {
            failures.push(format!("level {}: linear {lin} above {nl}", i + 1));
        }
    }
    match s.spectrum.values.first() {
        Some(&e1) if e1 < ph.eps_s => {}
        other => failures.push(format!("ground level {other:?} not below eps_S")),
    }
    let h1 = s.potential.h1_seminorm_sq();
    let bound = 2.0 * run.linear_trace * (1.0 + 1e-8);
    if h1 > bound {
        failures.push(format!("H1 energy {h1:e} above {bound:e}"));
    }
    let rises = s
        .energy_history
        .windows(2)
        .filter(|w| w[1] > w[0] + energy_slack(w[0]))
        .count();
    if rises > 0 {
        failures.push(format!("J increased on {rises} accepted steps"));
    }
    outcome(
        4,
        NAME,
        failures,
        format!(
            "{} iterations, residual {:.1e}, min V {:.1e}, H1 {:.4e} <= {:.4e}",
            s.iterations,
            s.residual,
            s.potential.min(),
            h1,
            bound
        ),
    )
}

fn uniqueness(p: &SystemParams) -> Outcome {
    const NAME: &str = "uniqueness probe";
    let ph = p.with_h(0.05);
    let problem = match Problem::new(&ph) {
        Ok(x) => x,
        Err(e) => return fail_with(5, NAME, e),
    };
    let zero = GridFunction::zeros(problem.grid());
    let other = uniform_mass_potential(&problem, 1.0);
    let (a, b) = match (scf_solve(&problem, &zero), scf_solve(&problem, &other)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail_with(5, NAME, e),
    };
    let diff = a.potential.max_abs_diff(&b.potential);
    let failures = if diff <= 1e-8 {
        vec![]
    } else {
        vec![format!("sup difference {diff:e}")]
    };
    outcome(5, NAME, failures, format!("sup difference {diff:.1e}"))
}

fn limit_block(p: &SystemParams) -> Outcome {
    const NAME: &str = "limit block";
    let lim = match solve_limit(p) {
        Ok(l) => l,
        Err(e) => return fail_with(6, NAME, e),
    };
    let f = PartitionFunction::from_params(p);
    let mut failures = Vec::new();
    let g = theta_residual(&lim.reference, &f, p, lim.theta);
    if g.abs() > 1e-12 {
        failures.push(format!("|G(theta)| = {:e}", g.abs()));
    }
    let e1 = lim.reference.values[0];
    if !(lim.theta > 0.0 && lim.theta < p.eps_s - e1) {
        failures.push(format!("theta {} outside (0, {})", lim.theta, p.eps_s - e1));
    }
    if lim.potential.eval(p.x0) != lim.theta {
        failures.push("V0(x0) differs from theta".into());
    }
    let grid = match Problem::new(&p.with_h(0.05)) {
        Ok(pr) => pr.grid().clone(),
        Err(e) => return fail_with(6, NAME, e),
    };
    let green = match poisson_solve_measure(&grid, &lim.measure) {
        Ok(v) => v.max_abs_diff(&lim.potential.sample(&grid)),
        Err(e) => return fail_with(6, NAME, e),
    };
    if green > 1e-12 {
        failures.push(format!("Poisson(mu) vs V0 {green:e}"));
    }
    if !(lim.weight > 0.0) {
        failures.push(format!("weight {}", lim.weight));
    }
    outcome(
        6,
        NAME,
        failures,
        format!(
            "theta {:.10}, |G| {:.1e}, weight {:.6}, Poisson(mu) vs V0 {green:.1e}",
            lim.theta,
            g.abs(),
            lim.weight
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_instance_criteria_pass() {
        for id in 1..=3 {
            let o = Suite::new(SystemParams::default()).run(id);
            assert!(o.passed, "{o}");
        }
    }

    #[test]
    fn outcome_line_format() {
        let o = Outcome {
            id: 3,
            name: "x",
            passed: false,
            detail: "bad".into(),
        };
        assert_eq!(o.to_string(), "[FAIL]  3 x: bad");
    }
}
