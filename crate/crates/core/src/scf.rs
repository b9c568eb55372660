//! Self-consistent coupling of the Schrödinger and Poisson problems.
//!
//! The discrete energy functional
//!
//! ```text
//! J(V) = ½ Δx Σ ((V_{j+1} - V_j)/Δx)² + Σ_{ε_i < ε_S} F(ε_i(V))
//! ```
//!
//! is strictly convex and its stationarity condition is exactly the discrete
//! fixed point `V = Poisson(n[V])`. [`scf_solve`] runs a damped Picard
//! iteration on that fixed point and uses `J` to accept or reject steps.

use std::time::Instant;

use crate::eigen::{spectrum_below, spectrum_below_with, EigenSet};
use crate::error::{Error, Result};
use crate::model::{GridFunction, PartitionFunction, Problem};
use crate::par::Exec;
use crate::poisson::{poisson_solve_density, solve_stencil};

const TAU_START: f64 = 0.5;
const TAU_MAX: f64 = 0.9;
const TAU_GROWTH: f64 = 1.2;
const TAU_MIN: f64 = 1e-8;
const GROWTH_STREAK: usize = 3;

/// Floor below which a rise of `J` is treated as round-off rather than an
/// increase. Eigenvalues and `F` are both resolved to about `1e-13`.
pub fn energy_slack(j: f64) -> f64 {
    1e-12 * (1.0 + j.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub tau: f64,
    pub residual: f64,
    pub energy: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct ScfSolution {
    /// The self-consistent potential `V^h`.
    pub potential: GridFunction,
    /// Occupied spectrum of `H^h(V^h)`, below `ε_S`.
    pub spectrum: EigenSet,
    pub density: GridFunction,
    /// `J` at every accepted iterate, starting with the initial guess.
    pub energy_history: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    /// `‖V - Poisson(n[V])‖_∞` at the returned potential.
    pub residual: f64,
    pub rejected_steps: usize,
    pub runtime_ms: f64,
}

impl ScfSolution {
    /// No state lies below `ε_S`: density and potential vanish.
    pub fn is_trivial(&self) -> bool {
        self.spectrum.is_empty()
    }

    pub fn energy(&self) -> f64 {
        *self
            .energy_history
            .last()
            .expect("history starts with J(V_init)")
    }

    /// `Σ f(ε_i)` over the occupied states.
    pub fn occupation_sum(&self, f: &PartitionFunction) -> f64 {
        self.spectrum.values.iter().map(|&e| f.eval(e)).sum()
    }
}

/// `n = Σ f(ε_i) |Ψ_i|²` over the states in `spectrum` below `ε_S`.
pub fn assemble_density(
    spectrum: &EigenSet,
    f: &PartitionFunction,
    like: &GridFunction,
) -> GridFunction {
    let mut n = vec![0.0; like.len()];
    for (&e, psi) in spectrum.values.iter().zip(&spectrum.vectors) {
        if e >= f.eps_s {
            continue;
        }
        let occ = f.eval(e);
        for (nj, pj) in n.iter_mut().zip(psi.values()) {
            *nj += occ * pj * pj;
        }
    }
    GridFunction::from_raw(n, like.dx(), like.length())
}

/// `Tr F(H) = Σ F(ε_i)` over the given eigenvalues.
pub fn trace_term(values: &[f64], f: &PartitionFunction) -> f64 {
    values.iter().map(|&e| f.antiderivative(e)).sum()
}

/// `J(V)` as defined in the module docs.
pub fn energy_functional(problem: &Problem, v: &GridFunction) -> Result<f64> {
    evaluate(problem, v, Exec::default()).map(|(_, j)| j)
}

fn evaluate(problem: &Problem, v: &GridFunction, exec: Exec) -> Result<(EigenSet, f64)> {
    let t = problem.hamiltonian(Some(v))?;
    let spectrum = spectrum_below_with(&t, problem.params.eps_s, problem.params.tol_eig, exec)?;
    let j = 0.5 * v.h1_seminorm_sq() + trace_term(&spectrum.values, &problem.partition);
    Ok((spectrum, j))
}

/// The linear spectrum of `H₀^h` (no Poisson potential) below `eps`.
pub fn linear_spectrum(problem: &Problem, eps: f64) -> Result<EigenSet> {
    let t = problem.hamiltonian(None)?;
    spectrum_below(&t, eps, problem.params.tol_eig)
}

/// Damped Picard iteration `V ← (1-τ)V + τ Poisson(n[V])`.
///
/// `τ` starts at 0.5, is halved (and the step retried) whenever `J` would
/// increase, and grows by 1.2 up to 0.9 after three accepted steps in a row.
/// Stops when `‖Poisson(n[V]) - V‖_∞ ≤ tol_scf`.
pub fn scf_solve(problem: &Problem, v_init: &GridFunction) -> Result<ScfSolution> {
    scf_solve_with(problem, v_init, Exec::default())
}

/// [`scf_solve`] with an explicit execution mode for the spectral solves.
pub fn scf_solve_with(problem: &Problem, v_init: &GridFunction, exec: Exec) -> Result<ScfSolution> {
    let started = Instant::now();
    let p = &problem.params;
    let grid = problem.grid();
    v_init.check_on(grid)?;
    if v_init.min() < -1e-12 {
        return Err(Error::Config(format!(
            "initial potential must be non-negative, min is {:e}",
            v_init.min()
        )));
    }

    let mut v = v_init.clone();
    let (mut spectrum, mut j) = evaluate(problem, &v, exec)?;
    let mut energy_history = vec![j];
    let mut trace = Vec::new();
    let mut tau = TAU_START;
    let mut streak = 0;
    let mut rejected = 0;
    let mut residual = f64::INFINITY;

    for iteration in 1..=p.max_iter {
        let density = assemble_density(&spectrum, &problem.partition, &v);
        let target = if spectrum.is_empty() {
            GridFunction::zeros(grid)
        } else {
            poisson_solve_density(grid, &density)?
        };
        residual = target.max_abs_diff(&v);
        if residual <= p.tol_scf {
            trace.push(TraceRow {
                iteration,
                tau: 0.0,
                residual,
                energy: j,
                accepted: true,
            });
            return Ok(ScfSolution {
                potential: v,
                spectrum,
                density,
                energy_history,
                trace,
                iterations: iteration,
                residual,
                rejected_steps: rejected,
                runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            });
        }

        loop {
            let candidate = v.lerp(&target, tau);
            let (cand_spectrum, cand_j) = evaluate(problem, &candidate, exec)?;
            let accepted = cand_j <= j + energy_slack(j);
            trace.push(TraceRow {
                iteration,
                tau,
                residual,
                energy: cand_j,
                accepted,
            });
            if accepted {
                v = candidate;
                spectrum = cand_spectrum;
                j = cand_j;
                energy_history.push(j);
                streak += 1;
                if streak >= GROWTH_STREAK {
                    tau = (tau * TAU_GROWTH).min(TAU_MAX);
                    streak = 0;
                }
                break;
            }
            rejected += 1;
            streak = 0;
            tau *= 0.5;
            if tau < TAU_MIN {
                return Err(Error::NoConvergence {
                    what: "scf damping",
                    iterations: iteration,
                    residual,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        what: "scf",
        iterations: p.max_iter,
        residual,
    })
}

/// `Poisson(n)` for the uniform density of total mass `mass`.
pub fn uniform_mass_potential(problem: &Problem, mass: f64) -> GridFunction {
    let grid = problem.grid();
    let rho = vec![mass / grid.length(); grid.n()];
    solve_stencil(grid, &rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use crate::params::SystemParams;

    fn default_problem() -> Problem {
        Problem::new(&SystemParams::default()).unwrap()
    }

    #[test]
    fn empty_spectrum_gives_zero_density() {
        let problem = default_problem();
        let f = problem.partition;
        let like = GridFunction::zeros(problem.grid());
        let n = assemble_density(&EigenSet::empty(f.eps_s), &f, &like);
        assert_eq!(n.sup_norm(), 0.0);
    }

    #[test]
    fn single_state_density_has_its_occupation_as_mass() {
        let problem = default_problem();
        let t = problem.hamiltonian(None).unwrap();
        let set = spectrum_below(&t, problem.params.eps_s, 1e-13).unwrap();
        assert_eq!(set.count(), 1);
        let f = problem.partition;
        let n = assemble_density(&set, &f, &set.vectors[0]);
        let c = f.eval(set.values[0]);
        assert!((n.integral() - c).abs() <= 1e-12 * c);
        for (a, b) in n.values().iter().zip(set.vectors[0].values()) {
            assert!((a - c * b * b).abs() <= 1e-15);
        }
    }

    #[test]
    fn density_mass_bounded_by_count_times_sup_f() {
        let problem = default_problem();
        let sol = scf_solve(&problem, &GridFunction::zeros(problem.grid())).unwrap();
        let f = problem.partition;
        let lam = problem.well.sup_norm();
        // f is decreasing, so its sup on [-Λ, ε_S) is f(-Λ)
        let bound = sol.spectrum.count() as f64 * f.eval(-lam);
        assert!(sol.density.integral() <= bound);
    }

    #[test]
    fn energy_at_zero_is_trace_of_linear_levels() {
        let problem = default_problem();
        let zero = GridFunction::zeros(problem.grid());
        let j0 = energy_functional(&problem, &zero).unwrap();
        let lin = linear_spectrum(&problem, problem.params.eps_s).unwrap();
        let direct: f64 = lin
            .values
            .iter()
            .map(|&e| problem.partition.antiderivative(e))
            .sum();
        assert!(j0 > 0.0);
        assert!((j0 - direct).abs() < 1e-14);
    }

    #[test]
    fn energy_is_zero_without_occupied_states() {
        let p = SystemParams {
            eps_s: -3.5,
            ..SystemParams::default()
        };
        let problem = Problem::new(&p).unwrap();
        let zero = GridFunction::zeros(problem.grid());
        assert_eq!(energy_functional(&problem, &zero).unwrap(), 0.0);
    }

    #[test]
    fn threshold_below_ground_state_is_trivial_in_one_iteration() {
        let p = SystemParams {
            eps_s: -3.5,
            ..SystemParams::default()
        };
        let problem = Problem::new(&p).unwrap();
        let sol = scf_solve(&problem, &GridFunction::zeros(problem.grid())).unwrap();
        assert!(sol.is_trivial());
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.potential.sup_norm(), 0.0);
    }

    #[test]
    fn converged_solution_respects_energy_bounds() {
        let problem = default_problem();
        let zero = GridFunction::zeros(problem.grid());
        let sol = scf_solve(&problem, &zero).unwrap();
        assert!(sol.residual <= problem.params.tol_scf);
        assert!(sol.potential.min() >= -1e-12);
        let j0 = energy_functional(&problem, &zero).unwrap();
        assert!(sol.energy() <= j0);
        let lin = linear_spectrum(&problem, problem.params.eps_s).unwrap();
        let bound = 2.0 * trace_term(&lin.values, &problem.partition);
        assert!(sol.potential.h1_seminorm_sq() <= bound * (1.0 + 1e-8));
        for w in sol.energy_history.windows(2) {
            assert!(w[1] <= w[0] + energy_slack(w[0]));
        }
    }

    #[test]
    fn rejects_bad_initial_guess() {
        let problem = default_problem();
        let neg = GridFunction::from_fn(problem.grid(), |x| -x);
        assert!(scf_solve(&problem, &neg).is_err());
        let wrong = GridFunction::zeros(&Grid::uniform(1.0, 5));
        assert!(matches!(
            scf_solve(&problem, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_no_convergence() {
        let p = SystemParams {
            max_iter: 2,
            ..SystemParams::default()
        };
        let problem = Problem::new(&p).unwrap();
        let err = scf_solve(&problem, &GridFunction::zeros(problem.grid())).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn uniform_mass_potential_is_parabola() {
        let problem = default_problem();
        let v = uniform_mass_potential(&problem, 1.0);
        let g = problem.grid();
        for j in (0..g.n()).step_by(97) {
            let x = g.x(j);
            assert!((v.values()[j] - x * (1.0 - x) / 2.0).abs() < 1e-12);
        }
    }
}
