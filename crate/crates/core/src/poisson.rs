//! Dirichlet Poisson problem `-V'' = source` on `(0, L)`.
//!
//! Grid densities go through the three-point stencil (the same discretization
//! the Hamiltonian uses); measures go through the exact Green function so that
//! atoms need not sit on grid nodes.

use crate::error::{Error, Result};
use crate::model::{Grid, GridFunction};
use crate::par::{self, Exec};

/// Finite non-negative measure on `(0, L)`: point atoms plus an optional
/// absolutely continuous part sampled on a grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<GridFunction>,
}

impl Measure {
    pub fn zero() -> Self {
        Measure::default()
    }

    pub fn atom(location: f64, weight: f64) -> Self {
        Measure {
            atoms: vec![(location, weight)],
            density: None,
        }
    }

    pub fn from_density(density: GridFunction) -> Self {
        Measure {
            atoms: Vec::new(),
            density: Some(density),
        }
    }

    /// Total mass `‖μ‖_m`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.abs()).sum::<f64>()
            + self.density.as_ref().map_or(0.0, |d| d.integral())
    }

    /// `∫ φ dμ` with the grid quadrature for the density part.
    pub fn pair<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(a, w)| w * phi(a)).sum();
        let dens = self.density.as_ref().map_or(0.0, |d| {
            d.dx()
                * d.values()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * phi(d.x(j)))
                    .sum::<f64>()
        });
        atoms + dens
    }
}

/// Green function of `-d²/dx²` on `(0, L)` with Dirichlet ends.
pub fn green_kernel(x: f64, y: f64, length: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    lo * (length - hi) / length
}

/// Solves `-D₂ V = n` with the three-point stencil by Thomas elimination.
pub fn poisson_solve_density(grid: &Grid, n: &GridFunction) -> Result<GridFunction> {
    n.check_on(grid)?;
    let sup = n.sup_norm();
    let min = n.min();
    if min < -1e-12 * sup {
        return Err(Error::NegativeSource { min });
    }
    Ok(solve_stencil(grid, n.values()))
}

/// Stencil solve without the sign check.
pub(crate) fn solve_stencil(grid: &Grid, rhs: &[f64]) -> GridFunction {
    let m = grid.n();
    let h2 = grid.dx() * grid.dx();
    // K = tridiag(-1, 2, -1); forward sweep keeps c'_j = -1/b'_j
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    let mut b = 2.0;
    cp[0] = -1.0 / b;
    dp[0] = rhs[0] * h2 / b;
    for j in 1..m {
        b = 2.0 + cp[j - 1];
        cp[j] = -1.0 / b;
        dp[j] = (rhs[j] * h2 + dp[j - 1]) / b;
    }
    let mut v = vec![0.0; m];
    v[m - 1] = dp[m - 1];
    for j in (0..m - 1).rev() {
        v[j] = dp[j] - cp[j] * v[j + 1];
    }
    GridFunction::from_raw(v, grid.dx(), grid.length())
}

/// `V(x_j) = Σ w G(x_j, a) + Δx Σ_k G(x_j, x_k) ρ_k`.
pub fn poisson_solve_measure(grid: &Grid, mu: &Measure) -> Result<GridFunction> {
    poisson_solve_measure_with(grid, mu, Exec::default())
}

pub fn poisson_solve_measure_with(grid: &Grid, mu: &Measure, exec: Exec) -> Result<GridFunction> {
    let length = grid.length();
    for &(a, _) in &mu.atoms {
        if !(a > 0.0 && a < length) {
            return Err(Error::AtomOutOfDomain {
                location: a,
                length,
            });
        }
    }
    if let Some(d) = &mu.density {
        d.check_on(grid)?;
    }
    let values = par::map_indexed(exec, grid.n(), |j| {
        let x = grid.x(j);
        let mut v: f64 = mu
            .atoms
            .iter()
            .map(|&(a, w)| w * green_kernel(x, a, length))
            .sum();
        if let Some(d) = &mu.density {
            let dx = grid.dx();
            v += dx
                * d.values()
                    .iter()
                    .enumerate()
                    .map(|(k, rho)| green_kernel(x, grid.x(k), length) * rho)
                    .sum::<f64>();
        }
        v
    });
    GridFunction::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(green_kernel(0.25, 0.75, 1.0), 0.0625);
        assert_eq!(green_kernel(0.75, 0.25, 1.0), 0.0625);
        assert_eq!(green_kernel(0.0, 0.3, 1.0), 0.0);
        assert_eq!(green_kernel(1.0, 0.3, 1.0), 0.0);
        let x0: f64 = 0.4;
        assert!((green_kernel(x0, x0, 1.0) - x0 * (1.0 - x0)).abs() < 1e-16);
        for i in 0..=20 {
            for j in 0..=20 {
                let g = green_kernel(i as f64 / 20.0, j as f64 / 20.0, 1.0);
                assert!((0.0..=0.25).contains(&g));
            }
        }
    }

    #[test]
    fn zero_and_constant_sources() {
        let grid = Grid::uniform(1.0, 999);
        let v = poisson_solve_density(&grid, &GridFunction::zeros(&grid)).unwrap();
        assert_eq!(v.sup_norm(), 0.0);
        let one = GridFunction::from_fn(&grid, |_| 1.0);
        let v = poisson_solve_density(&grid, &one).unwrap();
        for j in 0..grid.n() {
            let x = grid.x(j);
            assert!((v.values()[j] - x * (1.0 - x) / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn negative_source_rejected() {
        let grid = Grid::uniform(1.0, 9);
        let n = GridFunction::from_fn(&grid, |x| x - 0.5);
        assert!(matches!(
            poisson_solve_density(&grid, &n),
            Err(Error::NegativeSource { .. })
        ));
        // round-off sized negatives are tolerated
        let n = GridFunction::from_fn(&grid, |x| if x < 0.15 { -1e-14 } else { 1.0 });
        assert!(poisson_solve_density(&grid, &n).is_ok());
    }

    #[test]
    fn unit_atom_gives_tent() {
        let grid = Grid::uniform(1.0, 999);
        let x0 = 0.4;
        let v = poisson_solve_measure(&grid, &Measure::atom(x0, 1.0)).unwrap();
        for j in 0..grid.n() {
            let x = grid.x(j);
            let tent = if x <= x0 {
                (1.0 - x0) * x
            } else {
                x0 * (1.0 - x)
            };
            assert!((v.values()[j] - tent).abs() < 1e-15);
        }
        let v3 = poisson_solve_measure(&grid, &Measure::atom(x0, 3.0)).unwrap();
        for (a, b) in v3.values().iter().zip(v.values()) {
            assert!((a - 3.0 * b).abs() < 1e-15);
        }
        let z = poisson_solve_measure(&grid, &Measure::zero()).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn atom_outside_domain() {
        let grid = Grid::uniform(1.0, 9);
        for a in [0.0, 1.0, -0.2, 1.3] {
            assert!(matches!(
                poisson_solve_measure(&grid, &Measure::atom(a, 1.0)),
                Err(Error::AtomOutOfDomain { .. })
            ));
        }
    }

    #[test]
    fn slope_jump_across_atom() {
        let grid = Grid::uniform(1.0, 1000);
        let a = 0.3004;
        let w = 2.5;
        let v = poisson_solve_measure(&grid, &Measure::atom(a, w)).unwrap();
        let nodes = v.node_values();
        let dx = grid.dx();
        let k = (a / dx).floor() as usize;
        let left = (nodes[k] - nodes[k - 1]) / dx;
        let right = (nodes[k + 2] - nodes[k + 1]) / dx;
        assert!((right - left + w).abs() < 1e-9);
    }

    #[test]
    fn density_part_matches_stencil() {
        let grid = Grid::uniform(1.0, 399);
        let rho = GridFunction::from_fn(&grid, |x| 1.0 + (3.0 * x).sin().powi(2));
        let a = poisson_solve_density(&grid, &rho).unwrap();
        let b = poisson_solve_measure(&grid, &Measure::from_density(rho.clone())).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        let mu = Measure::from_density(rho);
        assert!(b.sup_norm() <= 0.25 * mu.mass() + 1e-15);
    }
}
