//! The physical model: well profile, occupation function, grid and the
//! discretized Hamiltonian `-h² d²/dx² + U^h + V` with Dirichlet ends.

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quad::adaptive_simpson;

/// Smooth bump well `U(y) = -U₀ exp(-1/(1-y²))` on `|y| < 1`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellPotential {
    pub u0: f64,
}

impl WellPotential {
    pub fn new(u0: f64) -> Self {
        WellPotential { u0 }
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y.abs() < 1.0 {
            -self.u0 * (-1.0 / (1.0 - y * y)).exp()
        } else {
            0.0
        }
    }

    /// `U^h(x) = U((x - x₀)/h)`.
    pub fn rescaled(&self, p: &SystemParams, x: f64) -> f64 {
        self.eval((x - p.x0) / p.h)
    }

    /// `Λ = ‖U‖_∞`, attained at the center.
    pub fn sup_norm(&self) -> f64 {
        self.u0 * (-1.0f64).exp()
    }

    /// `∫_{-1}^{1} |y| |U(y)| dy`, used in the bound-state count bound.
    pub fn first_moment(&self) -> f64 {
        2.0 * adaptive_simpson(|y| y * -self.eval(y), 0.0, 1.0, 1e-13)
    }

    pub fn integral(&self) -> f64 {
        2.0 * adaptive_simpson(|y| self.eval(y), 0.0, 1.0, 1e-13)
    }
}

/// Occupation function `f(x) = A exp(-1/(ε_S - x))` for `x < ε_S`, zero above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionFunction {
    pub eps_s: f64,
    pub amplitude: f64,
}

impl PartitionFunction {
    pub fn new(eps_s: f64, amplitude: f64) -> Self {
        PartitionFunction { eps_s, amplitude }
    }

    pub fn from_params(p: &SystemParams) -> Self {
        Self::new(p.eps_s, p.amplitude)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.eps_s {
            self.amplitude * (-1.0 / (self.eps_s - x)).exp()
        } else {
            0.0
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.eps_s {
            let gap = self.eps_s - x;
            -self.eval(x) / (gap * gap)
        } else {
            0.0
        }
    }

    /// `F(x) = ∫_x^∞ f(s) ds`, integrated on `[x, ε_S]`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        if x >= self.eps_s {
            return 0.0;
        }
        let tol = 1e-15 * self.amplitude * (1.0 + (self.eps_s - x));
        adaptive_simpson(|s| self.eval(s), x, self.eps_s, tol)
    }
}

/// Uniform grid `x_j = j Δx`, `j = 0..=n+1`, with `x_{n+1} = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
    length: f64,
    capped: bool,
}

impl Grid {
    /// Grid with `n` interior points on `[0, length]`.
    pub fn uniform(length: f64, n: usize) -> Self {
        assert!(n >= 1, "grid needs at least one interior point");
        Grid {
            n,
            dx: length / (n + 1) as f64,
            length,
            capped: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// True when the `n_max` cap limited the resolution.
    pub fn capped(&self) -> bool {
        self.capped
    }

    /// Interior node `j` (zero based), i.e. `x = (j + 1) Δx`.
    pub fn x(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dx
    }

    /// All nodes including both endpoints.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n + 2)
            .map(|k| {
                if k == self.n + 1 {
                    self.length
                } else {
                    k as f64 * self.dx
                }
            })
            .collect()
    }
}

/// `Δx = min(h/points_per_well, L/1000)`, rounded so that `L/Δx` is an
/// integer; the interior size is clamped to `n_max` and the clamp flagged.
pub fn build_grid(p: &SystemParams) -> Grid {
    let target = (p.h / p.points_per_well as f64).min(p.length / 1000.0);
    let cells = ((p.length / target).round() as usize).max(2);
    let mut n = cells - 1;
    let mut capped = false;
    if n > p.n_max {
        n = p.n_max;
        capped = true;
    }
    Grid {
        n,
        dx: p.length / (n + 1) as f64,
        length: p.length,
        capped,
    }
}

/// Interior values of a function on a [`Grid`]; the Dirichlet endpoint
/// values are zero and not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    dx: f64,
    length: f64,
}

impl GridFunction {
    pub fn zeros(grid: &Grid) -> Self {
        GridFunction {
            values: vec![0.0; grid.n()],
            dx: grid.dx(),
            length: grid.length(),
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> Self {
        GridFunction {
            values: (0..grid.n()).map(|j| f(grid.x(j))).collect(),
            dx: grid.dx(),
            length: grid.length(),
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::DimensionMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        Ok(GridFunction {
            values,
            dx: grid.dx(),
            length: grid.length(),
        })
    }

    pub(crate) fn from_raw(values: Vec<f64>, dx: f64, length: f64) -> Self {
        GridFunction { values, dx, length }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dx
    }

    pub fn is_on(&self, grid: &Grid) -> bool {
        self.values.len() == grid.n() && (self.dx - grid.dx()).abs() <= 1e-14 * grid.dx()
    }

    pub fn check_on(&self, grid: &Grid) -> Result<()> {
        if self.is_on(grid) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: grid.n(),
                got: self.values.len(),
            })
        }
    }

    /// Values at all nodes, endpoints included.
    pub fn node_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() + 2);
        out.push(0.0);
        out.extend_from_slice(&self.values);
        out.push(0.0);
        out
    }

    /// Grid quadrature `Δx Σ v_j` (trapezoid with zero endpoints).
    pub fn integral(&self) -> f64 {
        self.dx * self.values.iter().sum::<f64>()
    }

    pub fn inner(&self, other: &GridFunction) -> f64 {
        self.dx
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Δx Σ ((v_{j+1} - v_j)/Δx)²` over all cells, endpoints included.
    pub fn h1_seminorm_sq(&self) -> f64 {
        let nodes = self.node_values();
        nodes
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                d * d
            })
            .sum::<f64>()
            / self.dx
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self + t (other - self)`.
    pub fn lerp(&self, other: &GridFunction, t: f64) -> GridFunction {
        GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
            dx: self.dx,
            length: self.length,
        }
    }
}

/// Symmetric tridiagonal matrix. `dx` and `length` describe the grid the
/// rows live on, so eigenvectors can be normalized with the grid quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagOperator {
    diag: Vec<f64>,
    off: Vec<f64>,
    off_sq: Vec<f64>,
    h2: f64,
    dx: f64,
    length: f64,
}

impl TridiagOperator {
    /// Bare matrix with unit spacing.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        Self::on_geometry(diag, off, 0.0, 1.0, (n + 1) as f64)
    }

    pub fn on_geometry(
        diag: Vec<f64>,
        off: Vec<f64>,
        h2: f64,
        dx: f64,
        length: f64,
    ) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                got: off.len(),
            });
        }
        let off_sq = off.iter().map(|b| b * b).collect();
        Ok(TridiagOperator {
            diag,
            off,
            off_sq,
            h2,
            dx,
            length,
        })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub(crate) fn off_sq(&self) -> &[f64] {
        &self.off_sq
    }

    /// The `h²` factor of the kinetic stencil.
    pub fn scale(&self) -> f64 {
        self.h2
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn row_radius(&self, j: usize) -> f64 {
        let left = if j > 0 { self.off[j - 1].abs() } else { 0.0 };
        let right = if j + 1 < self.n() {
            self.off[j].abs()
        } else {
            0.0
        };
        left + right
    }

    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n())
            .map(|j| self.diag[j] - self.row_radius(j))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.n())
            .map(|j| self.diag[j] + self.row_radius(j))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.gershgorin_lower()
            .abs()
            .max(self.gershgorin_upper().abs())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|j| {
                let mut s = self.diag[j] * x[j];
                if j > 0 {
                    s += self.off[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    s += self.off[j] * x[j + 1];
                }
                s
            })
            .collect()
    }

    /// Leading `(n-1) × (n-1)` block.
    pub fn without_last(&self) -> Option<TridiagOperator> {
        if self.n() < 2 {
            return None;
        }
        let n = self.n() - 1;
        Some(TridiagOperator {
            diag: self.diag[..n].to_vec(),
            off: self.off[..n - 1].to_vec(),
            off_sq: self.off_sq[..n - 1].to_vec(),
            h2: self.h2,
            dx: self.dx,
            length: self.length,
        })
    }
}

/// `diag_j = 2h²/Δx² + U^h(x_j) + V_j`, `off_j = -h²/Δx²`.
pub fn assemble_operator(
    grid: &Grid,
    p: &SystemParams,
    well: &WellPotential,
    v: Option<&GridFunction>,
) -> Result<TridiagOperator> {
    let samples: Vec<f64> = (0..grid.n()).map(|j| well.rescaled(p, grid.x(j))).collect();
    assemble_from_samples(grid, p.h, &samples, v)
}

fn assemble_from_samples(
    grid: &Grid,
    h: f64,
    well_samples: &[f64],
    v: Option<&GridFunction>,
) -> Result<TridiagOperator> {
    if let Some(v) = v {
        v.check_on(grid)?;
    }
    let h2 = h * h;
    let k = h2 / (grid.dx() * grid.dx());
    let diag = match v {
        Some(v) => well_samples
            .iter()
            .zip(v.values())
            .map(|(u, vj)| 2.0 * k + u + vj)
            .collect(),
        None => well_samples.iter().map(|u| 2.0 * k + u).collect(),
    };
    let off = vec![-k; grid.n() - 1];
    TridiagOperator::on_geometry(diag, off, h2, grid.dx(), grid.length())
}

/// Everything that stays fixed while the potential `V` changes: parameters,
/// model functions, grid and the sampled well.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: SystemParams,
    pub well: WellPotential,
    pub partition: PartitionFunction,
    grid: Grid,
    well_samples: Vec<f64>,
}

impl Problem {
    /// Validates `p`, builds the grid and rejects grids that do not resolve
    /// the well (`Δx ≥ h/4`).
    pub fn new(p: &SystemParams) -> Result<Self> {
        p.validate()?;
        let grid = build_grid(p);
        if grid.dx() >= p.h / 4.0 {
            return Err(Error::Config(format!(
                "grid spacing {:e} does not resolve the well (h = {:e}, n capped at {})",
                grid.dx(),
                p.h,
                p.n_max
            )));
        }
        Ok(Self::with_grid(p, grid))
    }

    /// Uses the given grid as is; no resolution check.
    pub fn with_grid(p: &SystemParams, grid: Grid) -> Self {
        let well = WellPotential::new(p.u0);
        let well_samples = (0..grid.n()).map(|j| well.rescaled(p, grid.x(j))).collect();
        Problem {
            params: p.clone(),
            well,
            partition: PartitionFunction::from_params(p),
            grid,
            well_samples,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn well_samples(&self) -> &[f64] {
        &self.well_samples
    }

    pub fn hamiltonian(&self, v: Option<&GridFunction>) -> Result<TridiagOperator> {
        assemble_from_samples(&self.grid, self.params.h, &self.well_samples, v)
    }
}
