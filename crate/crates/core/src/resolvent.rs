//! Dense discretization of the generator `A_gamma(u1, u2) = (u2, -D^s u1 - gamma u2)`
//! on the truncated Fourier basis, resolvent norms along the imaginary axis in
//! the `H^{s/2} x L^2` geometry, and best constants of the two observability
//! inequalities as smallest eigenvalues.
//!
//! Coordinates: every mode is represented by its unit-norm plane wave, so the
//! `L^2` inner product becomes the Euclidean one. The energy weight
//! `W = diag(m_k, 1)`, `m_k = (xi_k^2 + 1)^{s/2}`, is absorbed by the symmetric
//! conjugation `B = W^{1/2} A W^{-1/2}`, which gives
//!
//! ```text
//! B = [  0        diag(omega) ]
//!     [ -diag(omega)   -Gamma ]      omega_k = (xi_k^2 + 1)^{s/4}
//! ```
//!
//! with `Gamma` the multiplication by `gamma` in the Fourier basis.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::damping::{DampingKind, DampingProfile};
use crate::dense::{min_hermitian_eigenvalue, multiplication_matrix, singular_range, CMatrix};
use crate::error::{Error, Result};
use crate::par;
use crate::regression::fit_line;
use crate::spectral::{same_grid, Field, Grid};

/// Default cap on the number of grid points for dense assembly (matrix dimension `2N`).
pub const DEFAULT_DENSE_BUDGET: usize = 1024;

/// `sigma_min < SINGULAR_CUTOFF * sigma_max` is reported as an infinite resolvent.
pub const SINGULAR_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    grid: Arc<Grid>,
    s: f64,
    omega: Vec<f64>,
    damping_block: CMatrix,
    matrix: CMatrix,
    weights: Vec<f64>,
    descriptor: DampingKind,
}

fn check_budget(grid: &Grid, budget: usize) -> Result<()> {
    if grid.len() > budget {
        return Err(Error::Resource(format!(
            "grid of {} points exceeds the dense-matrix budget of {budget}",
            grid.len()
        )));
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    Ok(())
}

/// Assemble `A_gamma` with the default budget.
pub fn assemble_generator(gamma: &DampingProfile, s: f64, grid: &Arc<Grid>) -> Result<GeneratorMatrix> {
    assemble_generator_with_budget(gamma, s, grid, DEFAULT_DENSE_BUDGET)
}

pub fn assemble_generator_with_budget(
    gamma: &DampingProfile,
    s: f64,
    grid: &Arc<Grid>,
    budget: usize,
) -> Result<GeneratorMatrix> {
    check_s(s)?;
    same_grid(gamma.grid(), grid)?;
    check_budget(grid, budget)?;
    let n = grid.len();
    let omega: Vec<f64> = grid.frequencies().iter().map(|&xi| (xi * xi + 1.0).powf(s / 4.0)).collect();
    let slots: Vec<usize> = (0..n).collect();
    let damping_block = multiplication_matrix(grid, gamma.samples(), &slots);
    let mut matrix = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        matrix[(k, n + k)] = Complex64::new(omega[k], 0.0);
        matrix[(n + k, k)] = Complex64::new(-omega[k], 0.0);
    }
    matrix.view_mut((n, n), (n, n)).copy_from(&(-&damping_block));
    let weights = omega.iter().map(|w| w * w).chain(std::iter::repeat(1.0).take(n)).collect();
    Ok(GeneratorMatrix {
        grid: grid.clone(),
        s,
        omega,
        damping_block,
        matrix,
        weights,
        descriptor: gamma.descriptor().clone(),
    })
}

impl GeneratorMatrix {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Mode frequencies `omega_k`; the spectrum of `A_0` is `{+- i omega_k}`.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn omega_max(&self) -> f64 {
        self.omega.iter().cloned().fold(0.0, f64::max)
    }

    /// Energy weights: `m_k` on the first block, `1` on the second.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn damping_block(&self) -> &CMatrix {
        &self.damping_block
    }

    /// The conjugated matrix `W^{1/2} A W^{-1/2}`.
    pub fn conjugated(&self) -> &CMatrix {
        &self.matrix
    }

    /// The generator itself in the unweighted mode basis, `W^{-1/2} B W^{1/2}`.
    pub fn unweighted(&self) -> CMatrix {
        let root: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        CMatrix::from_fn(self.dimension(), self.dimension(), |i, j| {
            self.matrix[(i, j)] * (root[j] / root[i])
        })
    }

    pub fn descriptor(&self) -> &DampingKind {
        &self.descriptor
    }

    /// Frobenius norm of `B + B^*`, the weighted skew-adjointness defect.
    pub fn skew_residual(&self) -> f64 {
        (&self.matrix + self.matrix.adjoint()).norm()
    }

    /// Conjugated coordinates `(W^{1/2} a, b)` of `U = (u1, u2)`.
    pub fn coordinates(&self, u1: &Field, u2: &Field) -> Result<DVector<Complex64>> {
        same_grid(&self.grid, u1.grid())?;
        same_grid(&self.grid, u2.grid())?;
        let n = self.grid.len();
        let unit = (std::f64::consts::PI / self.grid.half_length()).sqrt();
        let a = u1.to_spectrum();
        let b = u2.to_spectrum();
        Ok(DVector::from_fn(2 * n, |i, _| {
            if i < n {
                a.coefficients()[i] * unit * self.omega[i]
            } else {
                b.coefficients()[i - n] * unit
            }
        }))
    }

    /// `<A U, U>` in the `H^{s/2} x L^2` inner product.
    pub fn weighted_form(&self, u1: &Field, u2: &Field) -> Result<Complex64> {
        let v = self.coordinates(u1, u2)?;
        Ok((&self.matrix * &v).dotc(&v))
    }

    /// `||U||^2` in `H^{s/2} x L^2`.
    pub fn weighted_norm_sqr(&self, u1: &Field, u2: &Field) -> Result<f64> {
        Ok(self.coordinates(u1, u2)?.norm_squared())
    }
}

/// Resolvent norm, or a marker when `A - i lambda` is numerically singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResolventNorm {
    Finite(f64),
    Infinite,
}

impl ResolventNorm {
    pub fn value(&self) -> Option<f64> {
        match *self {
            ResolventNorm::Finite(v) => Some(v),
            ResolventNorm::Infinite => None,
        }
    }
}

/// `||(A_gamma - i lambda)^{-1}||` in `H^{s/2} x L^2`, i.e. `1 / sigma_min(B - i lambda)`.
pub fn resolvent_norm_at(gen: &GeneratorMatrix, lambda: f64) -> Result<ResolventNorm> {
    let mut shifted = gen.matrix.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= Complex64::new(0.0, lambda);
    }
    let (lo, hi) = singular_range(shifted)?;
    if lo < SINGULAR_CUTOFF * hi {
        return Ok(ResolventNorm::Infinite);
    }
    Ok(ResolventNorm::Finite(1.0 / lo))
}

/// `(parameter, value)` table with a log-log exponent fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub parameter_name: String,
    pub value_name: String,
    pub parameters: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of `log(value)` against `log(1 + parameter)`.
    pub exponent: f64,
    pub intercept: f64,
    pub residual: f64,
    pub metadata: serde_json::Value,
}

impl ScanResult {
    pub fn new(
        parameter_name: &str,
        value_name: &str,
        parameters: Vec<f64>,
        values: Vec<f64>,
        metadata: serde_json::Value,
    ) -> Result<Self> {
        if parameters.len() != values.len() {
            return Err(Error::Structural("parameter and value vectors differ in length".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Degenerate("scan values must be finite and positive".into()));
        }
        let x: Vec<f64> = parameters.iter().map(|p| (1.0 + p.abs()).ln()).collect();
        let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let fit = fit_line(&x, &y)?;
        Ok(ScanResult {
            parameter_name: parameter_name.into(),
            value_name: value_name.into(),
            parameters,
            values,
            exponent: fit.slope,
            intercept: fit.intercept,
            residual: fit.rms_residual,
            metadata,
        })
    }

    /// CSV with header `<parameter>,<value>`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.parameter_name, self.value_name);
        for (p, v) in self.parameters.iter().zip(&self.values) {
            out.push_str(&format!("{p:.17e},{v:.17e}\n"));
        }
        out
    }

    /// `max / min` of the values over the upper half of the scan.
    pub fn upper_half_spread(&self) -> f64 {
        let tail = &self.values[self.values.len() / 2..];
        let max = tail.iter().cloned().fold(0.0, f64::max);
        let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Evenly spaced scan `lambda_max * (i + 1) / count`, `i < count`.
pub fn lambda_ladder(lambda_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lambda_max * (i + 1) as f64 / count as f64).collect()
}

/// Resolvent norms along `i * lambdas`; runs in parallel over `lambdas`.
pub fn resolvent_scan(gen: &GeneratorMatrix, lambdas: &[f64]) -> Result<ScanResult> {
    if lambdas.is_empty() {
        return Err(Error::Parameter("empty lambda scan".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("lambda values must be positive and increasing".into()));
    }
    let norms = par::map_collect(lambdas, |&l| resolvent_norm_at(gen, l));
    let mut values = Vec::with_capacity(lambdas.len());
    for (norm, &lambda) in norms.into_iter().zip(lambdas) {
        match norm? {
            ResolventNorm::Finite(v) => values.push(v),
            ResolventNorm::Infinite => return Err(Error::InBandEigenvalue { lambda }),
        }
    }
    let metadata = serde_json::json!({
        "s": gen.s,
        "grid": gen.grid.spec(),
        "damping": gen.descriptor,
        "dimension": gen.dimension(),
        "omega_max": gen.omega_max(),
    });
    ScanResult::new("lambda", "resolvent_norm", lambdas.to_vec(), values, metadata)
}

fn indicator(grid: &Grid, set: &[usize]) -> Result<Vec<f64>> {
    let mut w = vec![0.0; grid.len()];
    for &j in set {
        if j >= grid.len() {
            return Err(Error::Parameter(format!("index {j} outside the grid")));
        }
        w[j] = 1.0;
    }
    Ok(w)
}

/// Cached observation operator `M_Omega` for repeated best-constant evaluations.
#[derive(Debug, Clone)]
pub struct Observation {
    grid: Arc<Grid>,
    s: f64,
    symbol: Vec<f64>,
    omega: Vec<f64>,
    restriction: CMatrix,
}

impl Observation {
    pub fn new(set: &[usize], s: f64, grid: &Arc<Grid>) -> Result<Self> {
        Self::with_budget(set, s, grid, DEFAULT_DENSE_BUDGET)
    }

    pub fn with_budget(set: &[usize], s: f64, grid: &Arc<Grid>, budget: usize) -> Result<Self> {
        check_s(s)?;
        check_budget(grid, budget)?;
        let slots: Vec<usize> = (0..grid.len()).collect();
        let restriction = multiplication_matrix(grid, &indicator(grid, set)?, &slots);
        let symbol = grid.frequencies().iter().map(|&xi| (xi * xi + 1.0).powf(s / 2.0)).collect();
        let omega = grid.frequencies().iter().map(|&xi| (xi * xi + 1.0).powf(s / 4.0)).collect();
        Ok(Observation {
            grid: grid.clone(),
            s,
            symbol,
            omega,
            restriction,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Best `c` in `c ||f||^2 <= (1 + lambda)^{2/s - 2} ||(D^s - lambda) f||^2 + ||f||^2_{L^2(Omega)}`.
    pub fn scalar_constant(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Parameter(format!("lambda must be >= 0, got {lambda}")));
        }
        let weight = (1.0 + lambda).powf(2.0 / self.s - 2.0);
        let mut q = self.restriction.clone();
        for (k, &m) in self.symbol.iter().enumerate() {
            q[(k, k)] += weight * (m - lambda) * (m - lambda);
        }
        min_hermitian_eigenvalue(q)
    }

    /// Best `c` in
    /// `c ||U||^2 <= (|lambda| + 1)^{4/s - 2} ||(A_0 - i lambda) U||^2 + ||u2||^2_{L^2(Omega)}`,
    /// norms in `H^{s/2} x L^2`.
    pub fn wave_constant(&self, lambda: f64) -> Result<f64> {
        let n = self.grid.len();
        let weight = (lambda.abs() + 1.0).powf(4.0 / self.s - 2.0);
        let mut q = CMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            let w = self.omega[k];
            // (B_0 - i lambda)^* (B_0 - i lambda) on the 2x2 block of mode k
            let diag = weight * (lambda * lambda + w * w);
            q[(k, k)] = Complex64::new(diag, 0.0);
            q[(n + k, n + k)] = Complex64::new(diag, 0.0);
            q[(k, n + k)] = Complex64::new(0.0, 2.0 * weight * lambda * w);
            q[(n + k, k)] = Complex64::new(0.0, -2.0 * weight * lambda * w);
        }
        let mut lower = q.view_mut((n, n), (n, n));
        lower += &self.restriction;
        min_hermitian_eigenvalue(q)
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Best constant of the scalar resolvent inequality at one `lambda`.
pub fn scalar_resolvent_constant(set: &[usize], s: f64, lambda: f64, grid: &Arc<Grid>) -> Result<f64> {
    Observation::new(set, s, grid)?.scalar_constant(lambda)
}

/// Best constant of the wave observability inequality at one `lambda`.
pub fn wave_observability_constant(set: &[usize], s: f64, lambda: f64, grid: &Arc<Grid>) -> Result<f64> {
    Observation::new(set, s, grid)?.wave_constant(lambda)
}

/// Which best constant to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Scalar,
    Wave,
}

/// Best constants over a `lambda` list, in parallel. Values are not required
/// to be positive, so the result is a plain table.
pub fn constant_scan(obs: &Observation, kind: ConstantKind, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let values = par::map_collect(lambdas, |&l| match kind {
        ConstantKind::Scalar => obs.scalar_constant(l),
        ConstantKind::Wave => obs.wave_constant(l),
    });
    lambdas
        .iter()
        .zip(values)
        .map(|(&l, v)| v.map(|c| (l, c)))
        .collect()
}

/// CSV with header `lambda,c`.
pub fn constants_to_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("lambda,c\n");
    for (l, c) in rows {
        out.push_str(&format!("{l:.17e},{c:.17e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::make_profile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Arc<Grid> {
        Grid::new(4.0, 32).unwrap()
    }

    fn profile(kind: DampingKind, g: &Arc<Grid>) -> DampingProfile {
        make_profile(&kind, g.clone()).unwrap()
    }

    fn random_field(g: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
        Field::from_fn(g.clone(), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn undamped_generator_is_weighted_skew_adjoint() {
        let g = grid();
        let gen = assemble_generator(&profile(DampingKind::Constant { level: 0.0 }, &g), 1.5, &g).unwrap();
        assert!(gen.skew_residual() <= 1e-12);
        assert_eq!(gen.dimension(), 64);
        assert!(gen.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn constant_damping_block_is_scaled_identity() {
        let g = grid();
        let gen = assemble_generator(&profile(DampingKind::Constant { level: 0.7 }, &g), 1.0, &g).unwrap();
        let expected = CMatrix::identity(32, 32) * Complex64::new(0.7, 0.0);
        assert!((gen.damping_block() - expected).norm() < 1e-12);
    }

    #[test]
    fn dissipation_identity_on_random_states() {
        let g = grid();
        let kind = DampingKind::RandomDense {
            cell_width: 2.0,
            bump_fraction: 0.3,
            level: 1.3,
            seed: 4,
        };
        let gamma = profile(kind, &g);
        let gen = assemble_generator(&gamma, 2.0, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let u1 = random_field(&g, &mut rng);
            let u2 = random_field(&g, &mut rng);
            let form = gen.weighted_form(&u1, &u2).unwrap();
            // physical-space evaluation of ||sqrt(gamma) u2||^2
            let diss: f64 = u2
                .samples()
                .iter()
                .zip(gamma.samples())
                .map(|(u, g)| g * u.norm_sqr())
                .sum::<f64>()
                * g.dx();
            let norm = gen.weighted_norm_sqr(&u1, &u2).unwrap();
            assert!((form.re + diss).abs() <= 1e-10 * norm);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = grid();
        let gamma = profile(DampingKind::Constant { level: 0.0 }, &g);
        assert!(matches!(
            assemble_generator_with_budget(&gamma, 1.0, &g, 16),
            Err(Error::Resource(_))
        ));
        assert!(matches!(Observation::with_budget(&[], 1.0, &g, 16), Err(Error::Resource(_))));
    }

    #[test]
    fn undamped_resolvent_at_zero_is_one() {
        let g = grid();
        let gen = assemble_generator(&profile(DampingKind::Constant { level: 0.0 }, &g), 1.0, &g).unwrap();
        let r = resolvent_norm_at(&gen, 0.0).unwrap().value().unwrap();
        assert!((r - 1.0).abs() < 1e-8);
    }

    #[test]
    fn resolvent_on_an_eigenvalue_is_infinite() {
        let g = grid();
        let gen = assemble_generator(&profile(DampingKind::Constant { level: 0.0 }, &g), 1.0, &g).unwrap();
        let lambda = gen.omega()[3];
        assert_eq!(resolvent_norm_at(&gen, lambda).unwrap(), ResolventNorm::Infinite);
        let err = resolvent_scan(&gen, &[0.5, lambda]).unwrap_err();
        assert!(matches!(err, Error::InBandEigenvalue { .. }));
    }

    #[test]
    fn scan_matches_pointwise_calls() {
        let g = grid();
        let gamma = profile(
            DampingKind::PeriodicBumps {
                period: 2.0,
                duty: 0.5,
                level: 1.0,
            },
            &g,
        );
        let gen = assemble_generator(&gamma, 1.0, &g).unwrap();
        let lambdas = [0.3, 0.9, 1.7, 2.2];
        let scan = resolvent_scan(&gen, &lambdas).unwrap();
        for (l, v) in lambdas.iter().zip(&scan.values) {
            assert_eq!(resolvent_norm_at(&gen, *l).unwrap().value().unwrap(), *v);
        }
        assert!(resolvent_scan(&gen, &[1.0, 0.5]).is_err());
        assert!(resolvent_scan(&gen, &[]).is_err());
        assert!(scan.to_csv().starts_with("lambda,resolvent_norm\n"));
    }

    #[test]
    fn scalar_constant_examples() {
        let g = grid();
        let all: Vec<usize> = (0..g.len()).collect();
        for lambda in [0.0, 1.0, 5.0] {
            assert!(scalar_resolvent_constant(&all, 1.0, lambda, &g).unwrap() >= 1.0 - 1e-10);
        }
        assert!(scalar_resolvent_constant(&[], 1.0, 0.0, &g).unwrap() >= 1.0 - 1e-10);
        let xi = g.frequencies()[5];
        let lambda = (xi * xi + 1.0).sqrt();
        assert!(scalar_resolvent_constant(&[], 1.0, lambda, &g).unwrap() <= 1e-10);
        assert!(scalar_resolvent_constant(&[], 1.0, -1.0, &g).is_err());
        assert!(scalar_resolvent_constant(&[999], 1.0, 0.0, &g).is_err());
    }

    #[test]
    fn wave_constant_examples() {
        let g = grid();
        let obs_empty = Observation::new(&[], 1.0, &g).unwrap();
        let lambda = obs_empty.omega[4];
        assert!(obs_empty.wave_constant(lambda).unwrap() <= 1e-10);
        let all: Vec<usize> = (0..g.len()).collect();
        assert!(wave_observability_constant(&all, 1.0, 0.0, &g).unwrap() > 0.5);
    }

    #[test]
    fn enlarging_the_set_never_lowers_constants() {
        let g = grid();
        let small: Vec<usize> = (0..g.len()).step_by(4).collect();
        let large: Vec<usize> = (0..g.len()).step_by(2).collect();
        let a = Observation::new(&small, 1.0, &g).unwrap();
        let b = Observation::new(&large, 1.0, &g).unwrap();
        for lambda in [0.0, 0.7, 1.3, 2.0] {
            assert!(a.scalar_constant(lambda).unwrap() <= b.scalar_constant(lambda).unwrap() + 1e-10);
            assert!(a.wave_constant(lambda).unwrap() <= b.wave_constant(lambda).unwrap() + 1e-10);
        }
    }

    #[test]
    fn constants_csv_header() {
        let csv = constants_to_csv(&[(0.0, 1.0)]);
        assert!(csv.starts_with("lambda,c\n"));
    }
}
