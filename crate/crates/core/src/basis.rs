//! Legendre polynomial-exponential time basis.
//!
//! `Ψₙ(t) = eᵗ Qₙ(t)` with `Qₙ(t) = √((2n+1)/T) Pₙ(2t/T − 1)`. The family is
//! orthonormal in `L²` on `(0, T)` with weight `e^{−2t}`. Every inner product
//! among `Ψₙ` and their derivatives reduces to the integral of a polynomial,
//! so a Gauss–Legendre rule with `2N + 2` nodes evaluates them exactly.
//! Data projections instead use the composite trapezoid rule on the
//! observation times, since measured data exist only there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// Uniform observation times `t_k = k·T/(num_samples − 1)`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    final_time: f64,
    num_samples: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, num_samples: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::Domain(format!("final time must be positive, got {final_time}")));
        }
        if num_samples < 2 {
            return Err(Error::Domain(format!(
                "time grid needs at least 2 samples, got {num_samples}"
            )));
        }
        Ok(Self {
            final_time,
            num_samples,
        })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn dt(&self) -> f64 {
        self.final_time / (self.num_samples - 1) as f64
    }

    /// Time of sample `k`; the last sample is exactly `T`.
    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.num_samples {
            self.final_time
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_samples).map(move |k| self.time(k))
    }

    /// Composite trapezoid weight for sample `k`.
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        let dt = self.dt();
        if k == 0 || k + 1 == self.num_samples {
            0.5 * dt
        } else {
            dt
        }
    }
}

/// `(Pₙ(x), Pₙ′(x), Pₙ″(x))` by the three-term recurrence and its derivatives.
pub fn legendre_triplet(n: usize, x: f64) -> Result<(f64, f64, f64)> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("Legendre abscissa {x} outside [-1, 1]")));
    }
    Ok(legendre_unchecked(n, x))
}

fn legendre_unchecked(n: usize, x: f64) -> (f64, f64, f64) {
    // (P, P', P'') for degrees k-1 and k
    let (mut p0, mut d0, mut s0) = (1.0, 0.0, 0.0);
    if n == 0 {
        return (p0, d0, s0);
    }
    let (mut p1, mut d1, mut s1) = (x, 1.0, 0.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k+1) P_k, and once more for P''
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let s2 = s0 + (2.0 * kf + 1.0) * d1;
        (p0, d0, s0) = (p1, d1, s1);
        (p1, d1, s1) = (p2, d2, s2);
    }
    (p1, d1, s1)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(num_nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if num_nodes == 0 {
        return Err(Error::Domain("Gauss-Legendre rule needs at least one node".into()));
    }
    let n = num_nodes;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess for the i-th largest root
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        for _ in 0..100 {
            let (p, dp, _) = legendre_unchecked(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, dp, _) = legendre_unchecked(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `Qₙ(t)` and its first two derivatives.
fn q_triplet(n: usize, t: f64, final_time: f64) -> (f64, f64, f64) {
    let x = (2.0 * t / final_time - 1.0).clamp(-1.0, 1.0);
    let (p, dp, ddp) = legendre_unchecked(n, x);
    let scale = ((2 * n + 1) as f64 / final_time).sqrt();
    let jac = 2.0 / final_time;
    (scale * p, scale * jac * dp, scale * jac * jac * ddp)
}

/// `(Ψₙ(t), Ψₙ′(t), Ψₙ″(t))`.
pub fn psi_triplet(n: usize, t: f64, final_time: f64) -> Result<(f64, f64, f64)> {
    if !(final_time > 0.0) {
        return Err(Error::Domain(format!("final time must be positive, got {final_time}")));
    }
    if !(0.0..=final_time).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside [0, {final_time}]")));
    }
    Ok(psi_unchecked(n, t, final_time))
}

fn psi_unchecked(n: usize, t: f64, final_time: f64) -> (f64, f64, f64) {
    let (q, dq, ddq) = q_triplet(n, t, final_time);
    let e = t.exp();
    (e * q, e * (q + dq), e * (q + 2.0 * dq + ddq))
}

/// Basis values cached at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiSample {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Truncated basis `{Ψ₀ … Ψ_N}` on `(0, T)` with its quadrature rule and a
/// cached table of values at the quadrature nodes. Read-only after
/// construction.
#[derive(Debug, Clone)]
pub struct BasisSet {
    order: usize,
    final_time: f64,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    /// `psi_table[n][q]`
    psi_table: Vec<Vec<PsiSample>>,
}

impl BasisSet {
    /// Basis of truncation order `order` (modes `0..=order`) with the
    /// default `2·order + 2` node rule.
    pub fn new(order: usize, final_time: f64) -> Result<Self> {
        Self::with_quadrature(order, final_time, 2 * order + 2)
    }

    pub fn with_quadrature(order: usize, final_time: f64, num_nodes: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::Domain(format!("final time must be positive, got {final_time}")));
        }
        if num_nodes < 2 * order + 2 {
            return Err(Error::Config(format!(
                "quadrature with {num_nodes} nodes is too small for order {order}; need at least {}",
                2 * order + 2
            )));
        }
        Ok(Self::build_unchecked(order, final_time, num_nodes))
    }

    fn build_unchecked(order: usize, final_time: f64, num_nodes: usize) -> Self {
        let (x, w) = gauss_legendre(num_nodes).expect("num_nodes > 0");
        let half = 0.5 * final_time;
        let quad_nodes: Vec<f64> = x.iter().map(|&xi| half * (xi + 1.0)).collect();
        let quad_weights: Vec<f64> = w.iter().map(|&wi| half * wi).collect();
        let psi_table = (0..=order)
            .map(|n| {
                quad_nodes
                    .iter()
                    .map(|&t| {
                        let (value, d1, d2) = psi_unchecked(n, t, final_time);
                        PsiSample { value, d1, d2 }
                    })
                    .collect()
            })
            .collect();
        Self {
            order,
            final_time,
            quad_nodes,
            quad_weights,
            psi_table,
        }
    }

    /// Truncation order `N`; the basis has `N + 1` modes.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_modes(&self) -> usize {
        self.order + 1
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad_nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn table(&self, n: usize) -> &[PsiSample] {
        &self.psi_table[n]
    }

    /// `Ψₙ(t)` for every mode.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        (0..=self.order)
            .map(|n| psi_triplet(n, t, self.final_time).map(|v| v.0))
            .collect()
    }

    /// Weighted inner product over the quadrature rule of two tabulated
    /// functions given by accessor closures.
    fn weighted<F: Fn(usize) -> f64, G: Fn(usize) -> f64>(&self, f: F, g: G) -> f64 {
        self.quad_nodes
            .iter()
            .zip(&self.quad_weights)
            .enumerate()
            .map(|(q, (&t, &w))| w * (-2.0 * t).exp() * f(q) * g(q))
            .sum()
    }
}

/// `Gₘₙ = ⟨Ψₘ, Ψₙ⟩` in the `e^{−2t}`-weighted product.
pub fn weighted_gram(basis: &BasisSet) -> DenseMatrix {
    let n = basis.num_modes();
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let ti = basis.table(i);
            let tj = basis.table(j);
            g[(i, j)] = basis.weighted(|q| ti[q].value, |q| tj[q].value);
        }
    }
    g
}

/// `s_{mn} = ⟨Ψₙ″, Ψₘ⟩` in the `e^{−2t}`-weighted product.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix(DenseMatrix);

impl StiffnessMatrix {
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.0[(m, n)]
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    /// `Σₙ s_{mn} xₙ` for each `m`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.matvec(x)
    }
}

pub fn stiffness(basis: &BasisSet) -> StiffnessMatrix {
    let n = basis.num_modes();
    let mut s = DenseMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let tm = basis.table(m);
            let tk = basis.table(k);
            s[(m, k)] = basis.weighted(|q| tk[q].d2, |q| tm[q].value);
        }
    }
    StiffnessMatrix(s)
}

/// How sampled data are turned into basis coefficients. Both use the
/// trapezoid-weighted discrete inner product `Σ_k w_k e^{−2t_k} u(t_k) Ψₙ(t_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionRule {
    /// The weighted sums themselves. Off-diagonal leakage is `O(dt²)` with a
    /// constant growing quickly in the mode index.
    Trapezoid,
    /// Orthogonal projection in the discrete inner product: the sums are
    /// multiplied by the inverse discrete Gram matrix, so any sampled member
    /// of the span is recovered exactly.
    #[default]
    LeastSquares,
}

/// Linear map from time samples to basis coefficients.
///
/// Row `n` holds the weight of each sample in coefficient `n`, so a
/// coefficient is a dot product with the sample vector.
#[derive(Debug, Clone)]
pub struct Projector {
    time_grid: TimeGrid,
    rows: Vec<Vec<f64>>,
}

impl Projector {
    pub fn new(basis: &BasisSet, time_grid: &TimeGrid) -> Result<Self> {
        Self::with_rule(basis, time_grid, ProjectionRule::default())
    }

    pub fn with_rule(basis: &BasisSet, time_grid: &TimeGrid, rule: ProjectionRule) -> Result<Self> {
        let dt_rel = (time_grid.final_time() - basis.final_time()).abs() / basis.final_time();
        if dt_rel > 1e-12 {
            return Err(Error::Shape(format!(
                "time grid ends at {} but basis is built on (0, {})",
                time_grid.final_time(),
                basis.final_time()
            )));
        }
        let rows = (0..basis.num_modes())
            .map(|n| {
                (0..time_grid.num_samples())
                    .map(|k| {
                        let t = time_grid.time(k);
                        let psi = psi_unchecked(n, t, basis.final_time()).0;
                        time_grid.trapezoid_weight(k) * (-2.0 * t).exp() * psi
                    })
                    .collect()
            })
            .collect::<Vec<Vec<f64>>>();
        let rows = match rule {
            ProjectionRule::Trapezoid => rows,
            ProjectionRule::LeastSquares => {
                let nm = basis.num_modes();
                let ns = time_grid.num_samples();
                if ns < nm {
                    return Err(Error::Config(format!(
                        "least-squares projection onto {nm} modes needs at least {nm} samples, got {ns}"
                    )));
                }
                let psi: Vec<Vec<f64>> = (0..nm)
                    .map(|n| {
                        (0..ns)
                            .map(|k| psi_unchecked(n, time_grid.time(k), basis.final_time()).0)
                            .collect()
                    })
                    .collect();
                let gram = DenseMatrix::from_fn(nm, nm, |m, n| dot(&rows[m], &psi[n]));
                // columns of G⁻¹·rows, one sample at a time
                let mut out = vec![vec![0.0; ns]; nm];
                for k in 0..ns {
                    let col: Vec<f64> = (0..nm).map(|m| rows[m][k]).collect();
                    let x = gram
                        .solve(&col)
                        .ok_or_else(|| Error::Config("discrete Gram matrix is singular".into()))?;
                    for m in 0..nm {
                        out[m][k] = x[m];
                    }
                }
                out
            }
        };
        Ok(Self {
            time_grid: *time_grid,
            rows,
        })
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn num_modes(&self) -> usize {
        self.rows.len()
    }

    /// Weight of sample `k` in coefficient `n`.
    pub fn weight(&self, n: usize, k: usize) -> f64 {
        self.rows[n][k]
    }

    pub fn project(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.time_grid.num_samples() {
            return Err(Error::Shape(format!(
                "expected {} time samples, got {}",
                self.time_grid.num_samples(),
                samples.len()
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().zip(samples).map(|(w, s)| w * s).sum())
            .collect())
    }
}

/// Coefficients `u₀ … u_N` of a sampled time series (least squares).
pub fn project_samples(samples: &[f64], time_grid: &TimeGrid, basis: &BasisSet) -> Result<Vec<f64>> {
    Projector::new(basis, time_grid)?.project(samples)
}

pub fn project_samples_with(
    samples: &[f64],
    time_grid: &TimeGrid,
    basis: &BasisSet,
    rule: ProjectionRule,
) -> Result<Vec<f64>> {
    Projector::with_rule(basis, time_grid, rule)?.project(samples)
}

/// `Σₙ uₙ Ψₙ(t)`.
pub fn synthesize(coeffs: &[f64], t: f64, final_time: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (n, c) in coeffs.iter().enumerate() {
        acc += c * psi_triplet(n, t, final_time)?.0;
    }
    Ok(acc)
}

/// Per-mode residual `r_m = Σₙ s_{mn} uₙ − ⟨u_tt, Ψₘ⟩` for a closed-form
/// scalar time function `u` with known second derivative `u_tt`.
///
/// Both the coefficients `uₙ` and the right-hand inner products use a
/// Gauss–Legendre rule with `num_nodes` nodes on `(0, T)`.
pub fn projection_residual<U, Utt>(
    u: U,
    u_tt: Utt,
    basis: &BasisSet,
    num_nodes: usize,
) -> Result<Vec<f64>>
where
    U: Fn(f64) -> f64,
    Utt: Fn(f64) -> f64,
{
    let (x, w) = gauss_legendre(num_nodes)?;
    let t_final = basis.final_time();
    let half = 0.5 * t_final;
    let nodes: Vec<f64> = x.iter().map(|&xi| half * (xi + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|&wi| half * wi).collect();
    let modes = basis.num_modes();
    let psi: Vec<Vec<f64>> = (0..modes)
        .map(|n| nodes.iter().map(|&t| psi_unchecked(n, t, t_final).0).collect())
        .collect();
    let inner = |f: &dyn Fn(f64) -> f64, n: usize| -> f64 {
        nodes
            .iter()
            .zip(&weights)
            .zip(&psi[n])
            .map(|((&t, &wq), &p)| wq * (-2.0 * t).exp() * f(t) * p)
            .sum()
    };
    let coeffs: Vec<f64> = (0..modes).map(|n| inner(&u, n)).collect();
    let s = stiffness(basis);
    let projected = s.apply(&coeffs);
    Ok((0..modes).map(|m| projected[m] - inner(&u_tt, m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_low_orders() {
        assert_eq!(legendre_triplet(0, 0.3).unwrap(), (1.0, 0.0, 0.0));
        for &x in &[-1.0, -0.2, 0.7, 1.0] {
            assert_eq!(legendre_triplet(1, x).unwrap(), (x, 1.0, 0.0));
        }
        let (p, dp, ddp) = legendre_triplet(2, 0.5).unwrap();
        assert_abs_diff_eq!(p, -0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(dp, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ddp, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_rejects_out_of_range() {
        assert!(matches!(legendre_triplet(3, 1.0001), Err(Error::Domain(_))));
        assert!(matches!(legendre_triplet(0, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn legendre_derivatives_match_closed_form_p4() {
        // P4 = (35x^4 - 30x^2 + 3)/8
        for &x in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
            let (p, dp, ddp) = legendre_triplet(4, x).unwrap();
            let x2: f64 = x * x;
            assert_abs_diff_eq!(p, (35.0 * x2 * x2 - 30.0 * x2 + 3.0) / 8.0, epsilon = 1e-14);
            assert_abs_diff_eq!(dp, (140.0 * x2 * x - 60.0 * x) / 8.0, epsilon = 1e-13);
            assert_abs_diff_eq!(ddp, (420.0 * x2 - 60.0) / 8.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_rules() {
        let (x, w) = gauss_legendre(1).unwrap();
        assert_eq!((x[0], w[0]), (0.0, 2.0));
        let (x, w) = gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(x[0], -r, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], r, epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3).unwrap();
        let quartic: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(4)).sum();
        assert_abs_diff_eq!(quartic, 0.4, epsilon = 1e-15);
        assert!(matches!(gauss_legendre(0), Err(Error::Domain(_))));
    }

    #[test]
    fn gauss_weights_sum_to_two_and_integrate_to_max_degree() {
        for n in [4usize, 7, 16, 32, 64] {
            let (x, w) = gauss_legendre(n).unwrap();
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 2; // even degree below the exactness limit
            let integral: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
            assert_abs_diff_eq!(integral, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn psi_values() {
        let (v, _, dd) = psi_triplet(0, 0.0, 2.5).unwrap();
        assert_abs_diff_eq!(v, (1.0f64 / 2.5).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(dd, v, epsilon = 1e-15);
        for &t in &[0.0, 0.3, 1.7, 2.5] {
            let (v, _, dd) = psi_triplet(0, t, 2.5).unwrap();
            assert_abs_diff_eq!(dd, v, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(psi_triplet(1, 1.25, 2.5).unwrap().0, 0.0, epsilon = 1e-15);
        assert!(matches!(psi_triplet(1, 2.6, 2.5), Err(Error::Domain(_))));
        assert!(matches!(psi_triplet(1, -0.1, 2.5), Err(Error::Domain(_))));
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let t_final = 2.5;
        for n in [0usize, 3, 9, 15] {
            for &t in &[0.4, 1.1, 2.0] {
                let h = 1e-4;
                let (v, d1, d2) = psi_triplet(n, t, t_final).unwrap();
                let vp = psi_triplet(n, t + h, t_final).unwrap().0;
                let vm = psi_triplet(n, t - h, t_final).unwrap().0;
                let scale = v.abs().max(d1.abs()).max(d2.abs()).max(1.0);
                assert!(((vp - vm) / (2.0 * h) - d1).abs() <= 1e-6 * scale);
                assert!(((vp - 2.0 * v + vm) / (h * h) - d2).abs() <= 1e-4 * scale);
            }
        }
    }

    #[test]
    fn gram_is_identity() {
        let b = BasisSet::new(0, 2.5).unwrap();
        assert_abs_diff_eq!(weighted_gram(&b)[(0, 0)], 1.0, epsilon = 1e-14);
        let b = BasisSet::new(15, 2.5).unwrap();
        let g = weighted_gram(&b);
        assert!(g.max_abs_diff(&DenseMatrix::identity(16)) <= 1e-12);
    }

    #[test]
    fn undersized_rule_breaks_orthonormality() {
        // N+1 nodes is still exact for degree 2N (Gauss discrete orthogonality);
        // ceil((N+1)/2) nodes is not.
        let exact = BasisSet::build_unchecked(15, 2.5, 16);
        assert!(weighted_gram(&exact).max_abs_diff(&DenseMatrix::identity(16)) <= 1e-12);
        let under = BasisSet::build_unchecked(15, 2.5, 8);
        assert!(weighted_gram(&under).max_abs_diff(&DenseMatrix::identity(16)) > 1e-6);
        assert!(matches!(BasisSet::with_quadrature(15, 2.5, 31), Err(Error::Config(_))));
    }

    #[test]
    fn stiffness_first_column_is_unit() {
        for &t in &[0.5, 2.5, 4.0] {
            let s = stiffness(&BasisSet::new(8, t).unwrap());
            assert_abs_diff_eq!(s.get(0, 0), 1.0, epsilon = 1e-13);
            for m in 1..9 {
                assert_abs_diff_eq!(s.get(m, 0), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn stiffness_is_not_symmetric() {
        let s = stiffness(&BasisSet::new(4, 2.5).unwrap());
        assert!((s.get(1, 2) - s.get(2, 1)).abs() > 1e-3);
    }

    #[test]
    fn projection_of_constant_and_zero() {
        let tg = TimeGrid::new(2.5, 73).unwrap();
        let b = BasisSet::new(15, 2.5).unwrap();
        let zero = project_samples(&[0.0; 73], &tg, &b).unwrap();
        assert!(zero.iter().all(|&c| c == 0.0));
        let ones = project_samples(&[1.0; 73], &tg, &b).unwrap();
        let exact = (1.0f64 / 2.5).sqrt() * (1.0 - (-2.5f64).exp());
        assert_abs_diff_eq!(exact, 0.5805, epsilon = 1e-4);
        assert!((ones[0] - exact).abs() < 1e-3);
        assert!(matches!(project_samples(&[0.0; 72], &tg, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn projection_of_psi2_leaks_as_euler_maclaurin_predicts() {
        let t_final = 2.5;
        let tg = TimeGrid::new(t_final, 73).unwrap();
        let b = BasisSet::new(15, t_final).unwrap();
        let samples: Vec<f64> = tg.times().map(|t| psi_triplet(2, t, t_final).unwrap().0).collect();
        let c = project_samples_with(&samples, &tg, &b, ProjectionRule::Trapezoid).unwrap();
        let dt = tg.dt();
        // e^{-2t} Ψ₂Ψₙ = Q₂Qₙ; the leading trapezoid error is dt²/12 · [f′]₀ᵀ
        let df = |n: usize, t: f64| {
            let (q2, dq2, _) = q_triplet(2, t, t_final);
            let (qn, dqn, _) = q_triplet(n, t, t_final);
            dq2 * qn + q2 * dqn
        };
        for (n, &cn) in c.iter().enumerate() {
            let exact = if n == 2 { 1.0 } else { 0.0 };
            let predicted = dt * dt / 12.0 * (df(n, t_final) - df(n, 0.0));
            let err = cn - exact;
            assert!((err - predicted).abs() <= 0.1 * predicted.abs() + 1e-12, "mode {n}: {err} vs {predicted}");
            if n <= 4 {
                assert!(err.abs() <= 6e-3, "mode {n}: {err}");
            }
        }
    }

    #[test]
    fn least_squares_projection_has_no_leakage() {
        let tg = TimeGrid::new(2.5, 73).unwrap();
        let b = BasisSet::new(15, 2.5).unwrap();
        for j in [2, 9, 15] {
            let samples: Vec<f64> = tg.times().map(|t| psi_triplet(j, t, 2.5).unwrap().0).collect();
            let c = project_samples(&samples, &tg, &b).unwrap();
            for (n, &cn) in c.iter().enumerate() {
                let exact = if n == j { 1.0 } else { 0.0 };
                assert!((cn - exact).abs() <= 1e-9, "mode {n} of Ψ{j}: {cn}");
            }
        }
        let few = TimeGrid::new(2.5, 10).unwrap();
        assert!(matches!(Projector::new(&b, &few), Err(Error::Config(_))));
        assert!(Projector::with_rule(&b, &few, ProjectionRule::Trapezoid).is_ok());
    }

    #[test]
    fn synthesize_basics() {
        let mut e0 = vec![0.0; 16];
        e0[0] = 1.0;
        assert_abs_diff_eq!(synthesize(&e0, 0.0, 2.5).unwrap(), (0.4f64).sqrt(), epsilon = 1e-15);
        assert_eq!(synthesize(&[0.0; 16], 1.0, 2.5).unwrap(), 0.0);
        assert!(matches!(synthesize(&e0, 3.0, 2.5), Err(Error::Domain(_))));
    }

    #[test]
    fn synthesize_project_roundtrip() {
        let tg = TimeGrid::new(2.5, 73).unwrap();
        let samples: Vec<f64> = tg.times().map(|t| psi_triplet(3, t, 2.5).unwrap().0).collect();
        // trapezoid leakage limits the roundtrip to a small basis
        let small = BasisSet::new(6, 2.5).unwrap();
        let trap = project_samples_with(&samples, &tg, &small, ProjectionRule::Trapezoid).unwrap();
        let full = BasisSet::new(15, 2.5).unwrap();
        let lsq = project_samples(&samples, &tg, &full).unwrap();
        for i in 0..10 {
            let t = 2.5 * (i as f64 + 0.37) / 10.0;
            let exact = psi_triplet(3, t, 2.5).unwrap().0;
            assert!((synthesize(&trap, t, 2.5).unwrap() - exact).abs() <= 5e-2 * exact.abs().max(1.0), "t={t}");
            assert!((synthesize(&lsq, t, 2.5).unwrap() - exact).abs() <= 1e-8 * exact.abs().max(1.0), "t={t}");
        }
    }

    #[test]
    fn residual_vanishes_in_span() {
        let b = BasisSet::new(6, 2.5).unwrap();
        let r = projection_residual(
            |t| psi_triplet(1, t, 2.5).unwrap().0,
            |t| psi_triplet(1, t, 2.5).unwrap().2,
            &b,
            64,
        )
        .unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-12), "{r:?}");
    }
}
