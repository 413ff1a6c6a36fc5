//! Orthonormal polynomials from moments and the second-moment lower bound.
//!
//! For a law with moments `m_i = E[X^i]` the Hankel determinants
//! `D_n = det[m_{i+j}]_{0≤i,j≤n}` are positive, and the polynomials
//! `P_n = D_n(x)/√(D_n D_{n−1})` are orthonormal under the moment functional.
//! Expanding `⟨T, X^{⊗ℓ}⟩` in the product family `Π_j P_{α_j}(X(j))` gives,
//! on the degree-`ℓ` slice, coefficients
//!
//! ```text
//! Θ_α = N_α · Π_j √(D_{α_j}/D_{α_j−1}) · T_α          (D_{−1} := 1)
//! ```
//!
//! and the chain `E⟨T, X^{⊗ℓ}⟩² ≥ Σ_{|α|=ℓ} Θ_α² ≥ Ξ‖T‖²_F` with
//! `Ξ = (min_i D_i / max(max_i D_i, 1))^d`.

pub mod quadrature;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::measurements::DistributionSpec;
use crate::symtensor::{binomial, MultiIndex, SymmetricTensor};

/// Absolute tolerance requested from the quadrature fallback.
pub const QUADRATURE_ABS_TOL: f64 = 1e-12;
/// Relative tolerance used when `QUADRATURE_ABS_TOL` is below f64 resolution.
pub const QUADRATURE_REL_TOL: f64 = 1e-13;
/// Pivots below this fraction of the Hankel max-norm are treated as zero.
pub const PIVOT_TOL: f64 = 1e-12;
/// Largest `d^ℓ` accepted by [`second_moment_exact`].
pub const MAX_SECOND_MOMENT_TUPLES: u64 = 3000;

/// Where a moment list came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentSource {
    Analytic { dist: DistributionSpec },
    Quadrature { dist: DistributionSpec },
    Explicit,
}

/// How [`moments_with`] should obtain moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    /// Closed form when one exists, otherwise quadrature.
    #[default]
    Auto,
    Analytic,
    Quadrature,
}

/// `m_0, …, m_n` together with their provenance and an absolute error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub moments: Vec<f64>,
    pub source: MomentSource,
    /// Bound on `|m_i − E[X^i]|` (zero for closed forms and explicit lists).
    pub abs_error: f64,
}

impl MomentSequence {
    /// A user-supplied list; `m_0` must be 1.
    pub fn explicit(moments: Vec<f64>) -> Result<Self> {
        match moments.first() {
            Some(m0) if (m0 - 1.0).abs() <= 1e-12 => {}
            _ => return Err(Error::invalid("moment list must start with m_0 = 1")),
        }
        if moments.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("moments must be finite"));
        }
        Ok(MomentSequence {
            moments,
            source: MomentSource::Explicit,
            abs_error: 0.0,
        })
    }

    /// Highest available moment order.
    pub fn max_order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.moments[k]
    }

    fn require(&self, order: usize) -> Result<()> {
        if self.moments.len() > order {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "need moments up to order {order}, have {}",
                self.max_order()
            )))
        }
    }
}

/// `m_0..=m_n` of `dist` using a closed form where one exists.
pub fn moments_of(dist: &DistributionSpec, n: usize) -> Result<MomentSequence> {
    moments_with(dist, n, MomentMethod::Auto)
}

pub fn moments_with(dist: &DistributionSpec, n: usize, method: MomentMethod) -> Result<MomentSequence> {
    dist.validate()?;
    match method {
        MomentMethod::Auto | MomentMethod::Analytic => Ok(MomentSequence {
            moments: analytic_moments(dist, n),
            source: MomentSource::Analytic { dist: dist.clone() },
            abs_error: 0.0,
        }),
        MomentMethod::Quadrature => quadrature_moments(dist, n),
    }
}

fn analytic_moments(dist: &DistributionSpec, n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    match *dist {
        DistributionSpec::Gaussian { mean, std } => {
            for k in 1..=n {
                let prev2 = if k >= 2 { m[k - 2] } else { 0.0 };
                m[k] = mean * m[k - 1] + (k - 1) as f64 * std * std * prev2;
            }
        }
        DistributionSpec::Uniform { low, high } => {
            for (k, mk) in m.iter_mut().enumerate().skip(1) {
                // (b^{k+1} − a^{k+1}) / ((k+1)(b−a)) = Σ_{j=0}^{k} a^j b^{k−j} / (k+1)
                let s: f64 = (0..=k).map(|j| low.powi(j as i32) * high.powi((k - j) as i32)).sum();
                *mk = s / (k + 1) as f64;
            }
        }
        DistributionSpec::Laplace { loc, scale } => {
            // E L^j = j! for even j and 0 for odd j, L standard Laplace.
            for (k, mk) in m.iter_mut().enumerate().skip(1) {
                let mut fact = 1.0;
                let mut s = 0.0;
                for j in 0..=k {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    if j % 2 == 0 {
                        let c = binomial(k as u64, j as u64).expect("small binomial") as f64;
                        s += c * loc.powi((k - j) as i32) * scale.powi(j as i32) * fact;
                    }
                }
                *mk = s;
            }
        }
        DistributionSpec::Exponential { rate } => {
            for k in 1..=n {
                m[k] = m[k - 1] * k as f64 / rate;
            }
        }
        DistributionSpec::Gamma { shape, rate } => {
            for k in 1..=n {
                m[k] = m[k - 1] * (shape + (k - 1) as f64) / rate;
            }
        }
        DistributionSpec::DiscreteInteger { bound, ref weights } => {
            let b = bound as i64;
            for (k, mk) in m.iter_mut().enumerate().skip(1) {
                *mk = weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * ((i as i64 - b) as f64).powi(k as i32))
                    .sum();
            }
        }
    }
    m
}

/// Density and integration breakpoints covering all but a negligible tail.
fn density_and_support(dist: &DistributionSpec) -> Result<(Box<dyn Fn(f64) -> f64>, Vec<f64>)> {
    let split = |lo: f64, hi: f64, pieces: usize| -> Vec<f64> {
        (0..=pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64).collect()
    };
    Ok(match *dist {
        DistributionSpec::Gaussian { mean, std } => {
            let c = 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt());
            (
                Box::new(move |x: f64| c * (-0.5 * ((x - mean) / std).powi(2)).exp()),
                split(mean - 40.0 * std, mean + 40.0 * std, 16),
            )
        }
        DistributionSpec::Uniform { low, high } => {
            let c = 1.0 / (high - low);
            (Box::new(move |_| c), split(low, high, 2))
        }
        DistributionSpec::Laplace { loc, scale } => (
            Box::new(move |x: f64| (-(x - loc).abs() / scale).exp() / (2.0 * scale)),
            split(loc - 200.0 * scale, loc + 200.0 * scale, 40),
        ),
        DistributionSpec::Exponential { rate } => (
            Box::new(move |x: f64| rate * (-rate * x).exp()),
            split(0.0, 200.0 / rate, 20),
        ),
        DistributionSpec::Gamma { shape, rate } => {
            let lg = ln_gamma(shape);
            let hi = (200.0 + 20.0 * shape) / rate;
            (
                Box::new(move |x: f64| {
                    let t = rate * x;
                    let log_pow = if shape == 1.0 { 0.0 } else { (shape - 1.0) * t.ln() };
                    rate * (log_pow - t - lg).exp()
                }),
                split(0.0, hi, 40),
            )
        }
        DistributionSpec::DiscreteInteger { .. } => {
            return Err(Error::Unsupported(
                "quadrature moments for a discrete law (use the exact sum)".into(),
            ))
        }
    })
}

fn quadrature_moments(dist: &DistributionSpec, n: usize) -> Result<MomentSequence> {
    let (density, breaks) = density_and_support(dist)?;
    let mut moments = Vec::with_capacity(n + 1);
    let mut abs_error: f64 = 0.0;
    for k in 0..=n {
        let r = quadrature::integrate(
            |x| x.powi(k as i32) * density(x),
            &breaks,
            QUADRATURE_ABS_TOL,
            QUADRATURE_REL_TOL,
            20_000,
        )?;
        abs_error = abs_error.max(r.abs_error);
        moments.push(r.value);
    }
    // Normalize the (already ≈1) total mass so the sequence is a probability law.
    let m0 = moments[0];
    moments.iter_mut().for_each(|m| *m /= m0);
    Ok(MomentSequence {
        moments,
        source: MomentSource::Quadrature { dist: dist.clone() },
        abs_error,
    })
}

fn hankel_matrix(m: &MomentSequence, n: usize) -> Result<Vec<Vec<f64>>> {
    m.require(2 * n)?;
    Ok((0..=n).map(|i| (0..=n).map(|j| m.moments[i + j]).collect()).collect())
}

/// Determinant by LU with partial pivoting. A pivot below
/// `PIVOT_TOL · max|a_ij|` is reported as degenerate.
fn lu_determinant(mut a: Vec<Vec<f64>>) -> Result<f64> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate("zero matrix".into()));
    }
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[piv][col].abs() < PIVOT_TOL * scale {
            return Err(Error::Degenerate(format!(
                "pivot {:e} at column {col} below {:e}",
                a[piv][col],
                PIVOT_TOL * scale
            )));
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    Ok(det)
}

/// `D_n`, the determinant of the `(n+1)×(n+1)` Hankel matrix `[m_{i+j}]`.
pub fn hankel_determinant(m: &MomentSequence, n: usize) -> Result<f64> {
    let det = lu_determinant(hankel_matrix(m, n)?)?;
    if det > 0.0 {
        Ok(det)
    } else {
        Err(Error::Degenerate(format!(
            "Hankel determinant D_{n} = {det:e} is not positive"
        )))
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::Degenerate(format!("moment Gram matrix not positive at {i}")));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

fn lower_inverse(l: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = l.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        inv[col][col] = 1.0 / l[col][col];
        for row in col + 1..n {
            let s: f64 = (col..row).map(|k| l[row][k] * inv[k][col]).sum();
            inv[row][col] = -s / l[row][row];
        }
    }
    inv
}

/// `P_0, …, P_ℓ` orthonormal under the moment functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalFamily {
    pub ell: usize,
    /// `m_0..=m_{2ℓ}`.
    pub moments: Vec<f64>,
    pub source: MomentSource,
    pub moment_abs_error: f64,
    /// `D_0..=D_ℓ`.
    pub hankel: Vec<f64>,
    /// `coeffs[n][k]` is the coefficient of `x^k` in `P_n`.
    pub coeffs: Vec<Vec<f64>>,
}

/// Builds `P_0..=P_ℓ` through the Cholesky factor `H = LLᵀ` of the moment
/// Gram matrix: the rows of `L⁻¹` are the coefficient vectors.
pub fn orthonormal_family(m: &MomentSequence, ell: usize) -> Result<OrthogonalFamily> {
    let h = hankel_matrix(m, ell)?;
    let hankel = (0..=ell)
        .map(|n| hankel_determinant(m, n))
        .collect::<Result<Vec<_>>>()?;
    let l = cholesky(&h)?;
    let inv = lower_inverse(&l);
    let coeffs = inv
        .iter()
        .enumerate()
        .map(|(n, row)| row[..=n].to_vec())
        .collect();
    Ok(OrthogonalFamily {
        ell,
        moments: m.moments[..=2 * ell].to_vec(),
        source: m.source.clone(),
        moment_abs_error: m.abs_error,
        hankel,
        coeffs,
    })
}

/// `P_n` from the cofactor expansion of `D_n(x)` (the Hankel matrix with its
/// last row replaced by `1, x, …, x^n`), divided by `√(D_n D_{n−1})`.
pub fn cofactor_polynomial(m: &MomentSequence, n: usize) -> Result<Vec<f64>> {
    m.require(2 * n)?;
    let d_n = hankel_determinant(m, n)?;
    let d_prev = if n == 0 { 1.0 } else { hankel_determinant(m, n - 1)? };
    let norm = (d_n * d_prev).sqrt();
    if n == 0 {
        return Ok(vec![1.0 / norm]);
    }
    let mut coef = Vec::with_capacity(n + 1);
    for k in 0..=n {
        // Minor deleting the last row and column k.
        let minor: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..=n).filter(|&j| j != k).map(|j| m.moments[i + j]).collect())
            .collect();
        let det = match lu_determinant(minor) {
            Ok(v) => v,
            Err(Error::Degenerate(_)) => 0.0,
            Err(e) => return Err(e),
        };
        let sign = if (n + k) % 2 == 0 { 1.0 } else { -1.0 };
        coef.push(sign * det / norm);
    }
    Ok(coef)
}

impl OrthogonalFamily {
    pub fn degree(&self) -> usize {
        self.ell
    }

    /// `D_n` with `D_{−1} = 1`.
    pub fn d(&self, n: isize) -> f64 {
        if n < 0 {
            1.0
        } else {
            self.hankel[n as usize]
        }
    }

    /// `√(D_n / D_{n−1}) = E[X^n P_n(X)]`.
    pub fn ratio(&self, n: usize) -> f64 {
        (self.d(n as isize) / self.d(n as isize - 1)).sqrt()
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        self.coeffs[n].iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `E[P_n P_k]` evaluated with the stored moments.
    pub fn inner(&self, n: usize, k: usize) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.coeffs[n].iter().enumerate() {
            for (j, b) in self.coeffs[k].iter().enumerate() {
                s += a * b * self.moments[i + j];
            }
        }
        s
    }

    /// `E[X^k P_n(X)]` evaluated with the stored moments (`k + n ≤ 2ℓ`).
    pub fn monomial_moment(&self, k: usize, n: usize) -> f64 {
        self.coeffs[n]
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.moments[i + k])
            .sum()
    }

    /// `C(D,ℓ) = min_i D_i / max(max_i D_i, 1)` over `0 ≤ i ≤ ℓ`.
    pub fn c_constant(&self) -> f64 {
        let min = self.hankel.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.hankel.iter().copied().fold(1.0, f64::max);
        min / max
    }

    /// Relative error bound on each `D_i` implied by the moment error,
    /// via `dD = D · tr(H⁻¹ dH)` with `|dH_ij| ≤ δ`.
    fn hankel_rel_errors(&self) -> Vec<f64> {
        let delta = self.moment_abs_error;
        (0..=self.ell)
            .map(|n| {
                if delta == 0.0 {
                    return 0.0;
                }
                let h: Vec<Vec<f64>> = (0..=n)
                    .map(|i| (0..=n).map(|j| self.moments[i + j]).collect())
                    .collect();
                let l = cholesky(&h).expect("family construction checked positivity");
                let li = lower_inverse(&l);
                // H⁻¹ = L⁻ᵀ L⁻¹
                let mut s = 0.0;
                for i in 0..=n {
                    for j in 0..=n {
                        let v: f64 = (i.max(j)..=n).map(|k| li[k][i] * li[k][j]).sum();
                        s += v.abs();
                    }
                }
                delta * s
            })
            .collect()
    }
}

/// `Ξ` and a first-order bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi {
    pub value: f64,
    pub abs_error: f64,
}

/// `Ξ = C(D,ℓ)^d`.
pub fn xi_constant(fam: &OrthogonalFamily, ell: usize, d: usize) -> Result<f64> {
    Ok(xi_with_error(fam, ell, d)?.value)
}

/// `Ξ` with error propagated from the moment error: the relative error of
/// `C` is at most the sum of those of its extreme determinants, and raising to
/// the `d`-th power multiplies it by `d`.
pub fn xi_with_error(fam: &OrthogonalFamily, ell: usize, d: usize) -> Result<Xi> {
    if ell > fam.ell {
        return Err(Error::invalid(format!(
            "family built to degree {} but ℓ = {ell}",
            fam.ell
        )));
    }
    let sub = &fam.hankel[..=ell];
    let min = sub.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sub.iter().copied().fold(1.0, f64::max);
    let value = (min / max).powi(d as i32);
    let rel = fam.hankel_rel_errors();
    let rel_c = rel[..=ell].iter().fold(0.0f64, |a, b| a.max(*b)) * 2.0;
    Ok(Xi {
        value,
        abs_error: value * d as f64 * rel_c,
    })
}

/// `Θ_α = N_α Π_j √(D_{α_j}/D_{α_j−1}) T_α`.
pub fn theta_coefficient(t: &SymmetricTensor, alpha: &MultiIndex, fam: &OrthogonalFamily) -> Result<f64> {
    check_dim(t.d(), alpha.dim())?;
    if alpha.degree() != t.ell() {
        return Err(Error::invalid(format!(
            "|α| = {} but the tensor has order {}",
            alpha.degree(),
            t.ell()
        )));
    }
    if t.ell() as usize > fam.ell {
        return Err(Error::invalid(format!(
            "family built to degree {} but tensor order is {}",
            fam.ell,
            t.ell()
        )));
    }
    let basis = t.basis();
    let pos = basis
        .position(alpha)
        .ok_or_else(|| Error::invalid("multi-index not in basis"))?;
    let ratio: f64 = alpha.as_slice().iter().map(|&a| fam.ratio(a as usize)).product();
    Ok(basis.weights_f64()[pos] * ratio * t.values()[pos])
}

/// `Σ_{|α|=ℓ} Θ_α²`.
pub fn partial_sum(t: &SymmetricTensor, fam: &OrthogonalFamily) -> Result<f64> {
    let mut s = 0.0;
    for alpha in t.basis().indices() {
        s += theta_coefficient(t, alpha, fam)?.powi(2);
    }
    Ok(s)
}

/// `E⟨T, X^{⊗ℓ}⟩²` computed from the moments and coordinate independence.
pub fn second_moment_exact(t: &SymmetricTensor, m: &MomentSequence) -> Result<f64> {
    let ell = t.ell() as usize;
    let tuples = (t.d() as u64).checked_pow(t.ell());
    if tuples.is_none_or(|n| n > MAX_SECOND_MOMENT_TUPLES) {
        return Err(Error::capacity(format!(
            "d^ℓ = {}^{} exceeds {MAX_SECOND_MOMENT_TUPLES}",
            t.d(),
            ell
        )));
    }
    m.require(2 * ell)?;
    let basis = t.basis();
    let w = basis.weights_f64();
    let vals = t.values();
    let mut s = 0.0;
    for (a, alpha) in basis.indices().iter().enumerate() {
        if vals[a] == 0.0 {
            continue;
        }
        for (b, beta) in basis.indices().iter().enumerate() {
            if vals[b] == 0.0 {
                continue;
            }
            let prod: f64 = alpha
                .as_slice()
                .iter()
                .zip(beta.as_slice())
                .map(|(x, y)| m.moments[(x + y) as usize])
                .product();
            s += w[a] * w[b] * vals[a] * vals[b] * prod;
        }
    }
    Ok(s)
}

/// The three sides of `E⟨T, X^{⊗ℓ}⟩² ≥ Σ_{|α|=ℓ} Θ_α² ≥ Ξ‖T‖²_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub exact: f64,
    pub partial_sum: f64,
    pub bound: f64,
    pub xi: f64,
}

/// Relative slack allowed when checking the chain.
pub const CHAIN_REL_TOL: f64 = 1e-9;

fn geq(a: f64, b: f64) -> bool {
    a >= b - CHAIN_REL_TOL * a.abs().max(b.abs())
}

/// Evaluates the chain and fails with [`Error::Assertion`] if it is violated.
pub fn verify_lower_bound(t: &SymmetricTensor, m: &MomentSequence, fam: &OrthogonalFamily) -> Result<LowerBoundReport> {
    let exact = second_moment_exact(t, m)?;
    let partial = partial_sum(t, fam)?;
    let xi = xi_constant(fam, t.ell() as usize, t.d())?;
    let norm2 = t.frobenius_norm().powi(2);
    let report = LowerBoundReport {
        exact,
        partial_sum: partial,
        bound: xi * norm2,
        xi,
    };
    if !geq(report.exact, report.partial_sum) || !geq(report.partial_sum, report.bound) {
        return Err(Error::Assertion(format!(
            "lower-bound chain violated: exact {:e}, partial sum {:e}, bound {:e}",
            report.exact, report.partial_sum, report.bound
        )));
    }
    Ok(report)
}
