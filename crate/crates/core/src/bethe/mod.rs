//! Two-boson Bethe ansatz: Gaudin's interval with Dirichlet ends and the
//! Lieb-Liniger ring, both with contact strength `α` in the convention
//! `(∂₁ - ∂₂)ψ(x,x) = αψ(x,x)` on the sector `x₁ > x₂`.
//!
//! For two particles the logarithmic Bethe equations separate in the sum and
//! difference of the wave numbers. With `φ(x) = x·l - 2·atan(α/x)` the interval
//! conditions read `φ(k₁+k₂) = π(I₁+I₂)` and `φ(k₂-k₁) = π(I₂-I₁)`; on the
//! ring `k₁+k₂ = 2πJ/L` and `q·L - 4·atan(α/q) = 2πm`. For `α ≥ 0` each scalar
//! equation is strictly increasing in `x > 0`, so every branch keeps the label
//! of the non-interacting lattice point it starts from.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

mod graph;

pub use graph::{assemble_z, solve_graph_pair, GraphPairRoot, GraphZSpec, ZDimensions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetheModel {
    Gaudin,
    LiebLiniger,
    GraphZ,
}

impl BetheModel {
    pub fn tag(&self) -> &'static str {
        match self {
            BetheModel::Gaudin => "gaudin",
            BetheModel::LiebLiniger => "lieb-liniger",
            BetheModel::GraphZ => "graph-z",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetheRoot {
    pub k1: f64,
    pub k2: f64,
    pub lambda: f64,
    pub residual: f64,
    pub model: BetheModel,
    /// Quantum numbers of the branch: `(I₁, I₂)` on the interval, `(J, m)` on the ring.
    pub label: (i64, i64),
}

/// Acceptance bound on the Bethe-equation residuals.
pub(crate) const RESIDUAL_TOL: f64 = 1e-10;

fn two_body(x: f64, alpha: f64) -> Complex64 {
    if alpha == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(x, -alpha) / Complex64::new(x, alpha)
}

/// Residuals `e^{-2ik_n l} - RHS_n` of the interval equations for `(n,m) = (1,2), (2,1)`.
pub fn gaudin_residual(k1: f64, k2: f64, l: f64, alpha: f64) -> Result<[Complex64; 2]> {
    if ![k1, k2, l, alpha].iter().all(|v| v.is_finite()) {
        return Err(Error::param("k", "wave numbers, length and strength must be finite"));
    }
    let eq = |kn: f64, km: f64| {
        let lhs = Complex64::new(0.0, -2.0 * kn * l).exp();
        lhs - two_body(kn + km, alpha) * two_body(kn - km, alpha)
    };
    Ok([eq(k1, k2), eq(k2, k1)])
}

/// Residuals `e^{ik_n L} - (k_n - k_m + iα)/(k_n - k_m - iα)` of the ring equations.
pub fn ring_residual(k1: f64, k2: f64, circumference: f64, alpha: f64) -> Result<[Complex64; 2]> {
    if ![k1, k2, circumference, alpha].iter().all(|v| v.is_finite()) {
        return Err(Error::param("k", "wave numbers, length and strength must be finite"));
    }
    let eq = |kn: f64, km: f64| {
        let lhs = Complex64::new(0.0, kn * circumference).exp();
        let rhs = if alpha == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(kn - km, alpha) / Complex64::new(kn - km, -alpha)
        };
        lhs - rhs
    };
    Ok([eq(k1, k2), eq(k2, k1)])
}

/// Unique positive root of `x·a - c·atan(α/x) = target` for `α > 0`, where the
/// left side increases from `-cπ/2` to `∞`.
fn phase_root(a: f64, c: f64, alpha: f64, target: f64) -> f64 {
    let f = |x: f64| x * a - c * (alpha / x).atan() - target;
    let df = |x: f64| a + c * alpha / (x * x + alpha * alpha);
    // c·atan ∈ (0, cπ/2): the root sits in [target/a, (target + cπ/2)/a]
    let mut lo = (target / a).max(0.0);
    let mut hi = (target + c * std::f64::consts::FRAC_PI_2) / a;
    if lo == 0.0 {
        lo = f64::MIN_POSITIVE;
    }
    if f(lo) >= 0.0 {
        return lo;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(x);
        if v == 0.0 {
            return x;
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - v / df(x);
        x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    x
}

fn check(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

pub(crate) fn refuse_attractive(alpha: f64) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::param("alpha", "must be finite"));
    }
    if alpha < 0.0 {
        return Err(Error::BetheFailure(
            "attractive contact: the branch from the lattice point (1,1) leaves the real axis \
             (bound pair with complex wave numbers); only α ≥ 0 is solved"
                .into(),
        ));
    }
    Ok(())
}

/// The branch of the interval model labelled by the lattice point `(I₁, I₂)`, `1 ≤ I₁ ≤ I₂`.
pub fn gaudin_branch(l: f64, alpha: f64, i1: i64, i2: i64) -> Result<BetheRoot> {
    check("l", l)?;
    refuse_attractive(alpha)?;
    if i1 < 1 || i2 < i1 {
        return Err(Error::param("label", format!("need 1 <= I1 <= I2, got ({i1}, {i2})")));
    }
    let pi = std::f64::consts::PI;
    let (s, d) = if alpha == 0.0 {
        (pi * (i1 + i2) as f64 / l, pi * (i2 - i1) as f64 / l)
    } else {
        (
            phase_root(l, 2.0, alpha, pi * (i1 + i2) as f64),
            phase_root(l, 2.0, alpha, pi * (i2 - i1) as f64),
        )
    };
    let (k1, k2) = (0.5 * (s - d), 0.5 * (s + d));
    let r = gaudin_residual(k1, k2, l, alpha)?;
    let residual = r[0].norm().max(r[1].norm());
    if residual > RESIDUAL_TOL {
        return Err(Error::BetheFailure(format!(
            "branch ({i1}, {i2}) at α = {alpha}: residual {residual:e}"
        )));
    }
    Ok(BetheRoot { k1, k2, lambda: k1 * k1 + k2 * k2, residual, model: BetheModel::Gaudin, label: (i1, i2) })
}

fn sort_roots(roots: &mut [BetheRoot]) {
    roots.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.k1.total_cmp(&b.k1))
            .then(a.label.cmp(&b.label))
    });
}

/// All interval roots with `λ ≤ λ_max`. Since `λ` grows with `α`, only lattice
/// points with `π²(I₁²+I₂²)/l² ≤ λ_max` can contribute.
pub fn solve_gaudin(l: f64, alpha: f64, lambda_max: f64) -> Result<Vec<BetheRoot>> {
    check("l", l)?;
    check("lambda_max", lambda_max)?;
    refuse_attractive(alpha)?;
    let kmax = (lambda_max.sqrt() * l / std::f64::consts::PI).floor() as i64;
    let mut labels = Vec::new();
    for i1 in 1..=kmax {
        for i2 in i1..=kmax {
            let base = std::f64::consts::PI.powi(2) * ((i1 * i1 + i2 * i2) as f64) / (l * l);
            if base <= lambda_max {
                labels.push((i1, i2));
            }
        }
    }
    let mut roots: Vec<BetheRoot> = labels
        .par_iter()
        .map(|&(a, b)| gaudin_branch(l, alpha, a, b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|r| r.lambda <= lambda_max)
        .collect();
    sort_roots(&mut roots);
    Ok(roots)
}

/// Ring branch with total momentum `2πJ/L` and relative quantum number `m ≥ 0`, `J ≡ m (mod 2)`.
pub fn ring_branch(circumference: f64, alpha: f64, j: i64, m: i64) -> Result<BetheRoot> {
    check("circumference", circumference)?;
    refuse_attractive(alpha)?;
    if m < 0 || (j - m).rem_euclid(2) != 0 {
        return Err(Error::param("label", format!("need m >= 0 and J ≡ m mod 2, got ({j}, {m})")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let p = two_pi * j as f64 / circumference;
    let q = if alpha == 0.0 {
        two_pi * m as f64 / circumference
    } else {
        phase_root(circumference, 4.0, alpha, two_pi * m as f64)
    };
    let (k1, k2) = (0.5 * (p - q), 0.5 * (p + q));
    let r = ring_residual(k1, k2, circumference, alpha)?;
    let residual = r[0].norm().max(r[1].norm());
    if residual > RESIDUAL_TOL {
        return Err(Error::BetheFailure(format!(
            "ring branch ({j}, {m}) at α = {alpha}: residual {residual:e}"
        )));
    }
    Ok(BetheRoot { k1, k2, lambda: k1 * k1 + k2 * k2, residual, model: BetheModel::LiebLiniger, label: (j, m) })
}

/// All ring roots with `λ ≤ λ_max`. The constant state `(0, 0)` at `α = 0` is left out.
pub fn solve_lieb_liniger_ring(circumference: f64, alpha: f64, lambda_max: f64) -> Result<Vec<BetheRoot>> {
    check("circumference", circumference)?;
    check("lambda_max", lambda_max)?;
    refuse_attractive(alpha)?;
    // λ = (P² + q²)/2 with q ≥ 2πm/L, so |J|, m ≤ L·√(2λ_max)/(2π)
    let bound = (circumference * (2.0 * lambda_max).sqrt() / (2.0 * std::f64::consts::PI)).floor() as i64;
    let mut labels = Vec::new();
    for j in -bound..=bound {
        for m in 0..=bound {
            if (j - m).rem_euclid(2) == 0 {
                labels.push((j, m));
            }
        }
    }
    let mut roots: Vec<BetheRoot> = labels
        .par_iter()
        .map(|&(j, m)| ring_branch(circumference, alpha, j, m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|r| r.lambda <= lambda_max && !(r.k1 == 0.0 && r.k2 == 0.0))
        .collect();
    sort_roots(&mut roots);
    Ok(roots)
}

/// λ along one interval branch for increasing strengths.
pub fn track_gaudin(l: f64, label: (i64, i64), alphas: &[f64]) -> Result<Vec<f64>> {
    alphas
        .iter()
        .map(|&a| gaudin_branch(l, a, label.0, label.1).map(|r| r.lambda))
        .collect()
}

/// Two-particle free fermions on `[0,l]` with Dirichlet ends: `π²(n² + m²)/l²`, `n < m`.
pub fn antisymmetric_interval_levels(l: f64, count: usize) -> Vec<f64> {
    let mut v = Vec::new();
    let nmax = (count + 2) as i64;
    for n in 1..=nmax {
        for m in n + 1..=nmax + 1 {
            v.push(std::f64::consts::PI.powi(2) * ((n * n + m * m) as f64) / (l * l));
        }
    }
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}
