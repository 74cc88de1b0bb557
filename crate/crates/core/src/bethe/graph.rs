//! Pair secular determinant `Z(k₁,k₂) = det(1 - U(k₁,k₂))` on a compact graph
//! with contact interactions between particles at equal coordinate on edges
//! `e` and `e'`, coordinates measured from each edge's initial vertex.
//!
//! Bosonic symmetry folds the configuration space `[0,l_e]×[0,l_e']` onto the
//! triangles `x₁ < x₂` over all ordered edge pairs. `U` follows the particle
//! carrying `k₂`: it is scattered by the vertex (`S(k₂)`), travels to the
//! diagonal, meets the spectator with momentum `±k₁` (transmission
//! `δ/(δ+iα)`, reflection `-iα/(δ+iα)`, `δ = k₂ ∓ k₁`) and reaches the next
//! vertex. State index: (spectator sign) ⊗ (spectator edge) ⊗ (end of the carrier).

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{refuse_attractive, BetheModel, BetheRoot, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::graph::{BoundaryConditions, CMatrix, MetricGraph};
use crate::one_particle::Scattering;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Interacting pairs must have equal lengths to this relative tolerance.
const LENGTH_TOL: f64 = 1e-12;

/// Kronecker factors of `U`, checked at every assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZDimensions {
    pub spectator_signs: usize,
    pub spectator_edges: usize,
    pub carrier_ends: usize,
    pub total: usize,
}

impl std::fmt::Display for ZDimensions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (sign) x {} (spectator edge) x {} (carrier end) = {}",
            self.spectator_signs, self.spectator_edges, self.carrier_ends, self.total
        )
    }
}

#[derive(Debug, Clone)]
pub struct GraphZSpec {
    graph: MetricGraph,
    scattering: Scattering,
    real: bool,
    alpha: Vec<f64>,
}

impl GraphZSpec {
    /// `alpha[e][f]` is the strength on the pair of edges `(e, f)`.
    pub fn new(graph: MetricGraph, conditions: &BoundaryConditions, alpha: Vec<Vec<f64>>) -> Result<Self> {
        let ne = graph.n_edges();
        if conditions.dim() != 2 * ne {
            return Err(Error::DimensionMismatch(format!(
                "conditions act on {} boundary values, graph has {ne} edges",
                conditions.dim()
            )));
        }
        if alpha.len() != ne || alpha.iter().any(|row| row.len() != ne) {
            return Err(Error::DimensionMismatch(format!(
                "pair strengths must be {ne}x{ne}, got {} rows",
                alpha.len()
            )));
        }
        let lengths = graph.lengths();
        for e in 0..ne {
            for f in 0..ne {
                let a = alpha[e][f];
                if !a.is_finite() {
                    return Err(Error::param("alpha", format!("entry ({e},{f}) is not finite")));
                }
                if a != alpha[f][e] {
                    return Err(Error::param(
                        "alpha",
                        format!("entries ({e},{f}) and ({f},{e}) differ"),
                    ));
                }
                let (le, lf) = (lengths[e], lengths[f]);
                if a != 0.0 && (le - lf).abs() > LENGTH_TOL * le.max(lf) {
                    return Err(Error::param(
                        "alpha",
                        format!("interacting edges {e} and {f} have lengths {le} and {lf}"),
                    ));
                }
            }
        }
        Ok(Self {
            scattering: Scattering::new(conditions),
            real: conditions.is_real(),
            graph,
            alpha: alpha.into_iter().flatten().collect(),
        })
    }

    /// Same strength on every pair of edges (requires an equilateral graph when `α ≠ 0`).
    pub fn uniform(graph: MetricGraph, conditions: &BoundaryConditions, alpha: f64) -> Result<Self> {
        let ne = graph.n_edges();
        Self::new(graph, conditions, vec![vec![alpha; ne]; ne])
    }

    /// Strength `α` on each edge with itself, none across edges.
    pub fn diagonal(graph: MetricGraph, conditions: &BoundaryConditions, alpha: f64) -> Result<Self> {
        let ne = graph.n_edges();
        let a = (0..ne)
            .map(|e| (0..ne).map(|f| if e == f { alpha } else { 0.0 }).collect())
            .collect();
        Self::new(graph, conditions, a)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn alpha(&self, e: usize, f: usize) -> f64 {
        self.alpha[e * self.graph.n_edges() + f]
    }

    pub fn has_interaction(&self) -> bool {
        self.alpha.iter().any(|&a| a != 0.0)
    }

    /// True when conjugation symmetry `Z(-k₁,-k₂) = conj Z(k₁,k₂)` is expected.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn dimensions(&self) -> ZDimensions {
        let ne = self.graph.n_edges();
        ZDimensions {
            spectator_signs: 2,
            spectator_edges: ne,
            carrier_ends: 2 * ne,
            total: 4 * ne * ne,
        }
    }

    /// `U(k₁,k₂)` for the cycle of the particle carrying `k₂`.
    pub fn cycle_matrix(&self, k1: f64, k2: f64) -> Result<CMatrix> {
        if !(k1.is_finite() && k2.is_finite()) {
            return Err(Error::param("k", "wave numbers must be finite"));
        }
        let dims = self.dimensions();
        let ne = dims.spectator_edges;
        let nb = dims.carrier_ends;
        let s = self.scattering.at(Complex64::new(k2, 0.0))?;
        if s.shape() != (nb, nb) || dims.spectator_signs * ne * nb != dims.total {
            return Err(Error::DimensionMismatch(format!(
                "vertex scattering is {:?}, layout {dims}",
                s.shape()
            )));
        }
        let idx = |sign: usize, f: usize, b: usize| (sign * ne + f) * nb + b;
        let lengths = self.graph.lengths();
        let phase: Vec<Complex64> = lengths.iter().map(|&l| (I * k2 * l).exp()).collect();
        // propagation and pair scattering from outgoing to incoming amplitudes
        let mut m = CMatrix::zeros(dims.total, dims.total);
        for sign in 0..2 {
            let p = if sign == 0 { k1 } else { -k1 };
            for f in 0..ne {
                for e in 0..ne {
                    let a = self.alpha(e, f);
                    // carrier leaves the initial vertex of e
                    let (t, r) = pair_coefficients(k2 - p, a);
                    m[(idx(sign, f, ne + e), idx(sign, f, e))] += t * phase[e];
                    m[(idx(sign, e, ne + f), idx(sign, f, e))] += r * phase[f];
                    // carrier leaves the final vertex of e
                    let (t, r) = pair_coefficients(k2 + p, a);
                    m[(idx(sign, f, e), idx(sign, f, ne + e))] += t * phase[e];
                    m[(idx(sign, e, f), idx(sign, f, ne + e))] += r * phase[e];
                }
            }
        }
        let mut sfull = CMatrix::zeros(dims.total, dims.total);
        for blk in 0..dims.spectator_signs * ne {
            sfull
                .view_mut((blk * nb, blk * nb), (nb, nb))
                .copy_from(&s);
        }
        let u = m * sfull;
        if u.shape() != (dims.total, dims.total) {
            return Err(Error::DimensionMismatch(format!("U is {:?}, layout {dims}", u.shape())));
        }
        Ok(u)
    }
}

/// Transmission and reflection of two particles with relative momentum `δ`.
fn pair_coefficients(delta: f64, alpha: f64) -> (Complex64, Complex64) {
    if alpha == 0.0 {
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let den = Complex64::new(delta, alpha);
    (Complex64::new(delta, 0.0) / den, Complex64::new(0.0, -alpha) / den)
}

/// `Z(k₁,k₂) = det(1 - U(k₁,k₂))`.
pub fn assemble_z(spec: &GraphZSpec, k1: f64, k2: f64) -> Result<Complex64> {
    let u = spec.cycle_matrix(k1, k2)?;
    let n = u.nrows();
    Ok((CMatrix::identity(n, n) - u).determinant())
}

/// Eigenvalues of `U` (unitary for real `k`).
fn cycle_eigenvalues(spec: &GraphZSpec, k1: f64, k2: f64) -> Result<DVector<Complex64>> {
    let u = spec.cycle_matrix(k1, k2)?;
    nalgebra::linalg::Schur::new(u)
        .eigenvalues()
        .ok_or_else(|| Error::BetheFailure("Schur form of U is not triangular".into()))
}

/// Phase of the eigenvalue of `U` closest to 1; vanishes on the zero set of `Z`.
fn nearest_phase(spec: &GraphZSpec, k1: f64, k2: f64) -> Result<f64> {
    let ev = cycle_eigenvalues(spec, k1, k2)?;
    let best = ev
        .iter()
        .min_by(|a, b| (*a - 1.0).norm().total_cmp(&(*b - 1.0).norm()))
        .copied()
        .unwrap_or(Complex64::new(-1.0, 0.0));
    Ok(best.arg())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPairRoot {
    pub root: BetheRoot,
    /// Number of grid seeds that converged to this root.
    pub seeds: usize,
    /// Eigenvalues of `U(k₁,k₂)` within `1e-6` of 1.
    pub nullity: usize,
}

#[derive(Debug, Clone, Copy)]
struct Refined {
    k1: f64,
    k2: f64,
}

fn newton_phase(spec: &GraphZSpec, mut k: [f64; 2], scale: f64, max_step: f64) -> Option<Refined> {
    let eval = |k: [f64; 2]| -> Option<[f64; 2]> {
        Some([
            nearest_phase(spec, k[0], k[1]).ok()?,
            nearest_phase(spec, k[1], k[0]).ok()?,
        ])
    };
    let mut fk = eval(k)?;
    for _ in 0..80 {
        let norm = fk[0].hypot(fk[1]);
        if norm < 1e-15 {
            break;
        }
        let h = 1e-7 * scale;
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut kp = k;
            let mut km = k;
            kp[j] += h;
            km[j] -= h;
            let (fp, fm) = (eval(kp)?, eval(km)?);
            for i in 0..2 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det.abs() < 1e-14 {
            return None;
        }
        let mut dx = [
            (jac[1][1] * fk[0] - jac[0][1] * fk[1]) / det,
            (jac[0][0] * fk[1] - jac[1][0] * fk[0]) / det,
        ];
        let len = dx[0].hypot(dx[1]);
        if len > max_step {
            dx = [dx[0] * max_step / len, dx[1] * max_step / len];
        }
        let mut t = 1.0;
        loop {
            let trial = [k[0] - t * dx[0], k[1] - t * dx[1]];
            if let Some(ft) = eval(trial) {
                if ft[0].hypot(ft[1]) < norm {
                    k = trial;
                    fk = ft;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-8 {
                return if norm < 1e-12 { Some(Refined { k1: k[0], k2: k[1] }) } else { None };
            }
        }
        if (t * dx[0]).hypot(t * dx[1]) < 1e-14 * scale {
            break;
        }
    }
    Some(Refined { k1: k[0], k2: k[1] })
}

/// Zeros of `(Z(k₁,k₂), Z(k₂,k₁))` with `0 < k₁ ≤ k₂` and `k₁² + k₂² ≤ λ_max`.
///
/// Seeds are local minima of `log(|Z(k₁,k₂)|² + |Z(k₂,k₁)|²)` on a grid over the
/// triangle; each is refined by Newton's method on the phases of the eigenvalues
/// of `U` nearest to 1. Points with `k₁ = 0`, and with `k₁ = k₂` when some
/// strength is nonzero, are discarded: the ansatz vanishes identically there.
pub fn solve_graph_pair(spec: &GraphZSpec, lambda_max: f64) -> Result<Vec<GraphPairRoot>> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::param("lambda_max", "must be positive and finite"));
    }
    for &a in &spec.alpha {
        refuse_attractive(a)?;
    }
    let total: f64 = spec.graph.lengths().iter().sum();
    let kmax = lambda_max.sqrt();
    let h = std::f64::consts::PI / (6.0 * total);
    let n = (kmax / h).ceil() as usize + 1;
    let grid: Vec<(usize, usize)> = (0..=n)
        .flat_map(|j| (0..=j).map(move |i| (i, j)))
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&(i, j)| {
            let (k1, k2) = (i as f64 * h, j as f64 * h);
            match (assemble_z(spec, k1, k2), assemble_z(spec, k2, k1)) {
                (Ok(a), Ok(b)) => (a.norm_sqr() + b.norm_sqr()).ln(),
                _ => f64::INFINITY,
            }
        })
        .collect();
    let at = |i: usize, j: usize| -> Option<f64> {
        if i > j || j > n {
            return None;
        }
        Some(values[j * (j + 1) / 2 + i])
    };
    let mut seeds = Vec::new();
    for &(i, j) in &grid {
        let v = at(i, j).unwrap();
        if !v.is_finite() {
            continue;
        }
        let mut is_min = true;
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 {
                    continue;
                }
                if let Some(w) = at(ii as usize, jj as usize) {
                    if w < v {
                        is_min = false;
                    }
                }
            }
        }
        if is_min {
            seeds.push((i as f64 * h, j as f64 * h));
        }
    }
    let scale = kmax.max(1.0);
    let interacting = spec.has_interaction();
    let refined: Vec<Refined> = seeds
        .par_iter()
        .filter_map(|&(k1, k2)| newton_phase(spec, [k1.max(0.5 * h), k2.max(0.5 * h)], scale, 0.5 * h))
        .collect();
    let mut found: Vec<(BetheRoot, usize)> = Vec::new();
    let mut candidates: Vec<BetheRoot> = Vec::new();
    for r in refined {
        let (k1, k2) = if r.k1.abs() <= r.k2.abs() {
            (r.k1.abs(), r.k2.abs())
        } else {
            (r.k2.abs(), r.k1.abs())
        };
        let lambda = k1 * k1 + k2 * k2;
        if k1 < 1e-6 * scale || lambda > lambda_max * (1.0 + 1e-12) {
            continue;
        }
        if interacting && k2 - k1 < 1e-6 * scale {
            continue;
        }
        let residual = match (assemble_z(spec, k1, k2), assemble_z(spec, k2, k1)) {
            (Ok(a), Ok(b)) => a.norm().max(b.norm()),
            _ => continue,
        };
        if residual > RESIDUAL_TOL {
            continue;
        }
        candidates.push(BetheRoot {
            k1,
            k2,
            lambda,
            residual,
            model: BetheModel::GraphZ,
            label: (0, 0),
        });
    }
    candidates.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.k1.total_cmp(&b.k1)));
    for c in candidates {
        match found
            .iter_mut()
            .find(|(r, _)| (r.k1 - c.k1).abs() < 1e-8 * scale && (r.k2 - c.k2).abs() < 1e-8 * scale)
        {
            Some(entry) => entry.1 += 1,
            None => found.push((c, 1)),
        }
    }
    found
        .into_iter()
        .enumerate()
        .map(|(i, (mut root, seeds))| {
            root.label = (i as i64, 0);
            let ev = cycle_eigenvalues(spec, root.k1, root.k2)?;
            let nullity = ev.iter().filter(|z| (*z - 1.0).norm() < 1e-6).count();
            Ok(GraphPairRoot { root, seeds, nullity })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_gaudin, solve_lieb_liniger_ring};
    use crate::graph::{assemble_conditions, VertexConditionSpec};
    use crate::one_particle::{scan_spectrum, secular_value};
    use std::f64::consts::PI;

    fn dirichlet_interval(l: f64) -> (MetricGraph, BoundaryConditions) {
        let g = MetricGraph::interval(l).unwrap();
        let bc = assemble_conditions(&g, &[VertexConditionSpec::Dirichlet, VertexConditionSpec::Dirichlet]).unwrap();
        (g, bc)
    }

    #[test]
    fn cycle_matrix_is_unitary() {
        let g = MetricGraph::star(&[1.0, 1.0, 1.0]).unwrap();
        let bc = assemble_conditions(
            &g,
            &[
                VertexConditionSpec::Delta(-0.7),
                VertexConditionSpec::Dirichlet,
                VertexConditionSpec::Robin(vec![0.4]),
                VertexConditionSpec::Kirchhoff,
            ],
        )
        .unwrap();
        let spec = GraphZSpec::uniform(g, &bc, 1.3).unwrap();
        assert_eq!(spec.dimensions().total, 36);
        for &(k1, k2) in &[(0.3, 1.7), (2.2, 0.9), (1.0, 1.0)] {
            let u = spec.cycle_matrix(k1, k2).unwrap();
            let err = (&u * u.adjoint() - CMatrix::identity(36, 36)).norm();
            assert!(err < 1e-12, "‖UU* - 1‖ = {err:e}");
        }
    }

    #[test]
    fn interval_reproduces_gaudin() {
        let (g, bc) = dirichlet_interval(PI);
        for &alpha in &[0.5, 2.0, 10.0] {
            let spec = GraphZSpec::uniform(g.clone(), &bc, alpha).unwrap();
            let gaudin = solve_gaudin(PI, alpha, 40.0).unwrap();
            for r in &gaudin {
                let z12 = assemble_z(&spec, r.k1, r.k2).unwrap();
                let z21 = assemble_z(&spec, r.k2, r.k1).unwrap();
                assert!(z12.norm() < 1e-10 && z21.norm() < 1e-10, "{r:?}: {z12} {z21}");
            }
            let pair = solve_graph_pair(&spec, 40.0).unwrap();
            assert_eq!(pair.len(), gaudin.len(), "α = {alpha}");
            for (p, q) in pair.iter().zip(&gaudin) {
                assert!((p.root.lambda - q.lambda).abs() < 1e-9 * q.lambda, "{p:?} vs {q:?}");
            }
        }
    }

    #[test]
    fn free_pairs_factorise() {
        let g = MetricGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.7), (2, 0, 0.6)]).unwrap();
        let bc = assemble_conditions(
            &g,
            &[
                VertexConditionSpec::Kirchhoff,
                VertexConditionSpec::Delta(1.5),
                VertexConditionSpec::Dirichlet,
            ],
        )
        .unwrap();
        let spec = GraphZSpec::uniform(g.clone(), &bc, 0.0).unwrap();
        for &(k1, k2) in &[(0.4, 2.3), (1.9, 0.7), (3.1, 3.1)] {
            let z = assemble_z(&spec, k1, k2).unwrap();
            let one = secular_value(&g, &bc, Complex64::new(k2, 0.0)).unwrap();
            let expect = one.powi(2 * g.n_edges() as i32);
            assert!((z - expect).norm() < 1e-10 * expect.norm().max(1e-3), "{z} vs {expect}");
        }
        let lambda_max: f64 = 30.0;
        let one = scan_spectrum(&g, &bc, lambda_max.sqrt(), 0.02, 1e-11).unwrap().expanded();
        let mut expect = Vec::new();
        for i in 0..one.len() {
            for j in i..one.len() {
                let l = one[i] + one[j];
                if l <= lambda_max {
                    expect.push(l);
                }
            }
        }
        expect.sort_by(f64::total_cmp);
        let found: Vec<f64> = solve_graph_pair(&spec, lambda_max)
            .unwrap()
            .iter()
            .map(|r| r.root.lambda)
            .collect();
        assert_eq!(found.len(), expect.len(), "{found:?} vs {expect:?}");
        for (a, b) in found.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-8 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let g = MetricGraph::from_triples(2, &[(0, 1, 1.2), (1, 0, 1.2)]).unwrap();
        let bc = assemble_conditions(
            &g,
            &[VertexConditionSpec::Delta(0.8), VertexConditionSpec::Robin(vec![0.3, -0.2])],
        )
        .unwrap();
        let spec = GraphZSpec::uniform(g, &bc, 0.9).unwrap();
        assert!(spec.is_real());
        for &(k1, k2) in &[(0.5, 1.5), (2.0, 0.3), (1.1, 1.1)] {
            let a = assemble_z(&spec, k1, k2).unwrap();
            let b = assemble_z(&spec, -k1, -k2).unwrap();
            assert!((a.conj() - b).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn ring_roots_are_zeros() {
        // a loop and a two-edge cycle, contact only within each edge
        let loop_graph = MetricGraph::from_triples(1, &[(0, 0, 2.0)]).unwrap();
        let loop_bc = assemble_conditions(&loop_graph, &[VertexConditionSpec::Kirchhoff]).unwrap();
        let cycle = MetricGraph::from_triples(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let cycle_bc = assemble_conditions(
            &cycle,
            &[VertexConditionSpec::Kirchhoff, VertexConditionSpec::Kirchhoff],
        )
        .unwrap();
        let alpha = 1.5;
        let specs = [
            GraphZSpec::uniform(loop_graph, &loop_bc, alpha).unwrap(),
            GraphZSpec::diagonal(cycle, &cycle_bc, alpha).unwrap(),
        ];
        let ring = solve_lieb_liniger_ring(2.0, alpha, 60.0).unwrap();
        for spec in &specs {
            for r in ring.iter().filter(|r| r.k1.abs() > 1e-9 && r.k2.abs() > 1e-9) {
                let (a, b) = (r.k1.abs(), r.k2.abs());
                let z12 = assemble_z(spec, a, b).unwrap();
                let z21 = assemble_z(spec, b, a).unwrap();
                assert!(z12.norm() < 1e-9 && z21.norm() < 1e-9, "{r:?}: {z12} {z21}");
            }
        }
    }

    #[test]
    fn assembly_validates_layout() {
        let (g, bc) = dirichlet_interval(1.0);
        assert!(matches!(
            GraphZSpec::new(g.clone(), &bc, vec![vec![1.0, 0.0]]),
            Err(Error::DimensionMismatch(_))
        ));
        let star = MetricGraph::star(&[1.0, 2.0]).unwrap();
        let sbc = assemble_conditions(
            &star,
            &[
                VertexConditionSpec::Kirchhoff,
                VertexConditionSpec::Dirichlet,
                VertexConditionSpec::Dirichlet,
            ],
        )
        .unwrap();
        assert!(GraphZSpec::new(star.clone(), &sbc, vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(GraphZSpec::uniform(star.clone(), &sbc, 1.0).is_err());
        assert!(GraphZSpec::diagonal(star, &sbc, 1.0).is_ok());
        assert!(matches!(
            GraphZSpec::new(g, &bc, vec![vec![f64::NAN]]),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
