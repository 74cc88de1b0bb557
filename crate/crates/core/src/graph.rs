//! Compact metric graphs and self-adjoint vertex conditions in (P, L) form.
//!
//! Boundary values are ordered `ψ_1(0), …, ψ_E(0), ψ_1(l_1), …, ψ_E(l_E)`, so
//! the end of edge `e` at coordinate 0 has index `e` and the end at `l_e` has
//! index `E + e`. Derivatives are always taken pointing into the edge.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for the projector and self-adjointness checks.
pub const MATRIX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
}

impl MetricGraph {
    pub fn new(n_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} has non-positive or non-finite length {}",
                    e.length
                )));
            }
            if e.from >= n_vertices || e.to >= n_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} references vertex outside 0..{n_vertices}"
                )));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    /// Convenience constructor from `(from, to, length)` triples.
    pub fn from_triples(n_vertices: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(
            n_vertices,
            edges
                .iter()
                .map(|&(from, to, length)| Edge { from, to, length })
                .collect(),
        )
    }

    /// A single edge `[0, l]` with vertex 0 at `x = 0` and vertex 1 at `x = l`.
    pub fn interval(l: f64) -> Result<Self> {
        Self::from_triples(2, &[(0, 1, l)])
    }

    /// Star with center vertex 0 and leaves `1..=n`; each edge starts at the center.
    pub fn star(lengths: &[f64]) -> Result<Self> {
        let edges: Vec<_> = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| (0, i + 1, l))
            .collect();
        Self::from_triples(lengths.len() + 1, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    /// Boundary-value indices of the edge ends meeting at `v`, edge by edge,
    /// the `x = 0` end before the `x = l_e` end for loops.
    pub fn incident_ends(&self, v: usize) -> Vec<usize> {
        let ne = self.edges.len();
        let mut ends = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.from == v {
                ends.push(i);
            }
            if e.to == v {
                ends.push(ne + i);
            }
        }
        ends
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incident_ends(v).len()
    }
}

pub fn total_length(graph: &MetricGraph) -> f64 {
    graph.edges.iter().map(|e| e.length).sum()
}

pub fn scale_graph(graph: &MetricGraph, eta: f64) -> Result<MetricGraph> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    let mut g = graph.clone();
    for e in &mut g.edges {
        e.length *= eta;
    }
    Ok(g)
}

/// Vertex condition in local form, acting on the `d_v` ends at a vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexConditionSpec {
    Dirichlet,
    /// Continuity and vanishing sum of inward derivatives.
    Kirchhoff,
    /// Continuity and `Σ ψ'_in = c ψ(v)`; negative `c` is attractive.
    Delta(f64),
    /// Decoupled ends with `ψ'_in + L_j ψ = 0`; positive entries are attractive.
    Robin(Vec<f64>),
    Custom { p: CMatrix, l: CMatrix },
}

impl VertexConditionSpec {
    /// Local `(P_v, L_v)` blocks for a vertex of degree `d`.
    pub fn blocks(&self, d: usize) -> Result<(CMatrix, CMatrix)> {
        let zero = CMatrix::zeros(d, d);
        let ones = CMatrix::from_element(d, d, Complex64::new(1.0, 0.0));
        let continuity = CMatrix::identity(d, d) - ones.scale(1.0 / d as f64);
        match self {
            VertexConditionSpec::Dirichlet => Ok((CMatrix::identity(d, d), zero)),
            VertexConditionSpec::Kirchhoff => Ok((continuity, zero)),
            VertexConditionSpec::Delta(c) => {
                // P⊥ψ' = (Σψ'/d)·1 and Lψ = -(c/d)ψ(v)·1 on continuous ψ.
                let df = d as f64;
                Ok((continuity, ones.scale(-c / (df * df))))
            }
            VertexConditionSpec::Robin(values) => {
                if values.len() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "robin block has {} values for a vertex of degree {d}",
                        values.len()
                    )));
                }
                let l = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    d,
                    values.iter().map(|&x| Complex64::new(x, 0.0)),
                ));
                Ok((zero, l))
            }
            VertexConditionSpec::Custom { p, l } => {
                if p.shape() != (d, d) || l.shape() != (d, d) {
                    return Err(Error::DimensionMismatch(format!(
                        "custom block shapes {:?}, {:?} for a vertex of degree {d}",
                        p.shape(),
                        l.shape()
                    )));
                }
                check_pair(p, l)?;
                Ok((p.clone(), l.clone()))
            }
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_pair(p: &CMatrix, l: &CMatrix) -> Result<()> {
    let n = p.nrows();
    if max_abs(&(p - p.adjoint())) > MATRIX_TOL {
        return Err(Error::InvalidConditions("P is not self-adjoint".into()));
    }
    if max_abs(&(p * p - p)) > MATRIX_TOL {
        return Err(Error::InvalidConditions("P is not idempotent".into()));
    }
    if max_abs(&(l - l.adjoint())) > MATRIX_TOL {
        return Err(Error::InvalidConditions("L is not self-adjoint".into()));
    }
    let q = CMatrix::identity(n, n) - p;
    if max_abs(&(&q * l * &q - l)) > MATRIX_TOL {
        return Err(Error::InvalidConditions(
            "L does not act on ker P only (P⊥LP⊥ ≠ L)".into(),
        ));
    }
    Ok(())
}

/// Global `(P, L)` on the `2E`-dimensional boundary-value space.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    p: CMatrix,
    l: CMatrix,
}

impl BoundaryConditions {
    pub fn new(p: CMatrix, l: CMatrix) -> Result<Self> {
        if !p.is_square() || p.shape() != l.shape() {
            return Err(Error::DimensionMismatch(format!(
                "P is {:?} and L is {:?}",
                p.shape(),
                l.shape()
            )));
        }
        check_pair(&p, &l)?;
        Ok(Self { p, l })
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// True when every entry of `P` and `L` is real.
    pub fn is_real(&self) -> bool {
        self.p.iter().chain(self.l.iter()).all(|z| z.im == 0.0)
    }

    /// Largest eigenvalue of `L` (zero when `L = 0`).
    pub fn l_max(&self) -> f64 {
        self.l
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// `(P, L/η)`: the conditions that make `scale_graph(g, η)` unitarily
    /// equivalent to `η⁻²` times the original operator.
    pub fn scaled(&self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::param("eta", format!("must be positive, got {eta}")));
        }
        Ok(Self {
            p: self.p.clone(),
            l: self.l.unscale(eta),
        })
    }
}

pub fn assemble_conditions(
    graph: &MetricGraph,
    specs: &[VertexConditionSpec],
) -> Result<BoundaryConditions> {
    if specs.len() != graph.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "{} vertex specs for {} vertices",
            specs.len(),
            graph.n_vertices()
        )));
    }
    let n = 2 * graph.n_edges();
    let mut p = CMatrix::zeros(n, n);
    let mut l = CMatrix::zeros(n, n);
    let mut covered = 0;
    for (v, spec) in specs.iter().enumerate() {
        let ends = graph.incident_ends(v);
        if ends.is_empty() {
            continue;
        }
        covered += ends.len();
        let (pv, lv) = spec.blocks(ends.len())?;
        for (a, &i) in ends.iter().enumerate() {
            for (b, &j) in ends.iter().enumerate() {
                p[(i, j)] = pv[(a, b)];
                l[(i, j)] = lv[(a, b)];
            }
        }
    }
    debug_assert_eq!(covered, n);
    BoundaryConditions::new(p, l)
}
