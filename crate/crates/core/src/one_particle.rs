//! One-particle spectra from the secular determinant `det(1 - S(k) T(k))`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{total_length, BoundaryConditions, CMatrix, MetricGraph};
use crate::roots::{find_real_roots, RootScanOptions};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Vertex scattering data diagonalised once: `S(k) = -P + W diag(s_j(k)) W*`
/// with `s_j(k) = (ik - μ_j)/(ik + μ_j)` and `μ_j` the eigenvalues of `L` on `ker P`.
#[derive(Debug, Clone)]
pub struct Scattering {
    p: CMatrix,
    w: CMatrix,
    mu: Vec<f64>,
}

impl Scattering {
    pub fn new(bc: &BoundaryConditions) -> Self {
        let n = bc.dim();
        let pe = bc.p().clone().symmetric_eigen();
        let kernel: Vec<usize> = (0..n).filter(|&i| pe.eigenvalues[i] < 0.5).collect();
        let q = CMatrix::from_fn(n, kernel.len(), |r, c| pe.eigenvectors[(r, kernel[c])]);
        let (w, mu) = if kernel.is_empty() {
            (q, Vec::new())
        } else {
            let lr = q.adjoint() * bc.l() * &q;
            let lr = (&lr + lr.adjoint()).scale(0.5);
            let le = lr.symmetric_eigen();
            let scale = le.eigenvalues.iter().fold(1.0f64, |a, &m| a.max(m.abs()));
            let mu = le
                .eigenvalues
                .iter()
                .map(|&m| if m.abs() < 1e-13 * scale { 0.0 } else { m })
                .collect();
            (&q * &le.eigenvectors, mu)
        };
        Self {
            p: bc.p().clone(),
            w,
            mu,
        }
    }

    /// Eigenvalues of `L` restricted to `ker P`.
    pub fn kernel_spectrum(&self) -> &[f64] {
        &self.mu
    }

    pub fn at(&self, k: Complex64) -> Result<CMatrix> {
        let mut diag = Vec::with_capacity(self.mu.len());
        for &m in &self.mu {
            let den = I * k + m;
            if den.norm() <= 1e-14 * m.abs().max(1.0) {
                return Err(Error::SingularScattering { re: k.re, im: k.im });
            }
            diag.push((I * k - m) / den);
        }
        let d = CMatrix::from_diagonal(&DVector::from_vec(diag));
        Ok(&self.w * d * self.w.adjoint() - &self.p)
    }
}

pub fn scattering_matrix(bc: &BoundaryConditions, k: Complex64) -> Result<CMatrix> {
    Scattering::new(bc).at(k)
}

/// Metric matrix `T(k)`: anti-diagonal 2×2 blocks of edge phases `e^{ikl_e}`.
pub fn metric_matrix(lengths: &[f64], k: Complex64) -> CMatrix {
    let ne = lengths.len();
    let mut t = CMatrix::zeros(2 * ne, 2 * ne);
    for (e, &l) in lengths.iter().enumerate() {
        let ph = (I * k * l).exp();
        t[(e, ne + e)] = ph;
        t[(ne + e, e)] = ph;
    }
    t
}

#[derive(Debug, Clone)]
pub struct SecularEvaluation {
    pub k: Complex64,
    pub s: CMatrix,
    pub u: CMatrix,
    pub value: Complex64,
}

fn check_dims(graph: &MetricGraph, bc: &BoundaryConditions) -> Result<()> {
    if bc.dim() != 2 * graph.n_edges() {
        return Err(Error::DimensionMismatch(format!(
            "conditions act on {} boundary values, graph has {} edges",
            bc.dim(),
            graph.n_edges()
        )));
    }
    Ok(())
}

pub fn secular_evaluation(
    graph: &MetricGraph,
    bc: &BoundaryConditions,
    k: Complex64,
) -> Result<SecularEvaluation> {
    check_dims(graph, bc)?;
    let s = scattering_matrix(bc, k)?;
    let u = &s * metric_matrix(&graph.lengths(), k);
    let n = u.nrows();
    let value = (CMatrix::identity(n, n) - &u).determinant();
    Ok(SecularEvaluation { k, s, u, value })
}

pub fn secular_value(graph: &MetricGraph, bc: &BoundaryConditions, k: Complex64) -> Result<Complex64> {
    Ok(secular_evaluation(graph, bc, k)?.value)
}

/// Secular function with the scattering data precomputed, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct SecularFunction {
    scattering: Scattering,
    p_plus_l: CMatrix,
    p_perp: CMatrix,
    lengths: Vec<f64>,
}

impl SecularFunction {
    pub fn new(graph: &MetricGraph, bc: &BoundaryConditions) -> Result<Self> {
        check_dims(graph, bc)?;
        let n = bc.dim();
        Ok(Self {
            scattering: Scattering::new(bc),
            p_plus_l: bc.p() + bc.l(),
            p_perp: CMatrix::identity(n, n) - bc.p(),
            lengths: graph.lengths(),
        })
    }

    pub fn value(&self, k: Complex64) -> Result<Complex64> {
        let u = self.scattering.at(k)? * metric_matrix(&self.lengths, k);
        let n = u.nrows();
        Ok((CMatrix::identity(n, n) - u).determinant())
    }

    /// Pole-free form `det((P+L)(1+T) + ik P⊥(1-T)) = det(P+L+ikP⊥) · det(1 - S T)`.
    pub fn entire_value(&self, k: Complex64) -> Complex64 {
        let t = metric_matrix(&self.lengths, k);
        let n = t.nrows();
        let id = CMatrix::identity(n, n);
        let m = &self.p_plus_l * (&id + &t) + (&self.p_perp * (&id - &t)) * (I * k);
        m.determinant()
    }

    /// Real function of `κ` whose positive zeros are `λ = -κ²`.
    pub fn negative_value(&self, kappa: Complex64) -> Complex64 {
        self.entire_value(I * kappa)
    }

    pub fn scattering(&self) -> &Scattering {
        &self.scattering
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Secular,
    Negative,
    ZeroMode,
    Oracle,
    Bethe,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::Secular => "secular",
            Source::Negative => "negative",
            Source::ZeroMode => "zero",
            Source::Oracle => "oracle",
            Source::Bethe => "bethe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    /// `k` for positive eigenvalues, `κ` for negative ones (`λ = -κ²`).
    pub k: f64,
    pub lambda: f64,
    pub multiplicity: usize,
    pub residual: f64,
    pub source: Source,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Eigenvalue>,
    pub window: (f64, f64),
    pub grid: f64,
    pub tol: f64,
    pub total_winding: usize,
    pub refinements: usize,
    pub fallbacks: usize,
    pub warnings: Vec<String>,
}

impl SpectrumResult {
    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    /// Eigenvalues repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
            .collect()
    }
}

fn scan_options(graph: &MetricGraph, grid: f64, tol: f64) -> RootScanOptions {
    let lmax = graph.lengths().into_iter().fold(0.0, f64::max);
    RootScanOptions {
        step: grid,
        height: (0.5 / lmax).min(8.0 * grid),
        tol,
        phase_rate: 2.0 * total_length(graph),
        block_cells: 8,
    }
}

/// All eigenvalues `λ = k²` with `k ∈ (0, k_max]`.
pub fn scan_spectrum(
    graph: &MetricGraph,
    bc: &BoundaryConditions,
    k_max: f64,
    grid: f64,
    tol: f64,
) -> Result<SpectrumResult> {
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(Error::param("k_max", "must be positive and finite"));
    }
    if !(grid > 0.0) || !(tol > 0.0) {
        return Err(Error::param("grid", "grid and tol must be positive"));
    }
    let sf = SecularFunction::new(graph, bc)?;
    let mut warnings = Vec::new();
    let spacing = std::f64::consts::PI / total_length(graph);
    if grid > spacing {
        warnings.push(format!(
            "grid {grid} coarser than mean root spacing {spacing:.3e}"
        ));
    }
    let f = |k: Complex64| {
        sf.value(k)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    let lo = (1e-3 * grid).min(1e-3 * spacing);
    let scan = find_real_roots(&f, lo, k_max, &scan_options(graph, grid, tol))?;
    Ok(SpectrumResult {
        eigenvalues: scan
            .roots
            .iter()
            .map(|r| Eigenvalue {
                k: r.x,
                lambda: r.x * r.x,
                multiplicity: r.multiplicity,
                residual: r.residual,
                source: Source::Secular,
            })
            .collect(),
        window: (0.0, k_max),
        grid,
        tol,
        total_winding: scan.total_winding,
        refinements: scan.refinements,
        fallbacks: scan.fallbacks,
        warnings,
    })
}

/// Negative eigenvalues `λ = -κ²` with `κ ∈ (0, κ_max]`, most negative first.
pub fn negative_spectrum(
    graph: &MetricGraph,
    bc: &BoundaryConditions,
    kappa_max: f64,
) -> Result<Vec<Eigenvalue>> {
    if !(kappa_max > 0.0 && kappa_max.is_finite()) {
        return Err(Error::param("kappa_max", "must be positive and finite"));
    }
    let sf = SecularFunction::new(graph, bc)?;
    // no positive μ means L ≤ 0 on ker P, hence -Δ ≥ 0
    if sf.scattering().kernel_spectrum().iter().all(|&m| m <= 0.0) {
        return Ok(Vec::new());
    }
    let lmin = graph.lengths().into_iter().fold(f64::INFINITY, f64::min);
    let grid = (kappa_max / 400.0).min(0.05 / lmin.max(1e-3)).min(0.05);
    let f = |z: Complex64| sf.negative_value(z);
    let mut opts = scan_options(graph, grid, f64::INFINITY);
    opts.height = opts.height.min(0.25);
    let scan = find_real_roots(&f, 1e-3 * grid, kappa_max, &opts)?;
    let mut out: Vec<Eigenvalue> = scan
        .roots
        .iter()
        .map(|r| Eigenvalue {
            k: r.x,
            lambda: -r.x * r.x,
            multiplicity: r.multiplicity,
            residual: r.residual,
            source: Source::Negative,
        })
        .collect();
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(out)
}

/// Dimension of the eigenspace at `λ = 0`, from the ansatz `ψ_e = a_e + b_e x`.
pub fn zero_mode_multiplicity(graph: &MetricGraph, bc: &BoundaryConditions) -> Result<usize> {
    check_dims(graph, bc)?;
    let ne = graph.n_edges();
    let n = 2 * ne;
    let lens = graph.lengths();
    // columns: a_1..a_E, b_1..b_E
    let mut val = CMatrix::zeros(n, n);
    let mut der = CMatrix::zeros(n, n);
    for e in 0..ne {
        val[(e, e)] = Complex64::new(1.0, 0.0);
        val[(ne + e, e)] = Complex64::new(1.0, 0.0);
        val[(ne + e, ne + e)] = Complex64::new(lens[e], 0.0);
        der[(e, ne + e)] = Complex64::new(1.0, 0.0);
        der[(ne + e, ne + e)] = Complex64::new(-1.0, 0.0);
    }
    let id = CMatrix::identity(n, n);
    let m = (bc.p() + bc.l()) * val + (id - bc.p()) * der;
    let sv = m.singular_values();
    let scale = sv.iter().cloned().fold(0.0, f64::max).max(1.0);
    Ok(sv.iter().filter(|&&s| s <= 1e-10 * scale).count())
}

/// Least-squares slope of the counting function `N(k)` against `k`, and its
/// relative deviation from `𝓛/π`.
pub fn weyl_fit(result: &SpectrumResult, graph: &MetricGraph) -> Result<(f64, f64)> {
    let ks: Vec<f64> = result
        .eigenvalues
        .iter()
        .filter(|e| e.lambda > 0.0)
        .flat_map(|e| std::iter::repeat_n(e.k, e.multiplicity))
        .collect();
    if ks.len() < 30 {
        return Err(Error::Precondition(format!(
            "weyl fit needs at least 30 eigenvalues, got {}",
            ks.len()
        )));
    }
    let n = ks.len() as f64;
    let mx = ks.iter().sum::<f64>() / n;
    let my = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &k) in ks.iter().enumerate() {
        sxy += (k - mx) * ((i + 1) as f64 - my);
        sxx += (k - mx) * (k - mx);
    }
    let slope = sxy / sxx;
    let expected = total_length(graph) / std::f64::consts::PI;
    Ok((slope, (slope - expected).abs() / expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assemble_conditions, scale_graph, VertexConditionSpec as V};
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dirichlet_scattering_is_minus_identity() {
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        for k in [0.3, 2.0, 17.0] {
            let s = scattering_matrix(&bc, c(k)).unwrap();
            assert!(max_abs(&(s + CMatrix::identity(2, 2))) < 1e-15);
        }
    }

    #[test]
    fn kirchhoff_scattering_is_k_independent() {
        for d in 1..=5usize {
            let lens = vec![1.0; d];
            let g = MetricGraph::star(&lens).unwrap();
            let mut specs = vec![V::Dirichlet; d + 1];
            specs[0] = V::Kirchhoff;
            let bc = assemble_conditions(&g, &specs).unwrap();
            let expect = CMatrix::from_fn(d, d, |i, j| {
                c(2.0 / d as f64 - if i == j { 1.0 } else { 0.0 })
            });
            for k in [0.5, 3.0] {
                let s = scattering_matrix(&bc, c(k)).unwrap();
                let block = s.view((0, 0), (d, d)).into_owned();
                assert!(max_abs(&(block - &expect)) < 1e-14);
            }
        }
    }

    #[test]
    fn robin_scattering_scalar() {
        let g = MetricGraph::interval(1.0).unwrap();
        let cr = 1.3;
        let bc = assemble_conditions(&g, &[V::Robin(vec![cr]), V::Dirichlet]).unwrap();
        let k = 0.7;
        let s = scattering_matrix(&bc, c(k)).unwrap();
        let expect = -(c(cr) - I * k) / (c(cr) + I * k);
        assert!((s[(0, 0)] - expect).norm() < 1e-15);
        assert!((s[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(matches!(
            scattering_matrix(&bc, Complex64::new(0.0, cr)),
            Err(Error::SingularScattering { .. })
        ));
    }

    #[test]
    fn dirichlet_interval_secular_closed_form() {
        let l = 1.7;
        let g = MetricGraph::interval(l).unwrap();
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        for k in [0.2, 1.0, 4.4] {
            let v = secular_value(&g, &bc, c(k)).unwrap();
            let expect = c(1.0) - (I * 2.0 * k * l).exp();
            assert!((v - expect).norm() < 1e-14);
        }
        let v = secular_value(&g, &bc, c(3.0 * PI / l)).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn neumann_interval_zeros() {
        let l = 2.0;
        let g = MetricGraph::interval(l).unwrap();
        let bc = assemble_conditions(&g, &[V::Kirchhoff, V::Kirchhoff]).unwrap();
        for n in 1..4 {
            let v = secular_value(&g, &bc, c(n as f64 * PI / l)).unwrap();
            assert!(v.norm() < 1e-13);
        }
        assert_eq!(zero_mode_multiplicity(&g, &bc).unwrap(), 1);
    }

    #[test]
    fn conjugation_symmetry() {
        let g = MetricGraph::from_triples(2, &[(0, 1, 1.0), (0, 1, 1.3), (1, 1, 0.6)]).unwrap();
        let bc = assemble_conditions(&g, &[V::Delta(0.8), V::Kirchhoff]).unwrap();
        for k in [0.4, 2.2, 9.1] {
            let a = secular_value(&g, &bc, c(k)).unwrap();
            let b = secular_value(&g, &bc, c(-k)).unwrap();
            assert!((b - a.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn entire_form_matches_secular_times_factor() {
        let g = MetricGraph::star(&[1.0, 0.7, 1.4]).unwrap();
        let bc =
            assemble_conditions(&g, &[V::Delta(-1.2), V::Dirichlet, V::Robin(vec![0.5]), V::Kirchhoff])
                .unwrap();
        let sf = SecularFunction::new(&g, &bc).unwrap();
        let n = bc.dim();
        for k in [Complex64::new(0.9, 0.1), c(3.3)] {
            let fac = (bc.p() + bc.l() + (CMatrix::identity(n, n) - bc.p()) * (I * k)).determinant();
            let lhs = sf.entire_value(k);
            let rhs = fac * sf.value(k).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn dirichlet_interval_spectrum() {
        let g = MetricGraph::interval(PI).unwrap();
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        let r = scan_spectrum(&g, &bc, 5.5, 0.01, 1e-10).unwrap();
        let ls: Vec<f64> = r.eigenvalues.iter().map(|e| e.lambda).collect();
        assert_eq!(ls.len(), 5);
        for (n, l) in ls.iter().enumerate() {
            let e = ((n + 1) * (n + 1)) as f64;
            assert!((l - e).abs() < 1e-12 * e);
        }
        assert!(r.eigenvalues.iter().all(|e| e.multiplicity == 1));
        assert_eq!(r.total_winding, 5);
        assert_eq!(zero_mode_multiplicity(&g, &bc).unwrap(), 0);
    }

    #[test]
    fn star_has_double_roots_at_n_pi() {
        let g = MetricGraph::star(&[1.0, 1.0, 1.0]).unwrap();
        let bc =
            assemble_conditions(&g, &[V::Kirchhoff, V::Dirichlet, V::Dirichlet, V::Dirichlet])
                .unwrap();
        let r = scan_spectrum(&g, &bc, 10.0, 0.02, 1e-10).unwrap();
        for n in 1..=3 {
            let k = n as f64 * PI;
            let e = r
                .eigenvalues
                .iter()
                .find(|e| (e.k - k).abs() < 1e-6)
                .expect("missing root at nπ");
            assert_eq!(e.multiplicity, 2);
        }
        // remaining roots solve cos(k) = 0 for this star: k = (n + 1/2)π
        for e in r.eigenvalues.iter().filter(|e| e.multiplicity == 1) {
            assert!((e.k / PI - 0.5).fract().abs() < 1e-9 || (e.k / PI - 0.5).fract() > 1.0 - 1e-9);
        }
        assert_eq!(r.count(), r.total_winding);
    }

    #[test]
    fn incommensurate_lengths_are_simple() {
        let g = MetricGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 2f64.sqrt())]).unwrap();
        let bc = assemble_conditions(&g, &[V::Kirchhoff, V::Kirchhoff, V::Kirchhoff]).unwrap();
        let r = scan_spectrum(&g, &bc, 20.0, 0.02, 1e-10).unwrap();
        assert!(r.eigenvalues.iter().all(|e| e.multiplicity == 1));
        assert!(r.count() > 10);
    }

    #[test]
    fn scaled_interval_ground_state() {
        let g = MetricGraph::interval(PI).unwrap();
        let specs = [V::Dirichlet, V::Dirichlet];
        let g2 = scale_graph(&g, 2.0).unwrap();
        let bc = assemble_conditions(&g2, &specs).unwrap();
        let r = scan_spectrum(&g2, &bc, 1.2, 0.01, 1e-10).unwrap();
        assert!((r.eigenvalues[0].lambda - 0.25).abs() < 1e-12);
    }

    /// κ for `κ = c tanh(κ l)` by bisection, the bound state of the Robin/Dirichlet interval.
    fn robin_kappa(cr: f64, l: f64) -> Option<f64> {
        if cr * l <= 1.0 {
            return None;
        }
        let g = |k: f64| k - cr * (k * l).tanh();
        let (mut a, mut b) = (1e-9, cr * 1.0001 + 1.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        Some(0.5 * (a + b))
    }

    #[test]
    fn robin_bound_state() {
        let g = MetricGraph::interval(10.0).unwrap();
        for cr in [0.5, 1.0, 2.0] {
            let bc = assemble_conditions(&g, &[V::Robin(vec![cr]), V::Dirichlet]).unwrap();
            let neg = negative_spectrum(&g, &bc, 5.0).unwrap();
            assert_eq!(neg.len(), 1);
            let kappa = robin_kappa(cr, 10.0).unwrap();
            assert!((neg[0].k - kappa).abs() < 1e-11, "{} vs {kappa}", neg[0].k);
            let rep = assemble_conditions(&g, &[V::Robin(vec![-cr]), V::Dirichlet]).unwrap();
            assert!(negative_spectrum(&g, &rep, 5.0).unwrap().is_empty());
        }
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        assert!(negative_spectrum(&g, &bc, 5.0).unwrap().is_empty());
    }

    #[test]
    fn weak_robin_has_no_bound_state() {
        // c·l < 1: the Dirichlet end wins
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = assemble_conditions(&g, &[V::Robin(vec![0.8]), V::Dirichlet]).unwrap();
        assert!(negative_spectrum(&g, &bc, 5.0).unwrap().is_empty());
        assert_eq!(zero_mode_multiplicity(&g, &bc).unwrap(), 0);
        let bc = assemble_conditions(&g, &[V::Robin(vec![1.0]), V::Dirichlet]).unwrap();
        assert_eq!(zero_mode_multiplicity(&g, &bc).unwrap(), 1);
    }

    #[test]
    fn attractive_delta_star_bound_state() {
        // δ(c) at the center of a Kirchhoff-leaved star with c < 0 binds
        let g = MetricGraph::star(&[5.0, 5.0, 5.0]).unwrap();
        let bc = assemble_conditions(&g, &[V::Delta(-1.5), V::Kirchhoff, V::Kirchhoff, V::Kirchhoff])
            .unwrap();
        let neg = negative_spectrum(&g, &bc, 4.0).unwrap();
        assert_eq!(neg.len(), 1);
        // symmetric bound state cosh(κ(l-x)): 3κ tanh(κl) = -c
        let k = neg[0].k;
        assert!((3.0 * k * (k * 5.0).tanh() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn weyl_slope() {
        let g = MetricGraph::interval(PI).unwrap();
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        let r = scan_spectrum(&g, &bc, 40.5, 0.05, 1e-10).unwrap();
        let (slope, err) = weyl_fit(&r, &g).unwrap();
        assert!((slope - 1.0).abs() < 1e-12);
        assert!(err < 1e-12);
        let short = scan_spectrum(&g, &bc, 5.5, 0.05, 1e-10).unwrap();
        assert!(weyl_fit(&short, &g).is_err());
    }

    #[test]
    fn bad_parameters() {
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = assemble_conditions(&g, &[V::Dirichlet, V::Dirichlet]).unwrap();
        assert!(scan_spectrum(&g, &bc, -1.0, 0.01, 1e-10).is_err());
        assert!(scan_spectrum(&g, &bc, 1.0, 0.0, 1e-10).is_err());
        assert!(negative_spectrum(&g, &bc, 0.0).is_err());
        let g2 = MetricGraph::star(&[1.0, 1.0]).unwrap();
        assert!(secular_value(&g2, &bc, c(1.0)).is_err());
    }
}
