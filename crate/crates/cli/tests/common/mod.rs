#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qgraph_core::graph::VertexConditionSpec as V;
use qgraph_core::sparse::{eigen_below, EigenOptions, SymCsr};
use qgraph_core::{assemble_conditions, BoundaryConditions, CMatrix, MetricGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Lumped-mass P1 discretisation of the graph Laplacian for local vertex
/// conditions, with `n0[e]·2^level` cells on edge `e`.
pub fn fd_graph_levels(graph: &MetricGraph, specs: &[V], n0: &[usize], level: u32, limit: f64) -> Vec<f64> {
    let ne = graph.n_edges();
    let mut end_dof: Vec<Option<usize>> = vec![None; 2 * ne];
    let mut next = 0;
    let mut diag: Vec<(usize, f64)> = Vec::new();
    for (v, spec) in specs.iter().enumerate() {
        let ends = graph.incident_ends(v);
        match spec {
            V::Dirichlet => {}
            V::Kirchhoff | V::Delta(_) => {
                for &e in &ends {
                    end_dof[e] = Some(next);
                }
                if let V::Delta(c) = spec {
                    diag.push((next, *c));
                }
                next += 1;
            }
            V::Robin(vals) => {
                for (&e, &r) in ends.iter().zip(vals) {
                    end_dof[e] = Some(next);
                    diag.push((next, -r));
                    next += 1;
                }
            }
            V::Custom { .. } => panic!("custom blocks are not discretised"),
        }
    }
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut mass: Vec<f64> = vec![0.0; next];
    for (e, edge) in graph.edges().iter().enumerate() {
        let n = n0[e] << level;
        let h = edge.length / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(end_dof[e]);
        for _ in 1..n {
            nodes.push(Some(next));
            mass.push(0.0);
            next += 1;
        }
        nodes.push(end_dof[ne + e]);
        for c in 0..n {
            let (a, b) = (nodes[c], nodes[c + 1]);
            for x in [a, b].into_iter().flatten() {
                trip.push((x, x, 1.0 / h));
                mass[x] += 0.5 * h;
            }
            if let (Some(a), Some(b)) = (a, b) {
                trip.push((a, b, -1.0 / h));
                trip.push((b, a, -1.0 / h));
            }
        }
    }
    for (i, c) in diag {
        trip.push((i, i, c));
    }
    let scaled: Vec<(usize, usize, f64)> = trip
        .into_iter()
        .map(|(i, j, v)| (i, j, v / (mass[i] * mass[j]).sqrt()))
        .collect();
    let a = SymCsr::from_triplets(next, &scaled);
    eigen_below(&a, limit, &EigenOptions::default()).unwrap().values
}

pub struct RandomGraph {
    pub graph: MetricGraph,
    pub specs: Vec<V>,
    pub bc: BoundaryConditions,
}

fn random_condition(rng: &mut ChaCha8Rng, degree: usize) -> V {
    match rng.random_range(0..4) {
        0 => V::Dirichlet,
        1 => V::Kirchhoff,
        2 => V::Delta(rng.random_range(-2.0..2.0)),
        _ => V::Robin((0..degree).map(|_| rng.random_range(-1.5..1.5)).collect()),
    }
}

/// Connected graph with at most four edges, random lengths and mixed local conditions.
pub fn random_graph(rng: &mut ChaCha8Rng) -> RandomGraph {
    let ne = rng.random_range(1..=4usize);
    let nv = rng.random_range(2..=ne + 1);
    let mut triples = Vec::new();
    // a spanning tree first, then extra edges (possibly parallel)
    for v in 1..nv {
        let u = rng.random_range(0..v);
        triples.push((u, v, rng.random_range(0.5..2.0)));
    }
    while triples.len() < ne {
        let u = rng.random_range(0..nv);
        let mut v = rng.random_range(0..nv);
        if v == u {
            v = (u + 1) % nv;
        }
        triples.push((u, v, rng.random_range(0.5..2.0)));
    }
    let graph = MetricGraph::from_triples(nv, &triples).unwrap();
    let specs: Vec<V> = (0..nv).map(|v| random_condition(rng, graph.degree(v))).collect();
    let bc = assemble_conditions(&graph, &specs).unwrap();
    RandomGraph { graph, specs, bc }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// `P` the projector onto the span of `r` random orthonormal vectors and
/// `L = P⊥ H P⊥` for a random Hermitian `H`.
pub fn random_conditions(rng: &mut ChaCha8Rng, n: usize) -> BoundaryConditions {
    let q = gaussian_matrix(rng, n).qr().q();
    let r = rng.random_range(0..=n);
    let cols = q.columns(0, r).into_owned();
    let p = &cols * cols.adjoint();
    let pp = CMatrix::identity(n, n) - &p;
    let g = gaussian_matrix(rng, n).scale(rng.random_range(0.1..5.0));
    let h = (&g + g.adjoint()).scale(0.5);
    let mut l = &pp * h * &pp;
    // exact symmetry after rounding
    l = (&l + l.adjoint()).scale(0.5);
    let mut p = p;
    p = (&p + p.adjoint()).scale(0.5);
    BoundaryConditions::new(p, l).unwrap()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
