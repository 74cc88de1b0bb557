//! Fixtures shared by the benchmarks.

use qgraph_core::{assemble_conditions, BoundaryConditions, MetricGraph, VertexConditionSpec as V};

/// Star with incommensurate arms, Kirchhoff center and Dirichlet leaves.
pub fn star3() -> (MetricGraph, BoundaryConditions) {
    let g = MetricGraph::star(&[1.0, 2f64.sqrt(), 0.5 * (1.0 + 5f64.sqrt())]).unwrap();
    let bc = assemble_conditions(&g, &[V::Kirchhoff, V::Dirichlet, V::Dirichlet, V::Dirichlet]).unwrap();
    (g, bc)
}

/// Interval of length `l` with an attractive Robin end and a Dirichlet end.
pub fn robin_interval(l: f64, c: f64) -> (MetricGraph, BoundaryConditions) {
    let g = MetricGraph::interval(l).unwrap();
    let bc = assemble_conditions(&g, &[V::Robin(vec![c]), V::Dirichlet]).unwrap();
    (g, bc)
}
