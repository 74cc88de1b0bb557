//! Graph files: JSON with edges, vertex conditions and optional pair interactions.

use std::path::Path;

use num_complex::Complex64;
use qgraph_core::graph::VertexConditionSpec;
use qgraph_core::{assemble_conditions, BoundaryConditions, CMatrix, MetricGraph};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON at line {line}, column {column}: {msg}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {pointer}: {msg}")]
    Schema {
        path: String,
        pointer: String,
        msg: String,
    },
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Clone)]
pub enum PairAlpha {
    Uniform(f64),
    Table(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct GraphFile {
    pub graph: MetricGraph,
    pub bc: BoundaryConditions,
    pub edge_ids: Vec<String>,
    pub vertex_ids: Vec<String>,
    pub alpha: Option<PairAlpha>,
}

struct Ctx<'a> {
    path: &'a str,
}

impl Ctx<'_> {
    fn err(&self, pointer: &str, msg: impl Into<String>) -> InputError {
        InputError::Schema {
            path: self.path.to_string(),
            pointer: if pointer.is_empty() { "/".into() } else { pointer.into() },
            msg: msg.into(),
        }
    }

    fn get<'v>(&self, v: &'v Value, ptr: &str, key: &str) -> Result<&'v Value, InputError> {
        v.get(key).ok_or_else(|| self.err(ptr, format!("missing key \"{key}\"")))
    }

    fn number(&self, v: &Value, ptr: &str) -> Result<f64, InputError> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err(ptr, "expected a finite number"))
    }

    fn array<'v>(&self, v: &'v Value, ptr: &str) -> Result<&'v Vec<Value>, InputError> {
        v.as_array().ok_or_else(|| self.err(ptr, "expected an array"))
    }

    fn id(&self, v: &Value, ptr: &str) -> Result<String, InputError> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(self.err(ptr, "expected a string or integer id")),
        }
    }

    fn complex_matrix(&self, v: &Value, ptr: &str, d: usize) -> Result<CMatrix, InputError> {
        let rows = self.array(v, ptr)?;
        if rows.len() != d {
            return Err(self.err(ptr, format!("expected {d} rows for a vertex of degree {d}")));
        }
        let mut m = CMatrix::zeros(d, d);
        for (i, row) in rows.iter().enumerate() {
            let rp = format!("{ptr}/{i}");
            let cols = self.array(row, &rp)?;
            if cols.len() != d {
                return Err(self.err(&rp, format!("expected {d} entries")));
            }
            for (j, x) in cols.iter().enumerate() {
                let xp = format!("{rp}/{j}");
                m[(i, j)] = match x {
                    Value::Array(pair) if pair.len() == 2 => Complex64::new(
                        self.number(&pair[0], &format!("{xp}/0"))?,
                        self.number(&pair[1], &format!("{xp}/1"))?,
                    ),
                    _ => Complex64::new(self.number(x, &xp)?, 0.0),
                };
            }
        }
        Ok(m)
    }
}

fn pointer_escape(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

pub fn load_graph(path: &Path) -> Result<GraphFile, InputError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: name.clone(),
        source,
    })?;
    parse_graph(&text, &name)
}

pub fn parse_graph(text: &str, name: &str) -> Result<GraphFile, InputError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| InputError::Json {
        path: name.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let cx = Ctx { path: name };
    if !doc.is_object() {
        return Err(cx.err("", "expected an object"));
    }
    if let Some(obj) = doc.as_object() {
        for key in obj.keys() {
            if !matches!(key.as_str(), "edges" | "vertices" | "pair_interactions" | "domain") {
                return Err(cx.err(&format!("/{}", pointer_escape(key)), "unknown key"));
            }
        }
    }

    let vertices = cx.array(cx.get(&doc, "", "vertices")?, "/vertices")?;
    if vertices.is_empty() {
        return Err(cx.err("/vertices", "at least one vertex is required"));
    }
    let mut vertex_ids: Vec<String> = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        let p = format!("/vertices/{i}");
        let id = cx.id(cx.get(v, &p, "id")?, &format!("{p}/id"))?;
        if vertex_ids.contains(&id) {
            return Err(cx.err(&format!("{p}/id"), format!("duplicate vertex id \"{id}\"")));
        }
        vertex_ids.push(id);
    }

    let edges = cx.array(cx.get(&doc, "", "edges")?, "/edges")?;
    if edges.is_empty() {
        return Err(cx.err("/edges", "at least one edge is required"));
    }
    let mut edge_ids: Vec<String> = Vec::new();
    let mut triples = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        let p = format!("/edges/{i}");
        let id = cx.id(cx.get(e, &p, "id")?, &format!("{p}/id"))?;
        if edge_ids.contains(&id) {
            return Err(cx.err(&format!("{p}/id"), format!("duplicate edge id \"{id}\"")));
        }
        let mut ends = [0usize; 2];
        for (slot, key) in ["from", "to"].iter().enumerate() {
            let kp = format!("{p}/{key}");
            let vid = cx.id(cx.get(e, &p, key)?, &kp)?;
            ends[slot] = vertex_ids
                .iter()
                .position(|x| *x == vid)
                .ok_or_else(|| cx.err(&kp, format!("unknown vertex \"{vid}\"")))?;
        }
        let lp = format!("{p}/length");
        let length = cx.number(cx.get(e, &p, "length")?, &lp)?;
        if length <= 0.0 {
            return Err(cx.err(&lp, "length must be positive"));
        }
        edge_ids.push(id);
        triples.push((ends[0], ends[1], length));
    }
    let graph = MetricGraph::from_triples(vertex_ids.len(), &triples)
        .map_err(|e| cx.err("/edges", e.to_string()))?;

    let mut specs = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        let p = format!("/vertices/{i}/condition");
        let c = cx.get(v, &format!("/vertices/{i}"), "condition")?;
        let tp = format!("{p}/type");
        let kind = cx
            .get(c, &p, "type")?
            .as_str()
            .ok_or_else(|| cx.err(&tp, "expected a string"))?;
        let degree = graph.degree(i);
        let spec = match kind {
            "dirichlet" => VertexConditionSpec::Dirichlet,
            "kirchhoff" | "neumann" => VertexConditionSpec::Kirchhoff,
            "delta" => {
                let sp = format!("{p}/strength");
                VertexConditionSpec::Delta(cx.number(cx.get(c, &p, "strength")?, &sp)?)
            }
            "robin" => {
                let vp = format!("{p}/values");
                let vals = cx.array(cx.get(c, &p, "values")?, &vp)?;
                if vals.len() != degree {
                    return Err(cx.err(&vp, format!("expected {degree} values for a vertex of degree {degree}")));
                }
                let nums = vals
                    .iter()
                    .enumerate()
                    .map(|(j, x)| cx.number(x, &format!("{vp}/{j}")))
                    .collect::<Result<Vec<_>, _>>()?;
                VertexConditionSpec::Robin(nums)
            }
            "custom" => {
                let pm = cx.complex_matrix(cx.get(c, &p, "p")?, &format!("{p}/p"), degree)?;
                let lm = cx.complex_matrix(cx.get(c, &p, "l")?, &format!("{p}/l"), degree)?;
                let spec = VertexConditionSpec::Custom { p: pm, l: lm };
                spec.blocks(degree).map_err(|e| cx.err(&p, e.to_string()))?;
                spec
            }
            other => return Err(cx.err(&tp, format!("unknown condition type \"{other}\""))),
        };
        if degree == 0 {
            return Err(cx.err(&format!("/vertices/{i}"), "vertex has no incident edge"));
        }
        specs.push(spec);
    }
    let bc = assemble_conditions(&graph, &specs).map_err(|e| cx.err("/vertices", e.to_string()))?;

    let alpha = match doc.get("pair_interactions") {
        None => None,
        Some(pi) => {
            let p = "/pair_interactions/alpha";
            let a = cx.get(pi, "/pair_interactions", "alpha")?;
            Some(match a {
                Value::Array(rows) => {
                    let ne = graph.n_edges();
                    if rows.len() != ne {
                        return Err(cx.err(p, format!("expected a {ne}×{ne} table")));
                    }
                    let mut t = Vec::with_capacity(ne);
                    for (i, r) in rows.iter().enumerate() {
                        let rp = format!("{p}/{i}");
                        let cols = cx.array(r, &rp)?;
                        if cols.len() != ne {
                            return Err(cx.err(&rp, format!("expected {ne} entries")));
                        }
                        t.push(
                            cols.iter()
                                .enumerate()
                                .map(|(j, x)| cx.number(x, &format!("{rp}/{j}")))
                                .collect::<Result<Vec<_>, _>>()?,
                        );
                    }
                    PairAlpha::Table(t)
                }
                other => PairAlpha::Uniform(cx.number(other, p)?),
            })
        }
    };

    Ok(GraphFile {
        graph,
        bc,
        edge_ids,
        vertex_ids,
        alpha,
    })
}
