//! Lattice graphs, DOT rendering and serialized records.
//!
//! Every JSON document is wrapped as `{"schema": "darklattice/1", "kind":
//! .., "data": ..}`. Fields appear in declaration order and floats use the
//! shortest representation that round-trips.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{Sector, SubspaceBasis, SubspaceSpec};
use crate::darkstates::{DarkStateSet, Label};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::hamiltonian::{channels, BlockHamiltonian, Frame, ModelParams};

pub const SCHEMA: &str = "darklattice/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Node {
    pub state: String,
    pub sector: Sector,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub upper: usize,
    pub lower: usize,
    pub amplitude: f64,
    /// 1-based mode label.
    pub mode: usize,
}

/// Fock states as nodes (upper first) and nonzero couplings as edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeGraph {
    pub spec: SubspaceSpec,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

pub fn build_lattice_graph(bh: &BlockHamiltonian, basis: &SubspaceBasis) -> Result<LatticeGraph> {
    if bh.spec != basis.spec() {
        return Err(Error::DimensionMismatch("Hamiltonian and basis describe different subspaces".into()));
    }
    let mut nodes = Vec::with_capacity(basis.len());
    for (state, energy) in basis.states(Sector::Upper).into_iter().zip(&bh.upper) {
        nodes.push(Node { state: state.to_string(), sector: Sector::Upper, energy: *energy });
    }
    for (state, energy) in basis.states(Sector::Lower).into_iter().zip(&bh.lower) {
        nodes.push(Node { state: state.to_string(), sector: Sector::Lower, energy: *energy });
    }
    let edges = channels(basis)
        .into_iter()
        .filter_map(|ch| {
            let amplitude = bh.coupling[(ch.upper, ch.lower)];
            (amplitude != 0.0).then_some(Edge { upper: ch.upper, lower: ch.lower, amplitude, mode: ch.mode + 1 })
        })
        .collect();
    Ok(LatticeGraph { spec: bh.spec, nodes, edges })
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..digits as i32).contains(&exp) {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn to_dot(graph: &LatticeGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "digraph fsl_N{}_n{} {{",
        graph.spec.modes, graph.spec.excitations
    );
    out.push_str("  edge [dir=none];\n");
    let upper = graph.nodes.iter().filter(|n| n.sector == Sector::Upper).count();
    for (i, node) in graph.nodes.iter().enumerate() {
        let (id, shape, color) = match node.sector {
            Sector::Upper => (format!("u{i}"), "box", "red"),
            Sector::Lower => (format!("l{}", i - upper), "circle", "blue"),
        };
        let _ = writeln!(out, "  {id} [label=\"{}\", shape={shape}, color={color}];", node.state);
    }
    for e in &graph.edges {
        let _ = writeln!(
            out,
            "  u{} -> l{} [label=\"{}\", mode={}];",
            e.upper,
            e.lower,
            format_significant(e.amplitude, 6),
            e.mode
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    kind: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct OwnedEnvelope<T> {
    schema: String,
    kind: String,
    data: T,
}

/// Wrap any serializable record in the versioned envelope.
pub fn to_json<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { schema: SCHEMA, kind, data: value })?;
    s.push('\n');
    Ok(s)
}

/// Parse an envelope, checking schema and kind.
pub fn from_json<T: for<'de> Deserialize<'de>>(kind: &str, text: &str) -> Result<T> {
    let env: OwnedEnvelope<T> = serde_json::from_str(text)?;
    if env.schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported schema '{}'", env.schema)));
    }
    if env.kind != kind {
        return Err(Error::Parse(format!("expected kind '{kind}', found '{}'", env.kind)));
    }
    Ok(env.data)
}

/// Dense matrix in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix declares {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianRecord {
    pub spec: SubspaceSpec,
    pub frame: Frame,
    pub params: ModelParams,
    pub upper_states: Vec<String>,
    pub lower_states: Vec<String>,
    pub upper_diagonal: Vec<f64>,
    pub lower_diagonal: Vec<f64>,
    pub coupling: MatrixJson,
}

impl HamiltonianRecord {
    pub fn new(bh: &BlockHamiltonian, basis: &SubspaceBasis) -> Self {
        let names = |s: Sector| basis.states(s).iter().map(|x| x.to_string()).collect();
        Self {
            spec: bh.spec,
            frame: bh.frame,
            params: bh.params.clone(),
            upper_states: names(Sector::Upper),
            lower_states: names(Sector::Lower),
            upper_diagonal: bh.upper.clone(),
            lower_diagonal: bh.lower.clone(),
            coupling: MatrixJson::from(&bh.coupling),
        }
    }

    pub fn to_hamiltonian(&self) -> Result<BlockHamiltonian> {
        Ok(BlockHamiltonian {
            spec: self.spec,
            params: self.params.clone(),
            frame: self.frame,
            upper: self.upper_diagonal.clone(),
            lower: self.lower_diagonal.clone(),
            coupling: self.coupling.to_matrix()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub state: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarkVectorRecord {
    pub label: Label,
    pub coefficients: Vec<Coefficient>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarkStateRecord {
    pub spec: SubspaceSpec,
    pub count: usize,
    pub normalized: bool,
    pub vectors: Vec<DarkVectorRecord>,
}

impl DarkStateRecord {
    pub fn new(ds: &DarkStateSet, basis: &SubspaceBasis) -> Result<Self> {
        if ds.vectors.dim != basis.lower_len() {
            return Err(Error::DimensionMismatch("dark vectors do not match the lower basis".into()));
        }
        let names: Vec<String> = basis.states(Sector::Lower).iter().map(|s| s.to_string()).collect();
        let vectors = (0..ds.len())
            .map(|i| DarkVectorRecord {
                label: ds.labels[i],
                coefficients: names
                    .iter()
                    .zip(ds.vectors.columns.column(i).iter())
                    .map(|(state, value)| Coefficient { state: state.clone(), value: *value })
                    .collect(),
            })
            .collect();
        Ok(Self { spec: ds.spec, count: ds.len(), normalized: ds.normalized, vectors })
    }
}

/// Trajectory table: time, `|amplitude|^2` per basis state, norm and an
/// optional dark overlap column.
pub fn trajectory_csv(traj: &Trajectory, basis: &SubspaceBasis, dark_overlap: Option<&[f64]>) -> Result<String> {
    if traj.spec != basis.spec() {
        return Err(Error::DimensionMismatch("trajectory and basis describe different subspaces".into()));
    }
    let mut out = String::from("time");
    for label in basis.labels() {
        let _ = write!(out, ",\"{label}\"");
    }
    out.push_str(",norm,dark_overlap\n");
    for (k, (t, psi)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = write!(out, "{t}");
        let mut total = 0.0;
        for z in psi.iter() {
            let p = z.norm_sqr();
            total += p;
            let _ = write!(out, ",{p}");
        }
        let _ = write!(out, ",{}", total.sqrt());
        match dark_overlap.and_then(|d| d.get(k)) {
            Some(d) => {
                let _ = writeln!(out, ",{d}");
            }
            None => out.push_str(",\n"),
        }
    }
    Ok(out)
}
