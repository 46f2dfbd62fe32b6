//! JSON instance documents.
//!
//! Three shapes are accepted, distinguished by the `model` tag:
//!
//! ```text
//! {"model":"spin","q":Q,"vertices":[{"lambda":[..]},..],"edges":[{"u":0,"v":1,"A":[[..],..]},..]}
//! {"model":"ising","beta":B,"fields":[[a,b],..],"edges":[[u,v],..]}
//! {"model":"coloring","q":Q,"n":N,"edges":[[u,v],..]}
//! ```
//!
//! For `spin` edges, row `i` column `j` of `A` weighs spin `i` at `u` against
//! spin `j` at `v`, as written in the document. Vertex order fixes the scan
//! order.

use serde::{Deserialize, Serialize};

use super::{build_ising, ColoringInstance, Graph, Instance, SpinSystem};
use crate::error::LoadError;

#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
enum Document {
    Spin {
        q: usize,
        vertices: Vec<VertexDoc>,
        edges: Vec<EdgeDoc>,
    },
    Ising {
        beta: f64,
        fields: Vec<(f64, f64)>,
        edges: Vec<(usize, usize)>,
    },
    Coloring {
        q: usize,
        edges: Vec<(usize, usize)>,
        n: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    lambda: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    u: usize,
    v: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| {
            a.iter()
                .map(|row| row.get(j).copied().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

/// Parses an instance document. Warnings (e.g. an Ising β outside the
/// efficient window) are not errors and are dropped here; use the builders
/// directly to see them.
pub fn load_instance(text: &str) -> Result<Instance, LoadError> {
    let doc: Document = serde_json::from_str(text)?;
    Ok(match doc {
        Document::Spin { q, vertices, edges } => {
            let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.u, e.v)).collect();
            let graph = Graph::from_edges(vertices.len(), &pairs)?;
            let fields = vertices.into_iter().map(|v| v.lambda).collect();
            let mats = edges
                .into_iter()
                .map(|e| if e.u < e.v { e.a } else { transpose(&e.a) })
                .collect();
            Instance::Spin(SpinSystem::new(graph, q, fields, mats)?)
        }
        Document::Ising {
            beta,
            fields,
            edges,
        } => {
            let graph = Graph::from_edges(fields.len(), &edges)?;
            let (sys, _warnings) = build_ising(graph, beta, &fields)?;
            Instance::Spin(sys)
        }
        Document::Coloring { q, edges, n } => {
            let graph = Graph::from_edges(n, &edges)?;
            Instance::Coloring(ColoringInstance::new(graph, q)?)
        }
    })
}

/// Serializes an instance. Spin systems are always written in the general
/// `spin` form with canonically oriented edges.
pub fn to_document(inst: &Instance) -> String {
    let doc = match inst {
        Instance::Spin(sys) => {
            let q = sys.q();
            Document::Spin {
                q,
                vertices: (0..sys.n())
                    .map(|v| VertexDoc {
                        lambda: sys.field(v).to_vec(),
                    })
                    .collect(),
                edges: sys
                    .graph()
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(id, &(u, v))| EdgeDoc {
                        u,
                        v,
                        a: sys.edge_matrix(id).chunks(q).map(<[f64]>::to_vec).collect(),
                    })
                    .collect(),
            }
        }
        Instance::Coloring(c) => Document::Coloring {
            q: c.q(),
            edges: c.graph().edges().to_vec(),
            n: c.n(),
        },
    };
    serde_json::to_string(&doc).expect("documents contain only finite numbers")
}
