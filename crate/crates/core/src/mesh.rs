//! Structured triangulation of the unit square.
//!
//! The mesh is a Cartesian grid of `m x m` cells split into triangles with
//! alternating diagonals: in cell `(i, j)` the diagonal runs bottom-left to
//! top-right when `i + j` is even, top-left to bottom-right otherwise. Nodes
//! are ordered lexicographically, `index = j * (m + 1) + i`, so the layout is
//! deterministic and uniform cell blocks map directly onto subdomains.
//!
//! Boundary classification follows the wave-guide model problem: the
//! vertical sides `x = 0` and `x = 1` carry Dirichlet conditions, the
//! horizontal sides `y = 0` and `y = 1` carry Robin conditions. Corner nodes
//! are tagged Dirichlet.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Dirichlet,
    Robin,
}

/// An undirected mesh edge with its adjacent triangles.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint node indices, `nodes.0 < nodes.1`.
    pub nodes: (usize, usize),
    /// Adjacent triangles; boundary edges have exactly one.
    pub triangles: (usize, Option<usize>),
    /// Set for boundary edges only.
    pub boundary: Option<BoundaryTag>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    /// Grid resolution; the mesh spacing is `h = 1 / m`.
    pub resolution: usize,
    /// Node coordinates in `[0, 1]^2`, lexicographic by (row, column).
    pub nodes: Vec<(f64, f64)>,
    /// Triangles as node index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Per-node boundary classification.
    pub node_kind: Vec<NodeKind>,
    /// All mesh edges; `tri_edges[t]` indexes into this list.
    pub edges: Vec<Edge>,
    /// The three edge ids of each triangle.
    pub tri_edges: Vec<[usize; 3]>,
    /// Triangles incident to each node.
    pub node_triangles: Vec<Vec<usize>>,
}

impl Mesh {
    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Node index of the grid point `(i, j)`.
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.resolution + 1) + i
    }

    pub fn centroid(&self, tri: usize) -> (f64, f64) {
        let [a, b, c] = self.triangles[tri];
        let (xa, ya) = self.nodes[a];
        let (xb, yb) = self.nodes[b];
        let (xc, yc) = self.nodes[c];
        ((xa + xb + xc) / 3.0, (ya + yb + yc) / 3.0)
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangles[tri];
        let (xa, ya) = self.nodes[a];
        let (xb, yb) = self.nodes[b];
        let (xc, yc) = self.nodes[c];
        0.5 * ((xb - xa) * (yc - ya) - (xc - xa) * (yb - ya))
    }

    /// Boundary edges with their tags.
    pub fn boundary_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.boundary.is_some())
    }

    /// Plain-text dump: one record per line, `v x y`, `t i j k`,
    /// `e i j TAG`.
    pub fn dump<W: Write>(&self, out: &mut W) -> Result<()> {
        for &(x, y) in &self.nodes {
            writeln!(out, "v {x:.17} {y:.17}")?;
        }
        for t in &self.triangles {
            writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
        }
        for e in self.boundary_edges() {
            let tag = match e.boundary.unwrap() {
                BoundaryTag::Dirichlet => "DIRICHLET",
                BoundaryTag::Robin => "ROBIN",
            };
            writeln!(out, "e {} {} {tag}", e.nodes.0, e.nodes.1)?;
        }
        Ok(())
    }
}

/// Wave number matched to the mesh so that `k^3 h^2 = 2 pi / 10` stays
/// fixed, keeping the discretisation pollution-free as `k` grows.
pub fn wavenumber_for_resolution(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidResolution(m));
    }
    let m = m as f64;
    Ok((2.0 * std::f64::consts::PI / 10.0 * m * m).cbrt())
}

/// Build the structured triangulation of the unit square.
pub fn build_unit_square_mesh(m: usize) -> Result<Mesh> {
    if m < 2 {
        return Err(Error::InvalidResolution(m));
    }
    let h = 1.0 / m as f64;
    let np = m + 1;
    let mut nodes = Vec::with_capacity(np * np);
    let mut node_kind = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            nodes.push((i as f64 * h, j as f64 * h));
            // corners count as Dirichlet: the x = 0, 1 sides win
            let kind = if i == 0 || i == m {
                NodeKind::Dirichlet
            } else if j == 0 || j == m {
                NodeKind::Robin
            } else {
                NodeKind::Interior
            };
            node_kind.push(kind);
        }
    }

    let node_id = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let v00 = node_id(i, j);
            let v10 = node_id(i + 1, j);
            let v01 = node_id(i, j + 1);
            let v11 = node_id(i + 1, j + 1);
            if (i + j) % 2 == 0 {
                // diagonal bottom-left to top-right
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                // diagonal top-left to bottom-right
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }

    // edge table: sorted endpoint pair -> adjacent triangles
    let mut edge_ids = std::collections::HashMap::with_capacity(3 * m * m + 2 * m);
    let mut edges: Vec<Edge> = Vec::with_capacity(3 * m * m + 2 * m);
    let mut tri_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut ids = [0usize; 3];
        for (slot, (a, b)) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
            .into_iter()
            .enumerate()
        {
            let key = if a < b { (a, b) } else { (b, a) };
            let id = *edge_ids.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    nodes: key,
                    triangles: (t, None),
                    boundary: None,
                });
                edges.len() - 1
            });
            if edges[id].triangles.0 != t {
                edges[id].triangles.1 = Some(t);
            }
            ids[slot] = id;
        }
        tri_edges.push(ids);
    }

    // boundary tags from node positions: an edge with both endpoints on the
    // same side of the square is a boundary edge of that side
    for edge in edges.iter_mut() {
        if edge.triangles.1.is_some() {
            continue;
        }
        let (a, b) = edge.nodes;
        let (ia, ja) = (a % np, a / np);
        let (ib, jb) = (b % np, b / np);
        edge.boundary = if (ia == 0 && ib == 0) || (ia == m && ib == m) {
            Some(BoundaryTag::Dirichlet)
        } else if (ja == 0 && jb == 0) || (ja == m && jb == m) {
            Some(BoundaryTag::Robin)
        } else {
            unreachable!("single-triangle edge off the boundary")
        };
    }

    let mut node_triangles = vec![Vec::new(); nodes.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            node_triangles[v].push(t);
        }
    }

    Ok(Mesh {
        resolution: m,
        nodes,
        triangles,
        node_kind,
        edges,
        tri_edges,
        node_triangles,
    })
}
