//! P1 finite element assembly: the global Helmholtz system and every local
//! subdomain matrix variant.
//!
//! Dirichlet degrees of freedom are eliminated from the numbering entirely,
//! so all matrices (global and local) act on free dofs only and eigenproblem
//! pencils stay free of artificial identity rows. The weak form contributes
//! per-element stiffness minus `k_e^2` mass, with `k_e` sampled at element
//! centroids, plus an `i k` edge mass on Robin boundary edges whose wave
//! number comes from the adjacent element.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{CooBuilder, CsrMatrix};
use crate::media::{wavenumber_field, MediumSpec};
use crate::mesh::{BoundaryTag, Mesh, NodeKind};
use crate::partition::Decomposition;

/// The assembled global problem.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    /// Helmholtz matrix on free dofs.
    pub matrix: CsrMatrix,
    /// The same bilinear form with `k = 0` everywhere (Laplace), used by the
    /// generalised eigenproblem pencils.
    pub laplace: CsrMatrix,
    /// Point-source load.
    pub rhs: Vec<C64>,
    /// Mesh node -> global dof (`None` for eliminated Dirichlet nodes).
    pub dof_of_node: Vec<Option<usize>>,
    /// Global dof -> mesh node.
    pub node_of_dof: Vec<usize>,
    /// Per-element wave number.
    pub element_wavenumbers: Vec<f64>,
    pub medium: MediumSpec,
    pub resolution: usize,
}

impl GlobalSystem {
    /// Number of free dofs.
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Which local subdomain matrix to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOperator {
    Helmholtz,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceBc {
    /// Plain restriction of the global matrix (local Dirichlet matrix).
    DirichletTrace,
    /// Natural condition on the subdomain interface (local Neumann matrix).
    Neumann,
    /// Impedance condition `i k` on the subdomain interface (local Robin
    /// matrix).
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalMatrixRequest {
    pub operator: LocalOperator,
    pub interface_bc: InterfaceBc,
}

/// Mesh node -> dof maps with Dirichlet nodes eliminated.
pub fn dof_map(mesh: &Mesh) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut dof_of_node = vec![None; mesh.n_nodes()];
    let mut node_of_dof = Vec::new();
    for (node, kind) in mesh.node_kind.iter().enumerate() {
        if *kind != NodeKind::Dirichlet {
            dof_of_node[node] = Some(node_of_dof.len());
            node_of_dof.push(node);
        }
    }
    (dof_of_node, node_of_dof)
}

/// P1 stiffness matrix of one triangle.
pub(crate) fn element_stiffness(coords: [(f64, f64); 3]) -> [[f64; 3]; 3] {
    let [(x0, y0), (x1, y1), (x2, y2)] = coords;
    let area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let b = [y1 - y2, y2 - y0, y0 - y1];
    let c = [x2 - x1, x0 - x2, x1 - x0];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (2.0 * area2);
        }
    }
    k
}

/// P1 mass matrix of one triangle.
pub(crate) fn element_mass(coords: [(f64, f64); 3]) -> [[f64; 3]; 3] {
    let [(x0, y0), (x1, y1), (x2, y2)] = coords;
    let area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0));
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    m
}

/// Assemble the bilinear form over the listed elements into the given dof
/// numbering, with the `i k` boundary term on Robin edges adjacent to those
/// elements. This single routine backs the global matrix (all elements,
/// global dofs) and every local Neumann matrix (subdomain elements, local
/// dofs).
fn assemble_over_elements(
    mesh: &Mesh,
    k_elems: &[f64],
    elements: &[usize],
    dof_index: &dyn Fn(usize) -> Option<usize>,
    n_dofs: usize,
) -> CsrMatrix {
    let mut builder = CooBuilder::with_capacity(n_dofs, n_dofs, 9 * elements.len());
    for &t in elements {
        let tri = mesh.triangles[t];
        let coords = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let stiff = element_stiffness(coords);
        let mass = element_mass(coords);
        let k2 = k_elems[t] * k_elems[t];
        for a in 0..3 {
            let Some(i) = dof_index(tri[a]) else { continue };
            for b in 0..3 {
                let Some(j) = dof_index(tri[b]) else { continue };
                builder.push(i, j, C64::new(stiff[a][b] - k2 * mass[a][b], 0.0));
            }
        }
        // Robin boundary edges carried by this element
        for &e in &mesh.tri_edges[t] {
            let edge = &mesh.edges[e];
            if edge.boundary != Some(BoundaryTag::Robin) {
                continue;
            }
            let k_edge = k_elems[t];
            if k_edge == 0.0 {
                continue;
            }
            push_edge_mass(
                mesh,
                edge.nodes,
                C64::new(0.0, k_edge),
                dof_index,
                &mut builder,
            );
        }
    }
    builder.build()
}

/// Add `coeff * (1D P1 edge mass)` for one edge.
fn push_edge_mass(
    mesh: &Mesh,
    (a, b): (usize, usize),
    coeff: C64,
    dof_index: &dyn Fn(usize) -> Option<usize>,
    builder: &mut CooBuilder,
) {
    let (xa, ya) = mesh.nodes[a];
    let (xb, yb) = mesh.nodes[b];
    let len = ((xb - xa).powi(2) + (yb - ya).powi(2)).sqrt();
    let pair = [a, b];
    for p in 0..2 {
        let Some(i) = dof_index(pair[p]) else {
            continue;
        };
        for q in 0..2 {
            let Some(j) = dof_index(pair[q]) else {
                continue;
            };
            let w = len / 6.0 * if p == q { 2.0 } else { 1.0 };
            builder.push(i, j, coeff * w);
        }
    }
}

/// Assemble the global system: Helmholtz matrix, Laplace companion, and the
/// centre point-source load (which requires an even resolution).
pub fn assemble_global(mesh: &Mesh, medium: &MediumSpec) -> Result<GlobalSystem> {
    medium.validate()?;
    let k_elems = wavenumber_field(medium, mesh)?;
    let (dof_of_node, node_of_dof) = dof_map(mesh);
    let n = node_of_dof.len();
    let all_elements: Vec<usize> = (0..mesh.n_triangles()).collect();
    let index = |node: usize| dof_of_node[node];
    let matrix = assemble_over_elements(mesh, &k_elems, &all_elements, &index, n);
    let zeros = vec![0.0; mesh.n_triangles()];
    let laplace = assemble_over_elements(mesh, &zeros, &all_elements, &index, n);
    let rhs = point_source_load(mesh, &dof_of_node)?;
    Ok(GlobalSystem {
        matrix,
        laplace,
        rhs,
        dof_of_node,
        node_of_dof,
        element_wavenumbers: k_elems,
        medium: *medium,
        resolution: mesh.resolution,
    })
}

/// Unit nodal load at the centre of the domain.
pub fn point_source_load(mesh: &Mesh, dof_of_node: &[Option<usize>]) -> Result<Vec<C64>> {
    let m = mesh.resolution;
    if m % 2 != 0 {
        return Err(Error::OddResolution(m));
    }
    let centre = mesh.node_id(m / 2, m / 2);
    let dof = dof_of_node[centre].expect("centre node is never on the Dirichlet boundary");
    let n = dof_of_node.iter().flatten().count();
    let mut f = vec![C64::default(); n];
    f[dof] = C64::new(1.0, 0.0);
    Ok(f)
}

/// Assemble one local subdomain matrix on the subdomain's dof numbering.
pub fn assemble_local(
    mesh: &Mesh,
    system: &GlobalSystem,
    decomposition: &Decomposition,
    s: usize,
    request: LocalMatrixRequest,
) -> Result<CsrMatrix> {
    if s >= decomposition.n_subdomains() {
        return Err(Error::InvalidSubdomainCount(s));
    }
    let sub = &decomposition.subdomains[s];
    let zeros;
    let k_elems: &[f64] = match request.operator {
        LocalOperator::Helmholtz => &system.element_wavenumbers,
        LocalOperator::Laplace => {
            zeros = vec![0.0; mesh.n_triangles()];
            &zeros
        }
    };

    if request.interface_bc == InterfaceBc::DirichletTrace {
        let global = match request.operator {
            LocalOperator::Helmholtz => &system.matrix,
            LocalOperator::Laplace => &system.laplace,
        };
        return Ok(global.submatrix(&sub.dofs, &sub.dofs));
    }

    // local dof map: global dof -> local index
    let mut local_of_global = vec![usize::MAX; system.n()];
    for (local, &g) in sub.dofs.iter().enumerate() {
        local_of_global[g] = local;
    }
    let index = |node: usize| -> Option<usize> {
        system.dof_of_node[node].and_then(|g| {
            let l = local_of_global[g];
            (l != usize::MAX).then_some(l)
        })
    };
    let mut matrix = assemble_over_elements(mesh, k_elems, &sub.elements, &index, sub.dofs.len());

    if request.interface_bc == InterfaceBc::Robin {
        // impedance term on the subdomain interface; the edge wave number
        // comes from the adjacent element inside the subdomain
        let mut builder = CooBuilder::new(sub.dofs.len(), sub.dofs.len());
        for i in 0..matrix.nrows() {
            let (cols, vals) = matrix.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                builder.push(i, c, v);
            }
        }
        for (edge_id, inside_tri) in interface_edges(mesh, decomposition, s) {
            let k_edge = k_elems[inside_tri];
            if k_edge == 0.0 {
                continue;
            }
            push_edge_mass(
                mesh,
                mesh.edges[edge_id].nodes,
                C64::new(0.0, k_edge),
                &index,
                &mut builder,
            );
        }
        matrix = builder.build();
    }
    Ok(matrix)
}

/// Edges on the interface of subdomain `s` (shared by exactly one inside
/// triangle and one outside triangle), with the inside triangle.
pub(crate) fn interface_edges(
    mesh: &Mesh,
    decomposition: &Decomposition,
    s: usize,
) -> Vec<(usize, usize)> {
    let sub = &decomposition.subdomains[s];
    let mut inside = vec![false; mesh.n_triangles()];
    for &t in &sub.elements {
        inside[t] = true;
    }
    let mut out = Vec::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        let Some(t2) = edge.triangles.1 else { continue };
        let t1 = edge.triangles.0;
        match (inside[t1], inside[t2]) {
            (true, false) => out.push((e, t1)),
            (false, true) => out.push((e, t2)),
            _ => {}
        }
    }
    out
}

/// 1D P1 mass matrix along the interface of subdomain `s`, indexed by the
/// subdomain's interface dof list.
pub fn interface_mass_matrix(
    mesh: &Mesh,
    system: &GlobalSystem,
    decomposition: &Decomposition,
    s: usize,
) -> Result<CsrMatrix> {
    let sub = &decomposition.subdomains[s];
    if sub.interface.is_empty() {
        return Err(Error::EmptyInterface);
    }
    // position of each local dof within the interface list
    let mut pos_of_local = vec![usize::MAX; sub.dofs.len()];
    for (p, &l) in sub.interface.iter().enumerate() {
        pos_of_local[l] = p;
    }
    let mut local_of_global = vec![usize::MAX; system.n()];
    for (local, &g) in sub.dofs.iter().enumerate() {
        local_of_global[g] = local;
    }
    let index = |node: usize| -> Option<usize> {
        system.dof_of_node[node].and_then(|g| {
            let l = local_of_global[g];
            if l == usize::MAX {
                return None;
            }
            let p = pos_of_local[l];
            (p != usize::MAX).then_some(p)
        })
    };
    let nc = sub.interface.len();
    let mut builder = CooBuilder::new(nc, nc);
    for (edge_id, _) in interface_edges(mesh, decomposition, s) {
        push_edge_mass(
            mesh,
            mesh.edges[edge_id].nodes,
            C64::new(1.0, 0.0),
            &index,
            &mut builder,
        );
    }
    Ok(builder.build())
}
