//! Mesh decompositions: uniform cell blocks, recursive graph bisection, and
//! overlap extension with restriction operators and a partition of unity.
//!
//! Subdomains are element sets. The non-overlapping owned sets partition the
//! mesh exactly; overlap is added in rounds, each round appending every
//! element that shares a node with the current set (one round per two layers
//! of overlap width, so the minimal width 2 is a single round). Dof index
//! lists define the restriction operators; the partition-of-unity diagonals
//! are constructed so that the weighted restrictions sum to the identity
//! exactly in floating point.

use crate::assembly::dof_map;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionOfUnityKind {
    /// `D_s(j) = 1 / #(subdomains containing j)`.
    Multiplicity,
    /// `D_s(j) = 1` on dofs whose node the subdomain owns, else 0.
    Ownership,
    /// Continuous piecewise-linear weights: zero on the subdomain boundary,
    /// ramping linearly (by node layers) to one across the overlap, then
    /// normalised so the weights sum to one. This is the shape classical
    /// overlapping-Schwarz implementations interpolate onto the mesh.
    Pyramid,
}

#[derive(Debug, Clone)]
pub struct Subdomain {
    /// Elements of the non-overlapping part, sorted.
    pub owned_elements: Vec<usize>,
    /// Elements of the overlapping subdomain, sorted.
    pub elements: Vec<usize>,
    /// Global dofs of the subdomain, sorted ascending; defines the
    /// restriction operator.
    pub dofs: Vec<usize>,
    /// Partition-of-unity diagonal, aligned with `dofs`.
    pub pou: Vec<f64>,
    /// Interface dofs (local indices into `dofs`): on the subdomain
    /// boundary but not on the domain boundary.
    pub interface: Vec<usize>,
    /// Interior dofs (local indices): everything not on the interface.
    pub interior: Vec<usize>,
    /// Overlap dofs (local indices): shared with at least one other
    /// subdomain.
    pub overlap: Vec<usize>,
}

impl Subdomain {
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub subdomains: Vec<Subdomain>,
    /// Overlap width in element layers (0 before extension, else even >= 2).
    pub overlap_width: usize,
    pub pou_kind: PartitionOfUnityKind,
    /// Owning subdomain of every mesh element.
    pub element_owner: Vec<usize>,
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_overlapping(&self) -> bool {
        self.overlap_width >= 2
    }

    /// Restrict a global vector to subdomain `s`.
    pub fn restrict<T: Copy + Default>(&self, s: usize, global: &[T]) -> Vec<T> {
        self.subdomains[s].dofs.iter().map(|&g| global[g]).collect()
    }

    /// One line per element: `element_id owner_id`.
    pub fn dump<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        for (e, &owner) in self.element_owner.iter().enumerate() {
            writeln!(out, "{e} {owner}")?;
        }
        Ok(())
    }
}

/// Uniform decomposition into `p x q` balanced cell blocks (p columns, q
/// rows). Block boundaries are spaced as evenly as the grid allows, so the
/// blocks are exact when `p` and `q` divide the resolution and differ by at
/// most one cell row or column otherwise.
pub fn uniform_partition(mesh: &Mesh, p: usize, q: usize) -> Result<Decomposition> {
    let m = mesh.resolution;
    if p == 0 || q == 0 || p > m || q > m {
        return Err(Error::InvalidSubdomainCount(p * q));
    }
    let mut owner = vec![0usize; mesh.n_triangles()];
    for j in 0..m {
        for i in 0..m {
            let s = (j * q / m) * p + (i * p / m);
            let cell = j * m + i;
            owner[2 * cell] = s;
            owner[2 * cell + 1] = s;
        }
    }
    finalize(mesh, owner, p * q, 0, PartitionOfUnityKind::Multiplicity)
}

/// Non-uniform decomposition by recursive bisection of the element dual
/// graph (greedy BFS growing plus pairwise-exchange refinement), balanced to
/// within 3 percent.
pub fn graph_bisection_partition(mesh: &Mesh, n: usize) -> Result<Decomposition> {
    let n_elems = mesh.n_triangles();
    if n == 0 || n > n_elems {
        return Err(Error::InvalidSubdomainCount(n));
    }
    // dual graph: elements sharing an edge are adjacent
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_elems];
    for edge in &mesh.edges {
        if let (t1, Some(t2)) = edge.triangles {
            adj[t1].push(t2);
            adj[t2].push(t1);
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }

    let mut owner = vec![0usize; n_elems];
    let all: Vec<usize> = (0..n_elems).collect();
    split_recursive(&all, n, 0, &adj, &mut owner);
    finalize(mesh, owner, n, 0, PartitionOfUnityKind::Multiplicity)
}

/// Recursively split `region` into `parts` pieces, writing owner ids
/// starting at `first_id`.
fn split_recursive(
    region: &[usize],
    parts: usize,
    first_id: usize,
    adj: &[Vec<usize>],
    owner: &mut [usize],
) {
    if parts == 1 {
        for &t in region {
            owner[t] = first_id;
        }
        return;
    }
    let parts_a = parts / 2;
    let parts_b = parts - parts_a;
    let target_a = (region.len() * parts_a + parts / 2) / parts;
    let (side_a, side_b) = bisect(region, target_a, adj);
    split_recursive(&side_a, parts_a, first_id, adj, owner);
    split_recursive(&side_b, parts_b, first_id + parts_a, adj, owner);
}

/// Bisect a region into a part of exactly `target` elements (grown by BFS
/// from a pseudo-peripheral seed) and its complement, then reduce the edge
/// cut by pairwise exchanges that keep both sizes fixed.
fn bisect(region: &[usize], target: usize, adj: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut in_region = std::collections::HashMap::with_capacity(region.len());
    for (pos, &t) in region.iter().enumerate() {
        in_region.insert(t, pos);
    }
    let n = region.len();
    if target == 0 {
        return (Vec::new(), region.to_vec());
    }
    if target >= n {
        return (region.to_vec(), Vec::new());
    }

    // pseudo-peripheral seed: BFS from the lowest element, take the farthest
    let bfs_far = |start: usize| -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        let mut last = start;
        while let Some(t) = queue.pop_front() {
            last = t;
            for &u in &adj[t] {
                if in_region.contains_key(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        last
    };
    let seed = bfs_far(bfs_far(region[0]));

    // grow side A to the exact target size
    let mut side_of = std::collections::HashMap::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    let mut grown = 0usize;
    side_of.insert(seed, true);
    queue.push_back(seed);
    grown += 1;
    while grown < target {
        let t = match queue.pop_front() {
            Some(t) => t,
            None => {
                // disconnected remainder: seed a new component at the lowest
                // unassigned element
                let next = region
                    .iter()
                    .copied()
                    .find(|t| !side_of.contains_key(t))
                    .expect("target below region size");
                side_of.insert(next, true);
                grown += 1;
                queue.push_back(next);
                continue;
            }
        };
        for &u in &adj[t] {
            if grown >= target {
                break;
            }
            if in_region.contains_key(&u) && !side_of.contains_key(&u) {
                side_of.insert(u, true);
                grown += 1;
                queue.push_back(u);
            }
        }
    }
    for &t in region {
        side_of.entry(t).or_insert(false);
    }

    // pairwise-exchange refinement: swap boundary elements while the edge
    // cut strictly decreases
    let gain = |t: usize, side_of: &std::collections::HashMap<usize, bool>| -> i64 {
        let mine = side_of[&t];
        let mut external = 0i64;
        let mut internal = 0i64;
        for &u in &adj[t] {
            if let Some(&other) = side_of.get(&u) {
                if other == mine {
                    internal += 1;
                } else {
                    external += 1;
                }
            }
        }
        external - internal
    };
    for _pass in 0..24 {
        // boundary candidates on each side, deterministic order
        let mut best: Option<(i64, usize, usize)> = None;
        let boundary: Vec<usize> = region
            .iter()
            .copied()
            .filter(|&t| {
                adj[t]
                    .iter()
                    .any(|u| side_of.get(u).is_some_and(|&o| o != side_of[&t]))
            })
            .collect();
        let side_a: Vec<usize> = boundary.iter().copied().filter(|&t| side_of[&t]).collect();
        let side_b: Vec<usize> = boundary.iter().copied().filter(|&t| !side_of[&t]).collect();
        for &a in &side_a {
            let ga = gain(a, &side_of);
            for &b in &side_b {
                let gb = gain(b, &side_of);
                let coupled = if adj[a].contains(&b) { 2 } else { 0 };
                let g = ga + gb - coupled;
                if best.map_or(g > 0, |(bg, ba, bb)| {
                    g > bg || (g == bg && (a, b) < (ba, bb))
                }) && g > 0
                {
                    best = Some((g, a, b));
                }
            }
        }
        match best {
            Some((_, a, b)) => {
                side_of.insert(a, false);
                side_of.insert(b, true);
            }
            None => break,
        }
    }

    let mut part_a: Vec<usize> = region.iter().copied().filter(|t| side_of[t]).collect();
    let mut part_b: Vec<usize> = region.iter().copied().filter(|t| !side_of[t]).collect();

    // local connectivity repair: reunite stray components with the other
    // side when the 3 percent balance budget allows it
    repair_connectivity(&mut part_a, &mut part_b, target, adj);
    repair_connectivity(&mut part_b, &mut part_a, n - target, adj);
    part_a.sort_unstable();
    part_b.sort_unstable();
    (part_a, part_b)
}

/// Move all but the largest connected component of `part` into `other`,
/// provided the balance stays within 3 percent of the target sizes.
fn repair_connectivity(
    part: &mut Vec<usize>,
    other: &mut Vec<usize>,
    target: usize,
    adj: &[Vec<usize>],
) {
    let members: std::collections::HashSet<usize> = part.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut sorted: Vec<usize> = part.clone();
    sorted.sort_unstable();
    for &start in &sorted {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        seen.insert(start);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            for &u in &adj[t] {
                if members.contains(&u) && seen.insert(u) {
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        components.push(comp);
    }
    if components.len() <= 1 {
        return;
    }
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let budget = (target as f64 * 0.03).floor() as usize;
    let mut moved = 0usize;
    let mut keep: Vec<usize> = components[0].clone();
    for comp in &components[1..] {
        if moved + comp.len() <= budget {
            moved += comp.len();
            other.extend_from_slice(comp);
        } else {
            keep.extend_from_slice(comp);
        }
    }
    *part = keep;
}

/// Extend a decomposition to the requested overlap width (`layers` even,
/// at least 2; each increment of 2 adds one round of node-adjacent
/// elements).
pub fn extend_overlap(
    mesh: &Mesh,
    decomposition: &Decomposition,
    layers: usize,
) -> Result<Decomposition> {
    if layers < 2 || layers % 2 != 0 {
        return Err(Error::InvalidOverlap(layers));
    }
    finalize(
        mesh,
        decomposition.element_owner.clone(),
        decomposition.n_subdomains(),
        layers,
        decomposition.pou_kind,
    )
}

/// Recompute the partition of unity with the requested kind.
pub fn build_partition_of_unity(
    mesh: &Mesh,
    decomposition: &Decomposition,
    kind: PartitionOfUnityKind,
) -> Result<Decomposition> {
    if !decomposition.is_overlapping() {
        return Err(Error::NotOverlapping);
    }
    finalize(
        mesh,
        decomposition.element_owner.clone(),
        decomposition.n_subdomains(),
        decomposition.overlap_width,
        kind,
    )
}

/// Layer index of every subdomain dof: 0 on nodes touching an element
/// outside the subdomain, growing by one per node layer inward, capped at
/// `cap`. Computed by multi-source BFS on the submesh node graph. Subdomains
/// with no outside neighbour (a single-subdomain decomposition) plateau at
/// `cap` everywhere.
fn pyramid_layers(
    mesh: &Mesh,
    elements: &[usize],
    dofs: &[usize],
    dof_of_node: &[Option<usize>],
    node_of_dof: &[usize],
    cap: usize,
) -> Vec<f64> {
    let mut inside = vec![false; mesh.n_triangles()];
    for &t in elements {
        inside[t] = true;
    }
    // submesh node adjacency
    let mut adjacency: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for &t in elements {
        let tri = mesh.triangles[t];
        for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
    }
    let mut layer: std::collections::HashMap<usize, usize> = Default::default();
    let mut queue = std::collections::VecDeque::new();
    for (&node, _) in adjacency.iter() {
        if mesh.node_triangles[node].iter().any(|&t| !inside[t]) {
            layer.insert(node, 0);
        }
    }
    let mut sources: Vec<usize> = layer.keys().copied().collect();
    sources.sort_unstable();
    queue.extend(sources);
    while let Some(node) = queue.pop_front() {
        let d = layer[&node];
        if d >= cap {
            continue;
        }
        let neighbours = adjacency.get(&node).cloned().unwrap_or_default();
        for nb in neighbours {
            if !layer.contains_key(&nb) {
                layer.insert(nb, d + 1);
                queue.push_back(nb);
            }
        }
    }
    dofs.iter()
        .map(|&g| {
            let node = node_of_dof[g];
            debug_assert!(dof_of_node[node].is_some());
            layer.get(&node).copied().unwrap_or(cap).min(cap) as f64
        })
        .collect()
}

/// Build the full decomposition state from element ownership: overlap
/// extension, dof lists, interface/interior/overlap splits, and the
/// partition of unity.
fn finalize(
    mesh: &Mesh,
    element_owner: Vec<usize>,
    n_subdomains: usize,
    overlap_width: usize,
    pou_kind: PartitionOfUnityKind,
) -> Result<Decomposition> {
    let (dof_of_node, node_of_dof) = dof_map(mesh);
    let n_dofs = node_of_dof.len();
    let rounds = overlap_width / 2;

    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); n_subdomains];
    for (t, &s) in element_owner.iter().enumerate() {
        owned[s].push(t);
    }

    // overlap extension: one round adds all elements sharing a node
    let mut in_set = vec![usize::MAX; mesh.n_triangles()];
    let mut subdomain_elements: Vec<Vec<usize>> = Vec::with_capacity(n_subdomains);
    for (s, own) in owned.iter().enumerate() {
        let mut elements = own.clone();
        for &t in &elements {
            in_set[t] = s;
        }
        for _ in 0..rounds {
            let mut added = Vec::new();
            for &t in &elements {
                for &v in &mesh.triangles[t] {
                    for &u in &mesh.node_triangles[v] {
                        if in_set[u] != s {
                            in_set[u] = s;
                            added.push(u);
                        }
                    }
                }
            }
            elements.extend(added);
        }
        elements.sort_unstable();
        subdomain_elements.push(elements);
    }

    // dof lists and membership counts
    let mut membership: Vec<Vec<usize>> = vec![Vec::new(); n_dofs]; // dof -> subdomains
    let mut subdomain_dofs: Vec<Vec<usize>> = Vec::with_capacity(n_subdomains);
    let mut node_in_sub = vec![usize::MAX; mesh.n_nodes()];
    for (s, elements) in subdomain_elements.iter().enumerate() {
        let mut dofs = Vec::new();
        for &t in elements {
            for &v in &mesh.triangles[t] {
                if node_in_sub[v] != s {
                    node_in_sub[v] = s;
                    if let Some(g) = dof_of_node[v] {
                        dofs.push(g);
                    }
                }
            }
        }
        dofs.sort_unstable();
        for &g in &dofs {
            membership[g].push(s);
        }
        subdomain_dofs.push(dofs);
    }

    // node ownership for the ownership partition of unity: the lowest
    // subdomain id among owners of incident elements
    let node_owner: Vec<usize> = (0..mesh.n_nodes())
        .map(|v| {
            mesh.node_triangles[v]
                .iter()
                .map(|&t| element_owner[t])
                .min()
                .unwrap_or(usize::MAX)
        })
        .collect();

    // raw weights per subdomain dof, before normalisation
    let weights: Vec<Vec<f64>> = match pou_kind {
        PartitionOfUnityKind::Multiplicity => subdomain_dofs
            .iter()
            .map(|dofs| vec![1.0; dofs.len()])
            .collect(),
        PartitionOfUnityKind::Ownership => subdomain_dofs
            .iter()
            .enumerate()
            .map(|(s, dofs)| {
                dofs.iter()
                    .map(|&g| {
                        if node_owner[node_of_dof[g]] == s {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect(),
        PartitionOfUnityKind::Pyramid => {
            let cap = rounds + 1;
            subdomain_dofs
                .iter()
                .zip(&subdomain_elements)
                .map(|(dofs, elements)| {
                    pyramid_layers(mesh, elements, dofs, &dof_of_node, &node_of_dof, cap)
                })
                .collect()
        }
    };
    // per-dof weight totals; dofs no member claims are split evenly
    let mut total = vec![0.0f64; n_dofs];
    for (dofs, w) in subdomain_dofs.iter().zip(&weights) {
        for (&g, &wg) in dofs.iter().zip(w) {
            total[g] += wg;
        }
    }
    let mut weights = weights;
    for g in 0..n_dofs {
        if total[g] == 0.0 {
            for &s in &membership[g] {
                let pos = subdomain_dofs[s].binary_search(&g).unwrap();
                weights[s][pos] = 1.0;
            }
            total[g] = membership[g].len() as f64;
        }
    }
    // the member with the largest weight (lowest id on ties) takes the
    // normalisation complement so the weights sum to one exactly
    let mut holder: Vec<usize> = vec![usize::MAX; n_dofs];
    let mut holder_weight = vec![f64::NEG_INFINITY; n_dofs];
    for (s, (dofs, w)) in subdomain_dofs.iter().zip(&weights).enumerate() {
        for (&g, &wg) in dofs.iter().zip(w) {
            if wg > holder_weight[g] {
                holder_weight[g] = wg;
                holder[g] = s;
            }
        }
    }
    let pous: Vec<Vec<f64>> = (0..n_subdomains)
        .map(|s| {
            subdomain_dofs[s]
                .iter()
                .enumerate()
                .map(|(local, &g)| {
                    if holder[g] == s {
                        let mut others = 0.0;
                        for &t_sub in &membership[g] {
                            if t_sub != s {
                                let pos = subdomain_dofs[t_sub].binary_search(&g).unwrap();
                                others += weights[t_sub][pos] / total[g];
                            }
                        }
                        1.0 - others
                    } else {
                        weights[s][local] / total[g]
                    }
                })
                .collect()
        })
        .collect();

    let mut subdomains = Vec::with_capacity(n_subdomains);
    for s in 0..n_subdomains {
        let elements = std::mem::take(&mut subdomain_elements[s]);
        let dofs = std::mem::take(&mut subdomain_dofs[s]);

        // interface: interior-kind nodes incident to an element outside the
        // subdomain
        let mut inside = vec![false; mesh.n_triangles()];
        for &t in &elements {
            inside[t] = true;
        }
        let mut interface = Vec::new();
        let mut interior = Vec::new();
        let mut overlap = Vec::new();
        for (local, &g) in dofs.iter().enumerate() {
            let node = node_of_dof[g];
            let on_domain_boundary = mesh.node_kind[node] != NodeKind::Interior;
            let touches_outside = mesh.node_triangles[node].iter().any(|&t| !inside[t]);
            if touches_outside && !on_domain_boundary {
                interface.push(local);
            } else {
                interior.push(local);
            }
            if membership[g].len() > 1 {
                overlap.push(local);
            }
        }

        subdomains.push(Subdomain {
            owned_elements: std::mem::take(&mut owned[s]),
            elements,
            dofs,
            pou: pous[s].clone(),
            interface,
            interior,
            overlap,
        });
    }

    Ok(Decomposition {
        subdomains,
        overlap_width,
        pou_kind,
        element_owner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;

    fn edge_cut(mesh: &Mesh, owner: &[usize]) -> usize {
        mesh.edges
            .iter()
            .filter(|e| {
                e.triangles
                    .1
                    .is_some_and(|t2| owner[e.triangles.0] != owner[t2])
            })
            .count()
    }

    #[test]
    fn uniform_2x2_on_m4() {
        let mesh = build_unit_square_mesh(4).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        assert_eq!(deco.n_subdomains(), 4);
        for sub in &deco.subdomains {
            assert_eq!(sub.owned_elements.len(), 8);
        }
    }

    #[test]
    fn uniform_5x5_on_m100_owns_800_each() {
        let mesh = build_unit_square_mesh(100).unwrap();
        let deco = uniform_partition(&mesh, 5, 5).unwrap();
        assert_eq!(deco.n_subdomains(), 25);
        for sub in &deco.subdomains {
            assert_eq!(sub.owned_elements.len(), 800);
        }
    }

    #[test]
    fn owned_sets_partition_all_elements() {
        let mesh = build_unit_square_mesh(12).unwrap();
        let deco = uniform_partition(&mesh, 3, 2).unwrap();
        let mut seen = vec![false; mesh.n_triangles()];
        for sub in &deco.subdomains {
            for &t in &sub.owned_elements {
                assert!(!seen[t], "element {t} owned twice");
                seen[t] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn uniform_non_dividing_blocks_stay_balanced() {
        let mesh = build_unit_square_mesh(10).unwrap();
        let deco = uniform_partition(&mesh, 3, 2).unwrap();
        assert_eq!(deco.n_subdomains(), 6);
        let sizes: Vec<usize> = deco
            .subdomains
            .iter()
            .map(|s| s.owned_elements.len())
            .collect();
        let total: usize = sizes.iter().sum();
        assert_eq!(total, mesh.n_triangles());
        // 10 cells into 3 columns: 4/3/3; into 2 rows: 5/5
        let max = sizes.iter().max().unwrap();
        let min = sizes.iter().min().unwrap();
        assert!(max - min <= 2 * 10, "sizes {sizes:?}");
        assert!(*max <= 2 * 4 * 5);
    }

    #[test]
    fn graph_single_part_contains_everything() {
        let mesh = build_unit_square_mesh(6).unwrap();
        let deco = graph_bisection_partition(&mesh, 1).unwrap();
        assert_eq!(deco.n_subdomains(), 1);
        assert_eq!(deco.subdomains[0].owned_elements.len(), mesh.n_triangles());
    }

    #[test]
    fn graph_seven_parts_balanced_within_3_percent() {
        let mesh = build_unit_square_mesh(20).unwrap();
        let deco = graph_bisection_partition(&mesh, 7).unwrap();
        let ideal = mesh.n_triangles() as f64 / 7.0;
        for sub in &deco.subdomains {
            let size = sub.owned_elements.len() as f64;
            assert!(
                size <= (ideal.ceil()) * 1.03 + 1.0,
                "part size {size} vs ideal {ideal}"
            );
            assert!(size >= ideal * 0.9 - 2.0);
        }
    }

    #[test]
    fn graph_cut_close_to_uniform_cut() {
        let mesh = build_unit_square_mesh(16).unwrap();
        let uniform = uniform_partition(&mesh, 2, 2).unwrap();
        let graph = graph_bisection_partition(&mesh, 4).unwrap();
        let cut_uniform = edge_cut(&mesh, &uniform.element_owner);
        let cut_graph = edge_cut(&mesh, &graph.element_owner);
        assert!(
            (cut_graph as f64) <= cut_uniform as f64 * 1.2,
            "graph cut {cut_graph} vs uniform {cut_uniform}"
        );
    }

    #[test]
    fn extend_rejects_odd_layers() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        assert!(matches!(
            extend_overlap(&mesh, &deco, 3),
            Err(Error::InvalidOverlap(3))
        ));
        assert!(matches!(
            extend_overlap(&mesh, &deco, 0),
            Err(Error::InvalidOverlap(0))
        ));
    }

    #[test]
    fn single_subdomain_extension_is_a_noop() {
        let mesh = build_unit_square_mesh(6).unwrap();
        let deco = uniform_partition(&mesh, 1, 1).unwrap();
        let ext = extend_overlap(&mesh, &deco, 2).unwrap();
        let sub = &ext.subdomains[0];
        assert_eq!(sub.elements.len(), mesh.n_triangles());
        assert!(sub.interface.is_empty());
        assert!(sub.overlap.is_empty());
    }

    #[test]
    fn minimal_overlap_matches_basis_support_rule() {
        // oracle: the overlapping subdomain is the union of supports of all
        // nodal basis functions whose support touches the owned part
        let mesh = build_unit_square_mesh(8).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        let ext = extend_overlap(&mesh, &deco, 2).unwrap();
        for (s, sub) in ext.subdomains.iter().enumerate() {
            let mut expect: std::collections::BTreeSet<usize> = Default::default();
            for node in 0..mesh.n_nodes() {
                let support = &mesh.node_triangles[node];
                let touches_owned = support.iter().any(|&t| deco.element_owner[t] == s);
                if touches_owned {
                    expect.extend(support.iter().copied());
                }
            }
            let got: std::collections::BTreeSet<usize> = sub.elements.iter().copied().collect();
            assert_eq!(got, expect, "subdomain {s}");
        }
    }

    #[test]
    fn overlap_monotone_in_layers() {
        let mesh = build_unit_square_mesh(32).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        let mut previous: Option<Vec<std::collections::BTreeSet<usize>>> = None;
        for layers in [2usize, 4, 8, 16] {
            let ext = extend_overlap(&mesh, &deco, layers).unwrap();
            let sets: Vec<std::collections::BTreeSet<usize>> = ext
                .subdomains
                .iter()
                .map(|sub| sub.dofs.iter().copied().collect())
                .collect();
            if let Some(prev) = &previous {
                for (small, big) in prev.iter().zip(&sets) {
                    assert!(small.is_subset(big));
                    assert!(small.len() < big.len());
                }
            }
            previous = Some(sets);
        }
    }

    #[test]
    fn partition_of_unity_sums_to_identity_exactly() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        for kind in [
            PartitionOfUnityKind::Multiplicity,
            PartitionOfUnityKind::Ownership,
            PartitionOfUnityKind::Pyramid,
        ] {
            let ext =
                build_partition_of_unity(&mesh, &extend_overlap(&mesh, &deco, 2).unwrap(), kind)
                    .unwrap();
            let n = crate::assembly::dof_map(&mesh).1.len();
            let mut sum = vec![0.0f64; n];
            for sub in &ext.subdomains {
                for (local, &g) in sub.dofs.iter().enumerate() {
                    sum[g] += sub.pou[local];
                }
            }
            for (g, &v) in sum.iter().enumerate() {
                assert!((v - 1.0).abs() <= 1e-15, "{kind:?}: dof {g} sums to {v}");
            }
        }
    }

    #[test]
    fn multiplicity_weights_on_shared_dofs() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let ext = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2).unwrap(), 2).unwrap();
        let mut membership = std::collections::HashMap::<usize, usize>::new();
        for sub in &ext.subdomains {
            for &g in &sub.dofs {
                *membership.entry(g).or_default() += 1;
            }
        }
        for sub in &ext.subdomains {
            for (local, &g) in sub.dofs.iter().enumerate() {
                match membership[&g] {
                    1 => assert_eq!(sub.pou[local], 1.0),
                    2 => assert_eq!(sub.pou[local], 0.5),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn interface_and_interior_partition_the_dofs() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let ext = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2).unwrap(), 2).unwrap();
        for sub in &ext.subdomains {
            assert!(!sub.interface.is_empty());
            let mut all: Vec<usize> = sub
                .interface
                .iter()
                .chain(sub.interior.iter())
                .copied()
                .collect();
            all.sort_unstable();
            let expect: Vec<usize> = (0..sub.dofs.len()).collect();
            assert_eq!(all, expect);
            // with minimal overlap every interface dof is shared
            let overlap: std::collections::HashSet<usize> = sub.overlap.iter().copied().collect();
            for &l in &sub.interface {
                assert!(overlap.contains(&l));
            }
        }
    }

    #[test]
    fn restriction_dofs_are_strictly_sorted() {
        let mesh = build_unit_square_mesh(10).unwrap();
        let ext = extend_overlap(&mesh, &uniform_partition(&mesh, 5, 2).unwrap(), 2).unwrap();
        for sub in &ext.subdomains {
            assert!(sub.dofs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn partition_of_unity_requires_overlap() {
        let mesh = build_unit_square_mesh(6).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        assert!(matches!(
            build_partition_of_unity(&mesh, &deco, PartitionOfUnityKind::Pyramid),
            Err(Error::NotOverlapping)
        ));
    }

    #[test]
    fn decompositions_are_deterministic() {
        let mesh = build_unit_square_mesh(14).unwrap();
        let a = graph_bisection_partition(&mesh, 5).unwrap();
        let b = graph_bisection_partition(&mesh, 5).unwrap();
        assert_eq!(a.element_owner, b.element_owner);
        let ea = extend_overlap(&mesh, &a, 4).unwrap();
        let eb = extend_overlap(&mesh, &b, 4).unwrap();
        for (sa, sb) in ea.subdomains.iter().zip(&eb.subdomains) {
            assert_eq!(sa.dofs, sb.dofs);
            assert_eq!(sa.pou, sb.pou);
        }
    }

    #[test]
    fn owner_grouped_neumann_assembly_recovers_global_matrix() {
        // with zero overlap the element sets partition the mesh, so summing
        // the per-owner Neumann assemblies reproduces the global matrix
        use crate::assembly::{
            assemble_global, assemble_local, InterfaceBc, LocalMatrixRequest, LocalOperator,
        };
        use crate::media::MediumSpec;
        use num_complex::Complex64 as C64;

        let mesh = build_unit_square_mesh(6).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(3.0)).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        let n = system.n();
        let mut sum = vec![vec![C64::default(); n]; n];
        for s in 0..deco.n_subdomains() {
            let local = assemble_local(
                &mesh,
                &system,
                &deco,
                s,
                LocalMatrixRequest {
                    operator: LocalOperator::Helmholtz,
                    interface_bc: InterfaceBc::Neumann,
                },
            )
            .unwrap();
            let dofs = &deco.subdomains[s].dofs;
            for i in 0..local.nrows() {
                let (cols, vals) = local.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    sum[dofs[i]][dofs[j]] += v;
                }
            }
        }
        let scale = system.matrix.max_abs();
        for i in 0..n {
            let (cols, vals) = system.matrix.row(i);
            let mut dense = vec![C64::default(); n];
            for (&j, &v) in cols.iter().zip(vals) {
                dense[j] = v;
            }
            for j in 0..n {
                assert!(
                    (sum[i][j] - dense[j]).norm() <= 1e-13 * scale,
                    "mismatch at ({i}, {j})"
                );
            }
        }
    }
}
