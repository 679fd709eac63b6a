//! Spectral coarse spaces and the deflation operators built from them.
//!
//! Five coarse spaces are available, all assembled column-wise from local
//! eigenvectors weighted by the partition of unity:
//!
//! * interface (DtN): eigenvectors of the interface Schur-complement pencil
//!   against the interface mass matrix, extended into the subdomain by the
//!   discrete Helmholtz extension, with a per-subdomain threshold on the
//!   abscissa derived from the local wave number;
//! * plain, Laplace, mixed Helmholtz/Laplace, and impedance variants of the
//!   whole-subdomain generalised pencils (Neumann or impedance matrix on the
//!   left, partition-of-unity-weighted Dirichlet matrix on the right),
//!   thresholded at a fixed abscissa.
//!
//! The two-level correction uses the deflation form: with the column block
//! `Z`, the coarse operator is `E = Z^H A Z` and the correction operator is
//! `Q = Z E^{-1} Z^H`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_local, interface_mass_matrix, GlobalSystem, InterfaceBc, LocalMatrixRequest,
    LocalOperator,
};
use crate::error::{Error, Result};
use crate::linalg::{
    dense_generalized_eigen, shift_invert_arnoldi, CsrMatrix, DenseMat, FullPivLu, SpectralFilter,
    DEFAULT_EIG_TOL,
};
use crate::mesh::Mesh;
use crate::partition::Decomposition;

/// Threshold rule for the interface (DtN) eigenproblem, applied per
/// subdomain to the local maximum wave number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DtnThresholdRule {
    #[serde(rename = "k")]
    K,
    #[serde(rename = "k^(4/3)")]
    KFourThirds,
    #[serde(rename = "k^(3/2)")]
    KThreeHalves,
}

impl DtnThresholdRule {
    pub fn label(&self) -> &'static str {
        match self {
            DtnThresholdRule::K => "k",
            DtnThresholdRule::KFourThirds => "k^(4/3)",
            DtnThresholdRule::KThreeHalves => "k^(3/2)",
        }
    }
}

/// Abscissa threshold for the DtN selection.
pub fn dtn_threshold(k_s: f64, rule: DtnThresholdRule) -> f64 {
    match rule {
        DtnThresholdRule::K => k_s,
        DtnThresholdRule::KFourThirds => k_s.powf(4.0 / 3.0),
        DtnThresholdRule::KThreeHalves => k_s.powf(1.5),
    }
}

/// Which coarse space to build. `None` disables the second level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoarseSpaceKind {
    None,
    Dtn {
        rule: DtnThresholdRule,
    },
    Geneo {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    DeltaGeneo {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    HGeneo {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    ImpedanceHGeneo {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
}

fn default_threshold() -> f64 {
    0.5
}

impl CoarseSpaceKind {
    pub fn label(&self) -> &'static str {
        match self {
            CoarseSpaceKind::None => "none",
            CoarseSpaceKind::Dtn { .. } => "dtn",
            CoarseSpaceKind::Geneo { .. } => "geneo",
            CoarseSpaceKind::DeltaGeneo { .. } => "delta_geneo",
            CoarseSpaceKind::HGeneo { .. } => "h_geneo",
            CoarseSpaceKind::ImpedanceHGeneo { .. } => "impedance_h_geneo",
        }
    }

    /// Threshold-rule string for reports.
    pub fn rule_label(&self) -> String {
        match self {
            CoarseSpaceKind::None => "-".into(),
            CoarseSpaceKind::Dtn { rule } => rule.label().into(),
            CoarseSpaceKind::Geneo { threshold }
            | CoarseSpaceKind::DeltaGeneo { threshold }
            | CoarseSpaceKind::HGeneo { threshold }
            | CoarseSpaceKind::ImpedanceHGeneo { threshold } => format!("{threshold}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoarseSpaceSpec {
    pub kind: CoarseSpaceKind,
    /// Hard cap on eigenvectors kept per subdomain.
    #[serde(default = "default_max_vectors")]
    pub max_vectors: usize,
    /// Use the conjugate transpose in `E = Z^H A Z` (the plain transpose is
    /// available for cross-checking).
    #[serde(default = "default_true")]
    pub conjugate: bool,
    /// Residual tolerance for accepted eigenpairs.
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    /// Seed for the eigensolver start vectors.
    #[serde(default)]
    pub seed: u64,
}

fn default_max_vectors() -> usize {
    512
}

fn default_true() -> bool {
    true
}

fn default_eig_tol() -> f64 {
    DEFAULT_EIG_TOL
}

impl CoarseSpaceSpec {
    pub fn new(kind: CoarseSpaceKind) -> Self {
        Self {
            kind,
            max_vectors: default_max_vectors(),
            conjugate: true,
            eig_tol: DEFAULT_EIG_TOL,
            seed: 0,
        }
    }
}

/// Per-subdomain record of what the eigensolver selected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubdomainCoarseSummary {
    pub subdomain: usize,
    pub selected: usize,
    pub min_re: f64,
    pub max_re: f64,
}

/// Eigenvectors selected on one subdomain, as subdomain-local vectors.
#[derive(Debug, Clone)]
pub struct LocalSelection {
    pub values: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
}

impl LocalSelection {
    fn empty() -> Self {
        Self {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One global coarse column: a partition-of-unity-weighted local vector
/// extended by zero.
#[derive(Debug, Clone)]
pub struct SparseColumn {
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

/// The assembled coarse space: column block `Z`, factorised coarse operator,
/// and bookkeeping.
#[derive(Debug)]
pub struct CoarseSpace {
    columns: Vec<SparseColumn>,
    column_subdomain: Vec<usize>,
    pub per_subdomain: Vec<usize>,
    pub summaries: Vec<SubdomainCoarseSummary>,
    /// Columns removed by the rank filter on a near-singular coarse
    /// operator.
    pub dropped_columns: usize,
    e_lu: FullPivLu,
    conjugate: bool,
    dim: usize,
}

impl CoarseSpace {
    /// Number of coarse columns.
    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn column_subdomain(&self) -> &[usize] {
        &self.column_subdomain
    }

    /// `Z^H v` (or `Z^T v` without conjugation).
    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        self.columns
            .iter()
            .map(|col| {
                let mut acc = C64::default();
                for (&i, &z) in col.indices.iter().zip(&col.values) {
                    acc += if self.conjugate { z.conj() } else { z } * v[i];
                }
                acc
            })
            .collect()
    }

    /// `Z w`.
    pub fn expand(&self, w: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dim];
        for (col, &wj) in self.columns.iter().zip(w) {
            if wj != C64::default() {
                for (&i, &z) in col.indices.iter().zip(&col.values) {
                    out[i] += z * wj;
                }
            }
        }
        out
    }

    /// Coarse correction `Q v = Z E^{-1} Z^H v`.
    pub fn apply_correction(&self, v: &[C64]) -> Vec<C64> {
        let w = self.project(v);
        let y = self.e_lu.solve(&w);
        self.expand(&y)
    }
}

/// Maximum wave number over the (overlapping) subdomain.
pub fn subdomain_max_wavenumber(system: &GlobalSystem, deco: &Decomposition, s: usize) -> f64 {
    deco.subdomains[s]
        .elements
        .iter()
        .map(|&t| system.element_wavenumbers[t])
        .fold(0.0, f64::max)
}

/// Columns of a sparse matrix as dense vectors indexed by a row subset is
/// avoided; this helper extracts row `i` of a complex-symmetric CSR block as
/// the dense right-hand side of length `ncols`.
fn scatter_row(mat: &CsrMatrix, i: usize, out: &mut [C64]) {
    out.iter_mut().for_each(|v| *v = C64::default());
    let (cols, vals) = mat.row(i);
    for (&c, &v) in cols.iter().zip(vals) {
        out[c] = v;
    }
}

/// Build the DtN local selection on subdomain `s`: eigenvectors of the
/// interface Schur-complement pencil against the interface mass matrix with
/// `Re(lambda) < threshold(rule, k_s)`, extended into the interior by the
/// discrete Helmholtz extension.
pub fn build_dtn_local(
    mesh: &Mesh,
    system: &GlobalSystem,
    deco: &Decomposition,
    s: usize,
    rule: DtnThresholdRule,
    spec: &CoarseSpaceSpec,
) -> Result<LocalSelection> {
    let sub = &deco.subdomains[s];
    if sub.interface.is_empty() {
        return Err(Error::EmptyInterface.in_subdomain(s));
    }
    let helmholtz = |bc| LocalMatrixRequest {
        operator: LocalOperator::Helmholtz,
        interface_bc: bc,
    };
    let a_s = assemble_local(
        mesh,
        system,
        deco,
        s,
        helmholtz(InterfaceBc::DirichletTrace),
    )?;
    let a_neumann = assemble_local(mesh, system, deco, s, helmholtz(InterfaceBc::Neumann))?;

    let gamma = &sub.interface;
    let interior = &sub.interior;
    let a_ii = a_s.submatrix(interior, interior);
    let a_gi = a_s.submatrix(gamma, interior);
    let a_ig = a_s.submatrix(interior, gamma);
    let an_gg = a_neumann.submatrix(gamma, gamma);

    let lu_ii = SparseLuChecked::factor(&a_ii, s)?;

    // dense Schur complement via one interior solve per interface dof;
    // the local matrices are complex symmetric, so row i of A_{Gamma,I} is
    // column i of A_{I,Gamma}
    let ng = gamma.len();
    let ni = interior.len();
    let schur_cols: Vec<Vec<C64>> = (0..ng)
        .into_par_iter()
        .map(|g| {
            let mut rhs = vec![C64::default(); ni];
            scatter_row(&a_gi, g, &mut rhs);
            let x = lu_ii.lu.solve(&rhs);
            let y = a_gi.matvec_alloc(&x);
            let mut col = vec![C64::default(); ng];
            scatter_row(&an_gg, g, &mut col);
            for i in 0..ng {
                col[i] -= y[i];
            }
            col
        })
        .collect();
    let mut schur = DenseMat::zeros(ng, ng);
    for (g, col) in schur_cols.iter().enumerate() {
        schur.set_column(g, col);
    }

    let mass = interface_mass_matrix(mesh, system, deco, s)?.to_dense();
    let pairs = dense_generalized_eigen(&schur, &mass).map_err(|e| e.in_subdomain(s))?;

    let k_s = subdomain_max_wavenumber(system, deco, s);
    let threshold = dtn_threshold(k_s, rule);

    let mut selection = LocalSelection::empty();
    for idx in 0..pairs.len() {
        if selection.len() >= spec.max_vectors {
            break;
        }
        let lambda = pairs.values[idx];
        if lambda.re >= threshold {
            continue;
        }
        let u_gamma = &pairs.vectors[idx];
        // Helmholtz extension into the interior
        let rhs = a_ig.matvec_alloc(u_gamma);
        let mut u_interior = lu_ii.lu.solve(&rhs);
        for v in &mut u_interior {
            *v = -*v;
        }
        let mut local = vec![C64::default(); sub.n_dofs()];
        for (pos, &l) in gamma.iter().enumerate() {
            local[l] = u_gamma[pos];
        }
        for (pos, &l) in interior.iter().enumerate() {
            local[l] = u_interior[pos];
        }
        selection.values.push(lambda);
        selection.vectors.push(local);
        selection.residuals.push(pairs.residuals[idx]);
    }
    Ok(selection)
}

/// Wrap the sparse factorisation error with the subdomain id (a singular
/// interior block means a resonant interior Dirichlet problem).
struct SparseLuChecked {
    lu: crate::linalg::SparseLu,
}

impl SparseLuChecked {
    fn factor(a: &CsrMatrix, s: usize) -> Result<Self> {
        match crate::linalg::SparseLu::factor(a) {
            Ok(lu) => Ok(Self { lu }),
            Err(e) => Err(e.in_subdomain(s)),
        }
    }
}

/// Build a generalised-eigenproblem selection on subdomain `s` for the
/// GenEO-family coarse spaces.
pub fn build_geneo_family_local(
    mesh: &Mesh,
    system: &GlobalSystem,
    deco: &Decomposition,
    s: usize,
    kind: CoarseSpaceKind,
    spec: &CoarseSpaceSpec,
) -> Result<LocalSelection> {
    let sub = &deco.subdomains[s];
    let request = |operator, interface_bc| LocalMatrixRequest {
        operator,
        interface_bc,
    };
    let (lhs, weighted_rhs_base, filter) = match kind {
        CoarseSpaceKind::Geneo { threshold } => (
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Helmholtz, InterfaceBc::Neumann),
            )?,
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Helmholtz, InterfaceBc::DirichletTrace),
            )?,
            SpectralFilter::RealPartBelow(threshold),
        ),
        CoarseSpaceKind::DeltaGeneo { threshold } => (
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Laplace, InterfaceBc::Neumann),
            )?,
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Laplace, InterfaceBc::DirichletTrace),
            )?,
            SpectralFilter::ValueBelow(threshold),
        ),
        CoarseSpaceKind::HGeneo { threshold } => (
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Helmholtz, InterfaceBc::Neumann),
            )?,
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Laplace, InterfaceBc::DirichletTrace),
            )?,
            SpectralFilter::RealPartBelow(threshold),
        ),
        CoarseSpaceKind::ImpedanceHGeneo { threshold } => (
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Helmholtz, InterfaceBc::Robin),
            )?,
            assemble_local(
                mesh,
                system,
                deco,
                s,
                request(LocalOperator::Laplace, InterfaceBc::DirichletTrace),
            )?,
            SpectralFilter::RealPartBelow(threshold),
        ),
        CoarseSpaceKind::None | CoarseSpaceKind::Dtn { .. } => {
            return Err(Error::Config(
                "build_geneo_family_local expects a GenEO-family kind".into(),
            ))
        }
    };
    let rhs = weighted_rhs_base.scale_symmetric(&sub.pou);

    let sigma = C64::default();
    let attempt = shift_invert_arnoldi(
        &lhs,
        &rhs,
        filter,
        spec.max_vectors,
        sigma,
        spec.eig_tol,
        spec.seed ^ (s as u64).wrapping_mul(0x9e37_79b9),
    );
    let pairs = match attempt {
        Ok(p) => p,
        Err(Error::SingularMatrix { .. }) => {
            // resonant Neumann matrix at shift zero: fall back to a shift
            // away from the spectrum cluster
            let k_s = subdomain_max_wavenumber(system, deco, s);
            shift_invert_arnoldi(
                &lhs,
                &rhs,
                filter,
                spec.max_vectors,
                C64::new(-0.5 * k_s * k_s, 0.0),
                spec.eig_tol,
                spec.seed ^ (s as u64).wrapping_mul(0x9e37_79b9),
            )
            .map_err(|e| e.in_subdomain(s))?
        }
        Err(e) => return Err(e.in_subdomain(s)),
    };
    Ok(LocalSelection {
        values: pairs.values,
        vectors: pairs.vectors,
        residuals: pairs.residuals,
    })
}

/// Run the per-subdomain builder for the requested coarse kind.
pub fn build_local_selection(
    mesh: &Mesh,
    system: &GlobalSystem,
    deco: &Decomposition,
    s: usize,
    spec: &CoarseSpaceSpec,
) -> Result<LocalSelection> {
    match spec.kind {
        CoarseSpaceKind::None => Err(Error::Config(
            "no coarse space requested; skip assembly".into(),
        )),
        CoarseSpaceKind::Dtn { rule } => build_dtn_local(mesh, system, deco, s, rule, spec),
        kind => build_geneo_family_local(mesh, system, deco, s, kind, spec),
    }
}

/// Assemble the coarse space: gather the weighted local vectors into the
/// column block `Z`, form `E = Z^H A Z`, and factorise it. A numerically
/// singular `E` triggers a column-pivoted rank filter that drops dependent
/// columns before failing outright.
pub fn assemble_coarse(
    mesh: &Mesh,
    system: &GlobalSystem,
    deco: &Decomposition,
    spec: &CoarseSpaceSpec,
) -> Result<CoarseSpace> {
    if matches!(spec.kind, CoarseSpaceKind::None) {
        return Err(Error::Config(
            "cannot assemble a coarse space of kind none".into(),
        ));
    }
    let n_subs = deco.n_subdomains();
    let selections: Vec<Result<LocalSelection>> = (0..n_subs)
        .into_par_iter()
        .map(|s| build_local_selection(mesh, system, deco, s, spec))
        .collect();

    let mut columns = Vec::new();
    let mut column_subdomain = Vec::new();
    let mut per_subdomain = vec![0usize; n_subs];
    let mut summaries = Vec::with_capacity(n_subs);
    for (s, selection) in selections.into_iter().enumerate() {
        let selection = selection?;
        per_subdomain[s] = selection.len();
        let sub = &deco.subdomains[s];
        let (mut min_re, mut max_re) = (f64::INFINITY, f64::NEG_INFINITY);
        for (lambda, vector) in selection.values.iter().zip(&selection.vectors) {
            min_re = min_re.min(lambda.re);
            max_re = max_re.max(lambda.re);
            let mut indices = Vec::with_capacity(sub.n_dofs());
            let mut values = Vec::with_capacity(sub.n_dofs());
            for (local, &g) in sub.dofs.iter().enumerate() {
                let v = vector[local] * sub.pou[local];
                if v != C64::default() {
                    indices.push(g);
                    values.push(v);
                }
            }
            columns.push(SparseColumn { indices, values });
            column_subdomain.push(s);
        }
        summaries.push(SubdomainCoarseSummary {
            subdomain: s,
            selected: selection.len(),
            min_re: if min_re.is_finite() { min_re } else { 0.0 },
            max_re: if max_re.is_finite() { max_re } else { 0.0 },
        });
    }
    if columns.is_empty() {
        return Err(Error::EmptyCoarseSpace);
    }

    let e = coarse_operator(system, deco, &columns, &column_subdomain, spec.conjugate);
    let mut lu = FullPivLu::factor(&e);
    let mut dropped = 0usize;
    let mut kept_columns = columns;
    let mut kept_subdomain = column_subdomain;
    if !lu.is_nonsingular(1e-12) {
        // rank filter: keep the columns chosen by the complete pivoting
        let rank = lu.rank(1e-12);
        let mut keep: Vec<usize> = lu.column_order()[..rank].to_vec();
        keep.sort_unstable();
        dropped = kept_columns.len() - rank;
        let mut e_kept = DenseMat::zeros(rank, rank);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                e_kept[(a, b)] = e[(i, j)];
            }
        }
        let keep_set: std::collections::HashSet<usize> = keep.iter().copied().collect();
        let mut filtered_cols = Vec::with_capacity(rank);
        let mut filtered_subs = Vec::with_capacity(rank);
        for (idx, (col, sub)) in kept_columns
            .into_iter()
            .zip(kept_subdomain.into_iter())
            .enumerate()
        {
            if keep_set.contains(&idx) {
                filtered_cols.push(col);
                filtered_subs.push(sub);
            } else {
                per_subdomain[sub] -= 1;
            }
        }
        kept_columns = filtered_cols;
        kept_subdomain = filtered_subs;
        lu = FullPivLu::factor(&e_kept);
        if !lu.is_nonsingular(1e-12) {
            return Err(Error::SingularCoarseOperator);
        }
    }

    Ok(CoarseSpace {
        columns: kept_columns,
        column_subdomain: kept_subdomain,
        per_subdomain,
        summaries,
        dropped_columns: dropped,
        e_lu: lu,
        conjugate: spec.conjugate,
        dim: system.n(),
    })
}

/// Dense coarse operator `E = Z^H A Z`, exploiting that columns from
/// non-neighbouring subdomains cannot interact through `A`.
fn coarse_operator(
    system: &GlobalSystem,
    deco: &Decomposition,
    columns: &[SparseColumn],
    column_subdomain: &[usize],
    conjugate: bool,
) -> DenseMat {
    let nc = columns.len();
    let n = system.n();
    let n_subs = deco.n_subdomains();

    // subdomain adjacency through shared elements' dofs: two subdomains can
    // interact if some element has nodes with dofs in both
    let mut dof_subs: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, sub) in deco.subdomains.iter().enumerate() {
        for &g in &sub.dofs {
            dof_subs[g].push(s as u32);
        }
    }
    let mut adjacent = vec![false; n_subs * n_subs];
    {
        for g in 0..n {
            let (cols, _) = system.matrix.row(g);
            for &h in cols {
                for &a in &dof_subs[g] {
                    for &b in &dof_subs[h] {
                        adjacent[a as usize * n_subs + b as usize] = true;
                    }
                }
            }
        }
    }

    let cols_by_sub: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); n_subs];
        for (idx, &s) in column_subdomain.iter().enumerate() {
            v[s].push(idx);
        }
        v
    };

    let rows: Vec<Vec<(usize, C64)>> = (0..nc)
        .into_par_iter()
        .map(|j| {
            // w = A z_j
            let mut x = vec![C64::default(); n];
            for (&i, &v) in columns[j].indices.iter().zip(&columns[j].values) {
                x[i] = v;
            }
            let w = system.matrix.matvec_alloc(&x);
            // entries E[i][j] for columns i of neighbouring subdomains
            let sj = column_subdomain[j];
            let mut entries = Vec::new();
            for sb in 0..n_subs {
                if !adjacent[sb * n_subs + sj] {
                    continue;
                }
                for &i in &cols_by_sub[sb] {
                    let col = &columns[i];
                    let mut acc = C64::default();
                    for (&g, &z) in col.indices.iter().zip(&col.values) {
                        acc += if conjugate { z.conj() } else { z } * w[g];
                    }
                    entries.push((i, acc));
                }
            }
            entries
        })
        .collect();

    let mut e = DenseMat::zeros(nc, nc);
    for (j, entries) in rows.into_iter().enumerate() {
        for (i, v) in entries {
            e[(i, j)] = v;
        }
    }
    e
}

// ---------------------------------------------------------------------------
// DtN <-> GenEO link check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSubdomainReport {
    pub subdomain: usize,
    pub n_lambda: usize,
    pub n_mu: usize,
    pub max_mismatch: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkReport {
    pub pass: bool,
    pub tolerance: f64,
    pub subdomains: Vec<LinkSubdomainReport>,
}

pub(crate) enum LinkRhs {
    /// The matrix difference prescribed by the Schur-complement identity.
    MatrixDifference,
    /// Deliberately wrong right-hand side (interface mass) used as a
    /// negative control in tests.
    #[allow(dead_code)]
    InterfaceMass,
}

/// Verify the algebraic link between the whole-subdomain pencil and the
/// overlap Schur-complement pencil: without the partition of unity, the
/// eigenvalues `lambda` of (Neumann, Dirichlet) map onto the eigenvalues
/// `mu = lambda / (1 - lambda)` of the Schur pencil whose right-hand side is
/// the Dirichlet-minus-Neumann difference on the overlap block. Both sides
/// are computed independently with the dense solver.
pub fn verify_dtn_geneo_link(
    mesh: &Mesh,
    system: &GlobalSystem,
    deco: &Decomposition,
) -> Result<LinkReport> {
    link_check_with_rhs(mesh, system, deco, LinkRhs::MatrixDifference)
}

pub(crate) fn link_check_with_rhs(
    mesh: &Mesh,
    system: &GlobalSystem,
    deco: &Decomposition,
    rhs_kind: LinkRhs,
) -> Result<LinkReport> {
    const TOL: f64 = 1e-8;
    const VALUE_CUTOFF: f64 = 1e6;
    let mut subdomain_reports = Vec::new();
    for s in 0..deco.n_subdomains() {
        let sub = &deco.subdomains[s];
        if sub.overlap.is_empty() {
            continue;
        }
        let helmholtz = |bc| LocalMatrixRequest {
            operator: LocalOperator::Helmholtz,
            interface_bc: bc,
        };
        let a_s = assemble_local(
            mesh,
            system,
            deco,
            s,
            helmholtz(InterfaceBc::DirichletTrace),
        )?;
        let a_neumann = assemble_local(mesh, system, deco, s, helmholtz(InterfaceBc::Neumann))?;

        // side one: the full pencil (Neumann, Dirichlet)
        let lambda_pairs = dense_generalized_eigen(&a_neumann.to_dense(), &a_s.to_dense())
            .map_err(|e| e.in_subdomain(s))?;
        let mut transformed: Vec<C64> = lambda_pairs
            .values
            .iter()
            .filter_map(|&l| {
                let denom = C64::new(1.0, 0.0) - l;
                if denom.norm() == 0.0 {
                    return None;
                }
                let mu = l / denom;
                (mu.norm() <= VALUE_CUTOFF).then_some(mu)
            })
            .collect();

        // side two: the overlap Schur-complement pencil, built from scratch
        let overlap = &sub.overlap;
        let rest: Vec<usize> = {
            let o: std::collections::HashSet<usize> = overlap.iter().copied().collect();
            (0..sub.n_dofs()).filter(|l| !o.contains(l)).collect()
        };
        let a_oo = a_s.submatrix(overlap, overlap).to_dense();
        let a_oi = a_s.submatrix(overlap, &rest).to_dense();
        let a_io = a_s.submatrix(&rest, overlap).to_dense();
        let a_ii = a_s.submatrix(&rest, &rest).to_dense();
        let an_oo = a_neumann.submatrix(overlap, overlap).to_dense();
        let lu_ii = crate::linalg::DenseLu::factor(&a_ii).map_err(|e| e.in_subdomain(s))?;
        let x = lu_ii.solve_mat(&a_io);
        let coupling = a_oi.mul(&x);
        let mut schur = an_oo.clone();
        for i in 0..schur.nrows() {
            for j in 0..schur.ncols() {
                schur[(i, j)] -= coupling[(i, j)];
            }
        }
        let rhs = match rhs_kind {
            LinkRhs::MatrixDifference => {
                let mut d = a_oo.clone();
                for i in 0..d.nrows() {
                    for j in 0..d.ncols() {
                        d[(i, j)] -= an_oo[(i, j)];
                    }
                }
                d
            }
            LinkRhs::InterfaceMass => {
                // wrong on purpose: 1D interface mass embedded into the
                // overlap block
                let mass = interface_mass_matrix(mesh, system, deco, s)?;
                let mut local_of_interface = vec![usize::MAX; sub.n_dofs()];
                for (p, &l) in sub.interface.iter().enumerate() {
                    local_of_interface[l] = p;
                }
                let mut embedded = DenseMat::zeros(overlap.len(), overlap.len());
                for (a, &la) in overlap.iter().enumerate() {
                    for (b, &lb) in overlap.iter().enumerate() {
                        let (pa, pb) = (local_of_interface[la], local_of_interface[lb]);
                        if pa != usize::MAX && pb != usize::MAX {
                            embedded[(a, b)] = mass.get(pa, pb);
                        }
                    }
                }
                embedded
            }
        };
        let mu_pairs = dense_generalized_eigen(&schur, &rhs).map_err(|e| e.in_subdomain(s))?;
        let mut mus: Vec<C64> = mu_pairs
            .values
            .iter()
            .copied()
            .filter(|mu| mu.norm() <= VALUE_CUTOFF)
            .collect();

        // multiset comparison
        let sort_key = |a: &C64, b: &C64| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        };
        transformed.sort_by(sort_key);
        mus.sort_by(sort_key);
        let mut max_mismatch = 0.0f64;
        let counts_match = transformed.len() == mus.len();
        if counts_match {
            for (a, b) in transformed.iter().zip(&mus) {
                let rel = (a - b).norm() / (1.0 + a.norm() + b.norm());
                max_mismatch = max_mismatch.max(rel);
            }
        } else {
            max_mismatch = f64::INFINITY;
        }
        subdomain_reports.push(LinkSubdomainReport {
            subdomain: s,
            n_lambda: transformed.len(),
            n_mu: mus.len(),
            max_mismatch,
            pass: counts_match && max_mismatch <= TOL,
        });
    }
    Ok(LinkReport {
        pass: subdomain_reports.iter().all(|r| r.pass),
        tolerance: TOL,
        subdomains: subdomain_reports,
    })
}
