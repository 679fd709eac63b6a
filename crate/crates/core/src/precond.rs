//! One- and two-level overlapping Schwarz preconditioners.
//!
//! The one-level operator is the restricted additive Schwarz sum with local
//! impedance (Robin) subdomain problems: each application restricts the
//! residual to every subdomain, solves the factorised local Robin matrix,
//! weights by the partition of unity, and extends by zero. The two-level
//! operator augments it with the deflation correction
//! `M2^{-1} = M^{-1} (I - A Q) + Q`.
//!
//! Subdomain solves run in parallel; their contributions are accumulated in
//! subdomain order so repeated applications are bit-identical.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::assembly::{
    assemble_local, GlobalSystem, InterfaceBc, LocalMatrixRequest, LocalOperator,
};
use crate::coarse::CoarseSpace;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinOp, SparseLu};
use crate::mesh::Mesh;
use crate::partition::Decomposition;

struct SubdomainSolver {
    dofs: Vec<usize>,
    pou: Vec<f64>,
    lu: SparseLu,
    solves: AtomicU64,
}

/// The ORAS preconditioner, optionally augmented with a coarse space.
pub struct OrasPreconditioner<'a> {
    subdomains: Vec<SubdomainSolver>,
    coarse: Option<CoarseSpace>,
    matrix: &'a CsrMatrix,
    n: usize,
}

/// Factorise every local Robin matrix and attach the optional coarse space.
pub fn build_oras<'a>(
    mesh: &Mesh,
    system: &'a GlobalSystem,
    decomposition: &Decomposition,
    coarse: Option<CoarseSpace>,
) -> Result<OrasPreconditioner<'a>> {
    if !decomposition.is_overlapping() {
        return Err(Error::NotOverlapping);
    }
    let request = LocalMatrixRequest {
        operator: LocalOperator::Helmholtz,
        interface_bc: InterfaceBc::Robin,
    };
    let solvers: Vec<Result<SubdomainSolver>> = (0..decomposition.n_subdomains())
        .into_par_iter()
        .map(|s| {
            let robin = assemble_local(mesh, system, decomposition, s, request)?;
            let lu = SparseLu::factor(&robin).map_err(|e| e.in_subdomain(s))?;
            let sub = &decomposition.subdomains[s];
            Ok(SubdomainSolver {
                dofs: sub.dofs.clone(),
                pou: sub.pou.clone(),
                lu,
                solves: AtomicU64::new(0),
            })
        })
        .collect();
    let subdomains = solvers.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(OrasPreconditioner {
        subdomains,
        coarse,
        matrix: &system.matrix,
        n: system.n(),
    })
}

impl<'a> OrasPreconditioner<'a> {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    pub fn coarse(&self) -> Option<&CoarseSpace> {
        self.coarse.as_ref()
    }

    pub fn coarse_size(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.size())
    }

    /// Total local solves performed per subdomain since construction
    /// (diagnostics for the one-solve-per-application audit).
    pub fn solve_counts(&self) -> Vec<u64> {
        self.subdomains
            .iter()
            .map(|s| s.solves.load(Ordering::Relaxed))
            .collect()
    }

    /// One-level sum: weighted local Robin solves of the restriction,
    /// extended by zero and accumulated in subdomain order.
    fn apply_one_level(&self, v: &[C64]) -> Vec<C64> {
        let locals: Vec<Vec<C64>> = self
            .subdomains
            .par_iter()
            .map(|sub| {
                sub.solves.fetch_add(1, Ordering::Relaxed);
                let restricted: Vec<C64> = sub.dofs.iter().map(|&g| v[g]).collect();
                sub.lu.solve(&restricted)
            })
            .collect();
        let mut out = vec![C64::default(); self.n];
        for (sub, local) in self.subdomains.iter().zip(&locals) {
            for ((&g, &w), &x) in sub.dofs.iter().zip(&sub.pou).zip(local) {
                out[g] += w * x;
            }
        }
        out
    }

    /// Apply the preconditioner: one-level sum, or with a coarse space the
    /// deflation form `M^{-1}(v - A Q v) + Q v` (exactly one matrix-vector
    /// product with `A` and one coarse solve per application).
    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        match &self.coarse {
            None => self.apply_one_level(v),
            Some(coarse) => {
                let qv = coarse.apply_correction(v);
                let aqv = self.matrix.matvec_alloc(&qv);
                let deflected: Vec<C64> = v.iter().zip(&aqv).map(|(a, b)| a - b).collect();
                let mut out = self.apply_one_level(&deflected);
                for (o, q) in out.iter_mut().zip(&qv) {
                    *o += q;
                }
                out
            }
        }
    }
}

impl<'a> LinOp for OrasPreconditioner<'a> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.apply_vec(x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_global;
    use crate::coarse::{assemble_coarse, CoarseSpaceKind, CoarseSpaceSpec};
    use crate::linalg::gmres_right_preconditioned;
    use crate::media::MediumSpec;
    use crate::mesh::{build_unit_square_mesh, wavenumber_for_resolution};
    use crate::partition::{extend_overlap, uniform_partition};
    use crate::rng::SplitMix64;

    #[test]
    fn single_subdomain_is_an_exact_solver() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let k = wavenumber_for_resolution(8).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 1, 1).unwrap(), 2).unwrap();
        let precond = build_oras(&mesh, &system, &deco, None).unwrap();
        let result =
            gmres_right_preconditioned(&system.matrix, Some(&precond), &system.rhs, 1e-6, 50)
                .unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn application_is_linear() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let k = wavenumber_for_resolution(8).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2).unwrap(), 2).unwrap();
        let precond = build_oras(&mesh, &system, &deco, None).unwrap();
        let n = system.n();
        let mut rng = SplitMix64::new(17);
        let x: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let y: Vec<C64> = (0..n).map(|_| rng.next_complex()).collect();
        let alpha = rng.next_complex();
        let beta = rng.next_complex();
        let mixed: Vec<C64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let lhs = precond.apply_vec(&mixed);
        let px = precond.apply_vec(&x);
        let py = precond.apply_vec(&y);
        let scale: f64 = lhs.iter().map(|v| v.norm()).sum::<f64>().max(1.0);
        for i in 0..n {
            let rhs = alpha * px[i] + beta * py[i];
            assert!((lhs[i] - rhs).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let mesh = build_unit_square_mesh(6).unwrap();
        let k = wavenumber_for_resolution(6).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 1).unwrap(), 2).unwrap();
        let precond = build_oras(&mesh, &system, &deco, None).unwrap();
        let zero = vec![C64::default(); system.n()];
        let out = precond.apply_vec(&zero);
        assert!(out.iter().all(|v| *v == C64::default()));
    }

    #[test]
    fn one_solve_per_subdomain_per_application() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let k = wavenumber_for_resolution(8).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2).unwrap(), 2).unwrap();
        let precond = build_oras(&mesh, &system, &deco, None).unwrap();
        let v = vec![C64::new(1.0, 0.0); system.n()];
        let _ = precond.apply_vec(&v);
        let _ = precond.apply_vec(&v);
        let counts = precond.solve_counts();
        assert_eq!(counts, vec![2, 2, 2, 2]);
    }

    #[test]
    fn repeated_application_is_bit_identical() {
        let mesh = build_unit_square_mesh(10).unwrap();
        let k = wavenumber_for_resolution(10).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 5, 2).unwrap(), 2).unwrap();
        let precond = build_oras(&mesh, &system, &deco, None).unwrap();
        let mut rng = SplitMix64::new(5);
        let v: Vec<C64> = (0..system.n()).map(|_| rng.next_complex()).collect();
        let a = precond.apply_vec(&v);
        let b = precond.apply_vec(&v);
        assert_eq!(a, b);
    }

    #[test]
    fn full_rank_coarse_space_gives_exact_two_level_solver() {
        // when Z spans the whole space, Q = A^{-1} and GMRES needs a single
        // iteration
        let mesh = build_unit_square_mesh(4).unwrap();
        let k = wavenumber_for_resolution(4).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2).unwrap(), 2).unwrap();
        // a huge threshold keeps every eigenvector; with overlapping
        // subdomains the union spans the global space
        let spec = CoarseSpaceSpec::new(CoarseSpaceKind::HGeneo { threshold: 1e9 });
        let coarse = assemble_coarse(&mesh, &system, &deco, &spec).unwrap();
        // the rank filter trims the over-complete set down to a full basis
        assert_eq!(coarse.size(), system.n());
        let precond = build_oras(&mesh, &system, &deco, Some(coarse)).unwrap();
        let result =
            gmres_right_preconditioned(&system.matrix, Some(&precond), &system.rhs, 1e-8, 20)
                .unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
    }

    #[test]
    fn deflation_annihilates_coarse_directions() {
        // (I - A Q) A z = 0 for every column z of Z
        let mesh = build_unit_square_mesh(10).unwrap();
        let k = wavenumber_for_resolution(10).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2).unwrap(), 2).unwrap();
        let spec = CoarseSpaceSpec::new(CoarseSpaceKind::HGeneo { threshold: 0.5 });
        let coarse = assemble_coarse(&mesh, &system, &deco, &spec).unwrap();
        let n = system.n();
        for col in coarse.columns() {
            let mut z = vec![C64::default(); n];
            for (&i, &v) in col.indices.iter().zip(&col.values) {
                z[i] = v;
            }
            let az = system.matrix.matvec_alloc(&z);
            let qaz = coarse.apply_correction(&az);
            let aqaz = system.matrix.matvec_alloc(&qaz);
            let scale: f64 = az.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let mut diff = 0.0f64;
            for i in 0..n {
                diff += (az[i] - aqaz[i]).norm_sqr();
            }
            assert!(
                diff.sqrt() <= 1e-9 * scale,
                "deflation residual {} vs scale {scale}",
                diff.sqrt()
            );
        }
    }

    #[test]
    fn rejects_non_overlapping_decomposition() {
        let mesh = build_unit_square_mesh(6).unwrap();
        let k = wavenumber_for_resolution(6).unwrap();
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
        let deco = uniform_partition(&mesh, 2, 2).unwrap();
        assert!(matches!(
            build_oras(&mesh, &system, &deco, None),
            Err(Error::NotOverlapping)
        ));
    }
}
