//! Regression pins for benchmark quantities that are stable across solver
//! details: coarse-space sizes on the desk-scale benchmark row.

use helmholtz_dd::assembly::assemble_global;
use helmholtz_dd::coarse::{assemble_coarse, CoarseSpaceKind, CoarseSpaceSpec};
use helmholtz_dd::media::MediumSpec;
use helmholtz_dd::mesh::{build_unit_square_mesh, wavenumber_for_resolution};
use helmholtz_dd::partition::{
    build_partition_of_unity, extend_overlap, uniform_partition, PartitionOfUnityKind,
};

#[test]
fn laplace_pencil_coarse_size_on_benchmark_row() {
    // k = 18.5, m = 100, 5x5 subdomains: the Laplace-pencil coarse space
    // has a tight reference size of 135 columns (all pencils real and
    // non-negative, so the selection is insensitive to eigensolver detail)
    let m = 100;
    let mesh = build_unit_square_mesh(m).unwrap();
    let k = wavenumber_for_resolution(m).unwrap();
    let system = assemble_global(&mesh, &MediumSpec::homogeneous(k)).unwrap();
    let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 5, 5).unwrap(), 2).unwrap();
    let deco = build_partition_of_unity(&mesh, &deco, PartitionOfUnityKind::Pyramid).unwrap();
    let coarse = assemble_coarse(
        &mesh,
        &system,
        &deco,
        &CoarseSpaceSpec::new(CoarseSpaceKind::DeltaGeneo { threshold: 0.5 }),
    )
    .unwrap();
    let size = coarse.size();
    assert!(
        (115..=155).contains(&size),
        "Laplace-pencil coarse size {size} drifted from the 135 reference"
    );

    // per-subdomain bookkeeping is consistent
    assert_eq!(coarse.per_subdomain.iter().sum::<usize>(), size);
    assert_eq!(coarse.summaries.len(), deco.n_subdomains());
    for summary in &coarse.summaries {
        assert_eq!(summary.selected, coarse.per_subdomain[summary.subdomain]);
        if summary.selected > 0 {
            assert!(summary.min_re <= summary.max_re);
            assert!(summary.max_re < 0.5);
            // Laplace pencils are positive semi-definite
            assert!(summary.min_re > -1e-8);
        }
    }
}
