//! Experiment engine: JSON-configured grids over mesh resolution, medium,
//! decomposition, overlap, and coarse space, producing CSV/JSON reports and
//! SVG plots.

pub mod plots;
pub mod report;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_global, GlobalSystem};
use crate::coarse::{assemble_coarse, CoarseSpaceKind, CoarseSpaceSpec, LinkReport};
use crate::error::{Error, Result};
use crate::linalg::gmres_right_preconditioned;
use crate::media::{MediumKind, MediumSpec};
use crate::mesh::{build_unit_square_mesh, wavenumber_for_resolution, Mesh};
use crate::partition::{
    build_partition_of_unity, extend_overlap, graph_bisection_partition, uniform_partition,
    Decomposition, PartitionOfUnityKind,
};
use crate::precond::build_oras;

pub use plots::{emit_plots, fit_power_law};
pub use report::{emit_csv, parse_csv, render_csv, ExperimentReport, CSV_HEADER};

/// Resolutions above this need `allow_large`; bigger runs take hours on a
/// single machine.
pub const DESK_SCALE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MediumConfig {
    pub kind: MediumKind,
    #[serde(default = "one")]
    pub contrast: f64,
    /// Angular frequency; `None` takes the pollution-rule value for each
    /// resolution.
    #[serde(default)]
    pub omega: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            kind: MediumKind::Homogeneous,
            contrast: 1.0,
            omega: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Uniform,
    Graph,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GmresConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_maxit")]
    pub max_iterations: usize,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_maxit() -> usize {
    500
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iterations: default_maxit(),
        }
    }
}

/// Full experiment-grid description. Every combination of resolution,
/// contrast, decomposition, overlap, and coarse space becomes one run, in
/// configuration order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub medium: MediumConfig,
    /// Contrast sweep; overrides `medium.contrast` when present.
    #[serde(default)]
    pub contrasts: Option<Vec<f64>>,
    pub partition: PartitionKind,
    /// Subdomain counts; uniform partitions require perfect squares unless
    /// `grids` is given.
    #[serde(default)]
    pub subdomain_counts: Vec<usize>,
    /// Explicit uniform block grids (p, q); used instead of
    /// `subdomain_counts` when non-empty.
    #[serde(default)]
    pub grids: Vec<(usize, usize)>,
    #[serde(default = "default_overlaps")]
    pub overlaps: Vec<usize>,
    pub coarse: Vec<CoarseSpaceKind>,
    #[serde(default)]
    pub gmres: GmresConfig,
    #[serde(default = "default_pou")]
    pub partition_of_unity: PartitionOfUnityKind,
    /// Per-subdomain eigenvector cap.
    #[serde(default = "default_max_vectors")]
    pub max_vectors: usize,
    /// Conjugate the coarse basis in the coarse operator.
    #[serde(default = "default_true_flag")]
    pub conjugate_coarse: bool,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_large: bool,
}

fn default_overlaps() -> Vec<usize> {
    vec![2]
}

fn default_pou() -> PartitionOfUnityKind {
    PartitionOfUnityKind::Pyramid
}

fn default_max_vectors() -> usize {
    512
}

fn default_true_flag() -> bool {
    true
}

/// One resolved grid point.
#[derive(Debug, Clone, Copy)]
struct GridPoint {
    m: usize,
    rho: f64,
    grid: Option<(usize, usize)>,
    n_subdomains: usize,
    overlap: usize,
    coarse: CoarseSpaceKind,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn contrasts(&self) -> Vec<f64> {
        self.contrasts
            .clone()
            .unwrap_or_else(|| vec![self.medium.contrast])
    }

    fn partitions(&self) -> Vec<(Option<(usize, usize)>, usize)> {
        if self.partition == PartitionKind::Uniform && !self.grids.is_empty() {
            self.grids
                .iter()
                .map(|&(p, q)| (Some((p, q)), p * q))
                .collect()
        } else {
            self.subdomain_counts.iter().map(|&n| (None, n)).collect()
        }
    }

    /// Validate every referenced grid point before any factorisation starts.
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::Config("no resolutions listed".into()));
        }
        if self.coarse.is_empty() {
            return Err(Error::Config("no coarse space variants listed".into()));
        }
        if self.partitions().is_empty() {
            return Err(Error::Config(
                "no subdomain counts (or grids) listed".into(),
            ));
        }
        if !(self.gmres.tol > 0.0) || self.gmres.max_iterations == 0 {
            return Err(Error::Config("invalid GMRES settings".into()));
        }
        for &m in &self.resolutions {
            if m < 2 {
                return Err(Error::InvalidResolution(m));
            }
            if m % 2 != 0 {
                return Err(Error::OddResolution(m));
            }
            if m > DESK_SCALE_LIMIT && !self.allow_large {
                return Err(Error::Config(format!(
                    "resolution {m} exceeds the desk-scale limit {DESK_SCALE_LIMIT}; pass allow_large to proceed"
                )));
            }
            for (grid, n) in self.partitions() {
                if n == 0 || n > 2 * m * m {
                    return Err(Error::InvalidSubdomainCount(n));
                }
                if self.partition == PartitionKind::Uniform {
                    let (p, q) = grid.unwrap_or_else(|| {
                        let side = (n as f64).sqrt().round() as usize;
                        (side, side)
                    });
                    if p * q != n {
                        return Err(Error::Config(format!(
                            "subdomain count {n} is not a perfect square; use grids"
                        )));
                    }
                    if p > m || q > m {
                        return Err(Error::InvalidSubdomainCount(n));
                    }
                }
            }
        }
        for &ov in &self.overlaps {
            if ov < 2 || ov % 2 != 0 {
                return Err(Error::InvalidOverlap(ov));
            }
        }
        for rho in self.contrasts() {
            if !(rho >= 1.0) {
                return Err(Error::Config(format!("contrast {rho} below 1")));
            }
        }
        if let Some(omega) = self.medium.omega {
            if !(omega > 0.0) {
                return Err(Error::Config(format!("omega {omega} not positive")));
            }
        }
        for kind in &self.coarse {
            match kind {
                CoarseSpaceKind::Geneo { threshold }
                | CoarseSpaceKind::DeltaGeneo { threshold }
                | CoarseSpaceKind::HGeneo { threshold }
                | CoarseSpaceKind::ImpedanceHGeneo { threshold } => {
                    if !(threshold > &0.0) {
                        return Err(Error::Config(format!(
                            "non-positive eigenvalue threshold {threshold}"
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn grid_points(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &m in &self.resolutions {
            for &rho in &self.contrasts() {
                for (grid, n_subdomains) in self.partitions() {
                    for &overlap in &self.overlaps {
                        for &coarse in &self.coarse {
                            points.push(GridPoint {
                                m,
                                rho,
                                grid,
                                n_subdomains,
                                overlap,
                                coarse,
                            });
                        }
                    }
                }
            }
        }
        points
    }

    fn medium_for(&self, m: usize, rho: f64) -> Result<MediumSpec> {
        let omega = match self.medium.omega {
            Some(w) => w,
            None => wavenumber_for_resolution(m)?,
        };
        Ok(MediumSpec {
            kind: self.medium.kind,
            contrast: rho,
            omega,
        })
    }
}

/// Configure the global worker pool. Call once, before the first parallel
/// region; later calls are ignored.
pub fn configure_workers(workers: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
}

/// Run every grid point of the configuration, in order. Per-point numerical
/// failures are captured in the report rows; only configuration errors abort
/// the grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    run_experiment_with_progress(config, |_| {})
}

/// `run_experiment` with a callback invoked after every completed grid
/// point (progress reporting for long grids).
pub fn run_experiment_with_progress(
    config: &ExperimentConfig,
    mut on_row: impl FnMut(&ExperimentReport),
) -> Result<Vec<ExperimentReport>> {
    config.validate()?;
    let mut reports = Vec::new();

    // caches keyed by the parameters that produce the artifact
    let mut mesh_cache: Option<(usize, Mesh, f64)> = None; // (m, mesh, build time)
    let mut system_cache: Option<(usize, u64, GlobalSystem, f64)> = None;
    let mut deco_cache: Option<(
        usize,
        Option<(usize, usize)>,
        usize,
        usize,
        Decomposition,
        f64,
    )> = None;

    for point in config.grid_points() {
        let row = run_grid_point(
            config,
            point,
            &mut mesh_cache,
            &mut system_cache,
            &mut deco_cache,
        );
        match row {
            Ok(report) => {
                on_row(&report);
                reports.push(report);
            }
            Err(err) => {
                let omega = config
                    .medium_for(point.m, point.rho)
                    .map(|spec| spec.omega)
                    .unwrap_or(0.0);
                let report = ExperimentReport {
                    k: omega,
                    omega,
                    rho: point.rho,
                    m: point.m,
                    n_subdomains: point.n_subdomains,
                    overlap: point.overlap,
                    coarse_kind: point.coarse.label().into(),
                    threshold_rule: point.coarse.rule_label(),
                    coarse_size: 0,
                    iterations: 0,
                    converged: false,
                    final_residual: f64::NAN,
                    t_assembly_s: 0.0,
                    t_partition_s: 0.0,
                    t_eigensolve_s: 0.0,
                    t_factorize_s: 0.0,
                    t_solve_s: 0.0,
                    error: Some(err.to_string()),
                };
                on_row(&report);
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

#[allow(clippy::type_complexity)]
fn run_grid_point(
    config: &ExperimentConfig,
    point: GridPoint,
    mesh_cache: &mut Option<(usize, Mesh, f64)>,
    system_cache: &mut Option<(usize, u64, GlobalSystem, f64)>,
    deco_cache: &mut Option<(
        usize,
        Option<(usize, usize)>,
        usize,
        usize,
        Decomposition,
        f64,
    )>,
) -> Result<ExperimentReport> {
    let GridPoint {
        m,
        rho,
        grid,
        n_subdomains,
        overlap,
        coarse,
    } = point;

    // mesh + global system (cached per resolution and contrast)
    if mesh_cache.as_ref().map(|c| c.0) != Some(m) {
        let t = Instant::now();
        let mesh = build_unit_square_mesh(m)?;
        *mesh_cache = Some((m, mesh, t.elapsed().as_secs_f64()));
        *system_cache = None;
        *deco_cache = None;
    }
    let (_, mesh, mesh_time) = mesh_cache.as_ref().unwrap();

    let medium = config.medium_for(m, rho)?;
    let medium_key = rho.to_bits();
    if system_cache.as_ref().map(|c| (c.0, c.1)) != Some((m, medium_key)) {
        let t = Instant::now();
        let system = assemble_global(mesh, &medium)?;
        *system_cache = Some((m, medium_key, system, t.elapsed().as_secs_f64() + mesh_time));
    }
    let (_, _, system, t_assembly) = system_cache.as_ref().unwrap();

    // decomposition (cached per resolution, grid, count, overlap)
    let deco_key = (m, grid, n_subdomains, overlap);
    if deco_cache.as_ref().map(|c| (c.0, c.1, c.2, c.3)) != Some(deco_key) {
        let t = Instant::now();
        let base = match config.partition {
            PartitionKind::Uniform => {
                let (p, q) = grid.unwrap_or_else(|| {
                    let side = (n_subdomains as f64).sqrt().round() as usize;
                    (side, side)
                });
                uniform_partition(mesh, p, q)?
            }
            PartitionKind::Graph => graph_bisection_partition(mesh, n_subdomains)?,
        };
        let extended = extend_overlap(mesh, &base, overlap)?;
        let with_pou = build_partition_of_unity(mesh, &extended, config.partition_of_unity)?;
        *deco_cache = Some((
            m,
            grid,
            n_subdomains,
            overlap,
            with_pou,
            t.elapsed().as_secs_f64(),
        ));
    }
    let (_, _, _, _, deco, t_partition) = deco_cache.as_ref().unwrap();

    // coarse space
    let t = Instant::now();
    let coarse_space = match coarse {
        CoarseSpaceKind::None => None,
        kind => {
            let spec = CoarseSpaceSpec {
                kind,
                max_vectors: config.max_vectors,
                conjugate: config.conjugate_coarse,
                eig_tol: crate::linalg::DEFAULT_EIG_TOL,
                seed: config.seed,
            };
            Some(assemble_coarse(mesh, system, deco, &spec)?)
        }
    };
    let t_eigensolve = t.elapsed().as_secs_f64();
    let coarse_size = coarse_space.as_ref().map_or(0, |c| c.size());

    // preconditioner + solve
    let t = Instant::now();
    let precond = build_oras(mesh, system, deco, coarse_space)?;
    let t_factorize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let result = gmres_right_preconditioned(
        &system.matrix,
        Some(&precond),
        &system.rhs,
        config.gmres.tol,
        config.gmres.max_iterations,
    )?;
    let t_solve = t.elapsed().as_secs_f64();

    let k_max = system
        .element_wavenumbers
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    Ok(ExperimentReport {
        k: k_max,
        omega: medium.omega,
        rho,
        m,
        n_subdomains,
        overlap,
        coarse_kind: coarse.label().into(),
        threshold_rule: coarse.rule_label(),
        coarse_size,
        iterations: result.iterations,
        converged: result.converged,
        final_residual: result.final_residual,
        t_assembly_s: *t_assembly,
        t_partition_s: *t_partition,
        t_eigensolve_s: t_eigensolve,
        t_factorize_s: t_factorize,
        t_solve_s: t_solve,
        error: None,
    })
}

/// Link-check verdict for one decomposition case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkCheckCase {
    pub label: String,
    pub report: LinkReport,
}

/// Run the Schur-complement link check on the standard small cases and
/// optionally write a JSON verdict.
pub fn run_link_check(out: Option<&Path>) -> Result<Vec<LinkCheckCase>> {
    let mut cases = Vec::new();
    for (m, p, q) in [(8usize, 2usize, 2usize), (12, 3, 1)] {
        let mesh = build_unit_square_mesh(m)?;
        let k = wavenumber_for_resolution(m)?;
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k))?;
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, p, q)?, 2)?;
        let report = crate::coarse::verify_dtn_geneo_link(&mesh, &system, &deco)?;
        cases.push(LinkCheckCase {
            label: format!("m={m} {p}x{q}"),
            report,
        });
    }
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(&cases)?)?;
    }
    Ok(cases)
}
