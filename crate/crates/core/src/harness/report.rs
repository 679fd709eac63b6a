//! Per-run experiment records and their CSV serialisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "k,omega,rho,m,N,overlap,coarse_kind,threshold_rule,coarse_size,iterations,converged,final_residual,t_assembly_s,t_partition_s,t_eigensolve_s,t_factorize_s,t_solve_s";

/// One grid-point record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Maximum wave number over the domain.
    pub k: f64,
    pub omega: f64,
    pub rho: f64,
    pub m: usize,
    /// Subdomain count.
    pub n_subdomains: usize,
    pub overlap: usize,
    pub coarse_kind: String,
    pub threshold_rule: String,
    pub coarse_size: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub t_assembly_s: f64,
    pub t_partition_s: f64,
    pub t_eigensolve_s: f64,
    pub t_factorize_s: f64,
    pub t_solve_s: f64,
    /// Set when the grid point failed; never part of the CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExperimentReport {
    /// Share of wall time spent in the eigensolver, in [0, 1].
    pub fn eigensolve_share(&self) -> f64 {
        let total = self.t_assembly_s
            + self.t_partition_s
            + self.t_eigensolve_s
            + self.t_factorize_s
            + self.t_solve_s;
        if total > 0.0 {
            self.t_eigensolve_s / total
        } else {
            0.0
        }
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.omega,
            self.rho,
            self.m,
            self.n_subdomains,
            self.overlap,
            self.coarse_kind,
            self.threshold_rule,
            self.coarse_size,
            self.iterations,
            self.converged,
            self.final_residual,
            self.t_assembly_s,
            self.t_partition_s,
            self.t_eigensolve_s,
            self.t_factorize_s,
            self.t_solve_s
        )
    }
}

/// Render reports as CSV (UTF-8, LF line endings, decimal points).
pub fn render_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Write reports to a CSV file.
pub fn emit_csv(reports: &[ExperimentReport], path: &std::path::Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Config("no reports to write".into()));
    }
    std::fs::write(path, render_csv(reports))?;
    Ok(())
}

/// Parse a CSV produced by `render_csv` (inverse up to the `error` field).
pub fn parse_csv(text: &str) -> Result<Vec<ExperimentReport>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header: {header}")));
    }
    let mut reports = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(Error::Config(format!(
                "line {}: expected 17 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Config(format!("line {}: bad {what}", lineno + 2));
        reports.push(ExperimentReport {
            k: fields[0].parse().map_err(|_| bad("k"))?,
            omega: fields[1].parse().map_err(|_| bad("omega"))?,
            rho: fields[2].parse().map_err(|_| bad("rho"))?,
            m: fields[3].parse().map_err(|_| bad("m"))?,
            n_subdomains: fields[4].parse().map_err(|_| bad("N"))?,
            overlap: fields[5].parse().map_err(|_| bad("overlap"))?,
            coarse_kind: fields[6].to_string(),
            threshold_rule: fields[7].to_string(),
            coarse_size: fields[8].parse().map_err(|_| bad("coarse_size"))?,
            iterations: fields[9].parse().map_err(|_| bad("iterations"))?,
            converged: fields[10].parse().map_err(|_| bad("converged"))?,
            final_residual: fields[11].parse().map_err(|_| bad("final_residual"))?,
            t_assembly_s: fields[12].parse().map_err(|_| bad("t_assembly_s"))?,
            t_partition_s: fields[13].parse().map_err(|_| bad("t_partition_s"))?,
            t_eigensolve_s: fields[14].parse().map_err(|_| bad("t_eigensolve_s"))?,
            t_factorize_s: fields[15].parse().map_err(|_| bad("t_factorize_s"))?,
            t_solve_s: fields[16].parse().map_err(|_| bad("t_solve_s"))?,
            error: None,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        ExperimentReport {
            k: 18.462809698543376,
            omega: 18.462809698543376,
            rho: 1.0,
            m: 100,
            n_subdomains: 25,
            overlap: 2,
            coarse_kind: "h_geneo".into(),
            threshold_rule: "0.5".into(),
            coarse_size: 164,
            iterations: 21,
            converged: true,
            final_residual: 8.7e-7,
            t_assembly_s: 0.12,
            t_partition_s: 0.034,
            t_eigensolve_s: 5.2,
            t_factorize_s: 0.8,
            t_solve_s: 1.4,
            error: None,
        }
    }

    #[test]
    fn single_report_renders_two_lines() {
        let text = render_csv(&[sample()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("18.46"));
        assert!(lines[1].contains(",h_geneo,0.5,164,21,true,"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let reports = vec![
            sample(),
            ExperimentReport {
                coarse_kind: "none".into(),
                threshold_rule: "-".into(),
                coarse_size: 0,
                iterations: 73,
                ..sample()
            },
        ];
        let text = render_csv(&reports);
        let back = parse_csv(&text).unwrap();
        assert_eq!(reports, back);
    }

    #[test]
    fn eigensolve_share_in_unit_interval() {
        let r = sample();
        let share = r.eigensolve_share();
        assert!((0.0..=1.0).contains(&share));
        let idle = ExperimentReport {
            t_assembly_s: 0.0,
            t_partition_s: 0.0,
            t_eigensolve_s: 0.0,
            t_factorize_s: 0.0,
            t_solve_s: 0.0,
            ..sample()
        };
        assert_eq!(idle.eigensolve_share(), 0.0);
    }

    #[test]
    fn rejects_malformed_rows() {
        let text = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(parse_csv(&text).is_err());
        assert!(parse_csv("nonsense\n").is_err());
    }
}
