use curvlens::lanczos::chebyshev_bound_ratio;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Report;
use crate::args::{BoundsArgs, GlobalOpts};
use crate::artifacts::{write_csv, OutDir};
use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub gap: f64,
    pub m: usize,
    #[serde(rename = "L")]
    pub lanczos: f64,
    #[serde(rename = "R")]
    pub power: f64,
    #[serde(rename = "L_over_R")]
    pub ratio: f64,
}

pub fn cmd_bounds_table(args: &BoundsArgs, global: &GlobalOpts) -> CliResult<Report> {
    if let Some(g) = args.gaps.iter().find(|&&g| !(g > 1.0)) {
        return Err(usage(format!("spectral gaps must exceed 1, got {g}")));
    }
    if let Some(m) = args.steps.iter().find(|&&m| m < 2) {
        return Err(usage(format!(
            "iteration counts must be at least 2, got {m}"
        )));
    }
    let mut rows = Vec::with_capacity(args.gaps.len() * args.steps.len());
    for &gap in &args.gaps {
        for &m in &args.steps {
            let (l, r) = chebyshev_bound_ratio(gap, m)?;
            rows.push(BoundsRow {
                gap,
                m,
                lanczos: l,
                power: r,
                ratio: l / r,
            });
        }
    }
    let mut out = OutDir::create(&global.out)?;
    write_csv(&out.file("bounds.csv"), rows.iter().copied())?;
    let summary = json!({ "command": "bounds-table", "rows": rows });
    Ok(Report {
        summary,
        primary_csv: Some("bounds.csv".into()),
        artifacts: out.written().to_vec(),
        diverged: None,
    })
}
