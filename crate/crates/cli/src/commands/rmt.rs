use curvlens::operator::ORACLE_MAX_DIM;
use curvlens::rmt::{planted_matrix, sample_wigner, sample_wishart};
use curvlens::{DenseSymmetric, SeedStream};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{analyze, planted_spec, probe_mixture, stem_rows, zero_scale, Report};
use crate::args::{Ensemble, GlobalOpts, RmtArgs};
use crate::artifacts::{
    atoms_of, write_csv, LanczosInfo, OperatorInfo, OutDir, SpectrumFile, SCHEMA_VERSION,
};
use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
    /// Count normalized to unit area.
    pub density: f64,
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramRow> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = values.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramRow {
            bin_lo: lo + k as f64 * width,
            bin_hi: lo + (k + 1) as f64 * width,
            count,
            density: count as f64 / (n * width),
        })
        .collect()
}

/// Lanczos density of a Wigner, Wishart or planted matrix, with the dense
/// spectrum as a histogram for comparison.
pub fn cmd_rmt(args: &RmtArgs, global: &GlobalOpts) -> CliResult<Report> {
    if args.bins == 0 {
        return Err(usage("--bins must be positive"));
    }
    let mut out = OutDir::create(&global.out)?;
    let mut stream = SeedStream::new(global.seed);
    let mut matrix_stream = stream.fork();
    let mut probe_stream = stream.fork();

    let (h, truth, kind): (DenseSymmetric<f64>, Option<Vec<f64>>, &str) = match args.ensemble {
        Ensemble::Wigner => (
            sample_wigner(args.dim, &mut matrix_stream, !args.unnormalized)?,
            None,
            "wigner",
        ),
        Ensemble::Wishart => {
            if !(args.ratio > 0.0 && args.ratio.is_finite()) {
                return Err(usage(format!(
                    "--ratio must be positive, got {}",
                    args.ratio
                )));
            }
            let samples = ((args.dim as f64 / args.ratio).round() as usize).max(1);
            let h = sample_wishart(args.dim, samples, &mut matrix_stream)?;
            (
                h.with_label(format!("wishart P={} T={samples}", args.dim)),
                None,
                "wishart",
            )
        }
        Ensemble::Planted => {
            let spec = planted_spec(&args.planted, global.seed)?;
            let (h, truth) = planted_matrix(&spec, &mut matrix_stream)?;
            (h, Some(truth), "planted")
        }
    };
    let dim = curvlens::SymmetricOperator::dim(&h);
    let label = curvlens::SymmetricOperator::label(&h);

    let l = &args.lanczos;
    let (mix, ritz) = probe_mixture(&h, l.steps, l.seeds, l.probe, &mut probe_stream, false)?;
    let analysis = analyze(
        &mix,
        &ritz[0].values,
        None,
        args.layers,
        args.gap,
        args.ensemble == Ensemble::Wishart,
    )?;
    let file = SpectrumFile {
        schema_version: SCHEMA_VERSION,
        operator: OperatorInfo {
            kind: kind.into(),
            dim,
            label,
        },
        lanczos: LanczosInfo {
            steps: ritz[0].steps,
            seeds: l.seeds,
            probe_kind: l.probe.name().into(),
        },
        atoms: atoms_of(&mix),
        analysis,
        ritz_vectors: None,
    };
    file.write(&out.file("spectrum.json"))?;
    write_csv(&out.file("stem.csv"), stem_rows(&file.atoms))?;

    let mut oracle_edges = None;
    if !args.no_oracle && dim <= ORACLE_MAX_DIM {
        let eigs = match truth {
            Some(t) => t,
            None => h.eigenvalues()?,
        };
        oracle_edges = Some((eigs[0], eigs[eigs.len() - 1]));
        write_csv(&out.file("histogram.csv"), histogram(&eigs, args.bins))?;
    }

    let summary = json!({
        "command": "rmt",
        "ensemble": kind,
        "dim": dim,
        "atoms": mix.len(),
        "lambda_max": mix.max_value(),
        "lambda_min": mix.min_value(),
        "moment2": mix.moment(2),
        "moment4": mix.moment(4),
        "zero_weight": mix.mass_near_zero(zero_scale(&mix)),
        "lambda_b_weighted": file.analysis.lambda_b.random_vector_weighted,
        "outliers": file.analysis.outliers.as_ref().map(|o| o.count),
        "mp_fit": file.analysis.mp_fit,
        "oracle_min": oracle_edges.map(|e| e.0),
        "oracle_max": oracle_edges.map(|e| e.1),
    });
    Ok(Report {
        summary,
        primary_csv: Some("stem.csv".into()),
        artifacts: out.written().to_vec(),
        diverged: None,
    })
}
