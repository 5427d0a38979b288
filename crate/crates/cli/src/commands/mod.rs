mod bounds;
mod compare_diag;
mod landscape;
mod rmt;
mod spectrum;
mod train;

pub use bounds::{cmd_bounds_table, BoundsRow};
pub use compare_diag::{cmd_compare_diag, CompareRow, CompareSummary};
pub use landscape::cmd_landscape;
pub use rmt::{cmd_rmt, HistogramRow};
pub use spectrum::cmd_spectrum;
pub use train::{cmd_train, EvalRow, RefreshRow, TraceRow};

use curvlens::bulk::{bulk_mean_random_vector, bulk_median_gradient, count_outliers_gap};
use curvlens::density::average_over_seeds;
use curvlens::lanczos::{lanczos_run_batch, SeedKind};
use curvlens::rmt::{fit_mp_to_bulk, PlantedSpectrumSpec};
use curvlens::{DiracMixture, ProbeKind, RitzDecomposition, SeedStream, SymmetricOperator};

use crate::args::{PlantedOpts, PlantedPreset};
use crate::artifacts::{Analysis, AtomRecord, BulkEstimates, MpFit, OutlierSummary};
use crate::error::{usage, CliError, CliResult};

/// What a command hands back besides its files.
#[derive(Debug, Clone)]
pub struct Report {
    pub summary: serde_json::Value,
    /// Artifact printed on stdout with `--format csv`.
    pub primary_csv: Option<String>,
    pub artifacts: Vec<String>,
    pub diverged: Option<bool>,
}

/// Runs one Lanczos recurrence per probe in lock-step and averages the
/// resulting quadratures. Vectors are kept for the first probe only.
pub(crate) fn probe_mixture<O: SymmetricOperator<f64> + ?Sized>(
    op: &O,
    steps: usize,
    seeds: usize,
    probe: ProbeKind,
    stream: &mut SeedStream,
    keep_vectors: bool,
) -> CliResult<(DiracMixture<f64>, Vec<RitzDecomposition<f64>>)> {
    if seeds == 0 {
        return Err(usage("need at least one probe vector"));
    }
    if steps == 0 {
        return Err(usage("need at least one Lanczos step"));
    }
    let n = op.dim();
    let probes: Vec<Vec<f64>> = (0..seeds).map(|_| stream.probe_vector(n, probe)).collect();
    let runs = lanczos_run_batch(op, steps.min(n), &probes, true)?;
    let ritz = runs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(r.into_ritz(keep_vectors && i == 0)?
                .with_seed_kind(SeedKind::from(probe)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((average_over_seeds(&ritz)?, ritz))
}

/// Atoms within this fraction of the largest magnitude count as zero modes.
const ZERO_MODE_TOLERANCE: f64 = 1e-8;

pub(crate) fn zero_scale(d: &DiracMixture<f64>) -> f64 {
    ZERO_MODE_TOLERANCE * d.max_value().abs().max(d.min_value().abs())
}

/// Analysis block of a spectrum file. Estimators that do not apply to the
/// spectrum at hand are left empty rather than failing the command.
pub(crate) fn analyze(
    mix: &DiracMixture<f64>,
    first_probe: &[f64],
    gradient_ritz: Option<&[f64]>,
    layers: usize,
    gap: f64,
    fit_mp: bool,
) -> CliResult<Analysis> {
    if !(gap > 0.0 && gap < 1.0) {
        return Err(usage(format!("--gap must lie in (0, 1), got {gap}")));
    }
    let outliers = count_outliers_gap(first_probe, gap)
        .ok()
        .map(|r| OutlierSummary {
            gap_threshold: gap,
            count: r.count,
            values: r.predicted,
        });
    let mp_fit = if fit_mp {
        let tol = zero_scale(mix);
        let zeros = mix.atoms().iter().filter(|a| a.value.abs() <= tol).count();
        fit_mp_to_bulk(mix, layers, zeros).ok().map(|p| MpFit {
            variance: p.variance,
            ratio: p.ratio,
            lambda_minus: p.lambda_minus(),
            lambda_plus: p.lambda_plus(),
            zero_mass: p.zero_mass(),
        })
    } else {
        None
    };
    Ok(Analysis {
        lambda_max: mix.max_value(),
        lambda_min: mix.min_value(),
        lambda_b: BulkEstimates {
            random_vector_weighted: bulk_mean_random_vector(mix, layers)
                .ok()
                .map(|e| e.lambda_b),
            gradient_median: gradient_ritz
                .and_then(|v| bulk_median_gradient(v, layers).ok())
                .map(|e| e.lambda_b),
        },
        outliers,
        mp_fit,
    })
}

pub(crate) fn planted_spec(opts: &PlantedOpts, seed: u64) -> CliResult<PlantedSpectrumSpec> {
    match (&opts.spec, opts.preset) {
        (Some(_), Some(_)) => Err(usage("give either --spec or --preset, not both")),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            PlantedSpectrumSpec::from_json(&text).map_err(|e| CliError::format(path, e))
        }
        (None, Some(PlantedPreset::BulkMean)) => Ok(PlantedSpectrumSpec::bulk_mean_3000(seed)),
        (None, Some(PlantedPreset::ThreeBand) | None) => {
            Ok(PlantedSpectrumSpec::three_band_1000(seed))
        }
    }
}

pub(crate) fn stem_rows(atoms: &[AtomRecord]) -> impl Iterator<Item = AtomRecord> + '_ {
    atoms.iter().copied()
}
