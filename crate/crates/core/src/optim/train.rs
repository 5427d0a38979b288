use serde::{Deserialize, Serialize};

use crate::bulk::{bulk_mean_random_vector, bulk_median_gradient, BulkMethod};
use crate::density::DiracMixture;
use crate::error::{invalid, Error, Result};
use crate::lanczos::{lanczos_run, SeedKind};
use crate::models::{curvature_operator, CurvatureKind, Dataset, Model};
use crate::optim::{ssgd_schedule, ssgdm_schedule, theoretical_schedule, SpectralSchedule};
use crate::rng::{ProbeKind, SeedStream};
use crate::Real;

/// Losses above this abort training.
const DIVERGENCE_LOSS: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Ssgd,
    Ssgdm,
    SgdFixed,
    SgdmFixed,
    SgdTheoretical,
    SgdmTheoretical,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Ssgd,
        Variant::Ssgdm,
        Variant::SgdFixed,
        Variant::SgdmFixed,
        Variant::SgdTheoretical,
        Variant::SgdmTheoretical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ssgd => "ssgd",
            Variant::Ssgdm => "ssgdm",
            Variant::SgdFixed => "sgd_fixed",
            Variant::SgdmFixed => "sgdm_fixed",
            Variant::SgdTheoretical => "sgd_theoretical",
            Variant::SgdmTheoretical => "sgdm_theoretical",
        }
    }

    pub fn is_spectral(self) -> bool {
        matches!(self, Variant::Ssgd | Variant::Ssgdm)
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s || v.name().replace('_', "-") == s)
            .ok_or_else(|| format!("unknown variant '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: usize,
    /// Lanczos steps `m` per spectral refresh.
    pub lanczos_steps: usize,
    /// Steps between spectral refreshes.
    pub refresh_interval: usize,
    pub curvature: CurvatureKind,
    /// Samples used for the curvature operator at a refresh; 0 means the
    /// whole training set.
    pub curvature_batch: usize,
    /// Outliers dropped by the bulk estimator; defaults to the model's layer
    /// count.
    pub layers: Option<usize>,
    pub bulk_method: BulkMethod,
    pub probe: ProbeKind,
    pub fixed_alpha: f64,
    pub fixed_beta: f64,
    /// `(L, μ)` for the theoretical variants.
    pub bounds: Option<(f64, f64)>,
    /// Steps between full-data evaluations; 0 evaluates only at the end.
    pub eval_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            steps: 500,
            lanczos_steps: 30,
            refresh_interval: 100,
            curvature: CurvatureKind::Ggn,
            curvature_batch: 0,
            layers: None,
            bulk_method: BulkMethod::RandomVectorWeighted,
            probe: ProbeKind::Rademacher,
            fixed_alpha: 0.1,
            fixed_beta: 0.9,
            bounds: None,
            eval_interval: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if self.refresh_interval == 0 {
            return Err(invalid("refresh interval must be at least 1"));
        }
        if self.lanczos_steps < 3 {
            return Err(invalid("need at least 3 Lanczos steps"));
        }
        Ok(())
    }
}

/// Outcome of one spectral refresh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refresh<T> {
    pub step: usize,
    pub lambda_max: T,
    pub lambda_b: T,
    pub alpha: T,
    pub beta: T,
    pub warning: Option<String>,
}

/// Estimates `λ_max` and `λ_b` of the curvature on `batch` and derives the
/// schedule of `variant` (SSGDM for `Variant::Ssgdm`, SSGD otherwise).
pub fn spectral_refresh<T: Real, M: Model<T>>(
    model: &M,
    batch: &Dataset<T>,
    config: &TrainConfig,
    variant: Variant,
    stream: &mut SeedStream,
) -> Result<(Refresh<T>, SpectralSchedule<T>)> {
    config.validate()?;
    if !config.curvature.is_positive_semidefinite() {
        return Err(invalid(
            "spectral schedules need a positive semi-definite curvature (ggn or abs_hessian)",
        ));
    }
    let op = curvature_operator(model, batch, config.curvature)?;
    let layers = config.layers.unwrap_or_else(|| model.layer_count());
    let steps = config.lanczos_steps.min(model.param_count());
    let (seed, kind) = match config.bulk_method {
        BulkMethod::RandomVectorWeighted => (
            stream.probe_vector(model.param_count(), config.probe),
            SeedKind::from(config.probe),
        ),
        BulkMethod::GradientMedian => (model.loss_and_gradient(batch)?.1, SeedKind::Gradient),
    };
    let ritz = lanczos_run(&op, steps, &seed, true)?
        .into_ritz(false)?
        .with_seed_kind(kind);
    let lambda_max = ritz.max_value();
    let mut warning = None;

    let estimate = match config.bulk_method {
        BulkMethod::RandomVectorWeighted => {
            bulk_mean_random_vector(&DiracMixture::from_ritz(&ritz)?, layers)
        }
        BulkMethod::GradientMedian => bulk_median_gradient(&ritz.values, layers),
    };
    let mut lambda_b = match estimate {
        Ok(e) => e.lambda_b,
        Err(Error::TooFew { .. }) => {
            // the Krylov space closed early: few distinct eigenvalues
            warning = Some(format!(
                "only {} Ritz values; using the smallest as the bulk",
                ritz.len()
            ));
            ritz.min_value()
        }
        Err(e) => return Err(e),
    };
    if lambda_b > lambda_max {
        warning = Some(format!(
            "bulk estimate {lambda_b} exceeds lambda_max {lambda_max}; clamped"
        ));
        lambda_b = lambda_max;
    }
    let floor = lambda_max * T::lit(1e-6);
    if !(lambda_b > floor) {
        warning = Some(format!(
            "bulk estimate {lambda_b} is not positive; floored at {floor}"
        ));
        lambda_b = floor;
    }
    let schedule = if variant == Variant::Ssgdm {
        ssgdm_schedule(lambda_max, lambda_b)?
    } else {
        ssgd_schedule(lambda_max, lambda_b)?
    };
    Ok((
        Refresh {
            step: 0,
            lambda_max,
            lambda_b,
            alpha: schedule.alpha,
            beta: schedule.beta,
            warning,
        },
        schedule,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub step: usize,
    /// Minibatch loss before the update.
    pub loss: T,
    pub alpha: T,
    pub beta: T,
    pub lambda_max: Option<T>,
    pub lambda_b: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord<T> {
    pub step: usize,
    pub train_loss: T,
    pub test_loss: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace<T> {
    pub variant: Variant,
    pub records: Vec<StepRecord<T>>,
    pub refreshes: Vec<Refresh<T>>,
    pub evals: Vec<EvalRecord<T>>,
    pub diverged: bool,
    /// Full-training-set loss at the end (infinite after divergence).
    pub final_train_loss: T,
}

fn initial_schedule<T: Real>(
    config: &TrainConfig,
    variant: Variant,
) -> Result<Option<SpectralSchedule<T>>> {
    Ok(match variant {
        Variant::SgdFixed => Some(SpectralSchedule::fixed(
            T::lit(config.fixed_alpha),
            T::zero(),
        )?),
        Variant::SgdmFixed => Some(SpectralSchedule::fixed(
            T::lit(config.fixed_alpha),
            T::lit(config.fixed_beta),
        )?),
        Variant::SgdTheoretical | Variant::SgdmTheoretical => {
            let (l, mu) = config
                .bounds
                .ok_or_else(|| invalid("theoretical variants need (L, mu) bounds"))?;
            Some(theoretical_schedule(
                T::lit(l),
                T::lit(mu),
                variant == Variant::SgdmTheoretical,
            )?)
        }
        Variant::Ssgd | Variant::Ssgdm => None,
    })
}

/// Heavy-ball minibatch training, `p ← p − α g + β (p − p_prev)`.
///
/// Spectral variants re-estimate the schedule every `refresh_interval`
/// steps. Training stops early, with `diverged` set, once a loss exceeds
/// 1e10 or stops being finite.
pub fn train<T: Real, M: Model<T>>(
    model: &mut M,
    data: &Dataset<T>,
    held_out: Option<&Dataset<T>>,
    config: &TrainConfig,
    variant: Variant,
) -> Result<TrainTrace<T>> {
    config.validate()?;
    let mut stream = SeedStream::new(config.seed);
    let mut batch_stream = stream.fork();
    let mut probe_stream = stream.fork();
    let mut schedule = initial_schedule::<T>(config, variant)?;
    let mut trace = TrainTrace {
        variant,
        records: Vec::with_capacity(config.steps),
        refreshes: vec![],
        evals: vec![],
        diverged: false,
        final_train_loss: T::infinity(),
    };
    let curvature_data = if config.curvature_batch == 0 || config.curvature_batch >= data.len() {
        None
    } else {
        Some(config.curvature_batch)
    };
    let n = data.len();
    let mut prev = model.params().to_vec();
    let mut current_extremes: Option<(T, T)> = None;

    let evaluate = |model: &M, step: usize| -> Result<EvalRecord<T>> {
        Ok(EvalRecord {
            step,
            train_loss: model.loss(data)?,
            test_loss: held_out
                .filter(|d| !d.is_empty())
                .map(|d| model.loss(d))
                .transpose()?,
        })
    };

    for step in 0..config.steps {
        if variant.is_spectral() && step % config.refresh_interval == 0 {
            let owned;
            let curvature_batch = match curvature_data {
                None => data,
                Some(k) => {
                    owned = data.subset(&batch_stream.sample_without_replacement(n, k));
                    &owned
                }
            };
            let (mut r, s) =
                spectral_refresh(&*model, curvature_batch, config, variant, &mut probe_stream)?;
            r.step = step;
            current_extremes = Some((r.lambda_max, r.lambda_b));
            trace.refreshes.push(r);
            schedule = Some(s);
        }
        let sched = schedule.expect("schedule is set before the first step");
        let batch = if config.batch_size >= n && model.uses_data() {
            data.clone()
        } else if model.uses_data() {
            data.subset(&batch_stream.sample_without_replacement(n, config.batch_size))
        } else {
            Dataset::empty(data.d_in)
        };
        let (loss, grad) = match model.loss_and_gradient(&batch) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                trace.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        trace.records.push(StepRecord {
            step,
            loss,
            alpha: sched.alpha,
            beta: sched.beta,
            lambda_max: current_extremes.map(|e| e.0),
            lambda_b: current_extremes.map(|e| e.1),
        });
        if loss > T::lit(DIVERGENCE_LOSS) {
            trace.diverged = true;
            break;
        }
        let p = model.params().to_vec();
        let next: Vec<T> = p
            .iter()
            .zip(&grad)
            .zip(&prev)
            .map(|((&pi, &gi), &qi)| pi - sched.alpha * gi + sched.beta * (pi - qi))
            .collect();
        if next.iter().any(|x| !x.is_finite()) {
            trace.diverged = true;
            break;
        }
        prev = p;
        model.set_params(&next)?;
        if config.eval_interval > 0 && (step + 1) % config.eval_interval == 0 {
            trace.evals.push(evaluate(model, step + 1)?);
        }
    }
    if !trace.diverged {
        let last = evaluate(model, trace.records.len())?;
        trace.final_train_loss = last.train_loss;
        if trace.evals.last().map(|e| e.step) != Some(last.step) {
            trace.evals.push(last);
        }
    }
    Ok(trace)
}
