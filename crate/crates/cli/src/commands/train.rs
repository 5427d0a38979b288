use curvlens::models::{lipschitz_bounds_logreg, Model};
use curvlens::optim::{train, TrainConfig, Variant};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Report;
use crate::args::{GlobalOpts, TrainArgs};
use crate::artifacts::{write_csv, OutDir};
use crate::error::{usage, CliResult};
use crate::model::{dataset_spec, load_data, AnyModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_max: Option<f64>,
    pub lambda_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefreshRow {
    pub step: usize,
    pub lambda_max: f64,
    pub lambda_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub step: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
}

/// `(L, μ)` for the theoretical schedules: the flags when given, otherwise
/// the logistic-regression certificate on the training set.
fn bounds(
    args: &TrainArgs,
    model: &AnyModel,
    data: &curvlens::models::Dataset<f64>,
) -> CliResult<Option<(f64, f64)>> {
    if !matches!(
        args.variant,
        Variant::SgdTheoretical | Variant::SgdmTheoretical
    ) {
        return Ok(None);
    }
    let derived = match model {
        AnyModel::Logreg(_) => Some(lipschitz_bounds_logreg(data, model.weight_decay())?),
        _ => None,
    };
    match (args.lipschitz, args.strong_convexity, derived) {
        (Some(l), Some(mu), _) => Ok(Some((l, mu))),
        (l, mu, Some((dl, dmu))) => Ok(Some((l.unwrap_or(dl), mu.unwrap_or(dmu)))),
        _ => Err(usage(
            "theoretical variants need --lipschitz and --strong-convexity for this model",
        )),
    }
}

pub fn cmd_train(args: &TrainArgs, global: &GlobalOpts) -> CliResult<Report> {
    let mut out = OutDir::create(&global.out)?;
    let spec = dataset_spec(&args.data, global.seed)?;
    let mut model = AnyModel::load_or_init(&args.model, &spec, global.seed)?;
    let (data, test) = load_data(&spec, args.data.test_samples)?;
    let config = TrainConfig {
        batch_size: args.batch_size,
        steps: args.steps,
        lanczos_steps: args.lanczos_steps,
        refresh_interval: args.refresh,
        curvature: args.curvature,
        curvature_batch: args.curvature_batch,
        layers: args.layers,
        bulk_method: args.bulk_method,
        probe: args.probe,
        fixed_alpha: args.alpha,
        fixed_beta: args.beta,
        bounds: bounds(args, &model, &data)?,
        eval_interval: args.eval_interval,
        seed: global.seed,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let trace = train(&mut model, &data, test.as_ref(), &config, args.variant)?;

    write_csv(
        &out.file("trace.csv"),
        trace.records.iter().map(|r| TraceRow {
            step: r.step,
            loss: r.loss,
            alpha: r.alpha,
            beta: r.beta,
            lambda_max: r.lambda_max,
            lambda_b: r.lambda_b,
        }),
    )?;
    write_csv(
        &out.file("refreshes.csv"),
        trace.refreshes.iter().map(|r| RefreshRow {
            step: r.step,
            lambda_max: r.lambda_max,
            lambda_b: r.lambda_b,
            alpha: r.alpha,
            beta: r.beta,
            warning: r.warning.clone(),
        }),
    )?;
    write_csv(
        &out.file("evals.csv"),
        trace.evals.iter().map(|e| EvalRow {
            step: e.step,
            train_loss: e.train_loss,
            test_loss: e.test_loss,
        }),
    )?;
    model.to_checkpoint().write(&out.file("checkpoint.json"))?;

    let final_test = trace.evals.last().and_then(|e| e.test_loss);
    let summary = json!({
        "command": "train",
        "variant": args.variant.name(),
        "steps_run": trace.records.len(),
        "refreshes": trace.refreshes.len(),
        "diverged": trace.diverged,
        "final_train_loss": trace.final_train_loss,
        "final_test_loss": final_test,
        "bounds": config.bounds,
    });
    Ok(Report {
        summary,
        primary_csv: Some("trace.csv".into()),
        artifacts: out.written().to_vec(),
        diverged: Some(trace.diverged),
    })
}
