use curvlens::lanczos::{lanczos_run, SeedKind};
use curvlens::models::{curvature_operator, Model};
use curvlens::{Error, SeedStream, SymmetricOperator};
use serde_json::json;

use super::{analyze, probe_mixture, stem_rows, Report};
use crate::args::{GlobalOpts, SpectrumArgs};
use crate::artifacts::{
    atoms_of, write_csv, write_json, LanczosInfo, OperatorInfo, OutDir, RitzVectorsFile,
    SpectrumFile, SCHEMA_VERSION,
};
use crate::error::CliResult;
use crate::model::{dataset_spec, load_data, AnyModel};

pub fn cmd_spectrum(args: &SpectrumArgs, global: &GlobalOpts) -> CliResult<Report> {
    let mut out = OutDir::create(&global.out)?;
    let spec = dataset_spec(&args.data, global.seed)?;
    let model = AnyModel::load_or_init(&args.model, &spec, global.seed)?;
    let (train, _) = load_data(&spec, 0)?;

    let mut stream = SeedStream::new(global.seed);
    let mut batch_stream = stream.fork();
    let mut probe_stream = match args.probe_seed {
        Some(seed) => SeedStream::new(seed),
        None => stream.fork(),
    };
    let batch = if args.batch == 0 || args.batch >= train.len() {
        train
    } else {
        train.subset(&batch_stream.sample_without_replacement(train.len(), args.batch))
    };
    let op = curvature_operator(&model, &batch, args.curvature)?;
    let (mix, ritz) = probe_mixture(
        &op,
        args.steps,
        args.seeds,
        args.probe,
        &mut probe_stream,
        args.keep_vectors,
    )?;

    // the gradient-median estimator needs a gradient-seeded run of its own
    let gradient_ritz = {
        let (_, g) = model.loss_and_gradient(&batch)?;
        match lanczos_run(&op, args.steps.min(op.dim()), &g, true) {
            Ok(run) => Some(
                run.into_ritz(false)?
                    .with_seed_kind(SeedKind::Gradient)
                    .values,
            ),
            Err(Error::ZeroSeed) => None,
            Err(e) => return Err(e.into()),
        }
    };
    let layers = args.layers.unwrap_or_else(|| model.layer_count());
    let analysis = analyze(
        &mix,
        &ritz[0].values,
        gradient_ritz.as_deref(),
        layers,
        args.gap,
        args.curvature.is_positive_semidefinite(),
    )?;

    let ritz_vectors = match RitzVectorsFile::from_ritz(&ritz[0]) {
        Some(v) => {
            write_json(&out.file("ritz_vectors.json"), &v)?;
            Some("ritz_vectors.json".to_string())
        }
        None => None,
    };
    let file = SpectrumFile {
        schema_version: SCHEMA_VERSION,
        operator: OperatorInfo {
            kind: format!("{}-{}", model.kind(), args.curvature.name()),
            dim: op.dim(),
            label: op.label(),
        },
        lanczos: LanczosInfo {
            steps: ritz[0].steps,
            seeds: args.seeds,
            probe_kind: args.probe.name().into(),
        },
        atoms: atoms_of(&mix),
        analysis,
        ritz_vectors,
    };
    file.write(&out.file("spectrum.json"))?;
    write_csv(&out.file("stem.csv"), stem_rows(&file.atoms))?;

    let summary = json!({
        "command": "spectrum",
        "operator": file.operator.kind,
        "dim": file.operator.dim,
        "samples": batch.len(),
        "loss": model.loss(&batch)?,
        "atoms": mix.len(),
        "lambda_max": file.analysis.lambda_max,
        "lambda_min": file.analysis.lambda_min,
        "lambda_b_weighted": file.analysis.lambda_b.random_vector_weighted,
        "lambda_b_median": file.analysis.lambda_b.gradient_median,
        "outliers": file.analysis.outliers.as_ref().map(|o| o.count),
    });
    Ok(Report {
        summary,
        primary_csv: Some("stem.csv".into()),
        artifacts: out.written().to_vec(),
        diverged: None,
    })
}
