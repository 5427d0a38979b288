use curvlens::optim::loss_landscape;
use serde_json::json;

use super::Report;
use crate::args::{GlobalOpts, LandscapeArgs};
use crate::artifacts::{read_json, write_csv, Checkpoint, OutDir, SpectrumFile};
use crate::error::{CliError, CliResult};
use crate::model::{dataset_spec, load_data, AnyModel};

pub fn cmd_landscape(args: &LandscapeArgs, global: &GlobalOpts) -> CliResult<Report> {
    let mut out = OutDir::create(&global.out)?;
    let checkpoint: Checkpoint = read_json(&args.checkpoint)?;
    let model = AnyModel::from_checkpoint(&checkpoint)?;
    let spectrum = SpectrumFile::read(&args.spectrum)?;
    let ritz = spectrum.load_ritz(&args.spectrum).map_err(|e| match e {
        CliError::Core(curvlens::Error::MissingRitzVectors) => CliError::format(
            &args.spectrum,
            "no Ritz vectors referenced; re-run `curvlens spectrum --keep-vectors` to retain them",
        ),
        other => other,
    })?;
    let spec = dataset_spec(&args.data, global.seed)?;
    let (train, test) = load_data(&spec, args.data.test_samples)?;
    let grid = loss_landscape(
        &model,
        &train,
        test.as_ref(),
        &ritz,
        args.dist,
        args.n_points,
        args.per_side,
    )?;
    write_csv(&out.file("landscape.csv"), grid.cells.iter().copied())?;

    let summary = json!({
        "command": "landscape",
        "directions": grid.directions.len(),
        "n_points": grid.distances.len(),
        "dist": args.dist,
        "eigenvalues": grid.directions.iter().map(|d| d.1).collect::<Vec<_>>(),
    });
    Ok(Report {
        summary,
        primary_csv: Some("landscape.csv".into()),
        artifacts: out.written().to_vec(),
        diverged: None,
    })
}
