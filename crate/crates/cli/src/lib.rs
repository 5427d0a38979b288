//! Command implementations behind the `curvlens` binary.
//!
//! Each `cmd_*` function writes its artifacts into `--out` and returns a
//! [`Report`]; [`execute`] adds the run manifest. The binary is a thin shell
//! over [`execute`], so tests can drive every command in-process.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod error;
pub mod model;

use std::path::Path;
use std::time::Instant;

use serde_json::json;

pub use args::{Cli, Command, Format, GlobalOpts};
pub use artifacts::{Checkpoint, RunManifest, SpectrumFile};
pub use commands::{
    cmd_bounds_table, cmd_compare_diag, cmd_landscape, cmd_rmt, cmd_spectrum, cmd_train, Report,
};
pub use error::{CliError, CliResult};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "CURVLENS_THREADS";

/// Runs `command`, then writes `manifest.json` next to its artifacts.
pub fn execute(
    global: &GlobalOpts,
    command: &Command,
    argv: &[String],
) -> CliResult<(Report, RunManifest)> {
    let start = Instant::now();
    let report = match command {
        Command::Rmt(a) => cmd_rmt(a, global)?,
        Command::Spectrum(a) => cmd_spectrum(a, global)?,
        Command::CompareDiag(a) => cmd_compare_diag(a, global)?,
        Command::Train(a) => cmd_train(a, global)?,
        Command::Landscape(a) => cmd_landscape(a, global)?,
        Command::BoundsTable(a) => cmd_bounds_table(a, global)?,
    };
    let mut artifacts = report.artifacts.clone();
    artifacts.push("manifest.json".into());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        argv: argv.to_vec(),
        flags: json!({ "global": global, "command": command }),
        seed: global.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        artifacts,
        diverged: report.diverged,
    };
    artifacts::write_json(&global.out.join("manifest.json"), &manifest)?;
    Ok((report, manifest))
}

/// Re-runs the command recorded in a manifest, writing into `out`.
pub fn replay(manifest: &Path, out: &Path) -> CliResult<(Report, RunManifest)> {
    let m: RunManifest = artifacts::read_json(manifest)?;
    let bad = |e: serde_json::Error| CliError::format(manifest, e);
    let mut global: GlobalOpts = serde_json::from_value(m.flags["global"].clone()).map_err(bad)?;
    let command: Command = serde_json::from_value(m.flags["command"].clone()).map_err(bad)?;
    global.out = out.to_path_buf();
    execute(&global, &command, &m.argv)
}

/// Text printed on stdout: the summary as JSON, or with `--format csv` the
/// command's main table (key/value pairs when it has none).
pub fn render(report: &Report, global: &GlobalOpts) -> CliResult<String> {
    match global.format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&report.summary).expect("summary is plain JSON");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => match &report.primary_csv {
            Some(name) => {
                let path = global.out.join(name);
                std::fs::read_to_string(&path).map_err(CliError::io(&path))
            }
            None => {
                let mut s = String::from("key,value\n");
                if let Some(map) = report.summary.as_object() {
                    for (k, v) in map {
                        s.push_str(&format!("{k},{v}\n"));
                    }
                }
                Ok(s)
            }
        },
    }
}

/// Builds the global rayon pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        error::usage(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| error::usage(format!("cannot size the thread pool: {e}")))
}
