use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cortexforge::fit::{fit_pial, fit_surface, init_surface};
use cortexforge::mesh::ply::write_ply;
use cortexforge::{FitConfig, FitReport, TriangleMesh};

use crate::config::{require_path, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::inputs::{load_mask, load_sdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Hemi {
    Left,
    Right,
    Both,
}

/// Fit white-matter and pial surfaces to predicted signed distance fields.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Left white-matter mask (NIfTI); required for --hemi left/both.
    #[arg(long)]
    lh_mask: Option<PathBuf>,
    /// Right white-matter mask (NIfTI); required for --hemi right/both.
    #[arg(long)]
    rh_mask: Option<PathBuf>,
    /// Directory with sdf_* or pred_sdf_* {lw,lp,rw,rp} volumes.
    #[arg(long)]
    sdf_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Hemi::Both)]
    hemi: Hemi,
    /// Output directory for {lh,rh}.{white,pial}.{ply,json}.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct HemiResult {
    prefix: &'static str,
    white: (TriangleMesh, FitReport),
    pial: (TriangleMesh, FitReport),
}

fn fit_hemisphere(
    prefix: &'static str,
    mask_path: &Path,
    sdf_dir: &Path,
    channels: [&str; 2],
    config: &PipelineConfig,
    fit: &FitConfig,
) -> CliResult<HemiResult> {
    let mask = load_mask(mask_path)?;
    let wm_sdf = load_sdf(sdf_dir, channels[0], config.sdf.clip_mm)?;
    let pial_sdf = load_sdf(sdf_dir, channels[1], config.sdf.clip_mm)?;

    let initial = init_surface(&mask)?;
    log::info!("fit hemi={prefix} init vertices={} faces={}", initial.vertex_count(), initial.face_count());
    let white = fit_surface(&initial, &wm_sdf, fit)?;
    log_report(prefix, "white", &white.1);
    let pial = fit_pial(&white.0, &pial_sdf, fit)?;
    log_report(prefix, "pial", &pial.1);
    Ok(HemiResult { prefix, white, pial })
}

fn log_report(prefix: &str, surface: &str, r: &FitReport) {
    log::info!(
        "fit hemi={prefix} surface={surface} iterations={} energy={:.6} mean_abs_sdf_mm={:.4} converged={}",
        r.iterations_run,
        r.final_energy,
        r.final_mean_abs_sdf_mm,
        r.converged
    );
    if !r.converged {
        log::warn!("{prefix}.{surface} stopped at max_iters without converging");
    }
}

fn write_json(value: &impl serde::Serialize, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialise");
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn run(args: FitArgs, config: &PipelineConfig) -> CliResult<()> {
    let sdf_dir = require_path(args.sdf_dir, &config.paths.sdf_dir, "sdf-dir")?;
    let out = require_path(args.out, &config.paths.out, "out")?;
    let fit = config.fit_config()?;

    let mut jobs = Vec::new();
    if matches!(args.hemi, Hemi::Left | Hemi::Both) {
        jobs.push(("lh", require_path(args.lh_mask, &config.paths.lh_mask, "lh-mask")?, ["lw", "lp"]));
    }
    if matches!(args.hemi, Hemi::Right | Hemi::Both) {
        jobs.push(("rh", require_path(args.rh_mask, &config.paths.rh_mask, "rh-mask")?, ["rw", "rp"]));
    }

    // Every hemisphere is fitted before anything is written, so a failure
    // leaves no partial output.
    let results = jobs
        .iter()
        .map(|(prefix, mask, channels)| fit_hemisphere(prefix, mask, &sdf_dir, *channels, config, &fit))
        .collect::<CliResult<Vec<_>>>()?;

    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", out.display())))?;
    for r in &results {
        for (surface, (mesh, report)) in [("white", &r.white), ("pial", &r.pial)] {
            let ply = out.join(format!("{}.{surface}.ply", r.prefix));
            write_ply(mesh, &ply)?;
            write_json(report, &out.join(format!("{}.{surface}.json", r.prefix)))?;
            println!("{}", ply.display());
        }
    }
    Ok(())
}
