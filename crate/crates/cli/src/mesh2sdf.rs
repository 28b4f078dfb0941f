use std::path::PathBuf;

use clap::Args;
use cortexforge::mesh::ply::read_ply;
use cortexforge::mesh::{detect_self_intersections, validate};
use cortexforge::sdf::mesh_to_sdf;
use cortexforge::volume::load_nifti;

use crate::config::{require_path, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::inputs::existing;

/// Compute a clipped signed distance field of a closed mesh on a template grid.
#[derive(Debug, Args)]
pub struct Mesh2SdfArgs {
    /// Closed, outward-oriented PLY mesh.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// NIfTI volume whose grid (shape and affine) the SDF is sampled on.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Saturation distance in mm.
    #[arg(long)]
    clip: Option<f64>,
    /// Output NIfTI (.nii or .nii.gz).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Mesh2SdfArgs, config: &PipelineConfig) -> CliResult<()> {
    let mesh_path = require_path(args.mesh, &config.paths.mesh, "mesh")?;
    let template_path = require_path(args.template, &config.paths.template, "template")?;
    let out = require_path(args.out, &config.paths.out, "out")?;
    let clip = args.clip.unwrap_or(config.sdf.clip_mm);
    if !(clip > 0.0 && clip.is_finite()) {
        return Err(CliError::usage(format!("--clip {clip} must be positive")));
    }
    existing(&mesh_path, "mesh")?;
    existing(&template_path, "template")?;

    let mesh = read_ply(&mesh_path)?;
    let template = load_nifti(&template_path)?;

    // A mesh that parses but cannot bound a volume is an algorithmic
    // failure, not a usage error.
    if mesh.is_empty() {
        return Err(CliError::algorithm(format!("{} has no faces", mesh_path.display())));
    }
    let diag = validate(&mesh);
    if !(diag.manifold && diag.oriented) {
        return Err(CliError::algorithm(format!(
            "{} is not a closed oriented surface ({} boundary edges, {} non-manifold edges, oriented: {})",
            mesh_path.display(),
            diag.boundary_edges,
            diag.nonmanifold_edges,
            diag.oriented
        )));
    }
    let hits = detect_self_intersections(&mesh).len();
    if hits > 0 {
        return Err(CliError::algorithm(format!(
            "{} self-intersects ({hits} face pairs)",
            mesh_path.display()
        )));
    }
    log::info!(
        "mesh2sdf faces={} genus={} shape={:?} clip_mm={clip}",
        mesh.face_count(),
        diag.genus,
        template.shape()
    );
    let sdf = mesh_to_sdf(&mesh, &template, clip)?;
    sdf.save(&out)?;
    println!("{}", out.display());
    Ok(())
}
