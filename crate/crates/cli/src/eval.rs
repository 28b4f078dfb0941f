use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cortexforge::mesh::ply::read_ply;
use cortexforge::metrics::{mask_dice, surface_distance, thickness, Direction, ThicknessMode};
use serde_json::{json, Map, Value};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::inputs::{existing, load_mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    AToB,
    BToA,
    Symmetric,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::AToB => Direction::AToB,
            DirectionArg::BToA => Direction::BToA,
            DirectionArg::Symmetric => Direction::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThicknessArg {
    Correspondence,
    ClosestPointSymmetric,
}

impl From<ThicknessArg> for ThicknessMode {
    fn from(t: ThicknessArg) -> Self {
        match t {
            ThicknessArg::Correspondence => ThicknessMode::Correspondence,
            ThicknessArg::ClosestPointSymmetric => ThicknessMode::ClosestPointSymmetric,
        }
    }
}

/// Compare surfaces or masks and summarise thickness, as one JSON object.
///
/// Each complete pair adds a key: `surface_distance` for --mesh-a/--mesh-b,
/// `dice` for --mask-a/--mask-b and `thickness` for --white/--pial.
#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, requires = "mesh_b")]
    mesh_a: Option<PathBuf>,
    #[arg(long, requires = "mesh_a")]
    mesh_b: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Symmetric)]
    direction: DirectionArg,
    /// Area-weighted sample points per face.
    #[arg(long, default_value_t = 4)]
    samples_per_face: usize,
    #[arg(long, requires = "mask_b")]
    mask_a: Option<PathBuf>,
    #[arg(long, requires = "mask_a")]
    mask_b: Option<PathBuf>,
    #[arg(long, requires = "pial")]
    white: Option<PathBuf>,
    #[arg(long, requires = "white")]
    pial: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ThicknessArg::Correspondence)]
    thickness_mode: ThicknessArg,
    /// Per-vertex thickness, one value per line.
    #[arg(long, requires = "white")]
    thickness_out: Option<PathBuf>,
    /// JSON destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn mesh(path: &Path, what: &str) -> CliResult<cortexforge::TriangleMesh> {
    existing(path, what)?;
    Ok(read_ply(path)?)
}

pub fn run(args: EvalArgs, _config: &PipelineConfig) -> CliResult<()> {
    if args.mesh_a.is_none() && args.mask_a.is_none() && args.white.is_none() {
        return Err(CliError::usage(
            "nothing to evaluate: give --mesh-a/--mesh-b, --mask-a/--mask-b or --white/--pial",
        ));
    }
    let mut report = Map::new();
    let mut per_vertex = None;

    if let (Some(a), Some(b)) = (&args.mesh_a, &args.mesh_b) {
        let (a, b) = (mesh(a, "mesh")?, mesh(b, "mesh")?);
        let stats = surface_distance(&a, &b, args.samples_per_face, args.direction.into())?;
        report.insert("surface_distance".into(), serde_json::to_value(stats).expect("stats serialise"));
    }
    if let (Some(a), Some(b)) = (&args.mask_a, &args.mask_b) {
        let (a, b) = (load_mask(a)?, load_mask(b)?);
        report.insert("dice".into(), json!(mask_dice(&a, &b)?));
    }
    if let (Some(w), Some(p)) = (&args.white, &args.pial) {
        let (w, p) = (mesh(w, "white surface")?, mesh(p, "pial surface")?);
        let mode: ThicknessMode = args.thickness_mode.into();
        let t = thickness(&w, &p, mode)?;
        report.insert("thickness".into(), summarise(&t, mode));
        per_vertex = Some(t);
    }

    // Render everything before touching the filesystem.
    let text = serde_json::to_string_pretty(&Value::Object(report)).expect("report serialises") + "\n";
    let per_vertex_text = per_vertex.map(|t| {
        t.iter().fold(String::new(), |mut s, v| {
            let _ = writeln!(s, "{v}");
            s
        })
    });
    if let (Some(path), Some(body)) = (&args.thickness_out, &per_vertex_text) {
        write(path, body)?;
    }
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write(path: &Path, body: &str) -> CliResult<()> {
    std::fs::write(path, body).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn summarise(t: &[f64], mode: ThicknessMode) -> Value {
    let n = t.len() as f64;
    let mean = t.iter().sum::<f64>() / n;
    let var = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    json!({
        "mode": mode,
        "vertices": t.len(),
        "mean_mm": mean,
        "std_mm": var.sqrt(),
        "min_mm": t.iter().copied().fold(f64::INFINITY, f64::min),
        "max_mm": t.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
