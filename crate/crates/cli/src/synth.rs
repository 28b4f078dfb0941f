use std::path::PathBuf;

use clap::Args;
use cortexforge::synth::{generate_pair, write_shard, SDF_CHANNELS};
use cortexforge::SdfGrid;
use rayon::prelude::*;

use crate::config::{require_path, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::inputs::{conform, load_labels, load_sdf};

/// Generate synthetic image / SDF training shards from a label volume.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Label volume (NIfTI); resampled to 1 mm isotropic if needed.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Directory holding sdf_{lw,lp,rw,rp}.nii.gz on the label grid.
    #[arg(long)]
    sdf_dir: Option<PathBuf>,
    /// Number of shards; shard i uses seed + i.
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; one sub-directory per seed.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: SynthArgs, config: &PipelineConfig) -> CliResult<()> {
    let labels_path = require_path(args.labels, &config.paths.labels, "labels")?;
    let sdf_dir = require_path(args.sdf_dir, &config.paths.sdf_dir, "sdf-dir")?;
    let out = require_path(args.out, &config.paths.out, "out")?;
    let synth = config.synth_config()?;
    let seed = config.resolve_seed(args.seed)?;

    let mut labels = load_labels(&labels_path)?;
    let mut sdfs = Vec::with_capacity(4);
    for ch in SDF_CHANNELS {
        let sdf = load_sdf(&sdf_dir, ch, config.sdf.clip_mm)?;
        if !sdf.grid().same_geometry(&labels) {
            return Err(CliError::usage(format!(
                "sdf_{ch} grid {:?} does not match the label grid {:?}",
                sdf.grid().shape(),
                labels.shape()
            )));
        }
        sdfs.push(sdf);
    }
    if let Some(conformed) = conform(&labels)? {
        log::info!("resampling labels {:?} -> {:?} at 1 mm", labels.shape(), conformed.shape());
        labels = conformed;
        sdfs = sdfs
            .iter()
            .map(|s| Ok(SdfGrid::new(conform(s.grid())?.expect("same geometry as the labels"))?))
            .collect::<CliResult<_>>()?;
    }
    let sdfs: [SdfGrid; 4] = sdfs.try_into().expect("four channels");

    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", out.display())))?;
    if args.n == 0 {
        log::warn!("--n 0: no shards written to {}", out.display());
        return Ok(());
    }

    let dirs = (0..args.n)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let pair = generate_pair(&labels, &sdfs, &synth, s)?;
            let dir = write_shard(&pair, &out)?;
            log::info!(
                "shard seed={s} orientation={:?} spacing_mm={} noise_std={:.3}",
                pair.provenance.orientation,
                pair.provenance.spacing_mm,
                pair.provenance.noise_std
            );
            Ok(dir)
        })
        .collect::<CliResult<Vec<_>>>()?;
    for d in dirs {
        println!("{}", d.display());
    }
    Ok(())
}
