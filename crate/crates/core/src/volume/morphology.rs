use std::collections::VecDeque;

use crate::{Error, Result};

use super::{GridKind, VoxelGrid};

/// Fills every background region not 6-connected to the grid boundary.
pub fn binary_fill_holes(mask: &VoxelGrid) -> Result<VoxelGrid> {
    if mask.kind() != GridKind::Mask {
        return Err(Error::Kind {
            expected: "mask",
            found: mask.kind().name(),
        });
    }
    let [nx, ny, nz] = mask.shape();
    let data = mask.data();
    let mut outside = vec![false; data.len()];
    let mut queue = VecDeque::new();

    let idx = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let on_edge =
                    i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
                let id = idx(i, j, k);
                if on_edge && data[id] == 0.0 {
                    outside[id] = true;
                    queue.push_back((i, j, k));
                }
            }
        }
    }

    while let Some((i, j, k)) = queue.pop_front() {
        let mut visit = |i: usize, j: usize, k: usize| {
            let id = idx(i, j, k);
            if !outside[id] && data[id] == 0.0 {
                outside[id] = true;
                queue.push_back((i, j, k));
            }
        };
        if i > 0 {
            visit(i - 1, j, k);
        }
        if i + 1 < nx {
            visit(i + 1, j, k);
        }
        if j > 0 {
            visit(i, j - 1, k);
        }
        if j + 1 < ny {
            visit(i, j + 1, k);
        }
        if k > 0 {
            visit(i, j, k - 1);
        }
        if k + 1 < nz {
            visit(i, j, k + 1);
        }
    }

    let filled = outside.iter().map(|&o| if o { 0.0 } else { 1.0 }).collect();
    mask.with_data(filled, GridKind::Mask)
}
