//! Separable Gaussian filtering on x-fastest volumes.

/// FWHM to standard deviation of a Gaussian.
pub const FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949_4;

/// Normalised sampled Gaussian with radius `ceil(4σ)` (at least 1 tap each
/// side). `sigma <= 0` yields the unit kernel.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Convolves `data` along `axis` with an odd-length `kernel`, replicating
/// edge values.
pub fn convolve_axis(data: &[f64], shape: [usize; 3], axis: usize, kernel: &[f64]) -> Vec<f64> {
    assert_eq!(kernel.len() % 2, 1, "kernel length must be odd");
    if kernel.len() == 1 {
        return data.iter().map(|v| v * kernel[0]).collect();
    }
    let radius = (kernel.len() / 2) as isize;
    let n = shape[axis] as isize;
    let stride = match axis {
        0 => 1,
        1 => shape[0],
        _ => shape[0] * shape[1],
    };
    let mut out = vec![0.0; data.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let pos = ((idx / stride) % shape[axis]) as isize;
        let line_start = idx - pos as usize * stride;
        let mut acc = 0.0;
        for (t, w) in kernel.iter().enumerate() {
            let q = (pos + t as isize - radius).clamp(0, n - 1) as usize;
            acc += w * data[line_start + q * stride];
        }
        *o = acc;
    }
    out
}

/// Isotropic Gaussian blur with `sigma` voxels along every axis.
pub fn gaussian_blur(data: &[f64], shape: [usize; 3], sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let mut cur = data.to_vec();
    for axis in 0..3 {
        cur = convolve_axis(&cur, shape, axis, &k);
    }
    cur
}
