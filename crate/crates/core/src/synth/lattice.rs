//! Coarse control lattices spread evenly over a voxel grid and
//! interpolated trilinearly.

/// `n³` control values; node `(a, b, c)` sits at voxel coordinate
/// `(a, b, c) · (shape − 1) / (n − 1)` of the grid it is laid over.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Lattice<T> {
    pub n: usize,
    pub values: Vec<T>,
}

impl<T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>> Lattice<T> {
    fn at(&self, a: usize, b: usize, c: usize) -> T {
        self.values[a + self.n * (b + self.n * c)]
    }

    /// Value at voxel coordinate `u` of a grid with `shape`.
    pub fn sample(&self, u: [f64; 3], shape: [usize; 3]) -> T {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let scale = if shape[a] > 1 { (self.n - 1) as f64 / (shape[a] - 1) as f64 } else { 0.0 };
            let x = (u[a] * scale).clamp(0.0, (self.n - 1) as f64);
            let i0 = (x.floor() as usize).min(self.n.saturating_sub(2));
            base[a] = i0;
            frac[a] = x - i0 as f64;
        }
        let [i, j, k] = base;
        let [tx, ty, tz] = frac;
        let step = usize::from(self.n > 1);
        let lerp = |p: T, q: T, t: f64| p * (1.0 - t) + q * t;
        let c00 = lerp(self.at(i, j, k), self.at(i + step, j, k), tx);
        let c10 = lerp(self.at(i, j + step, k), self.at(i + step, j + step, k), tx);
        let c01 = lerp(self.at(i, j, k + step), self.at(i + step, j, k + step), tx);
        let c11 = lerp(self.at(i, j + step, k + step), self.at(i + step, j + step, k + step), tx);
        lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_interpolated_exactly() {
        let lat = Lattice { n: 3, values: (0..27).map(|v| v as f64).collect() };
        let shape = [11, 5, 21];
        assert_eq!(lat.sample([0.0, 0.0, 0.0], shape), 0.0);
        assert_eq!(lat.sample([10.0, 4.0, 20.0], shape), 26.0);
        assert_eq!(lat.sample([5.0, 2.0, 10.0], shape), 13.0);
        // linear in each axis between nodes
        assert!((lat.sample([2.5, 0.0, 0.0], shape) - 0.5).abs() < 1e-12);
    }
}
