//! In-place n-dimensional FFTs over row-major buffers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Per-axis plans for a fixed shape. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct FftNd {
    shape: Vec<usize>,
    plans: Vec<Arc<dyn Fft<f64>>>,
    scratch_len: usize,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("shape", &self.shape).finish()
    }
}

impl FftNd {
    pub fn new(shape: &[usize], direction: FftDirection) -> Self {
        let mut planner = FftPlanner::new();
        let plans: Vec<_> = shape
            .iter()
            .map(|&n| planner.plan_fft(n, direction))
            .collect();
        let scratch_len = plans
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            shape: shape.to_vec(),
            plans,
            scratch_len,
        }
    }

    pub fn forward(shape: &[usize]) -> Self {
        Self::new(shape, FftDirection::Forward)
    }

    pub fn inverse(shape: &[usize]) -> Self {
        Self::new(shape, FftDirection::Inverse)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized transform of `data` in place.
    pub fn process(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        let n = self.shape.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        let last = self.shape[n - 1];
        for chunk in data.chunks_exact_mut(last) {
            self.plans[n - 1].process_with_scratch(chunk, &mut scratch);
        }
        let mut line = Vec::new();
        for axis in (0..n - 1).rev() {
            let len = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let outer = data.len() / (len * stride);
            line.resize(len, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                let base = o * len * stride;
                for s in 0..stride {
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride + s];
                    }
                    self.plans[axis].process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride + s] = *v;
                    }
                }
            }
        }
    }
}
