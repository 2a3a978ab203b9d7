//! Thin multi-axis FFT layer over `rustfft`.
//!
//! Transforms are unnormalised in both directions; callers own the measure
//! factors. Plans are created once per axis length and shared.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone)]
pub struct FftPlans {
    fwd: BTreeMap<usize, Arc<dyn Fft<f64>>>,
    inv: BTreeMap<usize, Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftPlans {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftPlans({:?})", self.fwd.keys().collect::<Vec<_>>())
    }
}

impl FftPlans {
    /// Prepare plans for every axis length in `lens`.
    pub fn new(lens: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let mut fwd = BTreeMap::new();
        let mut inv = BTreeMap::new();
        for &n in lens {
            fwd.entry(n).or_insert_with(|| planner.plan_fft_forward(n));
            inv.entry(n).or_insert_with(|| planner.plan_fft_inverse(n));
        }
        FftPlans { fwd, inv }
    }

    fn plan(&self, n: usize, forward: bool) -> &Arc<dyn Fft<f64>> {
        let map = if forward { &self.fwd } else { &self.inv };
        map.get(&n).expect("fft plan missing for axis length")
    }

    /// In-place transform along every axis of a row-major array with the
    /// given dims (last axis contiguous). Axes of length 1 are skipped.
    pub fn transform(&self, data: &mut [Complex64], dims: &[usize], forward: bool) {
        let total: usize = dims.iter().product();
        assert_eq!(data.len(), total);
        let mut stride = 1usize;
        for axis in (0..dims.len()).rev() {
            let n = dims[axis];
            if n > 1 {
                self.axis_transform(data, total, n, stride, forward);
            }
            stride *= n;
        }
    }

    /// Transform along a single axis only.
    pub fn transform_axis(&self, data: &mut [Complex64], dims: &[usize], axis: usize, forward: bool) {
        let total: usize = dims.iter().product();
        assert_eq!(data.len(), total);
        let n = dims[axis];
        if n <= 1 {
            return;
        }
        let stride: usize = dims[axis + 1..].iter().product();
        self.axis_transform(data, total, n, stride, forward);
    }

    fn axis_transform(
        &self,
        data: &mut [Complex64],
        total: usize,
        n: usize,
        stride: usize,
        forward: bool,
    ) {
        let plan = self.plan(n, forward);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                plan.process(chunk);
            }
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let blocks = total / (n * stride);
        for b in 0..blocks {
            let base = b * n * stride;
            for s in 0..stride {
                for k in 0..n {
                    line[k] = data[base + s + k * stride];
                }
                plan.process(&mut line);
                for k in 0..n {
                    data[base + s + k * stride] = line[k];
                }
            }
        }
    }
}
