//! n-dimensional complex FFTs over row-major cubes, built on `rustfft`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, inverse: bool) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

fn transform(data: &mut [Complex64], m: usize, n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), m.pow(n as u32));
    let fft = plan(m, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // contiguous last axis
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::default(); m];
    for axis in 0..n.saturating_sub(1) {
        let stride = m.pow((n - 1 - axis) as u32);
        let block = stride * m;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, c) in line.iter().enumerate() {
                    data[base + j * stride] = *c;
                }
            }
        }
    }
}

/// Unnormalised forward transform, `u_hat[k] = sum_j u[j] e^{-2 pi i jk/m}`.
pub fn forward(data: &mut [Complex64], m: usize, n: usize) {
    transform(data, m, n, false);
}

/// Normalised inverse transform (divides by `m^n`).
pub fn inverse(data: &mut [Complex64], m: usize, n: usize) {
    transform(data, m, n, true);
    let scale = 1.0 / data.len() as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}
