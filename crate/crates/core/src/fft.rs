//! Multi-dimensional complex FFTs on row-major arrays.
//!
//! Planners are cached per thread, so transforms are safe to call from
//! worker pools without shared locking.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Transforms `data` in place along every axis of `dims` (row-major, last
/// axis contiguous). No normalization is applied in either direction.
pub fn fftn(data: &mut [Complex64], dims: &[usize], dir: Direction) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    for axis in 0..dims.len() {
        fft_axis(data, dims, axis, dir);
    }
}

fn fft_axis(data: &mut [Complex64], dims: &[usize], axis: usize, dir: Direction) {
    let len = dims[axis];
    if len <= 1 {
        return;
    }
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(len),
            Direction::Inverse => p.plan_fft_inverse(len),
        }
    });
    if inner == 1 {
        plan.process(data);
        return;
    }
    let block = len * inner;
    let mut scratch = vec![Complex64::default(); block];
    for o in 0..outer {
        let chunk = &mut data[o * block..(o + 1) * block];
        for a in 0..len {
            for b in 0..inner {
                scratch[b * len + a] = chunk[a * inner + b];
            }
        }
        plan.process(&mut scratch);
        for a in 0..len {
            for b in 0..inner {
                chunk[a * inner + b] = scratch[b * len + a];
            }
        }
    }
}

/// Signed frequency of FFT bin `i` on an axis of length `n`.
#[inline]
pub fn freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT bin of a signed frequency, reduced modulo `n`.
#[inline]
pub fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}
