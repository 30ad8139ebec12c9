//! Dense complex linear algebra for small matrices: Pade matrix exponential
//! and a pivoted Gaussian solve. Dimensions here are tiny (the propagation
//! subspace is 11-dimensional), so nothing is tuned beyond correctness.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Pade(13) numerator/denominator coefficients (Higham 2005).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, c(1.0))
}

/// Max column sum of absolute values.
fn norm_1(a: &Array2<C64>) -> f64 {
    let mut max = 0.0f64;
    for col in a.columns() {
        max = max.max(col.iter().map(|v| v.norm()).sum());
    }
    max
}

/// Largest entry magnitude.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

/// Matrix exponential by scaling-and-squaring with a Pade(13) approximant.
///
/// A zero row paired with a zero column passes through exactly: the
/// corresponding basis vector is an exact fixed point of the result. That
/// property is relied on by the constant-amplitude checks upstream.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    if n == 1 {
        let mut out = Array2::zeros((1, 1));
        out[(0, 0)] = a[(0, 0)].exp();
        return out;
    }

    let norm = norm_1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|v| v / c((1u64 << s) as f64));

    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let id = eye(n);

    let w1 = &a6 * c(PADE13[13]) + &a4 * c(PADE13[11]) + &a2 * c(PADE13[9]);
    let w2 = w1.dot(&a6)
        + &a6 * c(PADE13[7])
        + &a4 * c(PADE13[5])
        + &a2 * c(PADE13[3])
        + &id * c(PADE13[1]);
    let u = scaled.dot(&w2);

    let z1 = &a6 * c(PADE13[12]) + &a4 * c(PADE13[10]) + &a2 * c(PADE13[8]);
    let v = z1.dot(&a6)
        + &a6 * c(PADE13[6])
        + &a4 * c(PADE13[4])
        + &a2 * c(PADE13[2])
        + &id * c(PADE13[0]);

    let mut r = solve(&(&v - &u), &(&v + &u)).expect("Pade denominator is nonsingular");
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Solve `A X = B` by Gaussian elimination with partial pivoting.
///
/// Pivot selection is strict-greater, so rows are only swapped when a
/// strictly larger pivot exists; a decoupled leading row stays in place and
/// its solution components remain exact.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let m = b.ncols();

    let mut lhs = a.clone();
    let mut rhs = b.clone();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lhs[(col, col)].norm();
        for row in col + 1..n {
            let mag = lhs[(row, col)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag < 1e-300 {
            return Err(Error::SingularMatrix);
        }
        if pivot_row != col {
            for j in 0..n {
                lhs.swap((col, j), (pivot_row, j));
            }
            for j in 0..m {
                rhs.swap((col, j), (pivot_row, j));
            }
        }
        let pivot = lhs[(col, col)];
        for row in col + 1..n {
            let factor = lhs[(row, col)] / pivot;
            if factor == c(0.0) {
                continue;
            }
            for j in col..n {
                let v = lhs[(col, j)];
                lhs[(row, j)] -= factor * v;
            }
            for j in 0..m {
                let v = rhs[(col, j)];
                rhs[(row, j)] -= factor * v;
            }
        }
    }

    let mut x = Array2::<C64>::zeros((n, m));
    for col in (0..n).rev() {
        for j in 0..m {
            let mut sum = rhs[(col, j)];
            for k in col + 1..n {
                sum -= lhs[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = sum / lhs[(col, col)];
        }
    }
    Ok(x)
}
