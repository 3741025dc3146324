//! Summation kernels for prefix/tail energy functionals.
//!
//! Tails of power-law and dyadic-block sequences are evaluated by direct
//! summation up to a cutoff plus an Euler-Maclaurin remainder, keeping the
//! relative error far below the 1e-10 contract of the energy accessors.

/// Direct summation is used below this many terms; above it the
/// Euler-Maclaurin expansion is already accurate to ~1e-20 relative.
const DIRECT_LIMIT: f64 = 4096.0;

/// Smallest index at which the infinite-tail expansion is applied.
const TAIL_CUTOFF: u64 = 1000;

/// `sum_{k > d} k^{-p}` for `p > 1`.
pub fn power_tail(p: f64, d: u64) -> f64 {
    debug_assert!(p > 1.0);
    let n = (d + 1).max(TAIL_CUTOFF);
    let mut sum = 0.0;
    for k in d + 1..n {
        sum += (k as f64).powf(-p);
    }
    let x = n as f64;
    // Euler-Maclaurin from k = n to infinity.
    let head = x.powf(1.0 - p) / (p - 1.0) + 0.5 * x.powf(-p) + p * x.powf(-p - 1.0) / 12.0
        - p * (p + 1.0) * (p + 2.0) * x.powf(-p - 3.0) / 720.0;
    sum + head
}

/// `sum_{k = a}^{b} k^{-p}` for real `p >= 0`, `1 <= a <= b`.
///
/// Indices are carried as `f64` so dyadic blocks beyond 2^53 still evaluate;
/// at those magnitudes the expansion error is negligible against the block.
pub fn range_power_sum(p: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a >= 1.0 && b >= a);
    if b - a < DIRECT_LIMIT && a < DIRECT_LIMIT {
        let mut sum = 0.0;
        let mut k = a;
        while k <= b {
            sum += k.powf(-p);
            k += 1.0;
        }
        return sum;
    }
    if a < DIRECT_LIMIT {
        let split = DIRECT_LIMIT;
        return range_power_sum(p, a, split - 1.0) + range_power_sum(p, split, b);
    }
    let integral = if (p - 1.0).abs() < 1e-12 {
        (b / a).ln()
    } else {
        (a.powf(1.0 - p) - b.powf(1.0 - p)) / (p - 1.0)
    };
    let fa = a.powf(-p);
    let fb = b.powf(-p);
    let d1 = -p * (b.powf(-p - 1.0) - a.powf(-p - 1.0));
    let d3 = -p * (p + 1.0) * (p + 2.0) * (b.powf(-p - 3.0) - a.powf(-p - 3.0));
    integral + 0.5 * (fa + fb) + d1 / 12.0 - d3 / 720.0
}

/// `sum_{k > d} 2^{-two_s * j(k)} k^{-p}` where `j(k) = floor(log2 k)`.
///
/// Converges iff `two_s + p > 1`; the caller guarantees this. Blocks are
/// summed until the geometric remainder bound (consecutive block sums shrink
/// by at least `2^{1 - p - two_s}`) drops below 1e-13 of the running total.
pub fn dyadic_tail(two_s: f64, p: f64, d: u64) -> f64 {
    debug_assert!(two_s + p > 1.0);
    let ratio = (2.0f64).powf(1.0 - p - two_s);
    debug_assert!(ratio < 1.0);
    let j0 = u64::BITS as u64 - 1 - u64::from((d + 1).leading_zeros()) as u64;
    let mut total = 0.0;
    let mut j = j0;
    loop {
        let block_lo = (2.0f64).powi(j as i32);
        let block_hi = 2.0 * block_lo - 1.0;
        let lo = block_lo.max((d + 1) as f64);
        let weight = (2.0f64).powf(-two_s * j as f64);
        let contribution = if lo <= block_hi {
            weight * range_power_sum(p, lo, block_hi)
        } else {
            0.0
        };
        total += contribution;
        let remainder_bound = contribution * ratio / (1.0 - ratio);
        if j > j0 && remainder_bound <= 1e-13 * total {
            break;
        }
        if weight == 0.0 {
            break; // underflow: nothing left to add
        }
        j += 1;
    }
    total
}
