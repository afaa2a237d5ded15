use crate::error::{Error, Result};

const ARG_TOL: f64 = 1e-9;
const MAX_EXPANSIONS: usize = 60;

/// Finds `x` in `[lo, hi]` with `f(x) = target` for non-increasing `f`.
///
/// When the bracket does not hold, the interval is widened geometrically
/// (downwards for `lo`, upwards for `hi`) before giving up.
pub fn bisect_decreasing<F>(f: F, target: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let mut width = hi - lo;
    let mut expansions = 0;
    while !(f_lo >= target && target >= f_hi) {
        if expansions == MAX_EXPANSIONS || f_lo.is_nan() || f_hi.is_nan() {
            return Err(Error::Bracket { lo, hi, f_lo, f_hi, target });
        }
        width *= 2.0;
        if f_lo < target {
            lo -= width;
            f_lo = f(lo);
        }
        if f_hi > target {
            hi += width;
            f_hi = f(hi);
        }
        expansions += 1;
    }
    while hi - lo > ARG_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
