//! One-dimensional search primitives: boolean bisection, scan-then-refine
//! for suprema of non-monotone predicates, and golden-section maximisation.

/// Hard cap on bisection steps; relative widths of 1e-12 need ~40 steps
/// from any bracket representable in f64, so hitting this means the
/// bracket collapsed onto subnormals.
const MAX_BISECTIONS: usize = 2_000;

/// Shrinks `[lo, hi]` with `pred(lo) == true`, `pred(hi) == false` until
/// `hi - lo <= rel_tol * |hi|`. Returns the final bracket.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(
    mut pred: P,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> (f64, f64) {
    debug_assert!(lo <= hi);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Result of [`scan_sup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOutcome {
    /// Estimated supremum of `{c in (lo, hi]: pred(c)}`.
    pub sup: f64,
    /// The predicate held at the right end of the scan range.
    pub saturated: bool,
    /// Spacing between scan points.
    pub step: f64,
}

/// Dense scan of `pred` over `points` equispaced nodes in `(lo, hi]`
/// followed by bisection at the last true→false transition.
///
/// When no scan node satisfies the predicate the transition is assumed to
/// sit in `(lo, lo + step)` with the predicate true just above `lo`.
pub fn scan_sup<P: FnMut(f64) -> bool>(
    mut pred: P,
    lo: f64,
    hi: f64,
    points: usize,
    rel_tol: f64,
) -> ScanOutcome {
    assert!(points >= 1, "scan needs at least one point");
    let step = (hi - lo) / points as f64;
    let node = |k: usize| if k == points { hi } else { lo + step * k as f64 };
    let mut last_true = None;
    for k in (1..=points).rev() {
        if pred(node(k)) {
            last_true = Some(k);
            break;
        }
    }
    match last_true {
        Some(k) if k == points => ScanOutcome {
            sup: hi,
            saturated: true,
            step,
        },
        Some(k) => {
            let (a, b) = bisect_predicate(&mut pred, node(k), node(k + 1), rel_tol);
            ScanOutcome {
                sup: 0.5 * (a + b),
                saturated: false,
                step,
            }
        }
        None => {
            let (a, b) = bisect_predicate(&mut pred, lo, node(1), rel_tol);
            ScanOutcome {
                sup: 0.5 * (a + b),
                saturated: false,
                step,
            }
        }
    }
}

/// Golden-section search for a maximiser of `f` on `[a, b]`.
/// Returns `(argmax, max)`; the endpoints are always compared as well.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (fa, fb) = (f(a), f(b));
    let mut best = if fb >= fa { (b, fb) } else { (a, fa) };
    if b - a <= tol {
        return best;
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}
