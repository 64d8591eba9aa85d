//! Small numerical helpers: reproducible reductions and rate fits.

/// Pairwise (cascade) summation with a fixed split, independent of threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Fixed-shape binary tree reduction of `count` arrays of length `len`.
///
/// `leaf(i, acc)` adds the contribution of item `i` into `acc`. The tree shape
/// depends only on `count`, so results are bit-identical across thread counts.
pub fn tree_reduce<F>(count: usize, len: usize, leaf: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    fn go<F>(lo: usize, hi: usize, len: usize, leaf: &F) -> Vec<f64>
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        const LEAF: usize = 8;
        if hi - lo <= LEAF {
            let mut acc = vec![0.0; len];
            for i in lo..hi {
                leaf(i, &mut acc);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let (mut a, b) = rayon::join(|| go(lo, mid, len, leaf), || go(mid, hi, len, leaf));
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    }
    if count == 0 {
        return vec![0.0; len];
    }
    go(0, count, len, leaf)
}

/// Least-squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Slope of `log(err)` against `log(h)`; `None` if any value is not positive.
pub fn log_log_slope(hs: &[f64], errs: &[f64]) -> Option<f64> {
    if hs.iter().chain(errs).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    fit_line(&lx, &ly).map(|f| f.slope)
}

/// Trapezoidal running integral of samples `ys` at times `ts`.
pub fn cumulative_trapezoid(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = 0.0;
    for i in 0..ts.len() {
        if i > 0 {
            acc += 0.5 * (ts[i] - ts[i - 1]) * (ys[i] + ys[i - 1]);
        }
        out.push(acc);
    }
    out
}
