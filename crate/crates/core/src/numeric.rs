//! Small one-dimensional solvers shared by the quantizer designs.

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo)` and `f(hi)`
/// have opposite signs (or one is zero). Returns the midpoint of the final
/// bracket after `max_iter` halvings or once the bracket is below `xtol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximiser of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if hi - lo <= xtol {
            break;
        }
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
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    // the best interior probe may beat the midpoint on a flat top
    [(x, fx), (x1, f1), (x2, f2)].into_iter().fold((x, fx), |best, c| if c.1 > best.1 { c } else { best })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Anderson mixing for fixed-point iterations `x -> G(x)`, with a restart
/// whenever the residual grows.
pub struct Anderson {
    depth: usize,
    xs: Vec<Vec<f64>>,
    gs: Vec<Vec<f64>>,
}

impl Anderson {
    pub fn new(depth: usize) -> Self {
        Self { depth, xs: Vec::new(), gs: Vec::new() }
    }

    pub fn reset(&mut self) {
        self.xs.clear();
        self.gs.clear();
    }

    fn residual_norm(x: &[f64], g: &[f64]) -> f64 {
        x.iter().zip(g).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Records the step `x -> g` and proposes the next iterate.
    pub fn push(&mut self, x: Vec<f64>, g: Vec<f64>) -> Vec<f64> {
        if let (Some(px), Some(pg)) = (self.xs.last(), self.gs.last()) {
            if Self::residual_norm(&x, &g) > Self::residual_norm(px, pg) {
                self.reset();
            }
        }
        self.xs.push(x);
        self.gs.push(g);
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.gs.remove(0);
        }
        let m = self.xs.len() - 1;
        let g_last = self.gs[m].clone();
        if self.depth == 0 || m == 0 {
            return g_last;
        }
        let f = |i: usize| -> Vec<f64> { self.gs[i].iter().zip(&self.xs[i]).map(|(g, x)| g - x).collect() };
        let f_last = f(m);
        let df: Vec<Vec<f64>> = (0..m).map(|i| f(i + 1).iter().zip(f(i)).map(|(a, b)| a - b).collect()).collect();
        let dg: Vec<Vec<f64>> =
            (0..m).map(|i| self.gs[i + 1].iter().zip(&self.gs[i]).map(|(a, b)| a - b).collect()).collect();
        // least squares min |f_last - dF gamma| via regularised normal equations
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                a[i][j] = dot(&df[i], &df[j]);
            }
            rhs[i] = dot(&df[i], &f_last);
        }
        let scale = (0..m).map(|i| a[i][i]).fold(0.0, f64::max);
        if scale == 0.0 {
            return g_last;
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1e-10 * scale;
        }
        let Some(gamma) = solve(a, rhs) else { return g_last };
        let mut out = g_last;
        for (gj, col) in gamma.iter().zip(&dg) {
            for (o, c) in out.iter_mut().zip(col) {
                *o -= gj * c;
            }
        }
        out
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
