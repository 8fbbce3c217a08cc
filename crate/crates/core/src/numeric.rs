//! Small numerical helpers shared by the environments and the estimators.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
///
/// Iterates until the bracket is narrower than `tol` (or 500 iterations).
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Vertex of the parabola through `(x - h, x, x + h)`.
///
/// Exact (up to rounding) when `f` is quadratic on that stencil. Returns `x`
/// when the three points are collinear.
pub fn parabolic_vertex<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let (f0, f1, f2) = (f(x - h), f(x), f(x + h));
    let curvature = f0 - 2.0 * f1 + f2;
    if curvature == 0.0 {
        return x;
    }
    x - 0.5 * h * (f2 - f0) / curvature
}

/// Composite Simpson rule on `[a, b]` with `n` intervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// `E[f(x + σZ)]` for standard normal `Z`, by Simpson quadrature over
/// `|z| ≤ 10` with `n` intervals.
pub fn gaussian_smoothing<F: Fn(f64) -> f64>(f: F, x: f64, sigma: f64, n: usize) -> f64 {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    simpson(
        |z| f(x + sigma * z) * norm * (-0.5 * z * z).exp(),
        -10.0,
        10.0,
        n,
    )
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Streaming mean and trace-covariance of a sequence of equal-length vectors
/// (Welford's update applied coordinate-wise).
#[derive(Clone, Debug)]
pub struct VectorWelford {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VectorWelford {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &xi) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = xi - *m;
            *m += delta / n;
            *s += delta * (xi - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased per-coordinate sample variances (zeros when fewer than two samples).
    pub fn variances(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let denom = (self.count - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }

    /// Trace of the unbiased sample covariance.
    pub fn trace_variance(&self) -> f64 {
        self.variances().iter().sum()
    }

    pub fn into_mean(self) -> Vec<f64> {
        self.mean
    }
}
