//! Panel-based Gauss-Legendre quadrature on log-spaced transmittance grids.
//!
//! The PDTC is smooth but sharply peaked in log-transmittance, so all 1D
//! grids live in u = ln(eta). A coarse global grid resolves the tails and a
//! dense window around the distribution mass resolves the peak, which keeps
//! narrow distributions (small sigma) integrable on the same machinery.

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial. Deterministic for a given order.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(order, x);
        nodes[order - 1 - i] = x;
        weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order pairwise summation; independent of evaluation parallelism and
/// stable enough for bit-reproducible CSV output.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Panel breakpoints in u = ln(eta) over [ln(eta_min), ln(eta_max)].
///
/// `coarse` panels are spread uniformly in u; `window` extra panels are packed
/// into [center - half_width, center + half_width] (in u) when that window
/// intersects the range. `breaks` are additional mandatory breakpoints in eta
/// (selection thresholds, ratio-line crossings).
pub fn log_panels(
    eta_min: f64,
    eta_max: f64,
    coarse: usize,
    window: usize,
    peak: Option<(f64, f64)>,
    breaks: &[f64],
) -> Vec<f64> {
    let u_lo = eta_min.ln();
    let u_hi = eta_max.ln();
    let mut us: Vec<f64> = Vec::with_capacity(coarse + window + breaks.len() + 2);
    for i in 0..=coarse {
        us.push(u_lo + (u_hi - u_lo) * i as f64 / coarse as f64);
    }
    if let Some((center, half_width)) = peak {
        let w_lo = (center - half_width).max(u_lo);
        let w_hi = (center + half_width).min(u_hi);
        if w_hi > w_lo && window > 0 {
            for i in 0..=window {
                us.push(w_lo + (w_hi - w_lo) * i as f64 / window as f64);
            }
        }
    }
    for &b in breaks {
        if b > eta_min && b < eta_max {
            us.push(b.ln());
        }
    }
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    us.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    us.iter().map(|u| u.exp()).collect()
}

/// 1D quadrature of `f(eta)` over the panel grid, Gauss-Legendre per panel in
/// u = ln(eta) (the Jacobian eta is folded into the weight).
pub fn integrate_panels<F: FnMut(f64) -> f64>(panels: &[f64], order: usize, mut f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mut parts = Vec::with_capacity((panels.len() - 1) * order);
    for w in panels.windows(2) {
        let (u0, u1) = (w[0].ln(), w[1].ln());
        let h = 0.5 * (u1 - u0);
        let m = 0.5 * (u1 + u0);
        for (x, wt) in nodes.iter().zip(weights.iter()) {
            let eta = (m + h * x).exp();
            parts.push(wt * h * eta * f(eta));
        }
    }
    pairwise_sum(&parts)
}
