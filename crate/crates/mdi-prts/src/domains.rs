//! Selection domains over the (eta_A, eta_B) plane and quadrature of
//! probabilities and conditional expectations against the joint PDTC.
//!
//! Quadrature is a tensor product of the 1D log-grid panels from [`crate::quad`]:
//! the outer integral runs over eta_B, and for every outer node the inner
//! eta_A panels are rebuilt with mandatory breakpoints at the domain edges
//! (thresholds, ratio lines, rate-map zero crossings), so no panel ever
//! straddles a membership discontinuity. Static channels (sigma = 0) are
//! handled as point masses, which gives the sigma -> 0 limits exactly.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::keyrate::RateMap;
use crate::quad::{gauss_legendre, log_panels, pairwise_sum};
use crate::turbulence::{ChannelParams, JointPdtc, UNDERFLOW_FLOOR};

/// Post-selection domain in the (eta_A, eta_B) plane.
#[derive(Debug, Clone)]
pub enum SelectionDomain {
    /// No post-selection: all of (0, 1]^2.
    Full,
    /// Independent per-arm thresholds eta_A >= eta_at, eta_B >= eta_bt.
    Square { eta_at: f64, eta_bt: f64 },
    /// Square thresholds plus the mismatch band x_min <= eta_A/eta_B <= x_max.
    Joint {
        eta_at: f64,
        eta_bt: f64,
        x_min: f64,
        x_max: f64,
    },
    /// The R >= 0 region of a signed rate map (bilinear interpolation).
    Boundary(Arc<RateMap>),
}

impl SelectionDomain {
    pub fn square(eta_at: f64, eta_bt: f64) -> Result<Self> {
        check_threshold(eta_at)?;
        check_threshold(eta_bt)?;
        Ok(Self::Square { eta_at, eta_bt })
    }

    pub fn joint(eta_at: f64, eta_bt: f64, x_min: f64, x_max: f64) -> Result<Self> {
        check_threshold(eta_at)?;
        check_threshold(eta_bt)?;
        if !(0.0 < x_min && x_min <= x_max) {
            return Err(Error::InvalidParameter(format!(
                "mismatch band requires 0 < x_min <= x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self::Joint {
            eta_at,
            eta_bt,
            x_min,
            x_max,
        })
    }

    pub fn boundary(map: Arc<RateMap>) -> Self {
        Self::Boundary(map)
    }

    /// Deterministic membership test on (0, 1]^2.
    pub fn contains(&self, eta_a: f64, eta_b: f64) -> Result<bool> {
        if !(eta_a > 0.0 && eta_a <= 1.0 && eta_b > 0.0 && eta_b <= 1.0) {
            return Err(Error::DomainError(format!(
                "membership requires eta in (0, 1], got ({eta_a}, {eta_b})"
            )));
        }
        match self {
            Self::Full => Ok(true),
            Self::Square { eta_at, eta_bt } => Ok(eta_a >= *eta_at && eta_b >= *eta_bt),
            Self::Joint {
                eta_at,
                eta_bt,
                x_min,
                x_max,
            } => {
                let x = eta_a / eta_b;
                Ok(eta_a >= *eta_at && eta_b >= *eta_bt && x >= *x_min && x <= *x_max)
            }
            Self::Boundary(map) => Ok(map.interpolate_raw(eta_a, eta_b)? >= 0.0),
        }
    }

    /// Membership for quadrature: points a Boundary map does not cover are
    /// treated as unselected (the positive-rate region always lies inside a
    /// map that resolves it).
    pub(crate) fn contains_quad(&self, eta_a: f64, eta_b: f64) -> bool {
        match self {
            Self::Boundary(map) => {
                map.covers(eta_a, eta_b) && map.interpolate_raw(eta_a, eta_b).unwrap() >= 0.0
            }
            _ => self.contains(eta_a, eta_b).unwrap(),
        }
    }

    /// Membership edges along eta_A at fixed eta_B.
    fn breaks_a(&self, eta_b: f64) -> Vec<f64> {
        match self {
            Self::Full => Vec::new(),
            Self::Square { eta_at, .. } => vec![*eta_at],
            Self::Joint {
                eta_at,
                x_min,
                x_max,
                ..
            } => vec![*eta_at, x_min * eta_b, x_max * eta_b],
            Self::Boundary(map) => map.crossings_along_a(eta_b),
        }
    }

    /// Membership edges along eta_B at fixed eta_A.
    fn breaks_b(&self, eta_a: f64) -> Vec<f64> {
        match self {
            Self::Full => Vec::new(),
            Self::Square { eta_bt, .. } => vec![*eta_bt],
            Self::Joint {
                eta_bt,
                x_min,
                x_max,
                ..
            } => vec![*eta_bt, eta_a / x_max, eta_a / x_min],
            Self::Boundary(map) => map.crossings_along_b(eta_a),
        }
    }

    /// Outer-axis (eta_B) breakpoints independent of eta_A.
    fn outer_breaks(&self) -> Vec<f64> {
        match self {
            Self::Full | Self::Boundary(_) => Vec::new(),
            Self::Square { eta_bt, .. } | Self::Joint { eta_bt, .. } => vec![*eta_bt],
        }
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in [0, 1), got {t}"
        )));
    }
    Ok(())
}

/// Panel budget of the tensor-product quadrature: `coarse` panels across the
/// whole (log) range plus `window` panels packed around the distribution
/// peak, Gauss-Legendre of the given order per panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub coarse: usize,
    pub window: usize,
    pub order: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            coarse: 200,
            window: 200,
            order: 4,
        }
    }
}

impl QuadSpec {
    /// Same scheme at double the panel count, for refinement checks.
    pub fn refined(&self) -> Self {
        Self {
            coarse: 2 * self.coarse,
            window: 2 * self.window,
            order: self.order,
        }
    }
}

/// Integration floor for one channel: low enough that the untruncated mass
/// below it is negligible (< 1e-15), but never above 1e-6.
fn axis_floor(ch: &ChannelParams) -> f64 {
    let u = ch.eta0().ln() - 0.5 * ch.sigma() * ch.sigma() - 8.0 * ch.sigma() - 0.5;
    u.exp().min(1e-6).max(1e-300)
}

/// Panel grid for one channel's axis, densified around the log-density peak.
fn axis_panels(ch: &ChannelParams, spec: &QuadSpec, breaks: &[f64]) -> Vec<f64> {
    let center = ch.eta0().ln() - 0.5 * ch.sigma() * ch.sigma();
    let half = (8.0 * ch.sigma()).max(0.01);
    log_panels(
        axis_floor(ch),
        1.0,
        spec.coarse,
        spec.window,
        Some((center, half)),
        breaks,
    )
}

/// Shared quadrature core: returns the selected probability mass
/// P_pass = double integral of the normalized truncated density over the
/// domain, together with the unnormalized-by-mass integrals of each component
/// of `f` against that density. All reductions are fixed-order pairwise sums.
pub(crate) fn region_integrals<F>(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    spec: &QuadSpec,
    dim: usize,
    mut f: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(f64, f64, &mut [f64]) -> Result<()>,
{
    let mut buf = vec![0.0; dim];
    match (joint.alice.is_static(), joint.bob.is_static()) {
        (true, true) => {
            let (a0, b0) = (joint.alice.eta0(), joint.bob.eta0());
            if domain.contains_quad(a0, b0) {
                f(a0, b0, &mut buf)?;
                Ok((1.0, buf))
            } else {
                Ok((0.0, vec![0.0; dim]))
            }
        }
        (true, false) => {
            let a0 = joint.alice.eta0();
            line_integrals(&joint.bob, spec, &domain.breaks_b(a0), dim, |b, buf| {
                if domain.contains_quad(a0, b) {
                    f(a0, b, buf)?;
                    Ok(true)
                } else {
                    Ok(false)
                }
            })
        }
        (false, true) => {
            let b0 = joint.bob.eta0();
            line_integrals(&joint.alice, spec, &domain.breaks_a(b0), dim, |a, buf| {
                if domain.contains_quad(a, b0) {
                    f(a, b0, buf)?;
                    Ok(true)
                } else {
                    Ok(false)
                }
            })
        }
        (false, false) => {
            let (nodes, wts) = gauss_legendre(spec.order);
            let outer_panels = axis_panels(&joint.bob, spec, &domain.outer_breaks());
            let n_outer = (outer_panels.len() - 1) * spec.order;
            let mut outer_mass = Vec::with_capacity(n_outer);
            let mut outer_ints = vec![Vec::with_capacity(n_outer); dim];
            for w in outer_panels.windows(2) {
                let (u0, u1) = (w[0].ln(), w[1].ln());
                let h = 0.5 * (u1 - u0);
                let m = 0.5 * (u1 + u0);
                for (x, wt) in nodes.iter().zip(wts.iter()) {
                    let eta_b = (m + h * x).exp();
                    let w_outer = wt * h * eta_b * joint.bob.pdtc_density(eta_b)?;
                    let inner_panels = axis_panels(&joint.alice, spec, &domain.breaks_a(eta_b));
                    let cap = (inner_panels.len() - 1) * spec.order;
                    let mut inner_mass = Vec::with_capacity(cap);
                    let mut inner_ints = vec![Vec::with_capacity(cap); dim];
                    for pw in inner_panels.windows(2) {
                        // Breakpoints guarantee constant membership per panel;
                        // test it at the log midpoint.
                        if !domain.contains_quad((pw[0] * pw[1]).sqrt(), eta_b) {
                            continue;
                        }
                        let (v0, v1) = (pw[0].ln(), pw[1].ln());
                        let hh = 0.5 * (v1 - v0);
                        let mm = 0.5 * (v1 + v0);
                        for (y, wy) in nodes.iter().zip(wts.iter()) {
                            let eta_a = (mm + hh * y).exp();
                            let wi = wy * hh * eta_a * joint.alice.pdtc_density(eta_a)?;
                            inner_mass.push(wi);
                            if dim > 0 {
                                f(eta_a, eta_b, &mut buf)?;
                                for (k, acc) in inner_ints.iter_mut().enumerate() {
                                    acc.push(wi * buf[k]);
                                }
                            }
                        }
                    }
                    outer_mass.push(w_outer * pairwise_sum(&inner_mass));
                    for (k, acc) in outer_ints.iter_mut().enumerate() {
                        acc.push(w_outer * pairwise_sum(&inner_ints[k]));
                    }
                }
            }
            let tm = joint.truncation_mass();
            let mass = pairwise_sum(&outer_mass) / tm;
            let ints = outer_ints.iter().map(|v| pairwise_sum(v) / tm).collect();
            Ok((mass, ints))
        }
    }
}

/// 1D version of the core for the mixed static/turbulent case. The `f`
/// callback reports membership and fills the integrand components.
fn line_integrals<F>(
    ch: &ChannelParams,
    spec: &QuadSpec,
    breaks: &[f64],
    dim: usize,
    mut f: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(f64, &mut [f64]) -> Result<bool>,
{
    let (nodes, wts) = gauss_legendre(spec.order);
    let panels = axis_panels(ch, spec, breaks);
    let cap = (panels.len() - 1) * spec.order;
    let mut mass_parts = Vec::with_capacity(cap);
    let mut int_parts = vec![Vec::with_capacity(cap); dim];
    let mut buf = vec![0.0; dim];
    for w in panels.windows(2) {
        let (u0, u1) = (w[0].ln(), w[1].ln());
        let h = 0.5 * (u1 - u0);
        let m = 0.5 * (u1 + u0);
        for (x, wt) in nodes.iter().zip(wts.iter()) {
            let eta = (m + h * x).exp();
            if !f(eta, &mut buf)? {
                continue;
            }
            let wq = wt * h * eta * ch.pdtc_density(eta)?;
            mass_parts.push(wq);
            for (k, acc) in int_parts.iter_mut().enumerate() {
                acc.push(wq * buf[k]);
            }
        }
    }
    let tm = ch.truncation_mass();
    let mass = pairwise_sum(&mass_parts) / tm;
    let ints = int_parts.iter().map(|v| pairwise_sum(v) / tm).collect();
    Ok((mass, ints))
}

/// P_pass: probability that a transmittance pair falls in the domain.
pub fn region_probability(joint: &JointPdtc, domain: &SelectionDomain) -> Result<f64> {
    region_probability_with(joint, domain, &QuadSpec::default())
}

pub fn region_probability_with(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    spec: &QuadSpec,
) -> Result<f64> {
    let (mass, _) = region_integrals(joint, domain, spec, 0, |_, _, _| Ok(()))?;
    Ok(mass.clamp(0.0, 1.0))
}

/// Conditional expectation of `f` over the domain.
pub fn region_expectation<F>(joint: &JointPdtc, domain: &SelectionDomain, f: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    region_expectation_with(joint, domain, &QuadSpec::default(), f)
}

pub fn region_expectation_with<F>(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    spec: &QuadSpec,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    let (mass, ints) = region_integrals(joint, domain, spec, 1, |a, b, buf| {
        buf[0] = f(a, b);
        Ok(())
    })?;
    if mass < UNDERFLOW_FLOOR {
        return Err(Error::EmptySelection);
    }
    Ok(ints[0] / mass)
}
