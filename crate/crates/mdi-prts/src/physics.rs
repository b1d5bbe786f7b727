//! Analytic observable model for polarization-encoded MDI-QKD.
//!
//! Alice and Bob send phase-randomized coherent pulses to a relay that
//! interferes them on a 50/50 beamsplitter and detects each output port
//! behind a polarizing beamsplitter with threshold detectors (four detectors
//! total: 1H, 1V, 2H, 2V). A coincidence 1H&2V or 1V&2H announces a psi-minus
//! projection, 1H&1V or 2H&2V a psi-plus projection; any other click pattern
//! is discarded.
//!
//! Detector efficiency is folded into the channel (lambda = intensity * eta *
//! eta_d), dark counts fire each detector independently with probability y0
//! per gate, and misalignment e_d enters as a polarization rotation of Bob's
//! pulse by asin(sqrt(e_d)).
//!
//! For fixed relative phase the four detector modes carry classical
//! intensities I_k = A_k + B_k cos(phi), so each click-pattern probability is
//! a product of closed-form threshold-detector factors. The randomized phase
//! is averaged with a periodic trapezoid rule, which converges spectrally for
//! these analytic integrands and avoids the catastrophic cancellation an
//! inclusion-exclusion expansion suffers at deep loss. The photon-number
//! Monte-Carlo oracle in [`crate::validation`] is the correctness anchor for
//! this model.

use crate::error::{Error, Result};

/// Detector noise and efficiency model plus error-correction inefficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Dark-count probability per detector per gate.
    pub y0: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Error-correction inefficiency.
    pub f_e: f64,
}

impl DeviceParams {
    pub fn new(y0: f64, eta_d: f64, e_d: f64, f_e: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&y0) {
            return Err(Error::InvalidParameter(format!("y0 out of range: {y0}")));
        }
        if !(eta_d > 0.0 && eta_d <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_d out of range: {eta_d}"
            )));
        }
        if !(0.0..0.5).contains(&e_d) {
            return Err(Error::InvalidParameter(format!("e_d out of range: {e_d}")));
        }
        if !(f_e >= 1.0) {
            return Err(Error::InvalidParameter(format!("f_e out of range: {f_e}")));
        }
        Ok(Self { y0, eta_d, e_d, f_e })
    }

    /// Relative misalignment rotation between the two users' polarization
    /// frames. Applied symmetrically as -theta/2 on Alice's arm and +theta/2
    /// on Bob's, which keeps the observables exactly symmetric under
    /// relabeling the arms; with this split the single-photon-pair X-basis
    /// error is sin^2(theta)/2, so theta = asin(sqrt(2 e_d)) makes e_d the
    /// misalignment error probability in the usual sense.
    pub fn misalignment_angle(&self) -> f64 {
        (2.0 * self.e_d).sqrt().asin()
    }
}

/// 4-intensity protocol settings for one user: a Z-basis signal intensity and
/// three X-basis decoy intensities mu > nu > omega >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensitySet {
    pub s: f64,
    pub p_s: f64,
    pub mu: f64,
    pub nu: f64,
    pub omega: f64,
}

impl IntensitySet {
    pub fn new(s: f64, p_s: f64, mu: f64, nu: f64, omega: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("s must be positive: {s}")));
        }
        if !(p_s > 0.0 && p_s < 1.0) {
            return Err(Error::InvalidParameter(format!("p_s out of (0,1): {p_s}")));
        }
        if !(mu > nu && nu > omega && omega >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "decoy intensities must satisfy mu > nu > omega >= 0: {mu}, {nu}, {omega}"
            )));
        }
        Ok(Self { s, p_s, mu, nu, omega })
    }

    /// Decoy intensities indexed mu = 0, nu = 1, omega = 2.
    pub fn decoys(&self) -> [f64; 3] {
        [self.mu, self.nu, self.omega]
    }
}

/// Gains Q and error-gains T = Q * E for all X-basis intensity pairs and the
/// Z-basis signal pair. Index order is [alice][bob] over {mu, nu, omega}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub qx: [[f64; 3]; 3],
    pub tx: [[f64; 3]; 3],
    pub qz: f64,
    pub tz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Poisson photon-number weight e^{-mu} mu^n / n!.
pub fn photon_weight(intensity: f64, n: u32) -> f64 {
    let mut w = (-intensity).exp();
    for k in 1..=n {
        w *= intensity / k as f64;
    }
    w
}

const DETECTORS: usize = 4; // 1H, 1V, 2H, 2V
const PSI_MINUS: [[usize; 2]; 2] = [[0, 3], [1, 2]];
const PSI_PLUS: [[usize; 2]; 2] = [[0, 1], [2, 3]];

/// Polarization unit vector for a basis bit. Z: H/V; X: diagonal/antidiagonal.
fn polarization(basis: Basis, bit: u8) -> [f64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match (basis, bit) {
        (Basis::Z, 0) => [1.0, 0.0],
        (Basis::Z, _) => [0.0, 1.0],
        (Basis::X, 0) => [r, r],
        (Basis::X, _) => [r, -r],
    }
}

fn rotate(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Per-detector field components for one bit combination: `u` from Alice,
/// `w` (signed by output port) from Bob, both before the random phase.
fn detector_fields(lam_a: f64, lam_b: f64, pol_a: [f64; 2], pol_b: [f64; 2]) -> ([f64; 4], [f64; 4]) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (sa, sb) = (lam_a.sqrt(), lam_b.sqrt());
    let u = [
        r * sa * pol_a[0],
        r * sa * pol_a[1],
        r * sa * pol_a[0],
        r * sa * pol_a[1],
    ];
    let w = [
        r * sb * pol_b[0],
        r * sb * pol_b[1],
        -r * sb * pol_b[0],
        -r * sb * pol_b[1],
    ];
    (u, w)
}

/// Number of trapezoid points for the relative-phase average; spectrally
/// exact for the detected mean photon numbers this model sees.
const PHASE_POINTS: usize = 64;

/// Phase-averaged probabilities of the two psi-minus and two psi-plus click
/// patterns, as products of per-detector click/no-click factors.
fn bell_pattern_probabilities(u: &[f64; 4], w: &[f64; 4], pd: f64) -> (f64, f64) {
    let mut p_minus = 0.0;
    let mut p_plus = 0.0;
    for step in 0..PHASE_POINTS {
        let phi = 2.0 * std::f64::consts::PI * step as f64 / PHASE_POINTS as f64;
        let c = phi.cos();
        let mut no_click = [0.0; 4];
        let mut click = [0.0; 4];
        for k in 0..DETECTORS {
            let intensity = u[k] * u[k] + w[k] * w[k] + 2.0 * u[k] * w[k] * c;
            no_click[k] = (1.0 - pd) * (-intensity).exp();
            click[k] = 1.0 - no_click[k];
        }
        let pattern = |a: usize, b: usize| {
            let mut p = 1.0;
            for k in 0..DETECTORS {
                p *= if k == a || k == b { click[k] } else { no_click[k] };
            }
            p
        };
        for &[a, b] in &PSI_MINUS {
            p_minus += pattern(a, b);
        }
        for &[a, b] in &PSI_PLUS {
            p_plus += pattern(a, b);
        }
    }
    (p_minus / PHASE_POINTS as f64, p_plus / PHASE_POINTS as f64)
}

/// Gain and error-gain for one intensity pair in one basis, averaged over the
/// four equiprobable bit combinations.
fn pair_gain_error(lam_a: f64, lam_b: f64, pd: f64, theta: f64, basis: Basis) -> (f64, f64) {
    let mut q = 0.0;
    let mut t = 0.0;
    for bit_a in 0..2u8 {
        for bit_b in 0..2u8 {
            let pol_a = rotate(polarization(basis, bit_a), -0.5 * theta);
            let pol_b = rotate(polarization(basis, bit_b), 0.5 * theta);
            let (u, w) = detector_fields(lam_a, lam_b, pol_a, pol_b);
            let (p_minus, p_plus) = bell_pattern_probabilities(&u, &w, pd);
            q += p_minus + p_plus;
            match basis {
                // An ideal projection accepts only orthogonal Z inputs: equal
                // sent bits are errors for both Bell outcomes.
                Basis::Z => {
                    if bit_a == bit_b {
                        t += p_minus + p_plus;
                    }
                }
                // psi-minus is X-anticorrelated, psi-plus X-correlated.
                Basis::X => {
                    if bit_a == bit_b {
                        t += p_minus;
                    } else {
                        t += p_plus;
                    }
                }
            }
        }
    }
    (q / 4.0, t / 4.0)
}

/// All gains and error-gains at instantaneous transmittances (eta_a, eta_b).
pub fn observables(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    eta_a: f64,
    eta_b: f64,
) -> Result<Observables> {
    if !(0.0..=1.0).contains(&eta_a) || !(0.0..=1.0).contains(&eta_b) {
        return Err(Error::DomainError(format!(
            "transmittances must lie in [0, 1]: ({eta_a}, {eta_b})"
        )));
    }
    let theta = device.misalignment_angle();
    let ta = eta_a * device.eta_d;
    let tb = eta_b * device.eta_d;
    let mut qx = [[0.0; 3]; 3];
    let mut tx = [[0.0; 3]; 3];
    let da = alice.decoys();
    let db = bob.decoys();
    for i in 0..3 {
        for j in 0..3 {
            let (q, t) = pair_gain_error(da[i] * ta, db[j] * tb, device.y0, theta, Basis::X);
            qx[i][j] = q;
            tx[i][j] = t;
        }
    }
    let (qz, tz) = pair_gain_error(alice.s * ta, bob.s * tb, device.y0, theta, Basis::Z);
    Ok(Observables { qx, tx, qz, tz })
}

/// Exact two-photon output distribution of the Bell-state measurement.
///
/// Returns probabilities over unordered detector-mode pairs, indexed by
/// (mode, mode) with mode <= mode for doubles.
fn two_photon_distribution(pol_a: [f64; 2], pol_b: [f64; 2]) -> Vec<(usize, usize, f64)> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let f = [
        r * pol_a[0],
        r * pol_a[1],
        r * pol_a[0],
        r * pol_a[1],
    ];
    let g = [
        r * pol_b[0],
        r * pol_b[1],
        -r * pol_b[0],
        -r * pol_b[1],
    ];
    let mut out = Vec::with_capacity(10);
    for m in 0..DETECTORS {
        for n in m..DETECTORS {
            let p = if m == n {
                2.0 * (f[m] * g[m]) * (f[m] * g[m])
            } else {
                let amp = f[m] * g[n] + f[n] * g[m];
                amp * amp
            };
            out.push((m, n, p));
        }
    }
    out
}

/// Probability that exactly `pattern` clicks given the set of photon-occupied
/// modes; unoccupied detectors click only through dark counts.
fn pattern_given_occupation(occupied: &[usize], pd: f64, pattern: [usize; 2]) -> f64 {
    let in_pattern = |k: usize| k == pattern[0] || k == pattern[1];
    if occupied.iter().any(|&k| !in_pattern(k)) {
        return 0.0;
    }
    let dark_needed = [pattern[0], pattern[1]]
        .iter()
        .filter(|&&k| !occupied.contains(&k))
        .count();
    pd.powi(dark_needed as i32) * (1.0 - pd) * (1.0 - pd)
}

/// Ground-truth single-photon-pair yield and error rate in the X basis.
///
/// Both users emit exactly one photon; loss acts as Bernoulli thinning with
/// lambda = eta * eta_d, surviving pairs interfere exactly (two-photon
/// amplitudes), and dark counts complete ambiguous patterns.
pub fn true_single_photon(device: &DeviceParams, eta_a: f64, eta_b: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eta_a) || !(0.0..=1.0).contains(&eta_b) {
        return Err(Error::DomainError(format!(
            "transmittances must lie in [0, 1]: ({eta_a}, {eta_b})"
        )));
    }
    let la = eta_a * device.eta_d;
    let lb = eta_b * device.eta_d;
    let pd = device.y0;
    let theta = device.misalignment_angle();
    let mut q = 0.0;
    let mut t = 0.0;
    for bit_a in 0..2u8 {
        for bit_b in 0..2u8 {
            let pol_a = rotate(polarization(Basis::X, bit_a), -0.5 * theta);
            let pol_b = rotate(polarization(Basis::X, bit_b), 0.5 * theta);
            let accept = |pattern: [usize; 2], weight: f64, occupied: &[usize]| {
                weight * pattern_given_occupation(occupied, pd, pattern)
            };
            let mut p_minus = 0.0;
            let mut p_plus = 0.0;
            // Both photons survive.
            let w_both = la * lb;
            if w_both > 0.0 {
                for &(m, n, p) in &two_photon_distribution(pol_a, pol_b) {
                    let occ: Vec<usize> = if m == n { vec![m] } else { vec![m, n] };
                    for &s in &PSI_MINUS {
                        p_minus += accept(s, w_both * p, &occ);
                    }
                    for &s in &PSI_PLUS {
                        p_plus += accept(s, w_both * p, &occ);
                    }
                }
            }
            // Exactly one photon survives: uniform over ports, polarization
            // split by the (rotated) state.
            for (weight, pol) in [(la * (1.0 - lb), pol_a), ((1.0 - la) * lb, pol_b)] {
                if weight == 0.0 {
                    continue;
                }
                for k in 0..DETECTORS {
                    let comp = if k % 2 == 0 { pol[0] } else { pol[1] };
                    let p_mode = 0.5 * comp * comp;
                    for &s in &PSI_MINUS {
                        p_minus += accept(s, weight * p_mode, &[k]);
                    }
                    for &s in &PSI_PLUS {
                        p_plus += accept(s, weight * p_mode, &[k]);
                    }
                }
            }
            // Both photons lost: dark counts only.
            let w_none = (1.0 - la) * (1.0 - lb);
            for &s in &PSI_MINUS {
                p_minus += accept(s, w_none, &[]);
            }
            for &s in &PSI_PLUS {
                p_plus += accept(s, w_none, &[]);
            }
            q += p_minus + p_plus;
            if bit_a == bit_b {
                t += p_minus;
            } else {
                t += p_plus;
            }
        }
    }
    let y11 = q / 4.0;
    let e11 = if y11 > 0.0 { (t / 4.0 / y11).min(0.5) } else { 0.0 };
    Ok((y11, e11))
}
