//! Monte-Carlo oracles for the quadrature pipeline.
//!
//! Everything here estimates a quantity the deterministic code also computes,
//! by independent means: region probabilities by direct sampling of the joint
//! PDTC, the observable-model rate by averaging observables over sampled
//! transmittance pairs, and the Bell-state-measurement observables themselves
//! by simulating photon detection trial by trial. Agreement at a few standard
//! errors validates both sides; no variance reduction is attempted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoy::{decoy_bounds, DEFAULT_CUTOFF};
use crate::domains::SelectionDomain;
use crate::error::{Error, Result};
use crate::keyrate::key_rate;
use crate::physics::{observables, Basis, DeviceParams, IntensitySet, Observables};
use crate::turbulence::JointPdtc;

/// Minimum sample count accepted by the oracles.
pub const MIN_SAMPLES: usize = 10_000;

/// Number of batches for batch-means standard errors.
const BATCHES: usize = 20;

/// A Monte-Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Total sample count actually drawn.
    pub n: usize,
    /// Seed that reproduces the estimate bit for bit.
    pub seed: u64,
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo oracles need n >= {MIN_SAMPLES}, got {n}"
        )));
    }
    Ok(())
}

/// Deterministic per-stream seed derivation (splitmix-style mixing keeps
/// streams decorrelated even for adjacent indices).
fn derived_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fraction of sampled transmittance pairs that fall inside the selection
/// domain, with the exact binomial standard error.
///
/// Pairs a Boundary map does not cover count as unselected, matching the
/// quadrature convention.
pub fn mc_region_probability(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(n)?;
    let pairs = joint.sample_pairs(n, seed);
    let hits = pairs
        .iter()
        .filter(|&&(a, b)| domain.contains_quad(a, b))
        .count();
    let p = hits as f64 / n as f64;
    Ok(McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n,
        seed,
    })
}

/// Monte-Carlo estimate of the conditional mean transmittances over the
/// selection domain, one estimate per arm.
///
/// Uses 20 batches of the ratio estimator (mean of accepted eta over batch
/// acceptance count) with batch-means standard errors, since a ratio is a
/// nonlinear function of sample averages. Errors with
/// [`Error::EmptySelection`] when no sample in any batch is accepted; batches
/// with no accepted samples are dropped from the mean.
pub fn mc_region_means(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    n: usize,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    check_samples(n)?;
    let base = n / BATCHES;
    let extra = n % BATCHES;
    let mut means_a = Vec::with_capacity(BATCHES);
    let mut means_b = Vec::with_capacity(BATCHES);
    let mut total = 0usize;
    for batch in 0..BATCHES {
        let m = base + usize::from(batch < extra);
        total += m;
        let pairs = joint.sample_pairs(m, derived_seed(seed, batch));
        let (mut sa, mut sb, mut accepted) = (0.0f64, 0.0f64, 0usize);
        for &(a, b) in &pairs {
            if domain.contains_quad(a, b) {
                sa += a;
                sb += b;
                accepted += 1;
            }
        }
        if accepted > 0 {
            means_a.push(sa / accepted as f64);
            means_b.push(sb / accepted as f64);
        }
    }
    if means_a.is_empty() {
        return Err(Error::EmptySelection);
    }
    let batch_means = |values: &[f64]| {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        McEstimate {
            value: mean,
            std_error: (var / k).sqrt(),
            n: total,
            seed,
        }
    };
    Ok((batch_means(&means_a), batch_means(&means_b)))
}

/// One batch of the observable-model estimator: average the 20 observable
/// components over accepted samples, run the decoy analysis and rate formula
/// once, and scale by the batch acceptance fraction.
fn observable_batch(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    m: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    let pairs = joint.sample_pairs(m, seed);
    let mut sums = [0.0f64; 20];
    let mut accepted = 0usize;
    for &(a, b) in &pairs {
        if !domain.contains_quad(a, b) {
            continue;
        }
        accepted += 1;
        let o = observables(device, alice, bob, a, b)?;
        for i in 0..3 {
            for j in 0..3 {
                sums[3 * i + j] += o.qx[i][j];
                sums[9 + 3 * i + j] += o.tx[i][j];
            }
        }
        sums[18] += o.qz;
        sums[19] += o.tz;
    }
    if accepted == 0 {
        return Ok((0.0, 0));
    }
    let inv = 1.0 / accepted as f64;
    let mut qx = [[0.0; 3]; 3];
    let mut tx = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            qx[i][j] = (sums[3 * i + j] * inv).clamp(0.0, 1.0);
            tx[i][j] = (sums[9 + 3 * i + j] * inv).max(0.0).min(qx[i][j]);
        }
    }
    let qz = (sums[18] * inv).clamp(0.0, 1.0);
    let tz = (sums[19] * inv).max(0.0).min(qz);
    let obs = Observables { qx, tx, qz, tz };
    let bounds = decoy_bounds(&obs.qx, &obs.tx, alice, bob, DEFAULT_CUTOFF)?;
    let rate = key_rate(device, alice, bob, &obs, &bounds)?;
    Ok((rate * accepted as f64 / m as f64, accepted))
}

/// Monte-Carlo estimate of the observable-model key rate.
///
/// Runs 20 independent batches with derived seeds; each batch averages the
/// gains and error-gains over its accepted samples, pushes the averages
/// through the decoy analysis and the rate formula, and scales by its own
/// acceptance fraction. The reported value is the batch mean and the standard
/// error is the batch-means error — the per-sample delta method does not
/// apply because the decoy bounds are a nonlinear function of the averages.
///
/// Errors with [`Error::EmptySelection`] when no sample in any batch lands in
/// the domain.
pub fn mc_observable_model(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(n)?;
    let base = n / BATCHES;
    let extra = n % BATCHES;
    let mut values = Vec::with_capacity(BATCHES);
    let mut total_accepted = 0usize;
    let mut total = 0usize;
    for batch in 0..BATCHES {
        let m = base + usize::from(batch < extra);
        let (value, accepted) =
            observable_batch(joint, domain, device, alice, bob, m, derived_seed(seed, batch))?;
        values.push(value);
        total_accepted += accepted;
        total += m;
    }
    if total_accepted == 0 {
        return Err(Error::EmptySelection);
    }
    let mean = values.iter().sum::<f64>() / BATCHES as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(McEstimate {
        value: mean,
        std_error: (var / BATCHES as f64).sqrt(),
        n: total,
        seed,
    })
}

/// Monte-Carlo estimate of every gain and error-gain at fixed transmittances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McObservables {
    pub value: Observables,
    /// Binomial standard error of each entry.
    pub std_error: Observables,
    /// Trials per observable entry.
    pub n: usize,
    pub seed: u64,
}

/// Sample a Poisson count with a small mean by CDF inversion. The detected
/// means here are well below 1, so the walk terminates after a step or two.
fn poisson_small(lam: f64, rng: &mut ChaCha8Rng) -> u32 {
    if lam <= 0.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    let mut p = (-lam).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && k < 1000 {
        k += 1;
        p *= lam / k as f64;
        cdf += p;
    }
    k
}

/// One simulated Bell-state-measurement trial for a fixed intensity pair and
/// basis. Returns (gain event, error event).
fn bsm_trial(
    lam_a: f64,
    lam_b: f64,
    pd: f64,
    theta: f64,
    basis: Basis,
    rng: &mut ChaCha8Rng,
) -> (bool, bool) {
    let bit_a = rng.gen::<bool>() as u8;
    let bit_b = rng.gen::<bool>() as u8;
    let phi: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    let c = phi.cos();
    // Polarization vectors, misalignment split symmetrically across the arms.
    let pol = |basis: Basis, bit: u8, tilt: f64| -> [f64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v: [f64; 2] = match (basis, bit) {
            (Basis::Z, 0) => [1.0, 0.0],
            (Basis::Z, _) => [0.0, 1.0],
            (Basis::X, 0) => [r, r],
            (Basis::X, _) => [r, -r],
        };
        let (s, co) = tilt.sin_cos();
        [co * v[0] - s * v[1], s * v[0] + co * v[1]]
    };
    let pa = pol(basis, bit_a, -0.5 * theta);
    let pb = pol(basis, bit_b, 0.5 * theta);
    // Detector order 1H, 1V, 2H, 2V; the second beamsplitter port flips the
    // sign of Bob's field.
    let half = 0.5_f64;
    let (sa, sb) = (lam_a, lam_b);
    let amp_a = [pa[0], pa[1], pa[0], pa[1]];
    let amp_b = [pb[0], pb[1], -pb[0], -pb[1]];
    let mut clicks = [false; 4];
    for k in 0..4 {
        let ua = (half * sa).sqrt() * amp_a[k];
        let wb = (half * sb).sqrt() * amp_b[k];
        let intensity = ua * ua + wb * wb + 2.0 * ua * wb * c;
        let photons = poisson_small(intensity, rng);
        let dark = rng.gen::<f64>() < pd;
        clicks[k] = photons > 0 || dark;
    }
    let total = clicks.iter().filter(|&&c| c).count();
    if total != 2 {
        return (false, false);
    }
    let psi_minus = (clicks[0] && clicks[3]) || (clicks[1] && clicks[2]);
    let psi_plus = (clicks[0] && clicks[1]) || (clicks[2] && clicks[3]);
    if !(psi_minus || psi_plus) {
        return (false, false);
    }
    let error = match basis {
        // An ideal Bell projection accepts only orthogonal Z inputs.
        Basis::Z => bit_a == bit_b,
        // psi-minus is X-anticorrelated, psi-plus X-correlated.
        Basis::X => {
            if psi_minus {
                bit_a == bit_b
            } else {
                bit_a != bit_b
            }
        }
    };
    (true, error)
}

/// Simulate the Bell-state measurement `n` times per observable entry and
/// report every gain and error-gain with binomial standard errors.
///
/// This is a trial-level reimplementation of the detection model: random bits,
/// a sampled relative phase, Poisson photon counts per detector, and dark
/// counts, with no phase averaging or closed-form click probabilities shared
/// with [`observables`].
pub fn mc_observables(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    eta_a: f64,
    eta_b: f64,
    n: usize,
    seed: u64,
) -> Result<McObservables> {
    check_samples(n)?;
    if !(0.0..=1.0).contains(&eta_a) || !(0.0..=1.0).contains(&eta_b) {
        return Err(Error::DomainError(format!(
            "transmittances must lie in [0, 1]: ({eta_a}, {eta_b})"
        )));
    }
    let theta = device.misalignment_angle();
    let ta = eta_a * device.eta_d;
    let tb = eta_b * device.eta_d;
    let da = alice.decoys();
    let db = bob.decoys();
    let binom = |k: usize| {
        let p = k as f64 / n as f64;
        (p, (p * (1.0 - p) / n as f64).sqrt())
    };
    let mut value = Observables {
        qx: [[0.0; 3]; 3],
        tx: [[0.0; 3]; 3],
        qz: 0.0,
        tz: 0.0,
    };
    let mut std_error = value;
    let mut entry = 0usize;
    for i in 0..3 {
        for j in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, entry));
            entry += 1;
            let (mut q, mut t) = (0usize, 0usize);
            for _ in 0..n {
                let (gain, err) = bsm_trial(da[i] * ta, db[j] * tb, device.y0, theta, Basis::X, &mut rng);
                q += gain as usize;
                t += err as usize;
            }
            (value.qx[i][j], std_error.qx[i][j]) = binom(q);
            (value.tx[i][j], std_error.tx[i][j]) = binom(t);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, entry));
    let (mut q, mut t) = (0usize, 0usize);
    for _ in 0..n {
        let (gain, err) = bsm_trial(alice.s * ta, bob.s * tb, device.y0, theta, Basis::Z, &mut rng);
        q += gain as usize;
        t += err as usize;
    }
    (value.qz, std_error.qz) = binom(q);
    (value.tz, std_error.tz) = binom(t);
    Ok(McObservables {
        value,
        std_error,
        n,
        seed,
    })
}
