//! Log-normal probability distribution of transmission coefficient (PDTC).
//!
//! A turbulent channel is described by a mean transmittance eta0 and a
//! log-variance parameter sigma. The instantaneous transmittance follows
//! eta = exp(G) with G ~ Normal(ln(eta0) - sigma^2/2, sigma^2), so the
//! untruncated mean is exactly eta0. Whenever eta0 is comparable to 1 a
//! non-negligible part of the mass lies above eta = 1; all probability
//! queries therefore refer to the distribution truncated to (0, 1] and
//! renormalized by [`ChannelParams::truncation_mass`].
//!
//! sigma = 0 is an explicit static-channel variant (a point mass at eta0),
//! not a limit of the density formula, which is singular there.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Selection probabilities below this floor are treated as an empty selection.
pub const UNDERFLOW_FLOOR: f64 = 1e-30;

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// One turbulent channel: mean transmittance and log-variance parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    eta0: f64,
    sigma: f64,
}

impl ChannelParams {
    pub fn new(eta0: f64, sigma: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta0 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta0 must lie in (0, 1], got {eta0}"
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self { eta0, sigma })
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Static-channel variant: sigma = 0, point mass at eta0.
    pub fn is_static(&self) -> bool {
        self.sigma == 0.0
    }

    /// Mean of ln(eta): ln(eta0) - sigma^2/2.
    fn log_mean(&self) -> f64 {
        self.eta0.ln() - 0.5 * self.sigma * self.sigma
    }

    /// z-score of ln(eta) under the underlying Gaussian.
    fn z(&self, eta: f64) -> f64 {
        (eta.ln() - self.log_mean()) / self.sigma
    }

    /// Untruncated log-normal density p(eta) of the PDTC model.
    pub fn pdtc_density(&self, eta: f64) -> Result<f64> {
        if self.is_static() {
            return Err(Error::DegenerateDistribution);
        }
        if !(eta > 0.0) {
            return Err(Error::DomainError(format!(
                "density requires eta > 0, got {eta}"
            )));
        }
        let z = self.z(eta);
        Ok((-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.sigma * eta))
    }

    /// Probability mass of the untruncated distribution on (0, 1]; the
    /// normalization divisor of the truncated log-normal.
    pub fn truncation_mass(&self) -> f64 {
        if self.is_static() {
            return 1.0;
        }
        phi(self.z(1.0))
    }

    /// Untruncated mass on (lo, hi].
    pub fn raw_mass(&self, lo: f64, hi: f64) -> f64 {
        if self.is_static() {
            return if self.eta0 > lo && self.eta0 <= hi {
                1.0
            } else {
                0.0
            };
        }
        if hi <= lo {
            return 0.0;
        }
        let upper = phi(self.z(hi));
        let lower = if lo <= 0.0 { 0.0 } else { phi(self.z(lo)) };
        (upper - lower).max(0.0)
    }

    /// Untruncated partial expectation: integral of eta * p(eta) over (lo, hi].
    pub fn raw_partial_mean(&self, lo: f64, hi: f64) -> f64 {
        if self.is_static() {
            return if self.eta0 > lo && self.eta0 <= hi {
                self.eta0
            } else {
                0.0
            };
        }
        if hi <= lo {
            return 0.0;
        }
        // E[eta; eta <= b] = eta0 * Phi(z(b) - sigma) for a log-normal with mean eta0.
        let upper = phi(self.z(hi) - self.sigma);
        let lower = if lo <= 0.0 {
            0.0
        } else {
            phi(self.z(lo) - self.sigma)
        };
        self.eta0 * (upper - lower).max(0.0)
    }

    /// Probability that a post-selected (truncated to (0,1]) transmittance
    /// exceeds eta_t.
    pub fn selection_probability(&self, eta_t: f64) -> f64 {
        self.raw_mass(eta_t, 1.0) / self.truncation_mass()
    }

    /// Mean transmittance among post-selected signals, eta >= eta_t.
    pub fn conditional_mean(&self, eta_t: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&eta_t) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1), got {eta_t}"
            )));
        }
        let mass = self.raw_mass(eta_t, 1.0);
        if mass < UNDERFLOW_FLOOR {
            return Err(Error::EmptySelection);
        }
        Ok(self.raw_partial_mean(eta_t, 1.0) / mass)
    }

    /// CDF of the truncated distribution on (0, 1].
    pub fn truncated_cdf(&self, eta: f64) -> f64 {
        if self.is_static() {
            return if eta >= self.eta0 { 1.0 } else { 0.0 };
        }
        if eta <= 0.0 {
            0.0
        } else if eta >= 1.0 {
            1.0
        } else {
            (phi(self.z(eta)) / self.truncation_mass()).min(1.0)
        }
    }

    /// One truncated draw: exp(Gaussian), redrawn while above 1.
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.is_static() {
            return self.eta0;
        }
        loop {
            let g: f64 = rng.sample(StandardNormal);
            let eta = (self.log_mean() + self.sigma * g).exp();
            if eta <= 1.0 {
                return eta;
            }
        }
    }
}

/// Independent two-channel PDTC: the joint density factorizes into the
/// product of the two marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPdtc {
    pub alice: ChannelParams,
    pub bob: ChannelParams,
}

impl JointPdtc {
    pub fn new(alice: ChannelParams, bob: ChannelParams) -> Self {
        Self { alice, bob }
    }

    /// Product of the untruncated marginal densities.
    pub fn joint_density(&self, eta_a: f64, eta_b: f64) -> Result<f64> {
        Ok(self.alice.pdtc_density(eta_a)? * self.bob.pdtc_density(eta_b)?)
    }

    /// Product of the truncation masses; normalization divisor on (0, 1]^2.
    pub fn truncation_mass(&self) -> f64 {
        self.alice.truncation_mass() * self.bob.truncation_mass()
    }

    /// Reproducible truncated sampling: identical (seed, count) yields an
    /// identical sequence of pairs.
    pub fn sample_pairs(&self, count: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (self.alice.sample(&mut rng), self.bob.sample(&mut rng)))
            .collect()
    }
}
