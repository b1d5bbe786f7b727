//! 4-intensity MDI-QKD key rate, the PDTC-independent rate map R(eta_A,
//! eta_B), and the three turbulence rate models.
//!
//! The rate formula combines the Z-basis signal observables with the
//! LP-certified single-photon bounds:
//!
//! R = P_sA P_sB { (sA e^-sA)(sB e^-sB) Y11_L [1 - h2(e11_U)]
//!                 - f_e Qz h2(Tz/Qz) }
//!
//! With equal signal settings on both sides this reduces to the familiar
//! P_s^2 {(s e^-s)^2 ...} form. The three turbulence models evaluate that
//! rate under a fading channel in different ways: at the mean transmittances
//! (simplified), averaged pointwise (integration), or on PDTC-averaged
//! observables (observable). All three report key per transmitted pulse, so
//! the post-selection probability multiplies every model.

use crate::decoy::{decoy_bounds, DecoyBounds, DEFAULT_CUTOFF};
use crate::domains::{region_integrals, QuadSpec, SelectionDomain};
use crate::error::{Error, Result};
use crate::physics::{observables, DeviceParams, IntensitySet, Observables};
use crate::turbulence::{JointPdtc, UNDERFLOW_FLOOR};

/// Binary entropy in bits; h2(0) = h2(1) = 0 by continuity.
pub fn h2(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!(
            "h2 argument must lie in [0, 1], got {x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Four-intensity key rate from already-computed observables and decoy bounds.
/// Signed: negative values mean the error-correction cost exceeds the
/// certified single-photon term.
pub fn key_rate_signed(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    obs: &Observables,
    bounds: &DecoyBounds,
) -> Result<f64> {
    let single = (alice.s * (-alice.s).exp())
        * (bob.s * (-bob.s).exp())
        * bounds.y11_lower
        * (1.0 - h2(bounds.e11_upper.clamp(0.0, 0.5))?);
    let correction = if obs.qz == 0.0 {
        if obs.tz > 0.0 {
            return Err(Error::InconsistentInput);
        }
        0.0
    } else {
        device.f_e * obs.qz * h2((obs.tz / obs.qz).min(1.0))?
    };
    Ok(alice.p_s * bob.p_s * (single - correction))
}

/// Nonnegative key rate; see [`key_rate_signed`].
pub fn key_rate(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    obs: &Observables,
    bounds: &DecoyBounds,
) -> Result<f64> {
    Ok(key_rate_signed(device, alice, bob, obs, bounds)?.max(0.0))
}

/// Full static-channel pipeline at one transmittance pair, signed.
pub fn rate_point_signed(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    eta_a: f64,
    eta_b: f64,
) -> Result<f64> {
    let obs = observables(device, alice, bob, eta_a, eta_b)?;
    let bounds = decoy_bounds(&obs.qx, &obs.tx, alice, bob, DEFAULT_CUTOFF)?;
    key_rate_signed(device, alice, bob, &obs, &bounds)
}

/// Full static-channel pipeline at one transmittance pair, clamped at 0.
pub fn rate_point(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    eta_a: f64,
    eta_b: f64,
) -> Result<f64> {
    Ok(rate_point_signed(device, alice, bob, eta_a, eta_b)?.max(0.0))
}

/// Log-spaced grid specification for [`rate_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Nodes per axis, >= 64.
    pub resolution: usize,
    /// Lower transmittance edge of the grid; upper edge is 1.
    pub eta_min: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 128,
            eta_min: 1e-6,
        }
    }
}

/// Signed rate samples on a log-spaced (eta_A, eta_B) grid.
///
/// The map depends only on device and intensity settings, never on a PDTC,
/// so thresholds derived from it can be fixed before the channel is known.
#[derive(Debug, Clone)]
pub struct RateMap {
    grid_a: Vec<f64>,
    grid_b: Vec<f64>,
    u_a: Vec<f64>,
    u_b: Vec<f64>,
    /// Row-major: raw[ia * grid_b.len() + ib], signed.
    raw: Vec<f64>,
    device: DeviceParams,
    alice: IntensitySet,
    bob: IntensitySet,
}

impl RateMap {
    pub fn grid_a(&self) -> &[f64] {
        &self.grid_a
    }

    pub fn grid_b(&self) -> &[f64] {
        &self.grid_b
    }

    pub fn device(&self) -> &DeviceParams {
        &self.device
    }

    pub fn alice(&self) -> &IntensitySet {
        &self.alice
    }

    pub fn bob(&self) -> &IntensitySet {
        &self.bob
    }

    /// Signed node value.
    pub fn raw(&self, ia: usize, ib: usize) -> f64 {
        self.raw[ia * self.grid_b.len() + ib]
    }

    /// Node value clamped at 0.
    pub fn value(&self, ia: usize, ib: usize) -> f64 {
        self.raw(ia, ib).max(0.0)
    }

    pub fn covers(&self, eta_a: f64, eta_b: f64) -> bool {
        eta_a >= self.grid_a[0]
            && eta_a <= *self.grid_a.last().unwrap()
            && eta_b >= self.grid_b[0]
            && eta_b <= *self.grid_b.last().unwrap()
    }

    /// Bilinear interpolation of the signed rate in (ln eta_A, ln eta_B).
    pub fn interpolate_raw(&self, eta_a: f64, eta_b: f64) -> Result<f64> {
        if !self.covers(eta_a, eta_b) {
            return Err(Error::OutOfGrid { eta_a, eta_b });
        }
        let (ia, ta) = locate(&self.u_a, eta_a.ln());
        let (ib, tb) = locate(&self.u_b, eta_b.ln());
        let nb = self.grid_b.len();
        let v00 = self.raw[ia * nb + ib];
        let v01 = self.raw[ia * nb + ib + 1];
        let v10 = self.raw[(ia + 1) * nb + ib];
        let v11 = self.raw[(ia + 1) * nb + ib + 1];
        Ok(v00 * (1.0 - ta) * (1.0 - tb)
            + v01 * (1.0 - ta) * tb
            + v10 * ta * (1.0 - tb)
            + v11 * ta * tb)
    }

    /// Zero crossings of the interpolated signed rate along the eta_A axis at
    /// fixed eta_B; exact for the bilinear interpolant. Empty when eta_b is
    /// outside the grid.
    pub(crate) fn crossings_along_a(&self, eta_b: f64) -> Vec<f64> {
        if eta_b < self.grid_b[0] || eta_b > *self.grid_b.last().unwrap() {
            return Vec::new();
        }
        let (ib, tb) = locate(&self.u_b, eta_b.ln());
        let nb = self.grid_b.len();
        let line: Vec<f64> = (0..self.grid_a.len())
            .map(|ia| self.raw[ia * nb + ib] * (1.0 - tb) + self.raw[ia * nb + ib + 1] * tb)
            .collect();
        crossings(&self.u_a, &line)
    }

    /// As [`Self::crossings_along_a`] with the roles of the axes swapped.
    pub(crate) fn crossings_along_b(&self, eta_a: f64) -> Vec<f64> {
        if eta_a < self.grid_a[0] || eta_a > *self.grid_a.last().unwrap() {
            return Vec::new();
        }
        let (ia, ta) = locate(&self.u_a, eta_a.ln());
        let nb = self.grid_b.len();
        let line: Vec<f64> = (0..nb)
            .map(|ib| self.raw[ia * nb + ib] * (1.0 - ta) + self.raw[(ia + 1) * nb + ib] * ta)
            .collect();
        crossings(&self.u_b, &line)
    }
}

/// Cell index and interpolation fraction of `u` in a sorted axis.
fn locate(axis: &[f64], u: f64) -> (usize, f64) {
    let i = match axis.binary_search_by(|a| a.partial_cmp(&u).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    }
    .min(axis.len() - 2);
    let t = ((u - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, t)
}

/// Sign-change roots of a piecewise-linear function sampled at `axis` (in u);
/// returned as eta values.
fn crossings(axis: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..values.len() - 1 {
        let (v0, v1) = (values[i], values[i + 1]);
        if (v0 < 0.0) != (v1 < 0.0) && v0 != v1 {
            let u = axis[i] + (axis[i + 1] - axis[i]) * v0 / (v0 - v1);
            out.push(u.exp());
        }
    }
    out
}

/// Evaluate the signed rate on a log-spaced grid.
pub fn rate_map(
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
    grid: &GridSpec,
) -> Result<RateMap> {
    if grid.resolution < 64 {
        return Err(Error::InvalidParameter(format!(
            "rate map resolution must be >= 64, got {}",
            grid.resolution
        )));
    }
    if !(grid.eta_min > 0.0 && grid.eta_min < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta_min must lie in (0, 1), got {}",
            grid.eta_min
        )));
    }
    let n = grid.resolution;
    let u_min = grid.eta_min.ln();
    let u: Vec<f64> = (0..n)
        .map(|i| u_min * (1.0 - i as f64 / (n - 1) as f64))
        .collect();
    let axis: Vec<f64> = u.iter().map(|v| v.exp()).collect();
    let mut raw = Vec::with_capacity(n * n);
    for &ea in &axis {
        for &eb in &axis {
            raw.push(rate_point_signed(device, alice, bob, ea, eb)?);
        }
    }
    Ok(RateMap {
        grid_a: axis.clone(),
        grid_b: axis,
        u_a: u.clone(),
        u_b: u,
        raw,
        device: *device,
        alice: *alice,
        bob: *bob,
    })
}

/// Quadrature budget for integrands that run the full observables + LP
/// pipeline per node; chosen so that model evaluations stay interactive on a
/// single core while remaining well inside Monte-Carlo agreement tolerances.
pub fn model_quad_spec() -> QuadSpec {
    QuadSpec {
        coarse: 16,
        window: 16,
        order: 3,
    }
}

/// Simplified model: the static rate at the conditional mean
/// transmittances over the selection domain, times the pass probability.
pub fn model_simplified(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
) -> Result<f64> {
    let (mass, means) = region_integrals(joint, domain, &QuadSpec::default(), 2, |a, b, buf| {
        buf[0] = a;
        buf[1] = b;
        Ok(())
    })?;
    if mass < UNDERFLOW_FLOOR {
        return Ok(0.0);
    }
    let rate = rate_point(device, alice, bob, means[0] / mass, means[1] / mass)?;
    Ok(rate * mass.min(1.0))
}

/// Integration model: PDTC-weighted average of the pointwise rate over
/// the whole plane. Serves as the upper bound for the observable model.
pub fn model_integration(
    joint: &JointPdtc,
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
) -> Result<f64> {
    let (_, ints) = region_integrals(
        joint,
        &SelectionDomain::Full,
        &model_quad_spec(),
        1,
        |a, b, buf| {
            buf[0] = rate_point(device, alice, bob, a, b)?;
            Ok(())
        },
    )?;
    Ok(ints[0].max(0.0))
}

/// Observable model: PDTC-average every gain and error-gain over the
/// selection domain, then run the decoy analysis and rate formula once on the
/// averaged observables, times the pass probability.
pub fn model_observable(
    joint: &JointPdtc,
    domain: &SelectionDomain,
    device: &DeviceParams,
    alice: &IntensitySet,
    bob: &IntensitySet,
) -> Result<f64> {
    let (mass, ints) = region_integrals(joint, domain, &model_quad_spec(), 20, |a, b, buf| {
        let o = observables(device, alice, bob, a, b)?;
        for i in 0..3 {
            for j in 0..3 {
                buf[3 * i + j] = o.qx[i][j];
                buf[9 + 3 * i + j] = o.tx[i][j];
            }
        }
        buf[18] = o.qz;
        buf[19] = o.tz;
        Ok(())
    })?;
    if mass < UNDERFLOW_FLOOR {
        return Ok(0.0);
    }
    let mut qx = [[0.0; 3]; 3];
    let mut tx = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            qx[i][j] = (ints[3 * i + j] / mass).clamp(0.0, 1.0);
            let t = (ints[9 + 3 * i + j] / mass).max(0.0);
            if t > qx[i][j] {
                // Quadrature noise can push an averaged error-gain a hair past
                // its gain; clamp and say so rather than fail.
                eprintln!(
                    "warning: averaged T[{i}][{j}] = {t} exceeds Q = {}; clamping",
                    qx[i][j]
                );
            }
            tx[i][j] = t.min(qx[i][j]);
        }
    }
    let qz = (ints[18] / mass).clamp(0.0, 1.0);
    let tz = (ints[19] / mass).max(0.0).min(qz);
    let obs = Observables { qx, tx, qz, tz };
    let bounds = decoy_bounds(&obs.qx, &obs.tx, alice, bob, DEFAULT_CUTOFF)?;
    let rate = key_rate(device, alice, bob, &obs, &bounds)?;
    Ok(rate * mass.min(1.0))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::turbulence::ChannelParams;

    /// Reference device and intensity settings used throughout the test
    /// suite; calibrated so the rate-map geometry matches the published
    /// contour values (criticals ~4e-3, x_min ~0.18).
    pub(crate) fn device() -> DeviceParams {
        DeviceParams::new(3.5e-6, 0.45, 0.01, 1.16).unwrap()
    }

    pub(crate) fn intensities() -> IntensitySet {
        IntensitySet::new(0.3, 0.5, 0.3, 0.09, 2e-4).unwrap()
    }

    fn joint(eta0: f64, sigma: f64) -> JointPdtc {
        let ch = ChannelParams::new(eta0, sigma).unwrap();
        JointPdtc::new(ch, ch)
    }

    #[test]
    fn h2_known_values() {
        assert_eq!(h2(0.5).unwrap(), 1.0);
        assert_eq!(h2(0.0).unwrap(), 0.0);
        assert_eq!(h2(1.0).unwrap(), 0.0);
        // Independent high-precision evaluation, frozen.
        assert!((h2(0.11).unwrap() - 4.9991595816452800e-1).abs() < 1e-15);
        assert!(h2(-0.1).is_err());
        assert!(h2(1.1).is_err());
    }

    #[test]
    fn key_rate_degenerate_bounds_give_zero() {
        let d = device();
        let ints = intensities();
        let obs = crate::physics::observables(&d, &ints, &ints, 0.01, 0.01).unwrap();
        let no_yield = DecoyBounds {
            y11_lower: 0.0,
            e11_upper: 0.5,
        };
        assert_eq!(key_rate(&d, &ints, &ints, &obs, &no_yield).unwrap(), 0.0);
        let max_error = DecoyBounds {
            y11_lower: 1e-5,
            e11_upper: 0.5,
        };
        assert_eq!(key_rate(&d, &ints, &ints, &obs, &max_error).unwrap(), 0.0);
    }

    #[test]
    fn key_rate_rejects_inconsistent_z_observables() {
        let d = device();
        let ints = intensities();
        let obs = Observables {
            qx: [[0.0; 3]; 3],
            tx: [[0.0; 3]; 3],
            qz: 0.0,
            tz: 1e-6,
        };
        let b = DecoyBounds {
            y11_lower: 0.0,
            e11_upper: 0.5,
        };
        assert!(matches!(
            key_rate(&d, &ints, &ints, &obs, &b),
            Err(Error::InconsistentInput)
        ));
    }

    #[test]
    fn rate_point_dead_channel_is_zero() {
        let d = DeviceParams::new(0.0, 0.45, 0.01, 1.16).unwrap();
        let ints = intensities();
        assert_eq!(rate_point(&d, &ints, &ints, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rate_point_symmetric_under_relabeling() {
        let d = device();
        let ints = intensities();
        let ab = rate_point_signed(&d, &ints, &ints, 0.004, 0.02).unwrap();
        let ba = rate_point_signed(&d, &ints, &ints, 0.02, 0.004).unwrap();
        assert!(
            (ab - ba).abs() <= 1e-9 * ab.abs().max(1e-12),
            "{ab} vs {ba}"
        );
    }

    #[test]
    fn rate_point_zero_beyond_mismatch_limit() {
        let d = device();
        let ints = intensities();
        // eta_a / eta_b = 10, far beyond x_max ~ 5.
        assert_eq!(rate_point(&d, &ints, &ints, 0.5, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn rate_point_reference_golden() {
        // Full pipeline regression value at the symmetric reference point,
        // frozen after oracle validation.
        let r = rate_point(&device(), &intensities(), &intensities(), 0.01, 0.01).unwrap();
        assert!((r - 2.0790592733073372e-8).abs() < 1e-19, "{r}");
    }

    #[test]
    fn rate_map_validates_spec() {
        let d = device();
        let ints = intensities();
        assert!(rate_map(
            &d,
            &ints,
            &ints,
            &GridSpec {
                resolution: 32,
                eta_min: 1e-6
            }
        )
        .is_err());
        assert!(rate_map(
            &d,
            &ints,
            &ints,
            &GridSpec {
                resolution: 64,
                eta_min: 1.5
            }
        )
        .is_err());
    }

    #[test]
    fn rate_map_geometry_and_interpolation() {
        let d = device();
        let ints = intensities();
        let map = rate_map(
            &d,
            &ints,
            &ints,
            &GridSpec {
                resolution: 64,
                eta_min: 1e-3,
            },
        )
        .unwrap();
        // Clamped values are nonnegative, and some raw values of each sign
        // exist on this grid.
        let n = map.grid_a().len();
        let mut pos = 0;
        let mut neg = 0;
        for ia in 0..n {
            for ib in 0..n {
                assert!(map.value(ia, ib) >= 0.0);
                if map.raw(ia, ib) > 0.0 {
                    pos += 1;
                } else {
                    neg += 1;
                }
                // Symmetric settings: the raw map is symmetric up to LP
                // solver noise (measured residual is below 3e-5 relative).
                let ji = map.raw(ib, ia);
                let v = map.raw(ia, ib);
                assert!((v - ji).abs() <= 1e-4 * v.abs() + 1e-10);
            }
        }
        assert!(pos > 0 && neg > 0);
        // Interpolation reproduces node values and fails off-grid.
        let v = map.interpolate_raw(map.grid_a()[10], map.grid_b()[20]).unwrap();
        assert!((v - map.raw(10, 20)).abs() <= 1e-12 * v.abs().max(1e-15));
        assert!(matches!(
            map.interpolate_raw(1e-4, 0.5),
            Err(Error::OutOfGrid { .. })
        ));
        // Interpolated sign flips across a reported crossing.
        let xs = map.crossings_along_a(0.5);
        assert!(!xs.is_empty());
        let x = xs[0];
        let lo = map.interpolate_raw(x * 0.98, 0.5).unwrap();
        let hi = map.interpolate_raw(x * 1.02, 0.5).unwrap();
        assert!((lo < 0.0) != (hi < 0.0), "{lo} {hi}");
    }

    #[test]
    fn rate_map_self_convergence() {
        let d = device();
        let ints = intensities();
        let spec = GridSpec {
            resolution: 64,
            eta_min: 2e-3,
        };
        let coarse = rate_map(&d, &ints, &ints, &spec).unwrap();
        let fine = rate_map(
            &d,
            &ints,
            &ints,
            &GridSpec {
                resolution: 128,
                ..spec
            },
        )
        .unwrap();
        // Compare at off-node probe points. Near the R = 0 wall the rate
        // varies steeply and passes through zero, so the relative error of
        // bilinear interpolation is unbounded there; the absolute term in the
        // tolerance covers that region.
        for i in 0..12 {
            for j in 0..12 {
                let ea = 2.5e-3 * (1.0 / 2.5e-3f64).powf((i as f64 + 0.37) / 12.0);
                let eb = 2.5e-3 * (1.0 / 2.5e-3f64).powf((j as f64 + 0.61) / 12.0);
                let vf = fine.interpolate_raw(ea, eb).unwrap();
                if vf > 0.0 {
                    let vc = coarse.interpolate_raw(ea, eb).unwrap();
                    assert!(
                        (vc - vf).abs() < 0.02 * vf + 5e-7,
                        "({ea}, {eb}): {vc} vs {vf}"
                    );
                }
            }
        }
    }

    #[test]
    fn models_collapse_to_static_rate_at_zero_sigma() {
        let d = device();
        let ints = intensities();
        let j = joint(0.01, 0.0);
        let stat = rate_point(&d, &ints, &ints, 0.01, 0.01).unwrap();
        let full = SelectionDomain::Full;
        let ms = model_simplified(&j, &full, &d, &ints, &ints).unwrap();
        let mi = model_integration(&j, &d, &ints, &ints).unwrap();
        let mo = model_observable(&j, &full, &d, &ints, &ints).unwrap();
        assert!((ms - stat).abs() < 1e-12 * stat);
        assert!((mi - stat).abs() < 1e-12 * stat);
        assert!((mo - stat).abs() < 1e-12 * stat);
        // A nonempty square domain still matches the static rate.
        let sq = SelectionDomain::square(0.005, 0.005).unwrap();
        let mo_sq = model_observable(&j, &sq, &d, &ints, &ints).unwrap();
        assert!((mo_sq - stat).abs() < 1e-12 * stat);
    }

    #[test]
    fn models_degenerate_with_narrow_sigma() {
        let d = device();
        let ints = intensities();
        let j = joint(0.01, 1e-3);
        let stat = rate_point(&d, &ints, &ints, 0.01, 0.01).unwrap();
        let full = SelectionDomain::Full;
        let ms = model_simplified(&j, &full, &d, &ints, &ints).unwrap();
        let mi = model_integration(&j, &d, &ints, &ints).unwrap();
        let mo = model_observable(&j, &full, &d, &ints, &ints).unwrap();
        for (name, v) in [("simplified", ms), ("integration", mi), ("observable", mo)] {
            assert!(
                ((v - stat) / stat).abs() < 1e-3,
                "{name}: {v} vs static {stat}"
            );
        }
    }

    #[test]
    fn simplified_full_equals_static_for_symmetric_turbulence() {
        let d = device();
        let ints = intensities();
        let j = joint(0.01, 0.9);
        let ms = model_simplified(&j, &SelectionDomain::Full, &d, &ints, &ints).unwrap();
        let stat = rate_point(&d, &ints, &ints, 0.01, 0.01).unwrap();
        // <eta> = eta0 up to the (here negligible) truncation above eta = 1.
        assert!(((ms - stat) / stat).abs() < 1e-3, "{ms} vs {stat}");
    }

    #[test]
    fn simplified_square_cross_check_via_marginals() {
        let d = device();
        let ints = intensities();
        let ch = ChannelParams::new(0.005, 0.9).unwrap();
        let j = JointPdtc::new(ch, ch);
        let t = 0.01;
        let dom = SelectionDomain::square(t, t).unwrap();
        let ms = model_simplified(&j, &dom, &d, &ints, &ints).unwrap();
        let m1 = ch.conditional_mean(t).unwrap();
        let p1 = ch.selection_probability(t);
        let expect = rate_point(&d, &ints, &ints, m1, m1).unwrap() * p1 * p1;
        assert!(((ms - expect) / expect).abs() < 1e-4, "{ms} vs {expect}");
    }

    #[test]
    fn model_ordering_under_turbulence() {
        let d = device();
        let ints = intensities();
        let j = joint(0.1, 0.9);
        let full = SelectionDomain::Full;
        let ms = model_simplified(&j, &full, &d, &ints, &ints).unwrap();
        let mi = model_integration(&j, &d, &ints, &ints).unwrap();
        let mo = model_observable(&j, &full, &d, &ints, &ints).unwrap();
        assert!(mo > 0.0);
        // The simplified model overestimates; integration upper-bounds the
        // observable model.
        assert!(mo < ms, "{mo} vs {ms}");
        assert!(mo <= mi + 1e-12, "{mo} vs {mi}");
    }
}
