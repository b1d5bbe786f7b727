//! Prefixed-threshold extraction from the channel-independent rate map:
//! the R = 0 boundary contour, critical transmittances, and asymmetry
//! cut-offs.
//!
//! Everything in this module is a pure function of the rate map — and through
//! it of the device parameters, intensity sets, and grid — with no reference
//! to any transmittance distribution. The thresholds can therefore be fixed
//! before a session, independently of the channel statistics.

use std::collections::HashMap;
use std::sync::Arc;

use crate::domains::SelectionDomain;
use crate::error::{Error, Result};
use crate::keyrate::{rate_point_signed, RateMap};

/// Default absolute tolerance in R for boundary-vertex refinement.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Transmittance threshold above which the contour is treated as being in its
/// asymptotic straight section when estimating the mismatch cut-offs.
const ASYMPTOTE_ETA: f64 = 0.5;

/// Thresholds read off the R = 0 contour of a rate map.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    /// Smallest Alice-side transmittance with positive rate (vertical tangent
    /// of the contour).
    pub eta_a_critical: f64,
    /// Smallest Bob-side transmittance with positive rate.
    pub eta_b_critical: f64,
    /// Minimum acceptable channel mismatch eta_A / eta_B.
    pub x_min: f64,
    /// Maximum acceptable channel mismatch eta_A / eta_B.
    pub x_max: f64,
    /// Ordered polyline of (eta_A, eta_B) points along R = 0.
    pub boundary: Vec<(f64, f64)>,
}

impl ThresholdSet {
    /// Extracts the full threshold set from a rate map in one pass.
    pub fn from_map(map: &RateMap) -> Result<Self> {
        let crossings = edge_crossings(map, BOUNDARY_TOL)?;
        let boundary = chain_polyline(map, &crossings);
        let points: Vec<(f64, f64)> = crossings.values().copied().collect();
        let (eta_a_critical, eta_b_critical) = criticals_from(&points)?;
        let (x_min, x_max) = asymmetry_from(&points)?;
        Ok(ThresholdSet {
            eta_a_critical,
            eta_b_critical,
            x_min,
            x_max,
            boundary,
        })
    }
}

/// Marching-squares contour of the signed rate at level zero, with every
/// vertex refined along its grid edge until |R| < `tol`.
///
/// Returns the longest connected polyline (closed, or terminating on the grid
/// boundary). Fails with [`Error::NoBoundary`] when the map does not change
/// sign.
pub fn extract_boundary(map: &RateMap, tol: f64) -> Result<Vec<(f64, f64)>> {
    let crossings = edge_crossings(map, tol)?;
    Ok(chain_polyline(map, &crossings))
}

/// Smallest (eta_A, eta_B) reached by the R > 0 region: the tangents of the
/// R = 0 contour. Positive whenever the dark-count rate is positive.
pub fn critical_etas(map: &RateMap) -> Result<(f64, f64)> {
    let crossings = edge_crossings(map, BOUNDARY_TOL)?;
    let points: Vec<(f64, f64)> = crossings.values().copied().collect();
    criticals_from(&points)
}

/// Minimum and maximum acceptable channel mismatch x = eta_A / eta_B, read
/// from the asymptotic straight sections of the contour.
///
/// The ratio is collected over contour vertices with max(eta_A, eta_B) above
/// 0.5 — far from the dark-count gap near the origin, where the contour bends
/// — and the median of each branch (ratios below and above 1) is reported.
pub fn asymmetry_limits(map: &RateMap) -> Result<(f64, f64)> {
    let crossings = edge_crossings(map, BOUNDARY_TOL)?;
    let points: Vec<(f64, f64)> = crossings.values().copied().collect();
    asymmetry_from(&points)
}

/// Combines the four scalar thresholds into the joint selection predicate:
/// both transmittances above their criticals and the mismatch within
/// [x_min, x_max].
pub fn build_joint_domain(ts: &ThresholdSet) -> Result<SelectionDomain> {
    SelectionDomain::joint(ts.eta_a_critical, ts.eta_b_critical, ts.x_min, ts.x_max)
}

/// A grid edge, identified by its lower-index endpoint and direction.
/// `along_a = true` means the edge runs between a-indices `ia` and `ia + 1`
/// at fixed b-index `ib`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct EdgeId {
    ia: usize,
    ib: usize,
    along_a: bool,
}

/// The selection region is R >= 0, so a node at exactly zero counts as inside.
fn inside(v: f64) -> bool {
    v >= 0.0
}

/// Finds every grid edge whose endpoints straddle the contour and refines the
/// crossing point by bisection of the signed rate along the edge (in log
/// transmittance) until |R| < `tol`.
fn edge_crossings(map: &RateMap, tol: f64) -> Result<HashMap<EdgeId, (f64, f64)>> {
    let ga = map.grid_a();
    let gb = map.grid_b();
    let (na, nb) = (ga.len(), gb.len());
    let mut out = HashMap::new();
    for ib in 0..nb {
        for ia in 0..na {
            let v = map.raw(ia, ib);
            if ia + 1 < na && inside(v) != inside(map.raw(ia + 1, ib)) {
                let eta_a = bisect_edge(map, tol, ga[ia], ga[ia + 1], |e| (e, gb[ib]))?;
                out.insert(
                    EdgeId {
                        ia,
                        ib,
                        along_a: true,
                    },
                    (eta_a, gb[ib]),
                );
            }
            if ib + 1 < nb && inside(v) != inside(map.raw(ia, ib + 1)) {
                let eta_b = bisect_edge(map, tol, gb[ib], gb[ib + 1], |e| (ga[ia], e))?;
                out.insert(
                    EdgeId {
                        ia,
                        ib,
                        along_a: false,
                    },
                    (ga[ia], eta_b),
                );
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoBoundary);
    }
    Ok(out)
}

/// Bisects the signed rate along one grid edge. `place` maps the varying
/// coordinate to the full (eta_A, eta_B) point. Bisection runs in log space
/// (matching the grid) and stops at |R| < tol or when the interval collapses
/// to floating-point resolution.
fn bisect_edge(
    map: &RateMap,
    tol: f64,
    lo: f64,
    hi: f64,
    place: impl Fn(f64) -> (f64, f64),
) -> Result<f64> {
    let d = map.device();
    let (al, bo) = (map.alice(), map.bob());
    let rate = |e: f64| -> Result<f64> {
        let (ea, eb) = place(e);
        rate_point_signed(d, al, bo, ea, eb)
    };
    let (mut ulo, mut uhi) = (lo.ln(), hi.ln());
    let mut flo = rate(lo)?;
    let fhi = rate(hi)?;
    if inside(flo) == inside(fhi) {
        // The node signs came from the map, which is built from the same
        // rate function; a mismatch here cannot happen.
        return Err(Error::InconsistentInput);
    }
    for _ in 0..200 {
        let um = 0.5 * (ulo + uhi);
        if um <= ulo || um >= uhi {
            break;
        }
        let em = um.exp();
        let fm = rate(em)?;
        if fm.abs() < tol {
            return Ok(em);
        }
        if inside(fm) == inside(flo) {
            ulo = um;
            flo = fm;
        } else {
            uhi = um;
        }
    }
    Ok((0.5 * (ulo + uhi)).exp())
}

/// Marching-squares cell segments, chained into the longest polyline.
fn chain_polyline(map: &RateMap, crossings: &HashMap<EdgeId, (f64, f64)>) -> Vec<(f64, f64)> {
    let ga = map.grid_a();
    let gb = map.grid_b();
    let (na, nb) = (ga.len(), gb.len());
    // Adjacency between crossing edges, one entry per cell segment.
    let mut adj: HashMap<EdgeId, Vec<EdgeId>> = HashMap::new();
    for ib in 0..nb - 1 {
        for ia in 0..na - 1 {
            // The four edges of the cell, in the order bottom (b fixed at ib,
            // along a), top, left (a fixed at ia, along b), right.
            let edges = [
                EdgeId {
                    ia,
                    ib,
                    along_a: true,
                },
                EdgeId {
                    ia,
                    ib: ib + 1,
                    along_a: true,
                },
                EdgeId {
                    ia,
                    ib,
                    along_a: false,
                },
                EdgeId {
                    ia: ia + 1,
                    ib,
                    along_a: false,
                },
            ];
            let cut: Vec<EdgeId> = edges
                .iter()
                .copied()
                .filter(|e| crossings.contains_key(e))
                .collect();
            match cut.len() {
                2 => {
                    adj.entry(cut[0]).or_default().push(cut[1]);
                    adj.entry(cut[1]).or_default().push(cut[0]);
                }
                4 => {
                    // Saddle cell: resolve the ambiguity with the sign of the
                    // cell-centre average, pairing each cut edge with the
                    // neighbour on the same side of the separating diagonal.
                    let centre = 0.25
                        * (map.raw(ia, ib)
                            + map.raw(ia + 1, ib)
                            + map.raw(ia, ib + 1)
                            + map.raw(ia + 1, ib + 1));
                    // Corners: (ia, ib) inside iff raw >= 0. For a saddle the
                    // two diagonals have equal corner signs. If the centre
                    // matches the (ia, ib) diagonal, the contour separates the
                    // other two corners: bottom-right pairs with right, and
                    // top-left pairs with left; otherwise the opposite.
                    let (bottom, top, left, right) = (edges[0], edges[1], edges[2], edges[3]);
                    if inside(centre) == inside(map.raw(ia, ib)) {
                        adj.entry(bottom).or_default().push(right);
                        adj.entry(right).or_default().push(bottom);
                        adj.entry(top).or_default().push(left);
                        adj.entry(left).or_default().push(top);
                    } else {
                        adj.entry(bottom).or_default().push(left);
                        adj.entry(left).or_default().push(bottom);
                        adj.entry(top).or_default().push(right);
                        adj.entry(right).or_default().push(top);
                    }
                }
                _ => {}
            }
        }
    }
    // Walk each component once, preferring starts at degree-1 edges so
    // grid-terminated curves come out end to end. Sorted traversal keeps the
    // output deterministic regardless of hash-map iteration order.
    for n in adj.values_mut() {
        n.sort();
    }
    let mut starts: Vec<EdgeId> = adj
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(e, _)| *e)
        .collect();
    starts.sort();
    let mut rest: Vec<EdgeId> = adj.keys().copied().collect();
    rest.sort();
    starts.extend(rest);
    let mut visited: HashMap<EdgeId, bool> = HashMap::new();
    let mut best: Vec<(f64, f64)> = Vec::new();
    for start in starts {
        if *visited.get(&start).unwrap_or(&false) {
            continue;
        }
        let mut path = vec![start];
        visited.insert(start, true);
        let mut current = start;
        loop {
            let next = adj[&current]
                .iter()
                .find(|e| !*visited.get(e).unwrap_or(&false))
                .copied();
            match next {
                Some(e) => {
                    visited.insert(e, true);
                    path.push(e);
                    current = e;
                }
                None => break,
            }
        }
        if path.len() > best.len() {
            best = path.iter().map(|e| crossings[e]).collect();
        }
    }
    // Canonical orientation: walk from high eta_b towards high eta_a.
    if let (Some(first), Some(last)) = (best.first(), best.last()) {
        if first.1 < last.1 {
            best.reverse();
        }
    }
    best
}

/// Minimum eta_A and eta_B over the contour points. The extremes of the
/// R > 0 region lie on its boundary, so the contour minima are the criticals.
fn criticals_from(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut ea = f64::INFINITY;
    let mut eb = f64::INFINITY;
    for &(a, b) in points {
        ea = ea.min(a);
        eb = eb.min(b);
    }
    if ea.is_finite() && eb.is_finite() {
        Ok((ea, eb))
    } else {
        Err(Error::NoBoundary)
    }
}

/// Median mismatch ratio over the two asymptotic branches of the contour.
fn asymmetry_from(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for &(a, b) in points {
        if a.max(b) > ASYMPTOTE_ETA {
            let r = a / b;
            if r < 1.0 {
                lo.push(r);
            } else {
                hi.push(r);
            }
        }
    }
    if lo.is_empty() || hi.is_empty() {
        return Err(Error::NoBoundary);
    }
    Ok((median(&mut lo), median(&mut hi)))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Convenience wrapper: a boundary selection domain backed by this map.
pub fn boundary_domain(map: Arc<RateMap>) -> SelectionDomain {
    SelectionDomain::boundary(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{region_probability, SelectionDomain};
    use crate::keyrate::tests::{device, intensities};
    use crate::keyrate::{model_observable, rate_map, rate_point_signed, GridSpec};
    use crate::physics::DeviceParams;
    use crate::turbulence::{ChannelParams, JointPdtc};
    use std::sync::OnceLock;

    fn reference_map() -> &'static RateMap {
        static MAP: OnceLock<RateMap> = OnceLock::new();
        MAP.get_or_init(|| {
            rate_map(
                &device(),
                &intensities(),
                &intensities(),
                &GridSpec {
                    resolution: 64,
                    eta_min: 2e-3,
                },
            )
            .unwrap()
        })
    }

    fn reference_thresholds() -> &'static ThresholdSet {
        static TS: OnceLock<ThresholdSet> = OnceLock::new();
        TS.get_or_init(|| ThresholdSet::from_map(reference_map()).unwrap())
    }

    #[test]
    fn boundary_vertices_have_zero_rate() {
        let map = reference_map();
        let ts = reference_thresholds();
        assert!(ts.boundary.len() > 20);
        // Every vertex satisfies |R| < tol when the rate is re-evaluated from
        // scratch (subsampled to keep the runtime bounded).
        for &(ea, eb) in ts.boundary.iter().step_by(7) {
            let r = rate_point_signed(map.device(), map.alice(), map.bob(), ea, eb).unwrap();
            assert!(r.abs() < BOUNDARY_TOL, "({ea}, {eb}): R = {r:e}");
        }
        // Consecutive vertices are neighbours on the grid, not jumps.
        let spacing = (map.grid_a()[1] / map.grid_a()[0]).ln();
        for w in ts.boundary.windows(2) {
            let (a0, b0) = w[0];
            let (a1, b1) = w[1];
            let d = ((a1 / a0).ln().powi(2) + (b1 / b0).ln().powi(2)).sqrt();
            assert!(d < 2.0 * spacing, "gap between ({a0},{b0}) and ({a1},{b1})");
        }
    }

    #[test]
    fn symmetric_settings_give_symmetric_thresholds() {
        let ts = reference_thresholds();
        // Criticals agree and the mismatch window is reciprocal.
        assert!(
            (ts.eta_a_critical - ts.eta_b_critical).abs() < 0.01 * ts.eta_a_critical,
            "{} vs {}",
            ts.eta_a_critical,
            ts.eta_b_critical
        );
        assert!(
            (ts.x_min * ts.x_max - 1.0).abs() < 0.02,
            "x_min x_max = {}",
            ts.x_min * ts.x_max
        );
        assert!(ts.x_min < 1.0 && ts.x_max > 1.0);
        // The boundary is mirror-symmetric: the reflection of each vertex is
        // close to some vertex.
        let spacing = (reference_map().grid_a()[1] / reference_map().grid_a()[0]).ln();
        for &(a, b) in ts.boundary.iter().step_by(5) {
            let d = ts
                .boundary
                .iter()
                .map(|&(x, y)| ((x / b).ln().powi(2) + (y / a).ln().powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 2.0 * spacing, "no mirror partner for ({a}, {b})");
        }
    }

    #[test]
    fn reference_thresholds_match_expected_scales() {
        let ts = reference_thresholds();
        // Calibrated reference settings: criticals within 30% of 4.2e-3 and
        // x_min within 30% of 0.184.
        assert!(
            (ts.eta_a_critical / 4.2e-3 - 1.0).abs() < 0.30,
            "critical = {}",
            ts.eta_a_critical
        );
        assert!(
            (ts.x_min / 0.184 - 1.0).abs() < 0.30,
            "x_min = {}",
            ts.x_min
        );
    }

    #[test]
    fn thresholds_are_deterministic_and_channel_free() {
        // ThresholdSet takes no transmittance distribution anywhere
        // (type-level guarantee); recomputation from the same map is
        // bit-identical.
        let a = ThresholdSet::from_map(reference_map()).unwrap();
        let b = reference_thresholds();
        assert_eq!(&a, b);
    }

    #[test]
    fn criticals_increase_with_dark_counts() {
        let d = device();
        let ints = intensities();
        let noisier = DeviceParams::new(3.5e-5, 0.45, 0.01, 1.16).unwrap();
        let spec = GridSpec {
            resolution: 64,
            eta_min: 2e-3,
        };
        let base = critical_etas(reference_map()).unwrap();
        let map10 = rate_map(&noisier, &ints, &ints, &spec).unwrap();
        let up = critical_etas(&map10).unwrap();
        assert!(up.0 > base.0 && up.1 > base.1, "{base:?} vs {up:?}");
        let _ = d;
    }

    #[test]
    fn misalignment_tightens_mismatch_window() {
        let ints = intensities();
        let worse = DeviceParams::new(3.5e-6, 0.45, 0.02, 1.16).unwrap();
        let spec = GridSpec {
            resolution: 64,
            eta_min: 2e-3,
        };
        let (_, x_max_base) = asymmetry_limits(reference_map()).unwrap();
        let map2 = rate_map(&worse, &ints, &ints, &spec).unwrap();
        let (_, x_max_worse) = asymmetry_limits(&map2).unwrap();
        assert!(
            x_max_worse < x_max_base,
            "{x_max_base} vs {x_max_worse}"
        );
    }

    #[test]
    fn joint_domain_predicate_and_containment() {
        let ts = reference_thresholds();
        let joint = build_joint_domain(ts).unwrap();
        let square =
            SelectionDomain::square(ts.eta_a_critical, ts.eta_b_critical).unwrap();
        // A clearly good point passes; breaking any one line rejects.
        assert!(joint.contains(0.5, 0.5).unwrap());
        assert!(!joint.contains(ts.eta_a_critical * 0.5, 0.5).unwrap());
        assert!(!joint.contains(0.5, ts.eta_b_critical * 0.5).unwrap());
        let eb = 0.15;
        assert!(!joint.contains(eb * ts.x_max * 1.01, eb).unwrap());
        assert!(joint.contains(eb * ts.x_max * 0.99, eb).unwrap());
        assert!(!joint.contains(eb * ts.x_min * 0.99, eb).unwrap());
        // Joint is contained in the bounding square.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2000 {
            let ea = (rng() * (1.0f64 / 1e-4).ln()).exp() * 1e-4;
            let eb = (rng() * (1.0f64 / 1e-4).ln()).exp() * 1e-4;
            if joint.contains(ea, eb).unwrap() {
                assert!(square.contains(ea, eb).unwrap());
            }
        }
    }

    #[test]
    fn polyline_area_agrees_with_predicate_probability() {
        // The probability of {R > 0} computed two independent ways: direct
        // predicate quadrature through the Boundary domain, and Monte-Carlo
        // classification against the closed polygon built from the polyline.
        let map = reference_map();
        let ts = reference_thresholds();
        let joint = JointPdtc {
            alice: ChannelParams::new(0.1, 0.9).unwrap(),
            bob: ChannelParams::new(0.1, 0.9).unwrap(),
        };
        let domain = SelectionDomain::boundary(std::sync::Arc::new(map.clone()));
        let quad = region_probability(&joint, &domain).unwrap();

        // Close the polyline through the high-transmittance corner (1, 1)
        // along the grid edges its endpoints terminate on.
        let mut poly = ts.boundary.clone();
        let first = poly[0];
        let last = *poly.last().unwrap();
        // Orient so the walk ends on the edge eta_b = max, then goes to the
        // corner and back down the eta_a = max edge.
        if first.1 > last.1 {
            poly.reverse();
        }
        let eta_max_a = *map.grid_a().last().unwrap();
        let eta_max_b = *map.grid_b().last().unwrap();
        poly.push((eta_max_a, eta_max_b));
        let inside_poly = |ea: f64, eb: f64| -> bool {
            // Ray casting along +eta_a.
            let mut hits = 0;
            let n = poly.len();
            for i in 0..n {
                let (x1, y1) = poly[i];
                let (x2, y2) = poly[(i + 1) % n];
                if (y1 > eb) != (y2 > eb) {
                    let x = x1 + (eb - y1) / (y2 - y1) * (x2 - x1);
                    if x > ea {
                        hits += 1;
                    }
                }
            }
            hits % 2 == 1
        };
        let pairs = joint.sample_pairs(200_000, 0x5eed_cafe);
        let mut count = 0usize;
        let mut total = 0usize;
        for (ea, eb) in pairs {
            if !map.covers(ea, eb) {
                // Below the grid floor the rate is deep in the R < 0 gap.
                total += 1;
                continue;
            }
            total += 1;
            if inside_poly(ea, eb) {
                count += 1;
            }
        }
        let mc = count as f64 / total as f64;
        assert!(
            (mc - quad).abs() < 0.01 * quad.max(mc),
            "polygon {mc} vs quadrature {quad}"
        );
        // Classification agreement between polygon and interpolated predicate
        // on covered points: at least 99.5%.
        let pairs = joint.sample_pairs(50_000, 0xfeed_f00d);
        let mut agree = 0usize;
        let mut n = 0usize;
        for (ea, eb) in pairs {
            if !map.covers(ea, eb) {
                continue;
            }
            n += 1;
            let p = domain.contains(ea, eb).unwrap();
            if p == inside_poly(ea, eb) {
                agree += 1;
            }
        }
        assert!(
            agree as f64 >= 0.995 * n as f64,
            "agreement {} / {n}",
            agree
        );
    }

    #[test]
    fn joint_rate_close_to_boundary_rate() {
        // At moderate turbulence the four-line joint threshold loses only a
        // little key compared to the exact R >= 0 boundary.
        let d = device();
        let ints = intensities();
        let map = reference_map();
        let ts = reference_thresholds();
        let joint_pdtc = JointPdtc {
            alice: ChannelParams::new(0.1, 0.9).unwrap(),
            bob: ChannelParams::new(0.1, 0.9).unwrap(),
        };
        let dom_boundary = SelectionDomain::boundary(std::sync::Arc::new(map.clone()));
        let dom_joint = build_joint_domain(ts).unwrap();
        let rb = model_observable(&joint_pdtc, &dom_boundary, &d, &ints, &ints).unwrap();
        let rj = model_observable(&joint_pdtc, &dom_joint, &d, &ints, &ints).unwrap();
        assert!(rb > 0.0);
        assert!(rj <= rb * (1.0 + 1e-9), "joint {rj} > boundary {rb}");
        assert!(rj >= 0.9 * rb, "joint {rj} < 0.9 boundary {rb}");
    }
}
