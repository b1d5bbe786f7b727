//! Finite-decoy bounds on the single-photon-pair yield and error rate.
//!
//! The nine X-basis gains constrain the photon-number-resolved yield matrix
//! Y_nm through Poisson mixing. A linear program over {Y_nm in [0,1] : n, m <=
//! cutoff} minimizes Y_11 for the lower bound; a second program over the
//! error-weighted yields (eY)_nm <= Y_nm maximizes (eY)_11 against the
//! error-gain constraints. The Poisson tail above the cutoff is folded into
//! each constraint tolerance, so both programs stay sound.
//!
//! Solving strategy: a simplex solver (`microlp`) is the fast path. On the
//! rare instances where its basis factorization goes singular, the constraint
//! slack is widened step by step (sound: widening only loosens the bounds),
//! and if that still fails the program is handed to an interior-point solver
//! (`clarabel`), whose dual objective certifies the bound by weak duality.

use crate::error::{Error, Result};
use crate::physics::{photon_weight, IntensitySet};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus,
};
use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

/// Default photon-number cap for the yield matrix.
pub const DEFAULT_CUTOFF: u32 = 10;

/// Certified decoy-state bounds used in the key-rate formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    /// Lower bound on the single-photon-pair yield, >= 0.
    pub y11_lower: f64,
    /// Upper bound on the single-photon-pair error rate, clamped to [0, 0.5].
    pub e11_upper: f64,
}

/// Poisson weights up to the cutoff plus the remaining tail mass.
struct Weights {
    w: Vec<Vec<f64>>, // w[intensity][n]
    head: Vec<f64>,   // sum of w[intensity][..]
}

/// Numerical slack added on both sides of each observable constraint. The
/// absolute floor covers the cancellation noise of the click-probability
/// evaluation; widening only loosens the bounds, never unsounds them.
fn slack_for(value: f64, inflate: f64) -> f64 {
    (1e-8 * value + 1e-15) * inflate
}

fn row_scale(value: f64) -> f64 {
    1.0 / value.max(1e-10)
}

fn weights(intensities: &[f64; 3], cutoff: u32) -> Weights {
    let w: Vec<Vec<f64>> = intensities
        .iter()
        .map(|&mu| (0..=cutoff).map(|n| photon_weight(mu, n)).collect())
        .collect();
    let head = w.iter().map(|row| row.iter().sum()).collect();
    Weights { w, head }
}

/// One linear constraint `lo <= coefs . x <= hi` over variables in [0, 1].
/// Either side may be infinite.
struct Row {
    coefs: Vec<f64>,
    lo: f64,
    hi: f64,
}

/// A bound-certifying LP: optimize the single objective variable subject to
/// the rows, all variables in [0, 1].
struct BoundLp {
    nvars: usize,
    obj_var: usize,
    maximize: bool,
    rows: Vec<Row>,
}

/// Bound Y_11 and e_11 from the nine X-basis observables.
///
/// `qx` and `tx` are indexed `[alice][bob]` over the decoy intensities
/// {mu, nu, omega} of each side.
pub fn decoy_bounds(
    qx: &[[f64; 3]; 3],
    tx: &[[f64; 3]; 3],
    alice: &IntensitySet,
    bob: &IntensitySet,
    cutoff: u32,
) -> Result<DecoyBounds> {
    for i in 0..3 {
        for j in 0..3 {
            if !(0.0..=1.0).contains(&qx[i][j]) || tx[i][j] < 0.0 || tx[i][j] > qx[i][j] + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "observables must satisfy 0 <= T <= Q <= 1 at ({i}, {j})"
                )));
            }
        }
    }
    let wa = weights(&alice.decoys(), cutoff);
    let wb = weights(&bob.decoys(), cutoff);
    let n = (cutoff + 1) as usize;

    // Solving both the problem and its arm-swapped transpose and combining
    // conservatively keeps the bounds exactly symmetric under relabeling
    // Alice and Bob (the two solves see the same constraints in a different
    // enumeration order, so identical results are not automatic).
    let mut qx_t = [[0.0; 3]; 3];
    let mut tx_t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            qx_t[i][j] = qx[j][i];
            tx_t[i][j] = tx[j][i];
        }
    }
    let fwd = solve_bounds(qx, tx, &wa, &wb, n)?;
    let bwd = solve_bounds(&qx_t, &tx_t, &wb, &wa, n)?;
    Ok(DecoyBounds {
        y11_lower: fwd.y11_lower.min(bwd.y11_lower),
        e11_upper: fwd.e11_upper.max(bwd.e11_upper),
    })
}

fn solve_bounds(
    qx: &[[f64; 3]; 3],
    tx: &[[f64; 3]; 3],
    wa: &Weights,
    wb: &Weights,
    n: usize,
) -> Result<DecoyBounds> {
    let y11_lower = solve_robust(|inflate| yield_lp(qx, wa, wb, n, inflate), "yield LP")?.max(0.0);
    let ey11_upper =
        solve_robust(|inflate| error_lp(qx, tx, wa, wb, n, inflate), "error LP")?.max(0.0);
    // Conservative quotient: the smallest certified yield in the denominator.
    let e11_upper = if y11_lower > 0.0 {
        (ey11_upper / y11_lower).clamp(0.0, 0.5)
    } else {
        0.5
    };
    Ok(DecoyBounds {
        y11_lower,
        e11_upper,
    })
}

/// Minimize Y_11 against the nine gain constraints.
fn yield_lp(qx: &[[f64; 3]; 3], wa: &Weights, wb: &Weights, n: usize, inflate: f64) -> BoundLp {
    let mut rows = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let tail = 1.0 - wa.head[i] * wb.head[j];
            let slack = slack_for(qx[i][j], inflate);
            // Row scaling keeps solver tolerances meaningful for gains
            // spanning many decades.
            let scale = row_scale(qx[i][j]);
            let mut coefs = vec![0.0; n * n];
            for nn in 0..n {
                for mm in 0..n {
                    coefs[nn * n + mm] = scale * wa.w[i][nn] * wb.w[j][mm];
                }
            }
            rows.push(Row {
                coefs,
                lo: scale * (qx[i][j] - tail - slack),
                hi: scale * (qx[i][j] + slack),
            });
        }
    }
    BoundLp {
        nvars: n * n,
        obj_var: n + 1,
        maximize: false,
        rows,
    }
}

/// Maximize (eY)_11 over yields and error-weighted yields with the coupling
/// 0 <= eY <= Y, against both the gain and the error-gain constraints.
/// Variables: [Y (n^2), eY (n^2)].
fn error_lp(
    qx: &[[f64; 3]; 3],
    tx: &[[f64; 3]; 3],
    wa: &Weights,
    wb: &Weights,
    n: usize,
    inflate: f64,
) -> BoundLp {
    let nv = n * n;
    let mut rows = Vec::with_capacity(nv + 36);
    for k in 0..nv {
        let mut coefs = vec![0.0; 2 * nv];
        coefs[nv + k] = 1.0;
        coefs[k] = -1.0;
        rows.push(Row {
            coefs,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        });
    }
    for i in 0..3 {
        for j in 0..3 {
            let tail = 1.0 - wa.head[i] * wb.head[j];
            for (offset, obs) in [(0usize, qx[i][j]), (nv, tx[i][j])] {
                let slack = slack_for(obs, inflate);
                let scale = row_scale(obs);
                let mut coefs = vec![0.0; 2 * nv];
                for nn in 0..n {
                    for mm in 0..n {
                        coefs[offset + nn * n + mm] = scale * wa.w[i][nn] * wb.w[j][mm];
                    }
                }
                rows.push(Row {
                    coefs,
                    lo: scale * (obs - tail - slack),
                    hi: scale * (obs + slack),
                });
            }
        }
    }
    BoundLp {
        nvars: 2 * nv,
        obj_var: nv + n + 1,
        maximize: true,
        rows,
    }
}

/// Fast simplex first with a short slack-widening ladder, then the
/// interior-point fallback. Both paths return a certified bound; widening
/// the (tiny) slack only loosens it.
fn solve_robust(mut build: impl FnMut(f64) -> BoundLp, what: &str) -> Result<f64> {
    let mut last = String::new();
    for inflate in [1.0, 10.0, 1e2, 1e3] {
        match solve_microlp(&build(inflate)) {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    for inflate in [1.0, 1e2, 1e4, 1e6] {
        match solve_clarabel(&build(inflate)) {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    Err(Error::InconsistentObservables(format!("{what}: {last}")))
}

fn solve_microlp(lp: &BoundLp) -> std::result::Result<f64, String> {
    let direction = if lp.maximize {
        OptimizationDirection::Maximize
    } else {
        OptimizationDirection::Minimize
    };
    let mut problem = Problem::new(direction);
    let vars: Vec<_> = (0..lp.nvars)
        .map(|k| {
            let obj = if k == lp.obj_var { 1.0 } else { 0.0 };
            problem.add_var(obj, (0.0, 1.0))
        })
        .collect();
    for row in &lp.rows {
        let terms: Vec<_> = row
            .coefs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (vars[k], c))
            .collect();
        if row.hi.is_finite() {
            problem.add_constraint(terms.clone(), ComparisonOp::Le, row.hi);
        }
        if row.lo.is_finite() {
            problem.add_constraint(terms, ComparisonOp::Ge, row.lo);
        }
    }
    match problem.solve() {
        Ok(SolveOutcome::Solution(sol)) => Ok(sol.objective()),
        Ok(other) => Err(format!("{other:?}")),
        Err(e) => Err(format!("{e:?}")),
    }
}

/// Interior-point fallback. The reported bound is the *dual* objective, which
/// certifies the optimum from the sound side by weak duality (at most the
/// minimum for minimization, at least the maximum for maximization).
fn solve_clarabel(lp: &BoundLp) -> std::result::Result<f64, String> {
    // Conic form: minimize q.x subject to Ax + s = b, s >= 0.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for row in &lp.rows {
        if row.hi.is_finite() {
            rows.push(row.coefs.clone());
            b.push(row.hi);
        }
        if row.lo.is_finite() {
            rows.push(row.coefs.iter().map(|c| -c).collect());
            b.push(-row.lo);
        }
    }
    for k in 0..lp.nvars {
        let mut upper = vec![0.0; lp.nvars];
        upper[k] = 1.0;
        rows.push(upper);
        b.push(1.0);
        let mut lower = vec![0.0; lp.nvars];
        lower[k] = -1.0;
        rows.push(lower);
        b.push(0.0);
    }
    let a = CscMatrix::from(&rows);
    let p = CscMatrix::zeros((lp.nvars, lp.nvars));
    let mut q = vec![0.0; lp.nvars];
    q[lp.obj_var] = if lp.maximize { -1.0 } else { 1.0 };
    let cones = [NonnegativeConeT(rows.len())];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .map_err(|e| format!("settings: {e:?}"))?;
    let mut solver =
        DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| format!("{e:?}"))?;
    solver.solve();
    let status = solver.solution.status;
    if !matches!(status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
        return Err(format!("interior-point status {status:?}"));
    }
    let dual = solver.solution.obj_val_dual;
    if !dual.is_finite() {
        return Err("non-finite dual objective".into());
    }
    Ok(if lp.maximize { -dual } else { dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{observables, true_single_photon, DeviceParams, IntensitySet};

    fn device() -> DeviceParams {
        DeviceParams::new(1e-5, 0.45, 0.01, 1.16).unwrap()
    }

    fn intensities() -> IntensitySet {
        IntensitySet::new(0.4, 0.5, 0.3, 0.03, 2e-4).unwrap()
    }

    #[test]
    fn brackets_ground_truth_at_reference_point() {
        let d = device();
        let ints = intensities();
        let o = observables(&d, &ints, &ints, 0.01, 0.01).unwrap();
        let bounds = decoy_bounds(&o.qx, &o.tx, &ints, &ints, DEFAULT_CUTOFF).unwrap();
        let (y11, e11) = true_single_photon(&d, 0.01, 0.01).unwrap();
        assert!(
            bounds.y11_lower <= y11 + 1e-12,
            "y11_lower {} > truth {}",
            bounds.y11_lower,
            y11
        );
        assert!(
            bounds.e11_upper >= e11 - 1e-12,
            "e11_upper {} < truth {}",
            bounds.e11_upper,
            e11
        );
        // The bound should be informative at this signal-to-noise level.
        assert!(bounds.y11_lower > 0.0);
        assert!(bounds.e11_upper < 0.5);
    }

    #[test]
    fn vacuum_decoy_row_consistency() {
        // omega = 0 and y0 = 0: the vacuum-vacuum gain vanishes and the LP
        // must remain feasible.
        let d = DeviceParams::new(0.0, 0.45, 0.01, 1.16).unwrap();
        let ints = IntensitySet::new(0.4, 0.5, 0.3, 0.03, 0.0).unwrap();
        let o = observables(&d, &ints, &ints, 0.01, 0.01).unwrap();
        assert_eq!(o.qx[2][2], 0.0);
        let bounds = decoy_bounds(&o.qx, &o.tx, &ints, &ints, DEFAULT_CUTOFF).unwrap();
        let (y11, _) = true_single_photon(&d, 0.01, 0.01).unwrap();
        assert!(bounds.y11_lower <= y11 + 1e-12);
    }

    #[test]
    fn determinism() {
        let d = device();
        let ints = intensities();
        let o = observables(&d, &ints, &ints, 0.005, 0.02).unwrap();
        let a = decoy_bounds(&o.qx, &o.tx, &ints, &ints, DEFAULT_CUTOFF).unwrap();
        let b = decoy_bounds(&o.qx, &o.tx, &ints, &ints, DEFAULT_CUTOFF).unwrap();
        assert!((a.y11_lower - b.y11_lower).abs() < 1e-12);
        assert!((a.e11_upper - b.e11_upper).abs() < 1e-12);
    }

    #[test]
    fn transposition_symmetry() {
        // Swapping the arms transposes the observables; the combined bounds
        // must be exactly symmetric under that relabeling.
        let d = device();
        let ints = intensities();
        let o = observables(&d, &ints, &ints, 0.005, 0.02).unwrap();
        let mut qx_t = [[0.0; 3]; 3];
        let mut tx_t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                qx_t[i][j] = o.qx[j][i];
                tx_t[i][j] = o.tx[j][i];
            }
        }
        let a = decoy_bounds(&o.qx, &o.tx, &ints, &ints, DEFAULT_CUTOFF).unwrap();
        let b = decoy_bounds(&qx_t, &tx_t, &ints, &ints, DEFAULT_CUTOFF).unwrap();
        assert_eq!(a.y11_lower, b.y11_lower);
        assert_eq!(a.e11_upper, b.e11_upper);
    }

    #[test]
    fn rejects_inconsistent_observables() {
        let ints = intensities();
        let qx = [[0.5; 3]; 3];
        let mut tx = [[0.0; 3]; 3];
        tx[0][0] = 0.6; // T > Q
        assert!(decoy_bounds(&qx, &tx, &ints, &ints, DEFAULT_CUTOFF).is_err());
    }
}
