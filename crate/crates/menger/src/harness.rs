//! Scripted experiment suites that turn qualitative facts about the energy
//! family into quantitative desk-scale checks: the ordering chain, the
//! large-p limits, blow-up under pinching, the knotted-curve total-curvature
//! bound, and circle-value convergence under refinement.
//!
//! Every check returns a [`CheckResult`] listing one [`CheckItem`] per
//! measured clause — a failing suite reports every offending clause, never
//! just the first — and inherits bit-reproducibility from the energy layer.

use std::fmt;

use serde::Serialize;

use crate::curve::{gen_circle, gen_pinched, gen_torus_knot, PolygonalLoop};
use crate::energies::{
    global_radius_energy, menger_energy, moebius_energy, rho_energy, tangent_point_energy,
    total_curvature,
};
use crate::radii::thickness;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

type EnergyEval = Box<dyn Fn(&PolygonalLoop) -> f64>;

/// One measured clause: the measured number, the bound it must satisfy
/// (rendered for humans in `expected`), the tolerance actually used, and
/// where the expected value comes from (`basis`: an analytic closed form, an
/// exact identity of the discretization, a theorem's bound, or a computed
/// reference).
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub label: String,
    pub measured: f64,
    pub expected: String,
    pub tolerance: f64,
    pub pass: bool,
    pub basis: &'static str,
}

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub items: Vec<CheckItem>,
}

impl CheckResult {
    fn from_items(name: impl Into<String>, items: Vec<CheckItem>) -> CheckResult {
        let status = if items.iter().all(|i| i.pass) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckResult { name: name.into(), status, items }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} {}",
            match self.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
            },
            self.name
        )?;
        for item in &self.items {
            writeln!(
                f,
                "  [{}] {:<58} measured {:>14.6e}  {} (basis: {})",
                if item.pass { "ok  " } else { "FAIL" },
                item.label,
                item.measured,
                item.expected,
                item.basis
            )?;
        }
        Ok(())
    }
}

/// Ordering chain: triple sum <= pair sum <= point sum <= 1/thickness^p for
/// each requested exponent, with relative slack 1e-12 for summation noise.
/// The chain is exact by construction (nested minima over one node set), so
/// the slack only covers the compensated sums' rounding.
pub fn check_ordering(loop_: &PolygonalLoop, p_list: &[f64]) -> CheckResult {
    let cap = thickness(loop_).value();
    let mut items = Vec::new();
    for &p in p_list {
        let m = menger_energy(loop_, p).expect("p >= 1").value;
        let i = rho_energy(loop_, p).expect("p >= 1").value;
        let u = global_radius_energy(loop_, p).expect("p >= 1").value;
        let top = (1.0 / cap).powf(p);
        for (label, lhs, rhs) in [
            (format!("triple sum <= pair sum (p={p})"), m, i),
            (format!("pair sum <= point sum (p={p})"), i, u),
            (format!("point sum <= 1/thickness^p (p={p})"), u, top),
        ] {
            let slack = 1e-12 * rhs.abs().max(1.0);
            items.push(CheckItem {
                label,
                measured: lhs - rhs,
                expected: format!("<= {slack:.1e}"),
                tolerance: slack,
                pass: lhs - rhs <= slack,
                basis: "exact identity",
            });
        }
    }
    CheckResult::from_items("ordering chain", items)
}

/// Large-p limits: each of the three p-th-root sequences must be
/// non-decreasing over the schedule (relative slack 1e-10) and land within
/// 5% of 1/thickness at the largest exponent.
///
/// The closeness clause measures how much of the curve sits near the minimal
/// radius: the root reaches `1/thickness * (near-minimal measure)^(1/p)`, so
/// at p=32 it passes only for curves whose minimal radius is attained on a
/// large set (the circle attains it everywhere). Knots and polygons with
/// isolated tight spots genuinely sit farther out at p=32 and fail — see the
/// sibling tests for measured values.
pub fn check_p_limits(loop_: &PolygonalLoop, p_schedule: &[f64]) -> CheckResult {
    assert!(
        p_schedule.windows(2).all(|w| w[0] < w[1]),
        "p_schedule must be increasing"
    );
    assert!(
        p_schedule.last().is_some_and(|&p| p >= 32.0),
        "p_schedule must reach 32"
    );
    let cap = 1.0 / thickness(loop_).value();
    let mut items = Vec::new();
    for (label, eval) in [
        ("triple-sum", menger_energy as fn(&PolygonalLoop, f64) -> _),
        ("pair-sum", rho_energy as fn(&PolygonalLoop, f64) -> _),
        ("point-sum", global_radius_energy as fn(&PolygonalLoop, f64) -> _),
    ] {
        let roots: Vec<f64> = p_schedule
            .iter()
            .map(|&p| {
                let value: Result<crate::energies::EnergyReport, _> = eval(loop_, p);
                value.expect("p >= 1").value.powf(1.0 / p)
            })
            .collect();
        let worst_drop = roots
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let slack = 1e-10 * roots.last().unwrap().abs();
        items.push(CheckItem {
            label: format!("{label} roots non-decreasing over p schedule"),
            measured: worst_drop,
            expected: format!(">= -{slack:.1e}"),
            tolerance: slack,
            pass: worst_drop >= -slack,
            basis: "exact identity",
        });
        let gap = (roots.last().unwrap() - cap).abs() / cap;
        items.push(CheckItem {
            label: format!("{label} root at p={} within 5% of 1/thickness", p_schedule.last().unwrap()),
            measured: gap,
            expected: "<= 0.05".into(),
            tolerance: 0.05,
            pass: gap <= 0.05,
            basis: "analytic limit",
        });
    }
    CheckResult::from_items("large-p limits", items)
}

/// Blow-up under pinching: builds the documented pinched family — two
/// parallel strands at distance `gap` closed by half-circles, unit length —
/// for every gap in the (strictly decreasing) list, and asserts that each of
/// the five repulsive energies increases strictly with total growth >= 10x,
/// while total curvature stays bounded (ratio < 2; the family is convex
/// planar, so its discrete total curvature is constant at 2*pi).
pub fn check_charge_blowup(gap_list: &[f64], n: usize) -> CheckResult {
    assert!(
        gap_list.windows(2).all(|w| w[0] > w[1]),
        "gap_list must decrease strictly"
    );
    assert!(gap_list.len() >= 2, "need at least two gaps");
    let loops: Vec<PolygonalLoop> = gap_list
        .iter()
        .map(|&g| gen_pinched(g, n).expect("valid gap"))
        .collect();
    let mut items = Vec::new();
    let evals: [(&str, EnergyEval); 5] = [
        ("triple sum p=4", Box::new(|l| menger_energy(l, 4.0).unwrap().value)),
        ("pair sum p=3", Box::new(|l| rho_energy(l, 3.0).unwrap().value)),
        ("point sum p=2", Box::new(|l| global_radius_energy(l, 2.0).unwrap().value)),
        ("tangent-point p=3", Box::new(|l| tangent_point_energy(l, 3.0, false).unwrap().value)),
        ("inverse-square pair energy", Box::new(|l| moebius_energy(l).unwrap().value)),
    ];
    for (label, eval) in &evals {
        let vals: Vec<f64> = loops.iter().map(eval).collect();
        let worst_step = vals
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(f64::INFINITY, f64::min);
        items.push(CheckItem {
            label: format!("{label}: strictly increasing as gap shrinks"),
            measured: worst_step,
            expected: "> 1".into(),
            tolerance: 1.0,
            pass: worst_step > 1.0,
            basis: "computed reference",
        });
        let growth = vals.last().unwrap() / vals.first().unwrap();
        items.push(CheckItem {
            label: format!("{label}: total growth across the gap range"),
            measured: growth,
            expected: ">= 10".into(),
            tolerance: 10.0,
            pass: growth >= 10.0,
            basis: "computed reference",
        });
    }
    let tks: Vec<f64> = loops.iter().map(|l| total_curvature(l).value).collect();
    let tk_ratio = tks.last().unwrap() / tks.first().unwrap();
    items.push(CheckItem {
        label: "total curvature stays bounded on the same family".into(),
        measured: tk_ratio,
        expected: "< 2".into(),
        tolerance: 2.0,
        pass: tk_ratio < 2.0,
        basis: "exact identity",
    });
    CheckResult::from_items("blow-up under pinching", items)
}

/// Knotted-curve total curvature: the (2,3) torus knot must carry total
/// curvature >= 4*pi at the given resolution, while the circle sits at
/// exactly 2*pi (within 1e-12).
pub fn check_fary_milnor(n: usize) -> CheckResult {
    assert!(n >= 64, "use n >= 64 for a faithful knot");
    let knot = gen_torus_knot(2, 3, n, 2.0, 1.0).expect("valid parameters");
    let tk_knot = total_curvature(&knot).value;
    let circle = gen_circle(n).expect("valid n");
    let tk_circle = total_curvature(&circle).value;
    let four_pi = 4.0 * std::f64::consts::PI;
    let two_pi = 2.0 * std::f64::consts::PI;
    let items = vec![
        CheckItem {
            label: format!("trefoil total curvature at n={n}"),
            measured: tk_knot,
            expected: format!(">= {four_pi:.12}"),
            tolerance: four_pi,
            pass: tk_knot >= four_pi,
            basis: "theorem bound",
        },
        CheckItem {
            label: format!("circle total curvature at n={n}"),
            measured: (tk_circle - two_pi).abs(),
            expected: "<= 1e-12".into(),
            tolerance: 1e-12,
            pass: (tk_circle - two_pi).abs() <= 1e-12,
            basis: "exact identity",
        },
    ];
    CheckResult::from_items("knotted-curve total curvature", items)
}

/// Circle-value convergence under refinement: the triple sum at p=3, pair
/// sum at p=2, and point sum at p=1 must converge to (2*pi)^p with errors
/// strictly decreasing and empirical order >= 1; the inverse-square pair
/// energy must Richardson-extrapolate to 4 +/- 0.05; the thickness must rise
/// monotonically toward 1/(2*pi).
///
/// The order is estimated from the finest grid pair with a 0.05 estimation
/// slack: the error carries a second-order term of opposite sign, which
/// biases the finite-n estimate slightly below the true order 1 (measured
/// 0.96-0.99 on n = 64..512).
pub fn check_circle_convergence(n_schedule: &[usize]) -> CheckResult {
    assert!(
        n_schedule.windows(2).all(|w| w[0] < w[1]) && n_schedule.len() >= 3,
        "n_schedule must be increasing with at least 3 entries"
    );
    let two_pi = 2.0 * std::f64::consts::PI;
    let loops: Vec<PolygonalLoop> = n_schedule
        .iter()
        .map(|&n| gen_circle(n).expect("valid n"))
        .collect();
    let mut items = Vec::new();
    let evals: [(&str, f64, EnergyEval); 3] = [
        ("triple sum p=3", two_pi.powi(3), Box::new(|l| menger_energy(l, 3.0).unwrap().value)),
        ("pair sum p=2", two_pi.powi(2), Box::new(|l| rho_energy(l, 2.0).unwrap().value)),
        ("point sum p=1", two_pi, Box::new(|l| global_radius_energy(l, 1.0).unwrap().value)),
    ];
    for (label, target, eval) in &evals {
        let errs: Vec<f64> = loops.iter().map(|l| (eval(l) - target).abs() / target).collect();
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        items.push(CheckItem {
            label: format!("{label}: error strictly decreases under refinement"),
            measured: *errs.last().unwrap(),
            expected: "each err(2n) < err(n)".into(),
            tolerance: 0.0,
            pass: decreasing,
            basis: "computed reference",
        });
        let m = errs.len();
        let order = (errs[m - 2] / errs[m - 1]).log2();
        items.push(CheckItem {
            label: format!("{label}: empirical order on finest pair (slack 0.05)"),
            measured: order,
            expected: ">= 0.95".into(),
            tolerance: 0.95,
            pass: order >= 0.95,
            basis: "computed reference",
        });
    }
    // Richardson in 1/n on the two finest grids removes the leading error
    let moeb: Vec<f64> = loops
        .iter()
        .map(|l| moebius_energy(l).expect("unit circles").value)
        .collect();
    let m = moeb.len();
    let ratio = n_schedule[m - 1] as f64 / n_schedule[m - 2] as f64;
    let extrap = (ratio * moeb[m - 1] - moeb[m - 2]) / (ratio - 1.0);
    items.push(CheckItem {
        label: "inverse-square pair energy: Richardson limit".into(),
        measured: extrap,
        expected: "in 4 +/- 0.05".into(),
        tolerance: 0.05,
        pass: (extrap - 4.0).abs() <= 0.05,
        basis: "computed reference",
    });
    let thick: Vec<f64> = loops.iter().map(|l| thickness(l).value()).collect();
    let monotone_up = thick.windows(2).all(|w| w[1] > w[0]) && thick.iter().all(|&t| t < 1.0 / two_pi);
    items.push(CheckItem {
        label: "thickness rises monotonically toward 1/(2*pi)".into(),
        measured: *thick.last().unwrap(),
        expected: format!("increasing, < {:.9}", 1.0 / two_pi),
        tolerance: 1.0 / two_pi,
        pass: monotone_up,
        basis: "analytic limit",
    });
    CheckResult::from_items("circle-value convergence", items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::perturb;
    use crate::geom::Point3;

    fn unit_square(n: usize) -> PolygonalLoop {
        PolygonalLoop::from_vertices(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.25, 0.0, 0.0),
            Point3::new(0.25, 0.25, 0.0),
            Point3::new(0.0, 0.25, 0.0),
        ])
        .unwrap()
        .resample_uniform(n)
        .unwrap()
    }

    #[test]
    fn ordering_passes_on_reference_curves() {
        let circle = gen_circle(128).unwrap();
        let r = check_ordering(&circle, &[1.0, 2.0, 3.0, 4.0]);
        assert!(r.passed(), "{r}");

        let tref = gen_torus_knot(2, 3, 128, 2.0, 1.0).unwrap();
        let r = check_ordering(&tref, &[2.0, 3.0, 4.0]);
        assert!(r.passed(), "{r}");
        // on the knot the three sums are strictly separated
        for p in [2.0, 3.0, 4.0] {
            let m = menger_energy(&tref, p).unwrap().value;
            let i = rho_energy(&tref, p).unwrap().value;
            let u = global_radius_energy(&tref, p).unwrap().value;
            assert!(m < i && i < u, "p={p}: {m} {i} {u}");
        }

        let wobble = perturb(&gen_circle(64).unwrap(), 0.05, 7);
        assert!(check_ordering(&wobble, &[3.0]).passed());
    }

    #[test]
    fn p_limits_pass_on_circle() {
        let r = check_p_limits(&gen_circle(128).unwrap(), &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn p_limits_on_knot_are_monotone_but_still_far_at_p32() {
        // the knot's minimal circumradius lives on a small set, so the p=32
        // root is still ~6-23% below 1/thickness; the check reports exactly
        // that
        let tref = gen_torus_knot(2, 3, 128, 2.0, 1.0).unwrap();
        let r = check_p_limits(&tref, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        assert!(!r.passed());
        for item in &r.items {
            if item.label.contains("non-decreasing") {
                assert!(item.pass, "{item:?}");
            } else {
                assert!(!item.pass, "closeness cannot hold at p=32: {item:?}");
                assert!(item.measured > 0.05 && item.measured < 0.30);
            }
        }
    }

    #[test]
    fn p_limits_on_square_are_monotone() {
        let r = check_p_limits(&unit_square(64), &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        for item in &r.items {
            if item.label.contains("non-decreasing") {
                assert!(item.pass, "{item:?}");
            }
        }
    }

    #[test]
    #[should_panic(expected = "p_schedule must be increasing")]
    fn p_limits_rejects_unsorted_schedule() {
        let _ = check_p_limits(&gen_circle(16).unwrap(), &[2.0, 1.0, 32.0]);
    }

    #[test]
    fn charge_blowup_passes_on_documented_family() {
        let r = check_charge_blowup(&[0.1, 0.05, 0.025, 0.0125], 128);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn fary_milnor_passes_at_both_resolutions() {
        assert!(check_fary_milnor(64).passed());
        assert!(check_fary_milnor(256).passed());
    }

    #[test]
    fn circle_convergence_passes() {
        let r = check_circle_convergence(&[64, 128, 256, 512]);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn results_serialize_and_render() {
        let r = check_fary_milnor(64);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"status\":\"pass\""));
        assert!(json.contains("\"basis\":\"theorem bound\""));
        let text = format!("{r}");
        assert!(text.starts_with("PASS knotted-curve total curvature"));
        assert!(text.contains("[ok  ]"));
    }

    #[test]
    fn failing_check_reports_every_offending_item() {
        let tref = gen_torus_knot(2, 3, 96, 2.0, 1.0).unwrap();
        let r = check_p_limits(&tref, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        let failing: Vec<_> = r.items.iter().filter(|i| !i.pass).collect();
        assert_eq!(failing.len(), 3, "one closeness failure per energy");
        let text = format!("{r}");
        assert_eq!(text.matches("[FAIL]").count(), 3);
        assert!(text.starts_with("FAIL"));
    }
}
