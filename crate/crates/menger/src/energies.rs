//! The energy functionals: triple-, pair-, and point-circumradius sums,
//! tangent-point energies (plain and symmetrized), the regularized
//! inverse-square pair energy, total curvature, and the average crossing
//! number.
//!
//! All of them are midpoint-rule quadrature sums over the loop's edge
//! midpoints with weight = edge length; tuples with repeated node indices are
//! excluded. The circumradius-family evaluators share one canonical triple
//! evaluation with the radii module, so the chain
//! `triple sum <= pair sum <= point sum <= 1/thickness^p`
//! holds exactly (nested minima over one node set), not just asymptotically.
//!
//! Reductions use compensated summation over fixed-size index blocks combined
//! in block order, so results are bit-identical for any worker count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::curve::PolygonalLoop;
use crate::geom::{angle_between, inv_tangent_point_radius};
use crate::numeric::{blocked_sum, NeumaierSum};
use crate::radii::{rho_global, rho_pair, thickness, triple_radius};

/// Loops farther than this from unit length are rejected by the energy whose
/// intrinsic-distance term assumes circumference 1.
pub const UNIT_LENGTH_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("exponent must satisfy p >= 1, got {0}")]
    SubUnitExponent(f64),
    #[error("energy {0} requires an exponent p")]
    MissingExponent(EnergyName),
    #[error("energy {0} takes no exponent")]
    UnexpectedExponent(EnergyName),
    #[error("unknown energy name {0:?} (expected one of Mp, Ip, Up, Ep, EpSym, Moebius, TK, acn, thickness, ropelength)")]
    UnknownName(String),
    #[error("this energy requires a unit-length loop (|L - 1| <= {UNIT_LENGTH_TOL:e}), got L = {0}")]
    NotUnitLength(f64),
}

/// Identifier vocabulary shared by the library, the CLI, and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyName {
    /// Triple circumradius sum over ordered node triples.
    Mp,
    /// Pair-radius sum over ordered node pairs.
    Ip,
    /// Point-radius sum over nodes.
    Up,
    /// Tangent-point energy over ordered pairs.
    Ep,
    /// Symmetrized tangent-point energy (geometric mean of both directions).
    EpSym,
    /// Inverse-square pair energy regularized by intrinsic distance.
    Moebius,
    /// Total curvature (sum of turning angles).
    #[serde(rename = "TK")]
    Tk,
    /// Average crossing number.
    #[serde(rename = "acn")]
    Acn,
    /// Smallest circumradius over all node triples (not an energy, but part
    /// of the same reporting vocabulary).
    #[serde(rename = "thickness")]
    Thickness,
    /// Length over thickness.
    #[serde(rename = "ropelength")]
    Ropelength,
}

impl EnergyName {
    pub const ALL: [EnergyName; 10] = [
        EnergyName::Mp,
        EnergyName::Ip,
        EnergyName::Up,
        EnergyName::Ep,
        EnergyName::EpSym,
        EnergyName::Moebius,
        EnergyName::Tk,
        EnergyName::Acn,
        EnergyName::Thickness,
        EnergyName::Ropelength,
    ];

    pub fn token(self) -> &'static str {
        match self {
            EnergyName::Mp => "Mp",
            EnergyName::Ip => "Ip",
            EnergyName::Up => "Up",
            EnergyName::Ep => "Ep",
            EnergyName::EpSym => "EpSym",
            EnergyName::Moebius => "Moebius",
            EnergyName::Tk => "TK",
            EnergyName::Acn => "acn",
            EnergyName::Thickness => "thickness",
            EnergyName::Ropelength => "ropelength",
        }
    }

    pub fn needs_exponent(self) -> bool {
        matches!(
            self,
            EnergyName::Mp | EnergyName::Ip | EnergyName::Up | EnergyName::Ep | EnergyName::EpSym
        )
    }

    /// Exponent at which the functional is scale-invariant. At or below this
    /// threshold the continuum functional stops penalizing small scales, so
    /// self-repulsion arguments need p strictly above it; the discrete sums
    /// remain finite for any p >= 1 and the library computes them all the
    /// same. Callers may surface this as an advisory.
    pub fn scale_invariant_p(self) -> Option<f64> {
        match self {
            EnergyName::Mp => Some(3.0),
            EnergyName::Ip => Some(2.0),
            EnergyName::Up => Some(1.0),
            EnergyName::Ep | EnergyName::EpSym => Some(2.0),
            _ => None,
        }
    }
}

impl fmt::Display for EnergyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for EnergyName {
    type Err = EnergyError;

    fn from_str(s: &str) -> Result<Self, EnergyError> {
        EnergyName::ALL
            .into_iter()
            .find(|n| n.token() == s)
            .ok_or_else(|| EnergyError::UnknownName(s.to_string()))
    }
}

/// An energy name plus its exponent, validated at construction: exponents are
/// required exactly for the p-family names and must be >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySpec {
    name: EnergyName,
    p: Option<f64>,
}

impl EnergySpec {
    pub fn new(name: EnergyName, p: Option<f64>) -> Result<EnergySpec, EnergyError> {
        match (name.needs_exponent(), p) {
            (true, None) => Err(EnergyError::MissingExponent(name)),
            (false, Some(_)) => Err(EnergyError::UnexpectedExponent(name)),
            (true, Some(p)) if p < 1.0 => Err(EnergyError::SubUnitExponent(p)),
            _ => Ok(EnergySpec { name, p }),
        }
    }

    pub fn name(&self) -> EnergyName {
        self.name
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }
}

impl fmt::Display for EnergySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p {
            Some(p) => write!(f, "{}(p={})", self.name, p),
            None => write!(f, "{}", self.name),
        }
    }
}

/// Result of one evaluation. `wall_time` is informational only and is the
/// single field exempt from bit-reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub name: EnergyName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub value: f64,
    pub n: usize,
    pub wall_time: f64,
    pub node_rule: &'static str,
}

fn report(name: EnergyName, p: Option<f64>, value: f64, n: usize, start: Instant) -> EnergyReport {
    EnergyReport {
        name,
        p,
        value,
        n,
        wall_time: start.elapsed().as_secs_f64(),
        node_rule: "edge-midpoint",
    }
}

fn check_exponent(p: f64) -> Result<(), EnergyError> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(EnergyError::SubUnitExponent(p))
    }
}

/// `x^p` for `x >= 0`, routed through the integer power for small integer
/// `p` and through `powi * sqrt` for half-integer `p` — both are several
/// times cheaper than `powf` and these exponents dominate in practice. The
/// branch depends only on `p`, so evaluation stays bit-reproducible.
fn pow_p(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else if (2.0 * p).fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p.floor() as i32) * x.sqrt()
    } else {
        x.powf(p)
    }
}

/// Triple circumradius energy: sum over ordered triples of distinct nodes of
/// `w_i w_j w_k / R(i,j,k)^p`. Computed over unordered triples and multiplied
/// by 6 (the circumradius is permutation-invariant and evaluated canonically,
/// so all six orders are bit-identical). Collinear triples contribute 0.
pub fn menger_energy(loop_: &PolygonalLoop, p: f64) -> Result<EnergyReport, EnergyError> {
    check_exponent(p)?;
    let start = Instant::now();
    let n = loop_.n();
    let w = loop_.edge_lengths();
    let sum = blocked_sum(n, |range| {
        let mut acc = NeumaierSum::new();
        for i in range {
            for j in (i + 1)..n {
                let wij = w[i] * w[j];
                for (k, &wk) in w.iter().enumerate().skip(j + 1) {
                    let kappa = triple_radius(loop_, i, j, k).reciprocal();
                    if kappa > 0.0 {
                        acc.add(wij * wk * pow_p(kappa, p));
                    }
                }
            }
        }
        acc.total()
    });
    Ok(report(EnergyName::Mp, Some(p), 6.0 * sum, n, start))
}

/// Difference of two triple-sum energies that agree except at two nodes:
/// sums `term(plus) - term(minus)` over exactly the triples containing node
/// `a` or node `b`, times 6. Terms of untouched triples are bit-identical in
/// both loops and cancel exactly, so this equals
/// `menger_energy(plus) - menger_energy(minus)` up to summation rounding —
/// at a fraction of the cost. Finite-difference callers displace one vertex,
/// which changes exactly the two adjacent edge midpoints; this is their fast
/// path.
pub(crate) fn menger_energy_difference(
    plus: &PolygonalLoop,
    minus: &PolygonalLoop,
    p: f64,
    a: usize,
    b: usize,
) -> f64 {
    debug_assert_eq!(plus.n(), minus.n());
    debug_assert_ne!(a, b);
    let n = plus.n();
    let (wp, wm) = (plus.edge_lengths(), minus.edge_lengths());
    let term = |i: usize, j: usize, k: usize| -> f64 {
        let tp = wp[i] * wp[j] * wp[k] * pow_p(triple_radius(plus, i, j, k).reciprocal(), p);
        let tm = wm[i] * wm[j] * wm[k] * pow_p(triple_radius(minus, i, j, k).reciprocal(), p);
        tp - tm
    };
    let mut acc = NeumaierSum::new();
    // triples containing a
    for j in 0..n {
        if j == a {
            continue;
        }
        for k in (j + 1)..n {
            if k != a {
                acc.add(term(a, j, k));
            }
        }
    }
    // triples containing b but not a
    for j in 0..n {
        if j == b || j == a {
            continue;
        }
        for k in (j + 1)..n {
            if k != b && k != a {
                acc.add(term(b, j, k));
            }
        }
    }
    6.0 * acc.total()
}

/// Pair-radius energy: sum over ordered pairs `i != j` of
/// `w_i w_j / rho_pair(i,j)^p` (unordered pairs doubled; the pair radius is
/// symmetric by canonical triple evaluation).
pub fn rho_energy(loop_: &PolygonalLoop, p: f64) -> Result<EnergyReport, EnergyError> {
    check_exponent(p)?;
    let start = Instant::now();
    let n = loop_.n();
    let w = loop_.edge_lengths();
    let sum = blocked_sum(n, |range| {
        let mut acc = NeumaierSum::new();
        for i in range {
            for j in (i + 1)..n {
                let kappa = rho_pair(loop_, i, j)
                    .expect("indices are distinct and in range")
                    .reciprocal();
                if kappa > 0.0 {
                    acc.add(w[i] * w[j] * pow_p(kappa, p));
                }
            }
        }
        acc.total()
    });
    Ok(report(EnergyName::Ip, Some(p), 2.0 * sum, n, start))
}

/// Point-radius energy: sum over nodes of `w_i / rho_global(i)^p`.
pub fn global_radius_energy(loop_: &PolygonalLoop, p: f64) -> Result<EnergyReport, EnergyError> {
    check_exponent(p)?;
    let start = Instant::now();
    let n = loop_.n();
    let w = loop_.edge_lengths();
    let sum = blocked_sum(n, |range| {
        let mut acc = NeumaierSum::new();
        for i in range {
            let kappa = rho_global(loop_, i)
                .expect("index is in range")
                .reciprocal();
            if kappa > 0.0 {
                acc.add(w[i] * pow_p(kappa, p));
            }
        }
        acc.total()
    });
    Ok(report(EnergyName::Up, Some(p), sum, n, start))
}

/// Tangent-point energy. Plain: sum over ordered pairs `i != j` of
/// `w_i w_j / r_tp(i -> j)^p`, where `r_tp(i -> j)` is the radius of the
/// circle through node `j` tangent to edge direction `i` at node `i` — note
/// the asymmetry, so ordered pairs are summed explicitly. Symmetrized: the
/// integrand is `(r_tp(i->j) r_tp(j->i))^{-p/2}`, which is symmetric, so
/// unordered pairs are doubled. Pairs with the target on the tangent line
/// contribute 0 (infinite radius).
pub fn tangent_point_energy(
    loop_: &PolygonalLoop,
    p: f64,
    symmetrized: bool,
) -> Result<EnergyReport, EnergyError> {
    check_exponent(p)?;
    let start = Instant::now();
    let n = loop_.n();
    let w = loop_.edge_lengths();
    let nodes = loop_.nodes();
    let (name, value) = if symmetrized {
        let sum = blocked_sum(n, |range| {
            let mut acc = NeumaierSum::new();
            for i in range {
                for j in (i + 1)..n {
                    let fwd =
                        inv_tangent_point_radius(nodes[i].position, nodes[i].tangent, nodes[j].position);
                    let bwd =
                        inv_tangent_point_radius(nodes[j].position, nodes[j].tangent, nodes[i].position);
                    let prod = fwd * bwd;
                    if prod > 0.0 {
                        acc.add(w[i] * w[j] * pow_p(prod, 0.5 * p));
                    }
                }
            }
            acc.total()
        });
        (EnergyName::EpSym, 2.0 * sum)
    } else {
        let sum = blocked_sum(n, |range| {
            let mut acc = NeumaierSum::new();
            for i in range {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let inv =
                        inv_tangent_point_radius(nodes[i].position, nodes[i].tangent, nodes[j].position);
                    if inv > 0.0 {
                        acc.add(w[i] * w[j] * pow_p(inv, p));
                    }
                }
            }
            acc.total()
        });
        (EnergyName::Ep, sum)
    };
    Ok(report(name, Some(p), value, n, start))
}

/// Inverse-square pair energy with intrinsic-distance regularization: sum
/// over ordered pairs `i != j` of
/// `w_i w_j (1/|x_i - x_j|^2 - 1/d(s_i, s_j)^2)`, where `d` is the shorter
/// arc distance along the loop. Chords never exceed arcs, so every term is
/// non-negative; the total is floored at 0 anyway as a rounding safeguard.
/// Requires a unit-length loop — the value is only meaningful on the
/// normalized class.
pub fn moebius_energy(loop_: &PolygonalLoop) -> Result<EnergyReport, EnergyError> {
    let len = loop_.total_length();
    if (len - 1.0).abs() > UNIT_LENGTH_TOL {
        return Err(EnergyError::NotUnitLength(len));
    }
    let start = Instant::now();
    Ok(report(
        EnergyName::Moebius,
        None,
        moebius_sum(loop_),
        loop_.n(),
        start,
    ))
}

/// The raw sum behind [`moebius_energy`], without the unit-length gate. The
/// arc distance uses the loop's actual length, so finite-difference callers
/// that displace a single vertex (perturbing the length by O(step)) get a
/// smooth value instead of a domain error. Coincident node pairs yield an
/// infinite value — a genuinely self-touching loop has infinite energy.
pub(crate) fn moebius_sum(loop_: &PolygonalLoop) -> f64 {
    let n = loop_.n();
    let w = loop_.edge_lengths();
    let nodes = loop_.nodes();
    let len = loop_.total_length();
    let sum = blocked_sum(n, |range| {
        let mut acc = NeumaierSum::new();
        for i in range {
            for j in (i + 1)..n {
                let chord2 = (nodes[j].position - nodes[i].position).norm_sq();
                let arc = (nodes[j].s - nodes[i].s).min(len - (nodes[j].s - nodes[i].s));
                acc.add(w[i] * w[j] * (1.0 / chord2 - 1.0 / (arc * arc)));
            }
        }
        acc.total()
    });
    (2.0 * sum).max(0.0)
}

/// Total curvature: sum of the exterior turning angles between consecutive
/// edges. Planar convex polygons give exactly 2*pi; every closed polygon
/// gives at least that.
pub fn total_curvature(loop_: &PolygonalLoop) -> EnergyReport {
    let start = Instant::now();
    let t = loop_.tangents();
    let n = t.len();
    let mut acc = NeumaierSum::new();
    for i in 0..n {
        acc.add(angle_between(t[(i + n - 1) % n], t[i]));
    }
    report(EnergyName::Tk, None, acc.total(), n, start)
}

/// Average crossing number:
/// `(1/4pi) * sum over ordered pairs of w_i w_j |(t_i x t_j) . (x_j - x_i)| / |x_j - x_i|^3`.
/// The summand is exactly symmetric in `(i, j)`, so unordered pairs are
/// doubled. Planar loops give exactly 0; the value is invariant under rigid
/// motions and scaling (the integrand is homogeneous of degree 0 against the
/// squared measure), so no unit-length gate is needed.
pub fn average_crossing_number(loop_: &PolygonalLoop) -> EnergyReport {
    let start = Instant::now();
    let n = loop_.n();
    let w = loop_.edge_lengths();
    let nodes = loop_.nodes();
    let sum = blocked_sum(n, |range| {
        let mut acc = NeumaierSum::new();
        for i in range {
            for j in (i + 1)..n {
                let d = nodes[j].position - nodes[i].position;
                let dn = d.norm();
                if dn == 0.0 {
                    continue;
                }
                let triple = nodes[i].tangent.cross(nodes[j].tangent).dot(d).abs();
                acc.add(w[i] * w[j] * triple / (dn * dn * dn));
            }
        }
        acc.total()
    });
    report(
        EnergyName::Acn,
        None,
        2.0 * sum / (4.0 * std::f64::consts::PI),
        n,
        start,
    )
}

/// Evaluates any identifier in the vocabulary, including the two radius
/// quantities, so callers can treat the whole report surface uniformly.
pub fn evaluate(loop_: &PolygonalLoop, spec: EnergySpec) -> Result<EnergyReport, EnergyError> {
    match spec.name {
        EnergyName::Mp => menger_energy(loop_, spec.p.unwrap()),
        EnergyName::Ip => rho_energy(loop_, spec.p.unwrap()),
        EnergyName::Up => global_radius_energy(loop_, spec.p.unwrap()),
        EnergyName::Ep => tangent_point_energy(loop_, spec.p.unwrap(), false),
        EnergyName::EpSym => tangent_point_energy(loop_, spec.p.unwrap(), true),
        EnergyName::Moebius => moebius_energy(loop_),
        EnergyName::Tk => Ok(total_curvature(loop_)),
        EnergyName::Acn => Ok(average_crossing_number(loop_)),
        EnergyName::Thickness => {
            let start = Instant::now();
            let t = thickness(loop_).value();
            Ok(report(EnergyName::Thickness, None, t, loop_.n(), start))
        }
        EnergyName::Ropelength => {
            let start = Instant::now();
            let rl = crate::radii::ropelength(loop_);
            Ok(report(EnergyName::Ropelength, None, rl, loop_.n(), start))
        }
    }
}
