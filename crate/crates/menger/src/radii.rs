//! Infimal circumradius functions over the quadrature node set: the pair
//! radius (third point free), the point radius (two points free), and the
//! thickness (all three free), plus ropelength.
//!
//! All minima run over the same edge-midpoint node set the energies
//! integrate over, and every triple is evaluated in canonical (sorted-index)
//! order. Both choices exist so that the chain
//! `thickness <= rho_global(i) <= rho_pair(i,j)` and the induced energy
//! ordering hold bit-exactly, not merely up to rounding.

use thiserror::Error;

use crate::curve::PolygonalLoop;
use crate::geom::{circumradius, Radius};

#[derive(Debug, Error)]
pub enum RadiiError {
    #[error("pair radius needs two distinct node indices, got {0} twice")]
    EqualIndices(usize),
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Circumradius of the node triple `{i, j, k}`, evaluated with the indices
/// sorted ascending so that all six permutations are bit-identical. Collinear
/// triples give the infinite radius; triples containing coincident sample
/// points (a self-overlapping polygon) carry no circle information and are
/// likewise excluded from minima, which nearby honest triples dominate.
pub fn triple_radius(loop_: &PolygonalLoop, i: usize, j: usize, k: usize) -> Radius {
    debug_assert!(i != j && j != k && i != k, "triple indices must be distinct");
    let (a, b, c) = sort3(i, j, k);
    let nodes = loop_.nodes();
    match circumradius(nodes[a].position, nodes[b].position, nodes[c].position) {
        Ok(r) => r,
        Err(_) => Radius::INFINITE,
    }
}

/// Pair radius: minimum circumradius through nodes `i` and `j` with the third
/// point ranging over all other nodes.
pub fn rho_pair(loop_: &PolygonalLoop, i: usize, j: usize) -> Result<Radius, RadiiError> {
    let n = loop_.n();
    for index in [i, j] {
        if index >= n {
            return Err(RadiiError::IndexOutOfRange { index, n });
        }
    }
    if i == j {
        return Err(RadiiError::EqualIndices(i));
    }
    let mut best = Radius::INFINITE;
    for k in 0..n {
        if k != i && k != j {
            best = best.min(triple_radius(loop_, i, j, k));
        }
    }
    Ok(best)
}

/// Point radius: minimum circumradius through node `i` with the other two
/// points ranging over all distinct node pairs. Equals
/// `min_j rho_pair(i, j)` exactly (same triples, same canonical evaluation).
pub fn rho_global(loop_: &PolygonalLoop, i: usize) -> Result<Radius, RadiiError> {
    let n = loop_.n();
    if i >= n {
        return Err(RadiiError::IndexOutOfRange { index: i, n });
    }
    let mut best = Radius::INFINITE;
    for j in 0..n {
        if j == i {
            continue;
        }
        for k in (j + 1)..n {
            if k != i {
                best = best.min(triple_radius(loop_, i, j, k));
            }
        }
    }
    Ok(best)
}

/// Thickness: global minimum circumradius over all distinct node triples.
///
/// The scan walks node pairs sorted by distance ascending and keeps, for each
/// pair, the minimum over the third node. Any triangle satisfies
/// `R >= (longest side)/2 >= (any side)/2`, so once a pair with
/// `dist/2 >= running minimum` is reached, no remaining triple can improve
/// the minimum and the scan stops. The pruning never changes the result; on
/// smooth curves it cuts the O(n^3) scan to a small multiple of n^2.
pub fn thickness(loop_: &PolygonalLoop) -> Radius {
    let nodes = loop_.nodes();
    let n = nodes.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((nodes[i].position.dist(nodes[j].position), i as u32, j as u32));
        }
    }
    // distances are finite; tie-break on indices for a fully fixed order
    pairs.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("node distances are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut best = Radius::INFINITE;
    for &(d, i, j) in &pairs {
        if 0.5 * d >= best.value() {
            break;
        }
        let (i, j) = (i as usize, j as usize);
        for k in 0..n {
            if k != i && k != j {
                best = best.min(triple_radius(loop_, i, j, k));
            }
        }
    }
    best
}

/// Ropelength `total_length / thickness`; equals `1/thickness` on unit loops.
/// A loop whose every node triple is collinear has infinite thickness and
/// ropelength 0.
pub fn ropelength(loop_: &PolygonalLoop) -> f64 {
    let t = thickness(loop_);
    if t.is_finite() {
        loop_.total_length() / t.value()
    } else {
        0.0
    }
}

/// Which infimal radius a [`RadiusField`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusKind {
    /// `rho_pair(i, j)` for every unordered node pair.
    Pairwise,
    /// `rho_global(i)` for every node.
    Global,
    /// The single global minimum.
    Thickness,
}

/// Tabulated radius values over the node set, tagged by kind. The pairwise
/// table costs O(n^3) to fill and is meant for small-n studies; the energies
/// recompute minima on the fly instead of materializing it.
#[derive(Debug, Clone)]
pub struct RadiusField {
    kind: RadiusKind,
    n: usize,
    values: Vec<Radius>,
}

impl RadiusField {
    pub fn pairwise(loop_: &PolygonalLoop) -> RadiusField {
        let n = loop_.n();
        let mut values = vec![Radius::INFINITE; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let r = rho_pair(loop_, i, j).expect("indices are in range and distinct");
                values[i * n + j] = r;
                values[j * n + i] = r;
            }
        }
        RadiusField { kind: RadiusKind::Pairwise, n, values }
    }

    pub fn global(loop_: &PolygonalLoop) -> RadiusField {
        let n = loop_.n();
        let values = (0..n)
            .map(|i| rho_global(loop_, i).expect("index is in range"))
            .collect();
        RadiusField { kind: RadiusKind::Global, n, values }
    }

    pub fn thickness(loop_: &PolygonalLoop) -> RadiusField {
        RadiusField {
            kind: RadiusKind::Thickness,
            n: loop_.n(),
            values: vec![thickness(loop_)],
        }
    }

    pub fn kind(&self) -> RadiusKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry for a pair (Pairwise), a node (Global, `j` ignored), or the
    /// single minimum (Thickness, both ignored).
    pub fn get(&self, i: usize, j: usize) -> Radius {
        match self.kind {
            RadiusKind::Pairwise => self.values[i * self.n + j],
            RadiusKind::Global => self.values[i],
            RadiusKind::Thickness => self.values[0],
        }
    }

    /// Smallest tabulated value (off-diagonal only for the pairwise kind).
    pub fn min(&self) -> Radius {
        match self.kind {
            RadiusKind::Pairwise => {
                let mut best = Radius::INFINITE;
                for i in 0..self.n {
                    for j in (i + 1)..self.n {
                        best = best.min(self.values[i * self.n + j]);
                    }
                }
                best
            }
            _ => {
                let mut best = Radius::INFINITE;
                for &v in &self.values {
                    best = best.min(v);
                }
                best
            }
        }
    }
}

fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    if k < lo {
        (k, lo, hi)
    } else if k < hi {
        (lo, k, hi)
    } else {
        (lo, hi, k)
    }
}
