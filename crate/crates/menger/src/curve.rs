//! Polygonal loop model: construction, generators, arclength resampling,
//! normalization to the unit-length class, and curve file I/O.
//!
//! A loop is a closed chain of `n >= 3` vertices; edge `i` joins vertex `i`
//! to vertex `(i+1) % n`. Edge lengths, cumulative arclength, unit edge
//! tangents, and the edge-midpoint quadrature nodes are cached at
//! construction and never mutated.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::geom::Point3;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("a loop needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("zero-length edge at index {index} (repeated consecutive vertices)")]
    DegenerateEdge { index: usize },
    #[error("non-finite coordinate in vertex {index}")]
    NonFiniteVertex { index: usize },
    #[error("resampling needs at least 3 nodes, got {0}")]
    TooFewSamples(usize),
    #[error("torus knot parameters p={p}, q={q} must be >= 1 and coprime")]
    BadTorusParams { p: u32, q: u32 },
    #[error("torus radii must satisfy R > r > 0, got R={major}, r={minor}")]
    BadTorusRadii { major: f64, minor: f64 },
    #[error("pinched gap must lie in (0, {max}), got {gap}")]
    BadGap { gap: f64, max: f64 },
    #[error("curve file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A quadrature node: arclength position, point on the trace, and the unit
/// tangent of the containing edge. Arclength is measured from vertex 0, so
/// `s` lies in `[0, 1)` exactly when the loop has unit length.
#[derive(Debug, Clone, Copy)]
pub struct SamplePoint {
    pub s: f64,
    pub position: Point3,
    pub tangent: Point3,
}

/// Closed polygonal curve with cached edge data.
#[derive(Debug, Clone)]
pub struct PolygonalLoop {
    vertices: Vec<Point3>,
    edge_lengths: Vec<f64>,
    cum_arclength: Vec<f64>, // n + 1 entries, cum[0] = 0, cum[n] = total_length
    tangents: Vec<Point3>,
    total_length: f64,
    nodes: Vec<SamplePoint>, // edge midpoints, the quadrature node set
}

impl PolygonalLoop {
    /// Builds a loop from an ordered vertex list, caching edge lengths,
    /// cumulative arclength, tangents, and the edge-midpoint node set.
    pub fn from_vertices(points: Vec<Point3>) -> Result<Self, CurveError> {
        let n = points.len();
        if n < 3 {
            return Err(CurveError::TooFewVertices(n));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(CurveError::NonFiniteVertex { index: i });
            }
        }
        let mut edge_lengths = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        let mut cum_arclength = Vec::with_capacity(n + 1);
        cum_arclength.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let a = points[i];
            let b = points[(i + 1) % n];
            let e = b - a;
            let len = e.norm();
            if len <= 0.0 {
                return Err(CurveError::DegenerateEdge { index: i });
            }
            edge_lengths.push(len);
            tangents.push(e / len);
            acc += len;
            cum_arclength.push(acc);
        }
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let mid = (points[i] + points[(i + 1) % n]) * 0.5;
            nodes.push(SamplePoint {
                s: cum_arclength[i] + 0.5 * edge_lengths[i],
                position: mid,
                tangent: tangents[i],
            });
        }
        Ok(PolygonalLoop {
            vertices: points,
            edge_lengths,
            cum_arclength,
            tangents,
            total_length: acc,
            nodes,
        })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn tangents(&self) -> &[Point3] {
        &self.tangents
    }

    pub fn cum_arclength(&self) -> &[f64] {
        &self.cum_arclength
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Edge-midpoint quadrature nodes. Node `i` carries weight
    /// `edge_lengths[i]`; at a midpoint the polygon is genuinely
    /// differentiable, so the edge direction is the honest tangent.
    pub fn nodes(&self) -> &[SamplePoint] {
        &self.nodes
    }

    /// True when the loop has unit length within `tol`.
    pub fn is_unit_length(&self, tol: f64) -> bool {
        (self.total_length - 1.0).abs() <= tol
    }

    /// Rescales to unit length and pins vertex 0 to the origin. Idempotent;
    /// a loop that already satisfies both constraints is returned bit-exactly.
    pub fn normalize_to_unit(&self) -> PolygonalLoop {
        let origin = self.vertices[0];
        let scale = 1.0 / self.total_length;
        let verts = self
            .vertices
            .iter()
            .map(|&v| (v - origin) * scale)
            .collect();
        PolygonalLoop::from_vertices(verts).expect("normalization preserves validity")
    }

    /// Point on the polygonal trace at arclength `s` (clamped to `[0, L)`).
    pub fn point_at(&self, s: f64) -> Point3 {
        let s = s.clamp(0.0, self.total_length);
        // first index with cum > s, minus one
        let i = match self
            .cum_arclength
            .partition_point(|&c| c <= s)
        {
            0 => 0,
            k => (k - 1).min(self.n() - 1),
        };
        let t = (s - self.cum_arclength[i]) / self.edge_lengths[i];
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % self.n()];
        a + (b - a) * t
    }

    /// Resamples to `m` vertices at arclengths `k/m * total_length` along the
    /// trace. The output is inscribed in the input, so its total length never
    /// exceeds the input's.
    pub fn resample_uniform(&self, m: usize) -> Result<PolygonalLoop, CurveError> {
        if m < 3 {
            return Err(CurveError::TooFewSamples(m));
        }
        let verts = (0..m)
            .map(|k| self.point_at(k as f64 / m as f64 * self.total_length))
            .collect();
        PolygonalLoop::from_vertices(verts)
    }

    /// Same trace walked in the opposite direction (vertex 0 kept first).
    pub fn reversed(&self) -> PolygonalLoop {
        let mut verts = self.vertices.clone();
        verts[1..].reverse();
        PolygonalLoop::from_vertices(verts).expect("reversal preserves validity")
    }
}

/// Regular n-gon inscribed in the circle of circumference 1 in the z = 0
/// plane, then normalized to unit length (the polygon's perimeter is slightly
/// below 1 before normalization).
pub fn gen_circle(n: usize) -> Result<PolygonalLoop, CurveError> {
    if n < 3 {
        return Err(CurveError::TooFewVertices(n));
    }
    let radius = 1.0 / (2.0 * PI);
    let verts = (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            Point3::new(radius * th.cos(), radius * th.sin(), 0.0)
        })
        .collect();
    Ok(PolygonalLoop::from_vertices(verts)?.normalize_to_unit())
}

/// (p,q) torus knot sampled at `n` uniform parameter values on the torus with
/// major radius `major` and minor radius `minor`, normalized to unit length.
/// `p` and `q` must be coprime and >= 1 (otherwise the trace is a link or a
/// degenerate curve, and the request is rejected).
pub fn gen_torus_knot(
    p: u32,
    q: u32,
    n: usize,
    major: f64,
    minor: f64,
) -> Result<PolygonalLoop, CurveError> {
    if p < 1 || q < 1 || gcd(p, q) != 1 {
        return Err(CurveError::BadTorusParams { p, q });
    }
    if !(major > minor && minor > 0.0) {
        return Err(CurveError::BadTorusRadii { major, minor });
    }
    if n < 3 {
        return Err(CurveError::TooFewVertices(n));
    }
    let (pf, qf) = (f64::from(p), f64::from(q));
    let verts = (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            let rho = major + minor * (qf * th).cos();
            Point3::new(
                rho * (pf * th).cos(),
                rho * (pf * th).sin(),
                minor * (qf * th).sin(),
            )
        })
        .collect();
    Ok(PolygonalLoop::from_vertices(verts)?.normalize_to_unit())
}

/// Pinched planar family for self-repulsion experiments: two parallel straight
/// strands at distance `gap`, closed by two half-circles of radius `gap/2`
/// (a stadium). The strand length is chosen as `(1 - pi*gap)/2`, so the exact
/// stadium has unit length before discretization; `n` vertices are placed at
/// uniform arclength. As `gap -> 0` the family converges to a doubly covered
/// segment, i.e. to a curve with self-intersections.
pub fn gen_pinched(gap: f64, n: usize) -> Result<PolygonalLoop, CurveError> {
    let max_gap = 1.0 / PI;
    if !(gap > 0.0 && gap < 0.9 * max_gap) {
        return Err(CurveError::BadGap { gap, max: 0.9 * max_gap });
    }
    if n < 3 {
        return Err(CurveError::TooFewVertices(n));
    }
    let strand = (1.0 - PI * gap) / 2.0;
    let cap_r = gap / 2.0;
    let cap_len = PI * cap_r;
    // piecewise-exact point on the stadium at arclength s in [0, 1):
    // bottom strand, right cap, top strand, left cap
    let point = |s: f64| -> Point3 {
        if s < strand {
            Point3::new(s, -cap_r, 0.0)
        } else if s < strand + cap_len {
            let phi = (s - strand) / cap_r; // 0..pi, from -pi/2 orientation
            Point3::new(strand + cap_r * phi.sin(), -cap_r * phi.cos(), 0.0)
        } else if s < 2.0 * strand + cap_len {
            let u = s - (strand + cap_len);
            Point3::new(strand - u, cap_r, 0.0)
        } else {
            let phi = (s - (2.0 * strand + cap_len)) / cap_r;
            Point3::new(-cap_r * phi.sin(), cap_r * phi.cos(), 0.0)
        }
    };
    let verts = (0..n).map(|k| point(k as f64 / n as f64)).collect();
    Ok(PolygonalLoop::from_vertices(verts)?.normalize_to_unit())
}

/// Deterministic per-vertex displacement of norm at most `amplitude`,
/// followed by renormalization to unit length. The generator is SplitMix64
/// seeded with `seed`; three draws per vertex in vertex order, each mapped to
/// `[-1, 1)`, scaled by `amplitude / sqrt(3)` so the displacement norm never
/// exceeds `amplitude`. Identical seeds give bit-identical output on any
/// platform.
pub fn perturb(loop_: &PolygonalLoop, amplitude: f64, seed: u64) -> PolygonalLoop {
    let mut rng = SplitMix64::new(seed);
    let scale = amplitude / 3f64.sqrt();
    let verts = loop_
        .vertices()
        .iter()
        .map(|&v| {
            let d = Point3::new(rng.next_unit(), rng.next_unit(), rng.next_unit());
            v + d * scale
        })
        .collect();
    PolygonalLoop::from_vertices(verts)
        .expect("perturbation produced a degenerate loop; reduce the amplitude")
        .normalize_to_unit()
}

/// SplitMix64: the 64-bit mixing generator of Steele, Lea, and Flood.
/// Small, counter-based, and exactly reproducible across platforms.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1)` with 53-bit resolution.
    pub fn next_unit(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// --- curve file format -----------------------------------------------------
//
// A single JSON document {"vertices": [[x,y,z], ...], "closed": true}.
// Only raw vertices are stored; all caches are recomputed on load. The writer
// emits 17 significant digits so values round-trip bit-exactly.

#[derive(Deserialize)]
struct CurveFile {
    vertices: Vec<[f64; 3]>,
    closed: bool,
}

/// Serializes a loop to the curve JSON format with 17 significant digits.
pub fn to_json(loop_: &PolygonalLoop) -> String {
    let mut out = String::from("{\n  \"vertices\": [\n");
    let n = loop_.n();
    for (i, v) in loop_.vertices().iter().enumerate() {
        let sep = if i + 1 < n { "," } else { "" };
        let _ = writeln!(out, "    [{:.16e}, {:.16e}, {:.16e}]{}", v.x, v.y, v.z, sep);
    }
    out.push_str("  ],\n  \"closed\": true\n}\n");
    out
}

/// Parses the curve JSON format, rejecting open curves and anything that
/// fails the loop construction invariants.
pub fn from_json(text: &str) -> Result<PolygonalLoop, CurveError> {
    let file: CurveFile =
        serde_json::from_str(text).map_err(|e| CurveError::Format(e.to_string()))?;
    if !file.closed {
        return Err(CurveError::Format("\"closed\" must be true".into()));
    }
    let verts = file
        .vertices
        .into_iter()
        .map(|[x, y, z]| Point3::new(x, y, z))
        .collect();
    PolygonalLoop::from_vertices(verts)
}

pub fn write_loop(path: &Path, loop_: &PolygonalLoop) -> Result<(), CurveError> {
    std::fs::write(path, to_json(loop_)).map_err(|source| CurveError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_loop(path: &Path) -> Result<PolygonalLoop, CurveError> {
    let text = std::fs::read_to_string(path).map_err(|source| CurveError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text)
}
