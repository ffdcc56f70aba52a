//! Finite point sets on spheres with covering radius at most `β` and
//! pairwise separation at least `2β/3`.
//!
//! Three designs are used:
//!
//! * `EqualAngle` in the plane, `M = ⌈πR/β⌉` points, measured in closed form;
//! * `Greedy` for `d ≥ 3`: a maximal `2β/3`-separated subset of a dense
//!   candidate set (Fibonacci lattice for `d = 3`, Gaussian directions above);
//! * `CubedSphere` for `d = 3` when the greedy candidate set would be too
//!   large. Its measurements are evaluated exactly at the extremal cells.
//!
//! Only `Greedy` stores its points; the other two can have far more points
//! than fit in memory and are generated on demand.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{check_dim, Point, MAX_DIM};

/// Candidate count of the greedy design is `GREEDY_OVERSAMPLE·(R/β)^(d−1)`.
pub const GREEDY_OVERSAMPLE: f64 = 100.0;
/// Greedy designs refuse to run above this many candidates.
pub const GREEDY_CANDIDATE_LIMIT: f64 = 2e7;
/// Above this many candidates `d = 3` switches to the cubed sphere.
pub const CUBED_SWITCH: f64 = 2e6;
/// Angular spacing of the cubed sphere at a face center, in units of `β/R`.
pub const CUBED_SPACING: f64 = 1.15;
/// Samples used to measure the covering radius of greedy designs.
pub const COVERING_SAMPLES: usize = 100_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointDesign {
    EqualAngle {
        #[serde(with = "crate::serde_u128")]
        count: u128,
    },
    CubedSphere {
        n: u64,
    },
    Greedy {
        seed: u64,
        #[serde(skip)]
        points: Arc<Vec<Point>>,
    },
}

impl PartialEq for PointDesign {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PointDesign::EqualAngle { count: a }, PointDesign::EqualAngle { count: b }) => a == b,
            (PointDesign::CubedSphere { n: a }, PointDesign::CubedSphere { n: b }) => a == b,
            (
                PointDesign::Greedy { seed: a, points: pa },
                PointDesign::Greedy { seed: b, points: pb },
            ) => a == b && pa == pb,
            _ => false,
        }
    }
}

/// Which construction to use; `Auto` picks by dimension and size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignStrategy {
    Auto,
    EqualAngle,
    Greedy,
    CubedSphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePointSet {
    pub radius: f64,
    pub d: usize,
    pub beta: f64,
    pub design: PointDesign,
    #[serde(with = "crate::serde_u128")]
    pub count: u128,
    pub covering_radius: f64,
    pub min_pairwise_distance: f64,
}

impl SpherePointSet {
    /// Whether the stored measurements meet covering `≤ β` and packing
    /// `≥ 2β/3`.
    pub fn satisfies_invariants(&self) -> bool {
        self.covering_radius <= self.beta && self.min_pairwise_distance >= 2.0 * self.beta / 3.0
    }

    /// Rebuilds the stored points of a greedy design after deserialization.
    pub fn restore(&mut self) -> Result<()> {
        if let PointDesign::Greedy { seed, points } = &self.design {
            if points.is_empty() && self.count > 0 {
                let fresh = design_sphere_points_with(
                    self.radius,
                    self.beta,
                    self.d,
                    *seed,
                    DesignStrategy::Greedy,
                )?;
                if fresh.count != self.count {
                    return Err(Error::Invariant(format!(
                        "regenerated greedy design has {} points, file says {}",
                        fresh.count, self.count
                    )));
                }
                self.design = fresh.design;
            }
        }
        Ok(())
    }

    /// All points centered at the origin, or an error when there are more
    /// than `limit`.
    pub fn materialize(&self, limit: u128) -> Result<Vec<Point>> {
        if self.count > limit {
            return Err(Error::infeasible(format!(
                "design with {} points exceeds the materialization limit {limit}",
                self.count
            )));
        }
        let r = self.radius;
        let d = self.d;
        Ok(match &self.design {
            PointDesign::EqualAngle { count } => {
                let m = *count as usize;
                (0..m)
                    .map(|i| {
                        let a = 2.0 * PI * i as f64 / m as f64;
                        Point::padded(&[r * a.cos(), r * a.sin()], d)
                    })
                    .collect()
            }
            PointDesign::CubedSphere { n } => cubed_points(*n as usize)
                .into_iter()
                .map(|p| p * r)
                .collect(),
            PointDesign::Greedy { points, .. } => points.as_ref().clone(),
        })
    }
}

/// Measured cardinality ratios and the admissible band for them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardinalityCheck {
    /// `#X · β^(d−1)`.
    pub count_beta: f64,
    /// `#X · φ(r) · ρ`, with `φ(r)` implied by the layer relation
    /// `φ(r)ρ = β^(d−1)`.
    pub capacity_product: f64,
    pub band_low: f64,
    pub band_high: f64,
    pub within_band: bool,
}

pub fn cardinality_check(ps: &SpherePointSet, rho: f64) -> CardinalityCheck {
    let b = ps.beta.powi(ps.d as i32 - 1);
    let count = ps.count as f64;
    let count_beta = count * b;
    let phi = b / rho;
    let capacity_product = count * phi * rho;
    let (band_low, band_high) = cardinality_band(ps.radius, ps.beta, ps.d);
    CardinalityCheck {
        count_beta,
        capacity_product,
        band_low,
        band_high,
        within_band: count_beta >= band_low && count_beta <= band_high,
    }
}

/// Band for `#X·β^(d−1)` forced by the two invariants: caps of chordal radius
/// `β` must cover the sphere and caps of chordal radius `β/3` are disjoint.
pub fn cardinality_band(radius: f64, beta: f64, d: usize) -> (f64, f64) {
    let area = sphere_area(radius, d);
    let b = beta.powi(d as i32 - 1);
    let low = area / cap_area(radius, beta, d) * b;
    let high = area / cap_area(radius, beta / 3.0, d) * b;
    (low, high)
}

fn sphere_area(radius: f64, d: usize) -> f64 {
    match d {
        2 => 2.0 * PI * radius,
        3 => 4.0 * PI * radius * radius,
        4 => 2.0 * PI * PI * radius.powi(3),
        _ => 8.0 / 3.0 * PI * PI * radius.powi(4),
    }
}

/// Area of the set of sphere points within chordal distance `t` of a pole.
fn cap_area(radius: f64, t: f64, d: usize) -> f64 {
    let t = t.min(2.0 * radius);
    match d {
        2 => 4.0 * radius * (t / (2.0 * radius)).asin(),
        // Archimedes: the cap with chordal radius t has area πt²
        3 => PI * t * t,
        // small-cap approximation by the flat ball of dimension d−1
        4 => 4.0 / 3.0 * PI * t.powi(3),
        _ => 0.5 * PI * PI * t.powi(4),
    }
}

/// Exact point count for designs that depend only on `(R, β, d)`, and an
/// upper bound (from the packing cap argument) for greedy ones.
pub fn design_count_upper(radius: f64, beta: f64, d: usize) -> f64 {
    match pick_strategy(radius, beta, d) {
        DesignStrategy::EqualAngle => equal_angle_count(radius, beta) as f64,
        DesignStrategy::CubedSphere => {
            let n = cubed_n(radius, beta) as f64;
            6.0 * n * n
        }
        _ => (sphere_area(radius, d) / cap_area(radius, beta / 3.0, d)).floor(),
    }
}

fn pick_strategy(radius: f64, beta: f64, d: usize) -> DesignStrategy {
    match d {
        2 => DesignStrategy::EqualAngle,
        3 if GREEDY_OVERSAMPLE * (radius / beta).powi(2) > CUBED_SWITCH => {
            DesignStrategy::CubedSphere
        }
        _ => DesignStrategy::Greedy,
    }
}

pub fn design_sphere_points(radius: f64, beta: f64, d: usize, seed: u64) -> Result<SpherePointSet> {
    design_sphere_points_with(radius, beta, d, seed, DesignStrategy::Auto)
}

pub fn design_sphere_points_with(
    radius: f64,
    beta: f64,
    d: usize,
    seed: u64,
    strategy: DesignStrategy,
) -> Result<SpherePointSet> {
    check_dim(d)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("sphere radius must be > 0, got {radius}")));
    }
    if !(beta > 0.0 && beta < radius) {
        return Err(Error::invalid(format!(
            "need 0 < β < R, got β={beta}, R={radius}"
        )));
    }
    let strategy = match strategy {
        DesignStrategy::Auto => pick_strategy(radius, beta, d),
        s => s,
    };
    let ps = match (strategy, d) {
        (DesignStrategy::EqualAngle, 2) => equal_angle(radius, beta)?,
        (DesignStrategy::CubedSphere, 3) => cubed_sphere(radius, beta)?,
        (DesignStrategy::Greedy, _) if d >= 3 => greedy(radius, beta, d, seed)?,
        (s, _) => {
            return Err(Error::invalid(format!(
                "design {s:?} is not available in dimension {d}"
            )))
        }
    };
    if !ps.satisfies_invariants() {
        return Err(Error::Invariant(format!(
            "sphere design R={radius} β={beta} d={d}: covering {} (max {beta}), separation {} (min {})",
            ps.covering_radius,
            ps.min_pairwise_distance,
            2.0 * beta / 3.0
        )));
    }
    Ok(ps)
}

fn equal_angle_count(radius: f64, beta: f64) -> u128 {
    ((PI * radius / beta).ceil() as u128).max(3)
}

fn equal_angle_measure(radius: f64, m: u128) -> (f64, f64) {
    let m = m as f64;
    (2.0 * radius * (PI / (2.0 * m)).sin(), 2.0 * radius * (PI / m).sin())
}

fn equal_angle(radius: f64, beta: f64) -> Result<SpherePointSet> {
    let mut m = equal_angle_count(radius, beta);
    let (mut cover, mut sep) = equal_angle_measure(radius, m);
    while cover > beta {
        m += 1;
        (cover, sep) = equal_angle_measure(radius, m);
    }
    Ok(SpherePointSet {
        radius,
        d: 2,
        beta,
        design: PointDesign::EqualAngle { count: m },
        count: m,
        covering_radius: cover,
        min_pairwise_distance: sep,
    })
}

// ---------------------------------------------------------------------------
// Cubed sphere

fn cubed_n(radius: f64, beta: f64) -> u64 {
    ((PI * radius / (2.0 * CUBED_SPACING * beta)).ceil() as u64).max(1)
}

fn cubed_sphere(radius: f64, beta: f64) -> Result<SpherePointSet> {
    let n = cubed_n(radius, beta);
    let (cover, sep) = cubed_measure(n);
    let count = 6 * n as u128 * n as u128;
    Ok(SpherePointSet {
        radius,
        d: 3,
        beta,
        design: PointDesign::CubedSphere { n },
        count,
        covering_radius: cover * radius,
        min_pairwise_distance: sep * radius,
    })
}

/// Face-local angular coordinate `−π/4 + kΔ/2` for a half-step index `k`.
struct FaceGrid {
    n: u64,
    half: f64,
}

impl FaceGrid {
    fn new(n: u64) -> Self {
        FaceGrid {
            n,
            half: PI / (4.0 * n as f64),
        }
    }

    fn angle(&self, k: u64) -> f64 {
        -FRAC_PI_4 + k as f64 * self.half
    }

    fn tan(&self, k: u64) -> f64 {
        self.angle(k).tan()
    }

    /// `tan(angle(k2)) − tan(angle(k1))` without cancellation.
    fn tan_diff(&self, k1: u64, k2: u64) -> f64 {
        let (a1, a2) = (self.angle(k1), self.angle(k2));
        let diff = (k2 as f64 - k1 as f64) * self.half;
        diff.sin() / (a1.cos() * a2.cos())
    }

    /// Unit-sphere chord between the projections of `(1, tan a, tan b)` for
    /// half-step indices `(ka1, kb1)` and `(ka2, kb2)` on one face.
    fn chord_same_face(&self, ka1: u64, kb1: u64, ka2: u64, kb2: u64) -> f64 {
        let (t1, s1) = (self.tan(ka1), self.tan(kb1));
        let (t2, s2) = (self.tan(ka2), self.tan(kb2));
        let dt = self.tan_diff(ka1, ka2);
        let ds = self.tan_diff(kb1, kb2);
        let cross = [t1 * ds - s1 * dt, -ds, dt];
        let dot = 1.0 + t1 * t2 + s1 * s2;
        chord_from(cross, dot)
    }

    /// Chord between the cell of face `+x` next to the edge `x = y` at edge
    /// position `kb1`, and the mirrored cell of face `+y` at `kb2`.
    fn chord_across_edge(&self, kb1: u64, kb2: u64) -> f64 {
        let k = 2 * self.n - 1;
        let t = self.tan(k);
        // 1 − tan(π/4 − Δ/2)
        let h = self.half.tan();
        let one_minus_t = 2.0 * h / (1.0 + h);
        let (s1, s2) = (self.tan(kb1), self.tan(kb2));
        let ds = self.tan_diff(kb1, kb2);
        // p = (1, t, s1), q = (t, 1, s2)
        let cross = [
            t * ds - s1 * one_minus_t,
            -ds - s1 * one_minus_t,
            one_minus_t * (1.0 + t),
        ];
        let dot = 2.0 * t + s1 * s2;
        chord_from(cross, dot)
    }

    /// Indices where the extremes occur: near the edges and the middle.
    fn candidates(&self) -> Vec<u64> {
        let n = self.n;
        if n <= 64 {
            return (0..n).collect();
        }
        let mid = n / 2;
        let mut v = vec![0, 1, 2, 3, mid - 2, mid - 1, mid, mid + 1, n - 4, n - 3, n - 2, n - 1];
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn chord_from(cross: [f64; 3], dot: f64) -> f64 {
    let c = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let theta = c.atan2(dot);
    2.0 * (0.5 * theta).sin()
}

/// Unit-sphere covering radius and minimum separation of the `n×n` cubed
/// sphere, evaluated at the candidate cells.
fn cubed_measure(n: u64) -> (f64, f64) {
    let g = FaceGrid::new(n);
    let cand = g.candidates();
    let mut cover: f64 = 0.0;
    let mut sep = f64::INFINITY;
    for &i in &cand {
        for &j in &cand {
            let (ci, cj) = (2 * i + 1, 2 * j + 1);
            for (ki, kj) in [(2 * i, 2 * j), (2 * i + 2, 2 * j), (2 * i, 2 * j + 2), (2 * i + 2, 2 * j + 2)] {
                cover = cover.max(g.chord_same_face(ci, cj, ki, kj));
            }
            // the separation pattern is symmetric in the two face axes
            if i + 1 < n {
                sep = sep.min(g.chord_same_face(ci, cj, ci + 2, cj));
            }
            if i + 1 < n && j + 1 < n {
                sep = sep.min(g.chord_same_face(ci, cj, ci + 2, cj + 2));
            }
            if i > 0 && j + 1 < n {
                sep = sep.min(g.chord_same_face(ci, cj, ci - 2, cj + 2));
            }
        }
        let ci = 2 * i + 1;
        sep = sep.min(g.chord_across_edge(ci, ci));
        if i + 1 < n {
            sep = sep.min(g.chord_across_edge(ci, ci + 2));
            sep = sep.min(g.chord_across_edge(ci + 2, ci));
        }
    }
    if n == 1 {
        // six face centers
        sep = sep.min(2f64.sqrt());
    }
    (cover, sep)
}

/// Unit vectors of the `n×n` cubed sphere, face by face.
fn cubed_points(n: usize) -> Vec<Point> {
    let g = FaceGrid::new(n as u64);
    let tans: Vec<f64> = (0..n).map(|i| g.tan(2 * i as u64 + 1)).collect();
    let mut out = Vec::with_capacity(6 * n * n);
    for face in 0..6 {
        let axis = face / 2;
        let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
        for &ta in &tans {
            for &tb in &tans {
                let mut v = [0.0; 3];
                v[axis] = sign;
                v[(axis + 1) % 3] = ta;
                v[(axis + 2) % 3] = tb;
                let p = Point::padded(&v, 3);
                out.push(p * (1.0 / p.norm()));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Greedy maximal separated subsets

/// Uniform grid hash over points of dimension ≤ `MAX_DIM`.
pub(crate) struct GridHash {
    cell: f64,
    d: usize,
    cells: HashMap<[i32; MAX_DIM], Vec<u32>>,
}

impl GridHash {
    pub(crate) fn new(cell: f64, d: usize) -> Self {
        GridHash {
            cell,
            d,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Point) -> [i32; MAX_DIM] {
        let mut k = [0i32; MAX_DIM];
        for (i, slot) in k.iter_mut().enumerate().take(self.d) {
            *slot = (p.get(i) / self.cell).floor() as i32;
        }
        k
    }

    pub(crate) fn insert(&mut self, p: &Point, id: u32) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }

    /// Calls `f` with every id stored within `rings` cells of `p`.
    pub(crate) fn for_each_near(&self, p: &Point, rings: i32, mut f: impl FnMut(u32)) {
        let base = self.key(p);
        let span = (2 * rings + 1) as usize;
        let total = span.pow(self.d as u32);
        for code in 0..total {
            let mut k = base;
            let mut c = code;
            for slot in k.iter_mut().take(self.d) {
                *slot += (c % span) as i32 - rings;
                c /= span;
            }
            if let Some(ids) = self.cells.get(&k) {
                ids.iter().for_each(|&id| f(id));
            }
        }
    }
}

pub(crate) fn fibonacci_sphere(count: usize) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * i as f64;
            Point::padded(&[rho * a.cos(), rho * a.sin(), z], 3)
        })
        .collect()
}

pub(crate) fn gaussian_direction(rng: &mut ChaCha8Rng, d: usize) -> Point {
    loop {
        let mut p = Point::origin(d);
        for i in 0..d {
            p.set(i, StandardNormal.sample(rng));
        }
        if let Some(u) = p.normalized() {
            return u;
        }
    }
}

fn greedy(radius: f64, beta: f64, d: usize, seed: u64) -> Result<SpherePointSet> {
    let ncand = (GREEDY_OVERSAMPLE * (radius / beta).powi(d as i32 - 1)).ceil();
    if ncand > GREEDY_CANDIDATE_LIMIT {
        return Err(Error::infeasible(format!(
            "greedy design needs {ncand:.3e} candidates (limit {GREEDY_CANDIDATE_LIMIT:.0e})"
        )));
    }
    let ncand = ncand as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cand: Vec<Point> = if d == 3 {
        fibonacci_sphere(ncand)
    } else {
        (0..ncand).map(|_| gaussian_direction(&mut rng, d)).collect()
    };
    cand.shuffle(&mut rng);

    let sep = 2.0 * beta / 3.0;
    let sep_sq = sep * sep;
    let mut grid = GridHash::new(sep, d);
    let mut points: Vec<Point> = Vec::new();
    for c in cand {
        let p = c * radius;
        let mut ok = true;
        grid.for_each_near(&p, 1, |id| {
            if ok && points[id as usize].dist_sq(&p) < sep_sq {
                ok = false;
            }
        });
        if ok {
            grid.insert(&p, points.len() as u32);
            points.push(p);
        }
    }

    let min_pairwise_distance = min_separation(&points, beta, d);
    let covering_radius = measure_covering(&points, radius, beta, d, seed ^ 0x9e37_79b9_7f4a_7c15);
    Ok(SpherePointSet {
        radius,
        d,
        beta,
        count: points.len() as u128,
        design: PointDesign::Greedy {
            seed,
            points: Arc::new(points),
        },
        covering_radius,
        min_pairwise_distance,
    })
}

/// Minimum pairwise distance, exact whenever it is below `β`; otherwise `β`
/// (which is then a lower bound).
pub fn min_separation(points: &[Point], beta: f64, d: usize) -> f64 {
    let mut grid = GridHash::new(beta, d);
    for (i, p) in points.iter().enumerate() {
        grid.insert(p, i as u32);
    }
    let mut best = beta * beta;
    for (i, p) in points.iter().enumerate() {
        grid.for_each_near(p, 1, |j| {
            if j as usize > i {
                best = best.min(points[j as usize].dist_sq(p));
            }
        });
    }
    best.sqrt()
}

/// Largest distance from a random sphere sample to its nearest design point.
pub fn measure_covering(points: &[Point], radius: f64, beta: f64, d: usize, seed: u64) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let mut grid = GridHash::new(beta, d);
    for (i, p) in points.iter().enumerate() {
        grid.insert(p, i as u32);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..COVERING_SAMPLES {
        let s = gaussian_direction(&mut rng, d) * radius;
        let mut near = f64::INFINITY;
        grid.for_each_near(&s, 1, |j| near = near.min(points[j as usize].dist_sq(&s)));
        let near = if near.is_finite() {
            near.sqrt()
        } else {
            // no point within one cell: fall back to a scan
            points.iter().map(|p| p.dist(&s)).fold(f64::INFINITY, f64::min)
        };
        worst = worst.max(near);
    }
    worst
}
