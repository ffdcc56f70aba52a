use serde::{Deserialize, Serialize};

use crate::point::{Point, MAX_DIM};

/// A closed ball `B̄(center, radius)` removed from the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub center: Point,
    pub radius: f64,
    pub layer_id: u32,
    /// Distance from the center to the boundary of the host domain.
    pub clearance: f64,
}

/// Two bubbles whose closed balls meet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    /// `|c_a − c_b| − r_a − r_b` (≤ 0).
    pub gap: f64,
}

const LEAF_SIZE: usize = 8;
const NO_CHILD: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node {
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    max_r: f64,
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

/// Bubbles with a static kd-tree over their centers. Each node keeps its
/// bounding box and the largest radius below it, so a node can be skipped
/// once `dist(p, box) − max_r` exceeds the best surface distance so far.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "Vec<Bubble>", into = "Vec<Bubble>")]
pub struct BubbleSet {
    d: usize,
    bubbles: Vec<Bubble>,
    centers: Vec<[f64; MAX_DIM]>,
    radii: Vec<f64>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

impl PartialEq for BubbleSet {
    fn eq(&self, other: &Self) -> bool {
        self.bubbles == other.bubbles
    }
}

impl From<Vec<Bubble>> for BubbleSet {
    fn from(bubbles: Vec<Bubble>) -> Self {
        BubbleSet::new(bubbles)
    }
}

impl From<BubbleSet> for Vec<Bubble> {
    fn from(set: BubbleSet) -> Self {
        set.bubbles
    }
}

impl Default for BubbleSet {
    fn default() -> Self {
        BubbleSet::new(Vec::new())
    }
}

#[inline]
fn dist_sq(a: &[f64; MAX_DIM], b: &[f64; MAX_DIM], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        let t = a[i] - b[i];
        s += t * t;
    }
    s
}

#[inline]
fn box_dist_sq(p: &[f64; MAX_DIM], n: &Node, d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        let t = if p[i] < n.lo[i] {
            n.lo[i] - p[i]
        } else if p[i] > n.hi[i] {
            p[i] - n.hi[i]
        } else {
            0.0
        };
        s += t * t;
    }
    s
}

impl BubbleSet {
    pub fn new(bubbles: Vec<Bubble>) -> Self {
        let d = bubbles.first().map_or(2, |b| b.center.dim());
        let mut ids: Vec<u32> = (0..bubbles.len() as u32).collect();
        let mut nodes = Vec::new();
        if !bubbles.is_empty() {
            build(&bubbles, d, &mut ids, 0, &mut nodes);
        }
        let centers = ids.iter().map(|&i| *bubbles[i as usize].center.raw()).collect();
        let radii = ids.iter().map(|&i| bubbles[i as usize].radius).collect();
        BubbleSet {
            d,
            bubbles,
            centers,
            radii,
            ids,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn get(&self, id: usize) -> &Bubble {
        &self.bubbles[id]
    }

    pub fn into_bubbles(self) -> Vec<Bubble> {
        self.bubbles
    }

    /// Distance from `p` to the nearest bubble surface and that bubble's id.
    /// Negative when `p` is inside a bubble.
    pub fn nearest(&self, p: &Point) -> Option<(f64, usize)> {
        self.nearest_below(p, f64::INFINITY)
    }

    /// As [`BubbleSet::nearest`], but only reports bubbles whose surface is
    /// closer than `cap`.
    pub fn nearest_below(&self, p: &Point, cap: f64) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q = p.raw();
        let d = self.d;
        let mut best = cap;
        let mut best_id = usize::MAX;
        let mut stack: [(u32, f64); 128] = [(0, 0.0); 128];
        let mut top = 1;
        stack[0] = (0, f64::NEG_INFINITY);
        while top > 0 {
            top -= 1;
            let (ni, bound) = stack[top];
            if bound >= best {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.left == NO_CHILD {
                for k in node.start as usize..node.end as usize {
                    let s = dist_sq(q, &self.centers[k], d).sqrt() - self.radii[k];
                    if s < best {
                        best = s;
                        best_id = self.ids[k] as usize;
                    }
                }
                continue;
            }
            let l = &self.nodes[node.left as usize];
            let r = &self.nodes[node.right as usize];
            let bl = box_dist_sq(q, l, d).sqrt() - l.max_r;
            let br = box_dist_sq(q, r, d).sqrt() - r.max_r;
            // push the farther child first so the nearer one is popped next
            let (first, fb, second, sb) = if bl <= br {
                (node.right, br, node.left, bl)
            } else {
                (node.left, bl, node.right, br)
            };
            if fb < best {
                stack[top] = (first, fb);
                top += 1;
            }
            if sb < best {
                stack[top] = (second, sb);
                top += 1;
            }
        }
        (best_id != usize::MAX).then_some((best, best_id))
    }

    /// All pairs of bubbles whose closed balls intersect, up to `limit`.
    pub fn overlaps(&self, limit: usize) -> Vec<Overlap> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let d = self.d;
        let mut stack = Vec::new();
        for k in 0..self.centers.len() {
            let (ck, rk) = (&self.centers[k], self.radii[k]);
            stack.clear();
            stack.push(0u32);
            while let Some(ni) = stack.pop() {
                let node = &self.nodes[ni as usize];
                if box_dist_sq(ck, node, d).sqrt() - node.max_r > rk {
                    continue;
                }
                if node.left != NO_CHILD {
                    stack.push(node.left);
                    stack.push(node.right);
                    continue;
                }
                for j in node.start as usize..node.end as usize {
                    if j <= k {
                        continue;
                    }
                    let gap = dist_sq(ck, &self.centers[j], d).sqrt() - rk - self.radii[j];
                    if gap <= 0.0 {
                        let (a, b) = (self.ids[k] as usize, self.ids[j] as usize);
                        out.push(Overlap {
                            a: a.min(b),
                            b: a.max(b),
                            gap,
                        });
                        if out.len() >= limit {
                            return out;
                        }
                    }
                }
            }
        }
        out.sort_by_key(|o| (o.a, o.b));
        out
    }
}

fn build(bubbles: &[Bubble], d: usize, ids: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let mut lo = [f64::INFINITY; MAX_DIM];
    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
    let mut max_r: f64 = 0.0;
    for &i in ids.iter() {
        let b = &bubbles[i as usize];
        for k in 0..d {
            lo[k] = lo[k].min(b.center.get(k));
            hi[k] = hi[k].max(b.center.get(k));
        }
        max_r = max_r.max(b.radius);
    }
    for k in d..MAX_DIM {
        lo[k] = 0.0;
        hi[k] = 0.0;
    }
    let me = nodes.len() as u32;
    nodes.push(Node {
        lo,
        hi,
        max_r,
        start: offset as u32,
        end: (offset + ids.len()) as u32,
        left: NO_CHILD,
        right: NO_CHILD,
    });
    if ids.len() <= LEAF_SIZE {
        return me;
    }
    let axis = (0..d)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| {
        bubbles[a as usize].center.get(axis).total_cmp(&bubbles[b as usize].center.get(axis))
    });
    let (left_ids, right_ids) = ids.split_at_mut(mid);
    let left = build(bubbles, d, left_ids, offset, nodes);
    let right = build(bubbles, d, right_ids, offset + mid, nodes);
    nodes[me as usize].left = left;
    nodes[me as usize].right = right;
    me
}

/// Reference implementation of [`BubbleSet::nearest`] by a full scan.
pub fn nearest_bubble_brute(bubbles: &[Bubble], p: &Point) -> Option<(f64, usize)> {
    bubbles
        .iter()
        .enumerate()
        .map(|(i, b)| (p.dist(&b.center) - b.radius, i))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bubble(c: &[f64], r: f64) -> Bubble {
        Bubble {
            center: Point::from_slice(c).unwrap(),
            radius: r,
            layer_id: 0,
            clearance: 1.0,
        }
    }

    #[test]
    fn single_bubble() {
        let set = BubbleSet::new(vec![bubble(&[0.0, 0.0], 0.1)]);
        let (dist, id) = set.nearest(&Point::from_slice(&[0.5, 0.0]).unwrap()).unwrap();
        assert_relative_eq!(dist, 0.4, max_relative = 1e-15);
        assert_eq!(id, 0);
        assert!(BubbleSet::default().nearest(&Point::origin(2)).is_none());
    }

    #[test]
    fn tie_has_unique_distance() {
        let set = BubbleSet::new(vec![bubble(&[-1.0, 0.0], 0.2), bubble(&[1.0, 0.0], 0.2)]);
        let (dist, id) = set.nearest(&Point::origin(2)).unwrap();
        assert_relative_eq!(dist, 0.8, max_relative = 1e-15);
        assert!(id < 2);
    }

    #[test]
    fn inside_reports_negative() {
        let set = BubbleSet::new(vec![bubble(&[0.0, 0.0, 0.0], 0.3), bubble(&[1.0, 0.0, 0.0], 0.1)]);
        let (dist, id) = set.nearest(&Point::from_slice(&[0.1, 0.0, 0.0]).unwrap()).unwrap();
        assert!(dist < 0.0);
        assert_eq!(id, 0);
    }

    fn random_set(n: usize, d: usize, seed: u64) -> Vec<Bubble> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                bubble(&c, rng.random_range(1e-5..2e-3))
            })
            .collect()
    }

    #[test]
    fn index_matches_brute_force() {
        for d in [2, 3] {
            let bubbles = random_set(10_000, d, d as u64);
            let set = BubbleSet::new(bubbles.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            for _ in 0..1000 {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.2..1.2)).collect();
                let p = Point::from_slice(&c).unwrap();
                let (di, ii) = set.nearest(&p).unwrap();
                let (db, ib) = nearest_bubble_brute(&bubbles, &p).unwrap();
                assert_eq!(di, db);
                let alt = p.dist(&bubbles[ii].center) - bubbles[ii].radius;
                assert!(ii == ib || alt == db);
                // capped query agrees below the cap and is empty above it
                match set.nearest_below(&p, db + 0.5 * db.abs() + 1e-9) {
                    Some((dc, _)) => assert_eq!(dc, db),
                    None => panic!("capped query missed"),
                }
                assert!(set.nearest_below(&p, db - 1e-3 * db.abs() - 1e-12).is_none());
            }
        }
    }

    #[test]
    fn overlaps_match_brute_force() {
        let bubbles: Vec<Bubble> = random_set(3000, 2, 5)
            .into_iter()
            .map(|mut b| {
                b.radius *= 10.0;
                b
            })
            .collect();
        let set = BubbleSet::new(bubbles.clone());
        let mut brute = Vec::new();
        for i in 0..bubbles.len() {
            for j in i + 1..bubbles.len() {
                if bubbles[i].center.dist(&bubbles[j].center) <= bubbles[i].radius + bubbles[j].radius {
                    brute.push((i, j));
                }
            }
        }
        let found: Vec<(usize, usize)> = set.overlaps(usize::MAX).iter().map(|o| (o.a, o.b)).collect();
        assert!(!brute.is_empty());
        assert_eq!(found, brute);
    }

    #[test]
    fn serde_rebuilds_index() {
        let set = BubbleSet::new(random_set(100, 3, 1));
        let text = serde_json::to_string(&set).unwrap();
        let back: BubbleSet = serde_json::from_str(&text).unwrap();
        assert_eq!(set, back);
        let p = Point::origin(3);
        assert_eq!(set.nearest(&p), back.nearest(&p));
    }
}
