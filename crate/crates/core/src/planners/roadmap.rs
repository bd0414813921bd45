use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use super::bias::{SamplingBias, TargetDistribution};
use super::PlannerConfig;
use crate::geom::{CollisionChecker, Environment, Point2};
use crate::robot::RobotSpec;
use crate::seed::{rng_from_seed, stage_seed};

const SAMPLE_ATTEMPTS_PER_NODE: usize = 50;

/// Straight-line roadmap over free space with shortest-path costs to the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Roadmap {
    pub nodes: Vec<Point2>,
    pub edges: Vec<Vec<(u32, f64)>>,
    pub dist_to_goal: Vec<f64>,
    /// Next node on a shortest path toward the goal.
    pub next: Vec<Option<u32>>,
}

impl Roadmap {
    pub const START: usize = 0;
    pub const GOAL: usize = 1;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn connected(&self) -> bool {
        self.dist_to_goal[Self::START].is_finite()
    }

    /// Node sequence start to goal, if the two are connected.
    pub fn shortest_path(&self) -> Option<Vec<usize>> {
        if !self.connected() {
            return None;
        }
        let mut path = vec![Self::START];
        let mut i = Self::START;
        while let Some(n) = self.next[i] {
            i = n as usize;
            path.push(i);
        }
        Some(path)
    }

    /// Index of the roadmap node closest to `p` (lowest index on ties).
    pub fn nearest_node(&self, p: Point2) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, q) in self.nodes.iter().enumerate() {
            let d = q.dist_sq(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn fill_distances(&mut self) {
        let n = self.nodes.len();
        self.dist_to_goal = vec![f64::INFINITY; n];
        self.next = vec![None; n];
        let mut heap = BinaryHeap::new();
        self.dist_to_goal[Self::GOAL] = 0.0;
        heap.push(Reverse(HeapItem(0.0, Self::GOAL)));
        while let Some(Reverse(HeapItem(d, i))) = heap.pop() {
            if d > self.dist_to_goal[i] {
                continue;
            }
            for &(j, w) in &self.edges[i] {
                let j = j as usize;
                let nd = d + w;
                if nd < self.dist_to_goal[j] {
                    self.dist_to_goal[j] = nd;
                    self.next[j] = Some(i as u32);
                    heap.push(Reverse(HeapItem(nd, j)));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Samples `cfg.roadmap_nodes` collision-free vertices, a `roadmap_bias_share`
/// of them from the biased distribution when a bias is given and the rest
/// uniformly. Each vertex is linked by collision-free segments to its nearest
/// uniform and nearest biased vertices, then Dijkstra runs from the goal.
pub fn build_roadmap(
    env: &Environment,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
    bias: Option<&SamplingBias>,
) -> Roadmap {
    let checker = CollisionChecker::new(env);
    build_roadmap_with(&checker, spec, cfg, bias)
}

/// Uniform buckets over a fixed point set for exact k-nearest queries.
struct PointGrid<'a> {
    points: &'a [Point2],
    origin: Point2,
    cell: f64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
}

impl<'a> PointGrid<'a> {
    fn new(points: &'a [Point2], lo: Point2, hi: Point2) -> Self {
        let area = ((hi.x - lo.x) * (hi.y - lo.y)).max(1e-9);
        let cell = (2.0 * area / points.len().max(1) as f64).sqrt();
        let nx = (((hi.x - lo.x) / cell).ceil() as i64).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as i64).max(1);
        let mut grid = Self {
            points,
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); (nx * ny) as usize],
        };
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = grid.cell_of(*p);
            grid.buckets[(cy * nx + cx) as usize].push(i as u32);
        }
        grid
    }

    fn cell_of(&self, p: Point2) -> (i64, i64) {
        let cx = ((p.x - self.origin.x) / self.cell).floor() as i64;
        let cy = ((p.y - self.origin.y) / self.cell).floor() as i64;
        (cx.clamp(0, self.nx - 1), cy.clamp(0, self.ny - 1))
    }

    /// The `k` points closest to `q` as `(squared distance, index)`, ordered by
    /// distance then index, leaving out index `skip`.
    fn k_nearest(&self, q: Point2, k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        let mut found: Vec<(f64, usize)> = Vec::new();
        if k == 0 {
            return found;
        }
        let (tx, ty) = self.cell_of(q);
        let fx = (q.x - self.origin.x) / self.cell;
        let fy = (q.y - self.origin.y) / self.cell;
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        for r in 0..=self.nx.max(self.ny) {
            if found.len() >= k {
                // every point in ring r lies at least this far from q
                let gap_x = ((tx + r) as f64 - fx).min(fx - (tx - r + 1) as f64);
                let gap_y = ((ty + r) as f64 - fy).min(fy - (ty - r + 1) as f64);
                let gap = gap_x.min(gap_y).max(0.0) * self.cell;
                found.sort_by(by_key);
                found.truncate(k);
                if gap * gap > found[k - 1].0 {
                    break;
                }
            }
            for cy in (ty - r)..=(ty + r) {
                for cx in (tx - r)..=(tx + r) {
                    if (cx - tx).abs() != r && (cy - ty).abs() != r {
                        continue;
                    }
                    if cx < 0 || cy < 0 || cx >= self.nx || cy >= self.ny {
                        continue;
                    }
                    for &j in &self.buckets[(cy * self.nx + cx) as usize] {
                        let j = j as usize;
                        if Some(j) != skip {
                            found.push((q.dist_sq(self.points[j]), j));
                        }
                    }
                }
            }
        }
        found.sort_by(by_key);
        found.truncate(k);
        found
    }
}

fn add_free_samples(
    checker: &CollisionChecker<'_>,
    radius: f64,
    count: usize,
    nodes: &mut Vec<Point2>,
    mut draw: impl FnMut() -> Point2,
) {
    let goal = nodes.len() + count;
    for _ in 0..count * SAMPLE_ATTEMPTS_PER_NODE {
        if nodes.len() == goal {
            break;
        }
        let p = draw();
        if !checker.point_in_collision(p, radius) {
            nodes.push(p);
        }
    }
}

pub(crate) fn build_roadmap_with(
    checker: &CollisionChecker<'_>,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
    bias: Option<&SamplingBias>,
) -> Roadmap {
    let env = checker.env();
    let r = spec.radius;
    let mut nodes = vec![env.start, env.goal];
    let uniform = TargetDistribution::new(env, cfg.goal_bias, None);
    let mut rng = rng_from_seed(stage_seed(cfg.seed, "roadmap"));
    let n_biased = match bias {
        Some(_) => (cfg.roadmap_nodes as f64 * cfg.roadmap_bias_share).round() as usize,
        None => 0,
    };
    add_free_samples(checker, r, cfg.roadmap_nodes - n_biased, &mut nodes, || uniform.sample_roadmap(&mut rng).0);
    let split = nodes.len();
    if let Some(b) = bias {
        let biased = TargetDistribution::new(env, cfg.goal_bias, Some(b));
        let mut rng = rng_from_seed(stage_seed(cfg.seed, "roadmap/biased"));
        add_free_samples(checker, r, n_biased, &mut nodes, || biased.sample_roadmap(&mut rng).0);
    }
    let n = nodes.len();
    let mut edges: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut checked: HashSet<(u32, u32)> = HashSet::new();
    // each vertex links to its nearest uniform and its nearest biased vertices
    for block in [0..split, split..n] {
        let grid = PointGrid::new(&nodes[block.clone()], env.bounds.min, env.bounds.max);
        for i in 0..n {
            for (_, j) in grid.k_nearest(nodes[i], cfg.roadmap_neighbors, Some(i.wrapping_sub(block.start))) {
                let j = j + block.start;
                let key = (i.min(j) as u32, i.max(j) as u32);
                if !checked.insert(key) || checker.segment_in_collision(nodes[i], nodes[j], r) {
                    continue;
                }
                let w = nodes[i].dist(nodes[j]);
                edges[i].push((j as u32, w));
                edges[j].push((i as u32, w));
            }
        }
    }
    let mut rm = Roadmap {
        nodes,
        edges,
        dist_to_goal: Vec::new(),
        next: Vec::new(),
    };
    rm.fill_distances();
    rm
}
