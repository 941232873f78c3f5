//! RRT* over a local occupancy map.
//!
//! Each iteration samples a point (the goal itself with probability
//! `goal_bias`), steers from the nearest tree node toward it by at most
//! `path_resolution`, connects the new node through the cheapest collision-free
//! neighbor within the near radius, and then rewires neighbors through the new
//! node when that shortens their root path. Planning is anytime: every
//! iteration of the budget runs, and the cheapest goal connection seen is
//! returned.

mod spatial;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::ConfigError;
use crate::geometry::{polyline_length, Point2};
use crate::local_window::LocalMap;
use spatial::BucketIndex;

/// Consecutive rejected samples after which the map counts as saturated.
pub const MAX_CONSECUTIVE_REJECTIONS: usize = 10_000;

/// The auto near radius at n = 100 nodes, in multiples of `path_resolution`.
const AUTO_RADIUS_AT_100: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NearRadius {
    /// Shrinking ball `min(γ·sqrt(ln n / n), cap·path_resolution)` with γ set
    /// so the radius at n = 100 equals `3·path_resolution`.
    Auto { cap: f64 },
    Fixed(f64),
}

impl Default for NearRadius {
    fn default() -> Self {
        NearRadius::Auto {
            cap: AUTO_RADIUS_AT_100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub max_iterations: usize,
    /// Maximum steering step, meters.
    pub path_resolution: f64,
    /// Probability of sampling the goal instead of a uniform point.
    pub goal_bias: f64,
    pub near_radius: NearRadius,
    /// A node this close to the goal may close the path with one straight edge.
    pub goal_tolerance: f64,
    pub seed: u64,
    /// Whether tree edges may not touch OuterRim cells.
    pub rim_blocks: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            path_resolution: 1.0,
            goal_bias: 0.1,
            near_radius: NearRadius::default(),
            goal_tolerance: 1.0,
            seed: 0,
            rim_blocks: true,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_iterations < 1 {
            return Err(ConfigError::invalid("planner.max_iterations", "must be >= 1"));
        }
        if !(self.path_resolution > 0.0) {
            return Err(ConfigError::invalid("planner.path_resolution", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(ConfigError::invalid("planner.goal_bias", "must lie in [0, 1)"));
        }
        if !(self.goal_tolerance > 0.0 && self.goal_tolerance <= self.path_resolution) {
            return Err(ConfigError::invalid(
                "planner.goal_tolerance",
                "must lie in (0, path_resolution]",
            ));
        }
        match self.near_radius {
            NearRadius::Fixed(r) if !(r > 0.0) => {
                Err(ConfigError::invalid("planner.near_radius", "must be > 0"))
            }
            NearRadius::Auto { cap } if !(cap > 0.0) => {
                Err(ConfigError::invalid("planner.near_radius", "cap must be > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Near-neighbor radius for a tree of `n` nodes.
    pub fn radius_for(&self, n: usize) -> f64 {
        match self.near_radius {
            NearRadius::Fixed(r) => r,
            NearRadius::Auto { cap } => {
                let n = n.max(2) as f64;
                let gamma = AUTO_RADIUS_AT_100 * self.path_resolution / (100f64.ln() / 100.0).sqrt();
                (gamma * (n.ln() / n).sqrt()).min(cap * self.path_resolution)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub position: Point2,
    pub parent: Option<usize>,
    /// Path length from the root, meters.
    pub cost: f64,
}

/// Search tree with child lists and a spatial index.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    positions: Vec<Point2>,
    children: Vec<Vec<usize>>,
    index: BucketIndex,
}

impl Tree {
    /// Tree rooted at `root`, indexed over `bounds` with buckets of `bucket`
    /// meters.
    pub fn new(root: Point2, bounds: crate::geometry::Rect, bucket: f64) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            positions: Vec::new(),
            children: Vec::new(),
            index: BucketIndex::new(bounds, bucket),
        };
        tree.push(TreeNode {
            position: root,
            parent: None,
            cost: 0.0,
        });
        tree
    }

    fn push(&mut self, node: TreeNode) -> usize {
        let id = self.nodes.len();
        self.index.insert(id, node.position);
        self.positions.push(node.position);
        self.nodes.push(node);
        self.children.push(Vec::new());
        if let Some(p) = node.parent {
            self.children[p].push(id);
        }
        id
    }

    /// Adds a node under `parent` with cost `cost(parent) + |parent → p|`.
    pub fn insert(&mut self, p: Point2, parent: usize) -> usize {
        let cost = self.nodes[parent].cost + self.nodes[parent].position.distance(p);
        self.push(TreeNode {
            position: p,
            parent: Some(parent),
            cost,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn total_cost(&self) -> f64 {
        self.nodes.iter().map(|n| n.cost).sum()
    }

    /// Points from the root to node `i`.
    pub fn path_to(&self, mut i: usize) -> Vec<Point2> {
        let mut out = vec![self.nodes[i].position];
        while let Some(p) = self.nodes[i].parent {
            out.push(self.nodes[p].position);
            i = p;
        }
        out.reverse();
        out
    }

    /// Moves `child` under `new_parent` and recomputes the cost of its whole
    /// subtree from the edge lengths.
    fn reparent(&mut self, child: usize, new_parent: usize) {
        let old_parent = self.nodes[child].parent.expect("root is never rewired");
        if let Some(pos) = self.children[old_parent].iter().position(|&c| c == child) {
            self.children[old_parent].swap_remove(pos);
        }
        self.children[new_parent].push(child);
        self.nodes[child].parent = Some(new_parent);
        let mut stack = vec![child];
        while let Some(d) = stack.pop() {
            let p = self.nodes[d].parent.expect("non-root");
            self.nodes[d].cost = self.nodes[p].cost + self.nodes[p].position.distance(self.nodes[d].position);
            stack.extend_from_slice(&self.children[d]);
        }
    }

    /// Checks root cost, acyclic parent links and the cost recursion.
    pub fn check_consistency(&self, tol: f64) -> Result<(), String> {
        let root = self.nodes.first().ok_or("empty tree")?;
        if root.parent.is_some() || root.cost != 0.0 {
            return Err("root must have no parent and zero cost".into());
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            let p = n.parent.ok_or_else(|| format!("node {i} has no parent"))?;
            let expected = self.nodes[p].cost + self.nodes[p].position.distance(n.position);
            if (n.cost - expected).abs() > tol {
                return Err(format!("node {i}: cost {} != {}", n.cost, expected));
            }
            // Walking up must reach the root in fewer than len steps.
            let mut cur = i;
            let mut steps = 0;
            while let Some(up) = self.nodes[cur].parent {
                cur = up;
                steps += 1;
                if steps > self.nodes.len() {
                    return Err(format!("cycle through node {i}"));
                }
            }
            if cur != 0 {
                return Err(format!("node {i} does not reach the root"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub waypoints: Vec<Point2>,
    /// Sum of segment lengths, meters.
    pub length: f64,
}

impl PlannedPath {
    pub fn new(waypoints: Vec<Point2>) -> Self {
        let length = path_length(&waypoints);
        Self { waypoints, length }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FailureReason {
    #[error("iteration budget exhausted without reaching the goal")]
    BudgetExhausted,
    #[error("map saturated: no free sample found")]
    MapSaturated,
    #[error("goal cell is blocked")]
    GoalBlocked,
    #[error("start cell is blocked")]
    StartBlocked,
    #[error("start or goal lies outside the map")]
    OutsideMap,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("planning failed after {iterations} iterations: {reason}")]
pub struct PlanFailure {
    pub reason: FailureReason,
    pub iterations: usize,
}

/// Everything a plan call produced, for callers that want more than the path.
#[derive(Debug, Clone)]
pub struct PlanReport {
    pub result: Result<PlannedPath, PlanFailure>,
    pub iterations: usize,
    pub tree: Tree,
    /// `(iteration, best length)` whenever the best goal connection improved.
    pub improvements: Vec<(usize, f64)>,
}

pub fn path_length(path: &[Point2]) -> f64 {
    polyline_length(path)
}

/// Draws a planner sample: the goal with probability `goal_bias`, otherwise a
/// uniform point of the map whose cell is not Occupied.
pub fn sample_free<R: Rng + ?Sized>(
    map: &LocalMap,
    goal: Point2,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<Point2, FailureReason> {
    if cfg.goal_bias > 0.0 && rng.random::<f64>() < cfg.goal_bias {
        return Ok(goal);
    }
    let b = map.grid.bounds();
    for _ in 0..MAX_CONSECUTIVE_REJECTIONS {
        let p = Point2::new(
            rng.random_range(b.min.x..b.max.x),
            rng.random_range(b.min.y..b.max.y),
        );
        match map.grid.state_at(p) {
            Ok(s) if !s.is_occupied() => return Ok(p),
            _ => {}
        }
    }
    Err(FailureReason::MapSaturated)
}

/// Lowest-index node closest to `p`.
pub fn nearest(tree: &Tree, p: Point2) -> usize {
    tree.index
        .nearest(&tree.positions, p)
        .expect("tree always holds its root")
}

/// Point at most `path_resolution` from `from` along `from → to`; `None` when
/// the two coincide.
pub fn steer(from: Point2, to: Point2, path_resolution: f64) -> Option<Point2> {
    let d = from.distance(to);
    if d == 0.0 {
        return None;
    }
    if d <= path_resolution {
        Some(to)
    } else {
        Some(from + (to - from) * (path_resolution / d))
    }
}

/// Every node within `radius` of `p` (closed ball), ascending by index.
pub fn near_nodes(tree: &Tree, p: Point2, radius: f64) -> Vec<usize> {
    tree.index.within(&tree.positions, p, radius)
}

/// Cheapest candidate with a collision-free edge to `p`, with the resulting
/// cost. Ties go to the lower index.
pub fn choose_parent(
    tree: &Tree,
    map: &LocalMap,
    candidates: &[usize],
    p: Point2,
    rim_blocks: bool,
) -> Option<(usize, f64)> {
    let mut ranked: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&c| (tree.nodes[c].cost + tree.nodes[c].position.distance(p), c))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked
        .into_iter()
        .find(|&(_, c)| map.grid.segment_clear(tree.nodes[c].position, p, rim_blocks))
        .map(|(cost, c)| (c, cost))
}

/// Reparents each candidate through `new_index` when that is strictly cheaper
/// and the edge is free. Returns how many nodes were rewired.
pub fn rewire(tree: &mut Tree, map: &LocalMap, new_index: usize, candidates: &[usize], rim_blocks: bool) -> usize {
    let new = tree.nodes[new_index];
    let mut rewired = 0;
    for &c in candidates {
        if c == new_index || Some(c) == new.parent || tree.nodes[c].parent.is_none() {
            continue;
        }
        let through = new.cost + new.position.distance(tree.nodes[c].position);
        if through < tree.nodes[c].cost
            && !is_ancestor(tree, c, new_index)
            && map.grid.segment_clear(new.position, tree.nodes[c].position, rim_blocks)
        {
            tree.reparent(c, new_index);
            rewired += 1;
        }
    }
    rewired
}

/// Whether `a` lies on the root path of `b`.
fn is_ancestor(tree: &Tree, a: usize, mut b: usize) -> bool {
    while let Some(p) = tree.nodes[b].parent {
        if p == a {
            return true;
        }
        b = p;
    }
    false
}

/// Runs the full RRT* loop and returns the cheapest path found.
pub fn plan(map: &LocalMap, start: Point2, goal: Point2, cfg: &PlannerConfig) -> Result<PlannedPath, PlanFailure> {
    plan_with_report(map, start, goal, cfg).result
}

pub fn plan_with_report(map: &LocalMap, start: Point2, goal: Point2, cfg: &PlannerConfig) -> PlanReport {
    let grid = &map.grid;
    let bucket = cfg.path_resolution.max(grid.cell_size());
    let mut tree = Tree::new(start, grid.bounds(), bucket);
    let fail = |reason, iterations, tree| PlanReport {
        result: Err(PlanFailure { reason, iterations }),
        iterations,
        tree,
        improvements: Vec::new(),
    };

    let (start_state, goal_state) = match (grid.state_at(start), grid.state_at(goal)) {
        (Ok(s), Ok(g)) => (s, g),
        _ => return fail(FailureReason::OutsideMap, 0, tree),
    };
    if start_state.is_occupied() {
        return fail(FailureReason::StartBlocked, 0, tree);
    }
    if grid.blocks(goal_state, cfg.rim_blocks) {
        return fail(FailureReason::GoalBlocked, 0, tree);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Nodes close enough to the goal to finish with one free edge.
    let mut goal_links: Vec<usize> = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    let mut improvements = Vec::new();

    let consider_goal_link = |tree: &Tree, id: usize, goal_links: &mut Vec<usize>| {
        let p = tree.nodes[id].position;
        if p.distance(goal) <= cfg.goal_tolerance && grid.segment_clear(p, goal, cfg.rim_blocks) {
            goal_links.push(id);
        }
    };
    consider_goal_link(&tree, 0, &mut goal_links);

    let mut iterations = 0;
    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let sample = match sample_free(map, goal, cfg, &mut rng) {
            Ok(s) => s,
            Err(reason) => return fail(reason, iterations, tree),
        };
        let near_id = nearest(&tree, sample);
        let Some(new_p) = steer(tree.nodes[near_id].position, sample, cfg.path_resolution) else {
            continue;
        };
        let radius = cfg.radius_for(tree.len() + 1);
        let mut candidates = near_nodes(&tree, new_p, radius);
        if candidates.is_empty() {
            candidates.push(near_id);
        }
        let Some((parent, _)) = choose_parent(&tree, map, &candidates, new_p, cfg.rim_blocks) else {
            continue;
        };
        let new_id = tree.insert(new_p, parent);
        rewire(&mut tree, map, new_id, &candidates, cfg.rim_blocks);
        consider_goal_link(&tree, new_id, &mut goal_links);

        // Rewiring can lower the cost of existing goal links, so rescan them.
        let current = goal_links
            .iter()
            .map(|&g| (tree.nodes[g].cost + tree.nodes[g].position.distance(goal), g))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((c, g)) = current {
            if best.is_none_or(|(bc, _)| c < bc) {
                improvements.push((iterations, c));
            }
            best = Some((c, g));
        }
    }

    match best {
        Some((_, g)) => {
            let mut waypoints = tree.path_to(g);
            if waypoints.last().is_none_or(|last| last.distance(goal) > 0.0) {
                waypoints.push(goal);
            }
            PlanReport {
                result: Ok(PlannedPath::new(waypoints)),
                iterations,
                tree,
                improvements,
            }
        }
        None => fail(FailureReason::BudgetExhausted, iterations, tree),
    }
}
