use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MotionError;
use crate::geom::{intersects, transform, Aabb, ConvexPolygon, Pose2, EPS};
use crate::par::{self, Parallelism};

#[derive(Debug, Clone)]
struct Edge {
    a: usize,
    b: usize,
    length: f64,
    sweep: ConvexPolygon,
    bbox: Aabb,
}

/// Undirected roadmap over collision-free base poses. Edges are checked
/// against the static blockers at build time; movable obstacles are checked
/// lazily per query.
#[derive(Debug, Clone)]
pub struct Roadmap {
    nodes: Vec<Pose2>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    footprint: ConvexPolygon,
    statics: Vec<ConvexPolygon>,
    k: usize,
}

fn segment_sweep(footprint: &ConvexPolygon, a: &Pose2, b: &Pose2) -> ConvexPolygon {
    let mut pts = transform(footprint, a).vertices().to_vec();
    pts.extend_from_slice(transform(footprint, b).vertices());
    ConvexPolygon::hull(&pts).expect("footprint hull has at least 3 vertices")
}

fn hits_any(poly: &ConvexPolygon, bbox: &Aabb, obstacles: &[ConvexPolygon]) -> bool {
    obstacles
        .iter()
        .any(|o| bbox.overlaps(&o.aabb()) && intersects(poly, o))
}

#[derive(PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, ties on lower node index
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Roadmap {
    /// Samples `n_samples` collision-free poses inside `bounds`, adds the
    /// `anchors` (deduplicated, kept only when collision-free), connects every
    /// node to its `k` nearest neighbours, and adds the `forced` anchor pairs
    /// as edges when their sweep is clear. Candidate edges are swept under
    /// `mode`; the result does not depend on it.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        footprint: &ConvexPolygon,
        statics: &[ConvexPolygon],
        bounds: [crate::geom::Vec2; 2],
        anchors: &[Pose2],
        forced: &[(Pose2, Pose2)],
        n_samples: usize,
        k: usize,
        seed: u64,
        mode: Parallelism,
    ) -> Result<Roadmap, MotionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let free = |p: &Pose2| {
            let placed = transform(footprint, p);
            !hits_any(&placed, &placed.aabb(), statics)
        };
        let mut nodes: Vec<Pose2> = Vec::with_capacity(n_samples + anchors.len());
        let max_attempts = n_samples.max(1) * 200;
        let mut attempts = 0;
        let [lo, hi] = bounds;
        if !(hi.x > lo.x && hi.y > lo.y) {
            return Err(MotionError::BadBounds);
        }
        while nodes.len() < n_samples && attempts < max_attempts {
            attempts += 1;
            let p = Pose2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y), 0.0);
            if free(&p) {
                nodes.push(p);
            }
        }
        if nodes.len() < n_samples {
            log::warn!(
                "roadmap: only {} of {} samples are collision-free",
                nodes.len(),
                n_samples
            );
        }
        if nodes.is_empty() && n_samples > 0 {
            return Err(MotionError::WorkspaceBlocked);
        }
        let add_anchor = |nodes: &mut Vec<Pose2>, p: &Pose2| -> Option<usize> {
            if let Some(i) = nodes
                .iter()
                .position(|q| q.distance(p) < EPS && (q.theta - p.theta).abs() < EPS)
            {
                return Some(i);
            }
            if !free(p) {
                log::warn!("roadmap: anchor {p:?} collides with static geometry");
                return None;
            }
            nodes.push(*p);
            Some(nodes.len() - 1)
        };
        for a in anchors {
            add_anchor(&mut nodes, a);
        }
        let mut forced_idx = Vec::new();
        for (a, b) in forced {
            if let (Some(i), Some(j)) = (add_anchor(&mut nodes, a), add_anchor(&mut nodes, b)) {
                forced_idx.push((i, j));
            }
        }

        let mut rm = Roadmap {
            adjacency: vec![Vec::new(); nodes.len()],
            nodes,
            edges: Vec::new(),
            footprint: footprint.clone(),
            statics: statics.to_vec(),
            k,
        };
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..rm.nodes.len() {
            for j in rm.nearest(rm.nodes[i], k, Some(i)) {
                pairs.push((i.min(j), i.max(j)));
            }
        }
        pairs.extend(forced_idx.iter().map(|&(i, j)| (i.min(j), i.max(j))));
        pairs.sort_unstable();
        pairs.dedup();
        pairs.retain(|(i, j)| i != j);
        let swept = par::map(&pairs, mode, |&(a, b)| {
            let sweep = segment_sweep(&rm.footprint, &rm.nodes[a], &rm.nodes[b]);
            let bbox = sweep.aabb();
            (!hits_any(&sweep, &bbox, &rm.statics)).then_some((sweep, bbox))
        });
        for (&(a, b), clear) in pairs.iter().zip(swept) {
            if let Some((sweep, bbox)) = clear {
                rm.add_edge(a, b, sweep, bbox);
            }
        }
        Ok(rm)
    }

    fn add_edge(&mut self, a: usize, b: usize, sweep: ConvexPolygon, bbox: Aabb) {
        let id = self.edges.len();
        self.edges.push(Edge {
            a,
            b,
            length: self.nodes[a].distance(&self.nodes[b]),
            sweep,
            bbox,
        });
        self.adjacency[a].push(id);
        self.adjacency[b].push(id);
    }

    /// Indices of the `k` nodes nearest to `p`, ties broken by index.
    fn nearest(&self, p: Pose2, k: usize, skip: Option<usize>) -> Vec<usize> {
        let mut idx: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, q)| (q.distance(&p), i))
            .collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        idx.into_iter().take(k).map(|(_, i)| i).collect()
    }

    pub fn nodes(&self) -> &[Pose2] {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().map(move |&e| {
            if self.edges[e].a == i {
                self.edges[e].b
            } else {
                self.edges[e].a
            }
        })
    }

    pub fn footprint(&self) -> &ConvexPolygon {
        &self.footprint
    }

    pub fn statics(&self) -> &[ConvexPolygon] {
        &self.statics
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for v in self.neighbours(u).collect::<Vec<_>>() {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    fn node_of(&self, p: &Pose2) -> Option<usize> {
        self.nodes
            .iter()
            .position(|q| q.distance(p) < EPS && (q.theta - p.theta).abs() < EPS)
    }

    /// Whether the straight sweep between two poses avoids the statics and
    /// `obstacles`.
    pub fn segment_free(&self, a: &Pose2, b: &Pose2, obstacles: &[ConvexPolygon]) -> bool {
        let sweep = segment_sweep(&self.footprint, a, b);
        let bbox = sweep.aabb();
        !hits_any(&sweep, &bbox, &self.statics) && !hits_any(&sweep, &bbox, obstacles)
    }

    /// Shortest collision-free path from `from` to `to` avoiding the statics
    /// and `obstacles`. Endpoints that are not roadmap nodes are connected to
    /// their nearest reachable nodes. Returns the pose sequence including
    /// both endpoints.
    pub fn plan_path(
        &self,
        from: Pose2,
        to: Pose2,
        obstacles: &[ConvexPolygon],
    ) -> Option<Vec<Pose2>> {
        if from.distance(&to) < EPS && (from.theta - to.theta).abs() < EPS {
            return Some(vec![from]);
        }
        let n = self.nodes.len();
        // virtual endpoints get indices n (start) and n + 1 (goal)
        let attach = |p: &Pose2| -> Vec<(usize, f64)> {
            self.nearest(*p, self.k.max(1), None)
                .into_iter()
                .filter(|&j| self.segment_free(p, &self.nodes[j], obstacles))
                .map(|j| (j, p.distance(&self.nodes[j])))
                .collect()
        };
        let start = self.node_of(&from);
        let goal = self.node_of(&to);
        let start_links = if start.is_none() {
            attach(&from)
        } else {
            Vec::new()
        };
        let goal_links = if goal.is_none() {
            attach(&to)
        } else {
            Vec::new()
        };
        let src = start.unwrap_or(n);
        let dst = goal.unwrap_or(n + 1);
        if start.is_none() && goal.is_none() && self.segment_free(&from, &to, obstacles) {
            return Some(vec![from, to]);
        }

        let mut dist = vec![f64::INFINITY; n + 2];
        let mut prev = vec![usize::MAX; n + 2];
        let mut edge_ok: Vec<Option<bool>> = vec![None; self.edges.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Frontier {
            cost: 0.0,
            node: src,
        });
        while let Some(Frontier { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            if node == dst {
                break;
            }
            let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Frontier>| {
                let c = cost + w;
                if c < dist[v] {
                    dist[v] = c;
                    prev[v] = node;
                    heap.push(Frontier { cost: c, node: v });
                }
            };
            if node == n {
                for &(j, w) in &start_links {
                    relax(j, w, &mut heap);
                }
                continue;
            }
            if node < n {
                for &e in &self.adjacency[node] {
                    let ok = *edge_ok[e].get_or_insert_with(|| {
                        let edge = &self.edges[e];
                        !hits_any(&edge.sweep, &edge.bbox, obstacles)
                    });
                    if !ok {
                        continue;
                    }
                    let edge = &self.edges[e];
                    let v = if edge.a == node { edge.b } else { edge.a };
                    relax(v, edge.length, &mut heap);
                }
                if goal.is_none() {
                    if let Some(&(_, w)) = goal_links.iter().find(|(j, _)| *j == node) {
                        relax(n + 1, w, &mut heap);
                    }
                }
            }
        }
        if !dist[dst].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = dst;
        while cur != usize::MAX {
            path.push(match cur {
                c if c == n => from,
                c if c == n + 1 => to,
                c => self.nodes[c],
            });
            if cur == src {
                break;
            }
            cur = prev[cur];
        }
        path.reverse();
        Some(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    fn octagon() -> ConvexPolygon {
        ConvexPolygon::regular(8, 0.25, std::f64::consts::PI / 8.0).unwrap()
    }

    fn bounds() -> [Vec2; 2] {
        [Vec2::new(0.0, 0.0), Vec2::new(4.0, 4.0)]
    }

    #[test]
    fn empty_workspace_is_connected() {
        let anchors = [Pose2::new(0.5, 0.5, 0.0), Pose2::new(3.5, 3.5, 0.0)];
        let rm = Roadmap::build(
            &octagon(),
            &[],
            bounds(),
            &anchors,
            &[],
            10,
            3,
            7,
            Parallelism::Sequential,
        )
        .unwrap();
        assert_eq!(rm.nodes().len(), 12);
        assert_eq!(rm.components(), 1);
        let path = rm.plan_path(anchors[0], anchors[1], &[]).unwrap();
        assert_eq!(path.first(), Some(&anchors[0]));
        assert_eq!(path.last(), Some(&anchors[1]));
    }

    #[test]
    fn blocked_workspace_is_an_error() {
        let wall = ConvexPolygon::aabb_rect(-1.0, -1.0, 5.0, 5.0).unwrap();
        let err = Roadmap::build(
            &octagon(),
            &[wall],
            bounds(),
            &[],
            &[],
            10,
            3,
            7,
            Parallelism::Sequential,
        )
        .unwrap_err();
        assert_eq!(err, MotionError::WorkspaceBlocked);
    }

    #[test]
    fn deterministic_for_seed() {
        let a = Roadmap::build(
            &octagon(),
            &[],
            bounds(),
            &[],
            &[],
            30,
            4,
            3,
            Parallelism::Sequential,
        )
        .unwrap();
        let b = Roadmap::build(
            &octagon(),
            &[],
            bounds(),
            &[],
            &[],
            30,
            4,
            3,
            Parallelism::Rayon,
        )
        .unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.edge_count(), b.edge_count());
        for i in 0..a.nodes().len() {
            assert_eq!(
                a.neighbours(i).collect::<Vec<_>>(),
                b.neighbours(i).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn paths_avoid_obstacles() {
        let wall = ConvexPolygon::aabb_rect(1.9, 0.0, 2.1, 3.2).unwrap();
        let from = Pose2::new(0.5, 0.5, 0.0);
        let to = Pose2::new(3.5, 0.5, 0.0);
        let rm = Roadmap::build(
            &octagon(),
            std::slice::from_ref(&wall),
            bounds(),
            &[from, to],
            &[],
            200,
            8,
            11,
            Parallelism::Sequential,
        )
        .unwrap();
        let path = rm.plan_path(from, to, &[]).unwrap();
        for w in path.windows(2) {
            assert!(!intersects(&segment_sweep(&octagon(), &w[0], &w[1]), &wall));
        }
        // a movable obstacle closing the gap makes the goal unreachable
        let plug = ConvexPolygon::aabb_rect(1.8, 3.0, 2.2, 4.0).unwrap();
        assert!(rm.plan_path(from, to, &[plug]).is_none());
    }

    #[test]
    fn trivial_path() {
        let p = Pose2::new(1.0, 1.0, 0.0);
        let rm = Roadmap::build(
            &octagon(),
            &[],
            bounds(),
            &[p],
            &[],
            5,
            2,
            1,
            Parallelism::Sequential,
        )
        .unwrap();
        assert_eq!(rm.plan_path(p, p, &[]), Some(vec![p]));
    }
}
