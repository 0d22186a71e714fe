use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::gjk::hull_distance;
use crate::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points(pts: &[Vec3]) -> Self {
        let mut min = pts[0];
        let mut max = pts[0];
        for p in &pts[1..] {
            min = min.inf(p);
            max = max.sup(p);
        }
        Self { min, max }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    /// Gap between two boxes (zero when they overlap).
    pub fn distance(&self, o: &Aabb) -> f64 {
        let gap = (o.min - self.max)
            .sup(&(self.min - o.max))
            .sup(&Vec3::zeros());
        gap.norm()
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        bounds: Aabb,
        tris: Vec<usize>,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Axis-aligned bounding-box tree over a triangle soup. Immutable once built.
#[derive(Clone, Debug, Default)]
pub struct Bvh {
    triangles: Vec<[Vec3; 3]>,
    nodes: Vec<Node>,
}

struct Candidate {
    lower: f64,
    node: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.lower == o.lower && self.node == o.node
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    // min-heap on the lower bound, ties by node index for determinism
    fn cmp(&self, o: &Self) -> Ordering {
        o.lower
            .total_cmp(&self.lower)
            .then_with(|| o.node.cmp(&self.node))
    }
}

impl Bvh {
    pub fn build(triangles: Vec<[Vec3; 3]>) -> Self {
        let mut bvh = Bvh {
            triangles,
            nodes: Vec::new(),
        };
        if !bvh.triangles.is_empty() {
            let idx: Vec<usize> = (0..bvh.triangles.len()).collect();
            bvh.build_node(idx);
        }
        bvh
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    fn build_node(&mut self, mut idx: Vec<usize>) -> usize {
        let bounds = idx
            .iter()
            .map(|&i| Aabb::from_points(&self.triangles[i]))
            .reduce(|a, b| a.union(&b))
            .expect("non-empty");
        if idx.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, tris: idx });
            return self.nodes.len() - 1;
        }
        let centroid =
            |i: usize| (self.triangles[i][0] + self.triangles[i][1] + self.triangles[i][2]) / 3.0;
        let cb = Aabb::from_points(&idx.iter().map(|&i| centroid(i)).collect::<Vec<_>>());
        let ext = cb.max - cb.min;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        idx.sort_by(|&a, &b| {
            centroid(a)[axis]
                .total_cmp(&centroid(b)[axis])
                .then(a.cmp(&b))
        });
        let right_idx = idx.split_off(idx.len() / 2);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            bounds,
            tris: Vec::new(),
        });
        let left = self.build_node(idx);
        let right = self.build_node(right_idx);
        self.nodes[slot] = Node::Inner {
            bounds,
            left,
            right,
        };
        slot
    }

    /// Smallest distance from the convex hull of `points`, inflated by
    /// `radius`, to any triangle; clamped at zero. `None` for an empty tree.
    ///
    /// Best-first traversal: nodes are visited in order of their box-to-box
    /// lower bound and pruned once that bound reaches the best distance found.
    pub fn min_distance(&self, points: &[Vec3], radius: f64) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let query = Aabb::from_points(points);
        let mut best = f64::INFINITY;
        let mut heap = BinaryHeap::new();
        heap.push(Candidate {
            lower: 0.0,
            node: 0,
        });
        while let Some(Candidate { lower, node }) = heap.pop() {
            if lower >= best || best <= 0.0 {
                break;
            }
            match &self.nodes[node] {
                Node::Leaf { tris, .. } => {
                    for &t in tris {
                        let d = (hull_distance(points, &self.triangles[t]) - radius).max(0.0);
                        best = best.min(d);
                    }
                }
                Node::Inner { left, right, .. } => {
                    for &c in [*left, *right].iter() {
                        let lb = (self.nodes[c].bounds().distance(&query) - radius).max(0.0);
                        if lb < best {
                            heap.push(Candidate { lower: lb, node: c });
                        }
                    }
                }
            }
        }
        Some(best)
    }
}
