//! Distance between convex hulls of point sets (Gilbert–Johnson–Keerthi).

use nalgebra::{Matrix3, Vector3};

use crate::Vec3;

const MAX_ITERATIONS: usize = 64;
const REL_TOLERANCE: f64 = 1e-12;

fn support(points: &[Vec3], d: &Vec3) -> Vec3 {
    let mut best = points[0];
    let mut best_dot = best.dot(d);
    for p in &points[1..] {
        let v = p.dot(d);
        if v > best_dot {
            best_dot = v;
            best = *p;
        }
    }
    best
}

/// Closest point to the origin on the affine hull of `pts`, with its
/// barycentric weights; `None` when the points are affinely dependent.
fn affine_closest(pts: &[Vec3]) -> Option<(Vec3, Vec<f64>)> {
    let p0 = pts[0];
    let n = pts.len() - 1;
    if n == 0 {
        return Some((p0, vec![1.0]));
    }
    let mut g = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for i in 0..n {
        let ei = pts[i + 1] - p0;
        rhs[i] = -ei.dot(&p0);
        for j in 0..n {
            g[(i, j)] = ei.dot(&(pts[j + 1] - p0));
        }
    }
    let g = g.view((0, 0), (n, n)).into_owned();
    let scale = g.diagonal().max();
    if !(scale > 0.0) {
        return None;
    }
    let lu = g.clone().lu();
    if lu.determinant().abs() <= 1e-14 * scale.powi(n as i32) {
        return None;
    }
    let mu = lu.solve(&rhs.rows(0, n).into_owned())?;
    let mut point = p0;
    let mut w = vec![1.0 - mu.sum()];
    for i in 0..n {
        point += (pts[i + 1] - p0) * mu[i];
        w.push(mu[i]);
    }
    Some((point, w))
}

/// Closest point to the origin on the simplex, and the smallest sub-simplex
/// whose relative interior contains it.
fn closest_on_simplex(simplex: &[Vec3]) -> (Vec3, Vec<Vec3>) {
    let n = simplex.len();
    let mut best: Option<(f64, Vec3, Vec<Vec3>)> = None;
    for mask in 1u32..(1 << n) {
        let sub: Vec<Vec3> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| simplex[i])
            .collect();
        let Some((p, w)) = affine_closest(&sub) else {
            continue;
        };
        if w.iter().any(|&x| x < -1e-12) {
            continue;
        }
        let d = p.norm_squared();
        if best
            .as_ref()
            .is_none_or(|b| d < b.0 || (d == b.0 && sub.len() < b.2.len()))
        {
            best = Some((d, p, sub));
        }
    }
    let (_, p, sub) = best.expect("a single vertex is always a valid sub-simplex");
    (p, sub)
}

/// Euclidean distance between the convex hulls of `a` and `b`; zero when
/// they intersect.
pub fn hull_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let minkowski = |d: &Vec3| support(a, d) - support(b, &-d);
    let mut v = a[0] - b[0];
    let mut simplex = vec![v];
    for _ in 0..MAX_ITERATIONS {
        let vv = v.norm_squared();
        if vv == 0.0 {
            return 0.0;
        }
        let w = minkowski(&-v);
        if vv - v.dot(&w) <= REL_TOLERANCE * vv || simplex.contains(&w) {
            return vv.sqrt();
        }
        simplex.push(w);
        let (nv, sub) = closest_on_simplex(&simplex);
        if sub.len() == 4 || nv.norm_squared() >= vv {
            return if sub.len() == 4 { 0.0 } else { vv.sqrt() };
        }
        v = nv;
        simplex = sub;
    }
    v.norm()
}
