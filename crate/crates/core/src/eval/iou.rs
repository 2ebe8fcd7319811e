//! Rotated-box overlap via convex polygon clipping.

use crate::cad::OrientedBox3;
use crate::search_area::box_corners;

type Vec2 = [f64; 2];

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace area of a simple polygon, positive for counter-clockwise order.
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

/// Sutherland-Hodgman clip of `subject` against the convex counter-clockwise
/// polygon `clip`.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (dc, dp) = (cross(a, b, cur), cross(a, b, prev));
            if dc >= 0.0 {
                if dp < 0.0 {
                    out.push(intersect(prev, cur, dp, dc));
                }
                out.push(cur);
            } else if dp >= 0.0 {
                out.push(intersect(prev, cur, dp, dc));
            }
        }
    }
    out
}

fn intersect(p: Vec2, q: Vec2, dp: f64, dq: f64) -> Vec2 {
    let s = dp / (dp - dq);
    [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
}

/// Counter-clockwise bird's-eye footprint of a box.
pub fn footprint(b: &OrientedBox3) -> [Vec2; 4] {
    let c = box_corners(b);
    [c[0], c[1], c[2], c[3]].map(|p| [p.x, p.y])
}

pub fn bev_intersection(a: &OrientedBox3, b: &OrientedBox3) -> f64 {
    let poly = clip_convex(&footprint(a), &footprint(b));
    if poly.len() < 3 {
        0.0
    } else {
        polygon_area(&poly).abs()
    }
}

fn ratio(inter: f64, total_a: f64, total_b: f64) -> f64 {
    let union = total_a + total_b - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou_bev(a: &OrientedBox3, b: &OrientedBox3) -> f64 {
    ratio(bev_intersection(a, b), a.size.w * a.size.l, b.size.w * b.size.l)
}

pub fn iou_3d(a: &OrientedBox3, b: &OrientedBox3) -> f64 {
    let top = (a.center.z + a.size.h / 2.0).min(b.center.z + b.size.h / 2.0);
    let bottom = (a.center.z - a.size.h / 2.0).max(b.center.z - b.size.h / 2.0);
    let dz = top - bottom;
    if dz <= 0.0 {
        return 0.0;
    }
    ratio(bev_intersection(a, b) * dz, a.size.volume(), b.size.volume())
}
