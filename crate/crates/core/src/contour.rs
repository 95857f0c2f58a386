//! Zero-level contours of lattice-sampled scalar fields by marching squares,
//! plus the polyline geometry used to compare contours.

use std::collections::BTreeMap;

/// Lattice edge between node `(i, j)` and `(i+1, j)` (`H`) or `(i, j+1)` (`V`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    H(usize, usize),
    V(usize, usize),
}

impl Edge {
    /// Lattice point at fraction `t` from the first node toward the second.
    pub fn point(self, t: f64) -> (f64, f64) {
        match self {
            Edge::H(i, j) => (i as f64 + t, j as f64),
            Edge::V(i, j) => (i as f64, j as f64 + t),
        }
    }

    pub fn nodes(self) -> ((usize, usize), (usize, usize)) {
        match self {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        }
    }
}

/// Contour vertex in fractional lattice coordinates, located on `edge` at
/// fraction `t` from its first node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub edge: Edge,
    pub t: f64,
}

impl Vertex {
    pub fn point(&self) -> (f64, f64) {
        self.edge.point(self.t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Vertex>,
    pub closed: bool,
}

/// Row-major samples `values[j * nx + i]`; `None` marks a missing node.
#[derive(Debug, Clone, Copy)]
pub struct Lattice<'a> {
    pub nx: usize,
    pub ny: usize,
    pub values: &'a [Option<f64>],
}

impl Lattice<'_> {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[j * self.nx + i]
    }
}

/// Level-0 polylines. `center(i, j)` supplies the field at the centre of cell
/// `(i, j)` to resolve saddle cells; the corner mean is used when it is absent
/// or returns `None`.
pub fn marching_squares(
    lattice: &Lattice<'_>,
    center: Option<&dyn Fn(usize, usize) -> Option<f64>>,
) -> Vec<Polyline> {
    let (nx, ny) = (lattice.nx, lattice.ny);
    assert_eq!(lattice.values.len(), nx * ny, "lattice size mismatch");
    let crossing = |e: Edge| -> Option<Vertex> {
        let ((i0, j0), (i1, j1)) = e.nodes();
        let (a, b) = (lattice.get(i0, j0)?, lattice.get(i1, j1)?);
        ((a > 0.0) != (b > 0.0)).then(|| Vertex { edge: e, t: a / (a - b) })
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    let mut vertices: BTreeMap<Edge, Vertex> = BTreeMap::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let corners =
                [lattice.get(i, j), lattice.get(i + 1, j), lattice.get(i + 1, j + 1), lattice.get(i, j + 1)];
            if corners.iter().any(Option::is_none) {
                continue;
            }
            let c = corners.map(|v| v.unwrap());
            let (bottom, right, top, left) =
                (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            let crossed: Vec<Edge> = [bottom, right, top, left]
                .into_iter()
                .filter(|&e| {
                    if let Some(v) = crossing(e) {
                        vertices.insert(e, v);
                        true
                    } else {
                        false
                    }
                })
                .collect();
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let mid = center.and_then(|f| f(i, j)).unwrap_or_else(|| 0.25 * c.iter().sum::<f64>());
                    if (mid > 0.0) == (c[0] > 0.0) {
                        // Corners 0 and 2 connect through the centre; cut off 1 and 3.
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }
    join(&segments, &vertices)
}

fn join(segments: &[(Edge, Edge)], vertices: &BTreeMap<Edge, Vertex>) -> Vec<Polyline> {
    let mut adjacency: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start: Edge, used: &mut Vec<bool>| -> Option<Polyline> {
        let mut chain = vec![start];
        let mut node = start;
        loop {
            let next = adjacency[&node].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (a, b) = segments[k];
            node = if a == node { b } else { a };
            chain.push(node);
            if node == start {
                break;
            }
        }
        if chain.len() < 2 {
            return None;
        }
        let closed = chain.len() > 2 && chain.first() == chain.last();
        Some(Polyline { vertices: chain.iter().map(|e| vertices[e]).collect(), closed })
    };

    let ends: Vec<Edge> = adjacency.iter().filter(|(_, s)| s.len() == 1).map(|(e, _)| *e).collect();
    for e in ends {
        if adjacency[&e].iter().all(|&k| used[k]) {
            continue;
        }
        if let Some(p) = walk(e, &mut used) {
            out.push(p);
        }
    }
    let starts: Vec<Edge> = adjacency.keys().copied().collect();
    for e in starts {
        while adjacency[&e].iter().any(|&k| !used[k]) {
            if let Some(p) = walk(e, &mut used) {
                out.push(p);
            }
        }
    }
    out
}

/// Moves `vertex.t` by bisection until the bracket is narrower than `tol`,
/// using `f(t)` for the field along the vertex edge. `f(0)` and `f(1)` must
/// have opposite signs.
pub fn bisect_edge<F>(vertex: &mut Vertex, f: F, tol: f64) -> usize
where
    F: Fn(f64) -> Option<f64>,
{
    let (Some(fa), Some(_)) = (f(0.0), f(1.0)) else { return 0 };
    let (mut lo, mut hi) = (0.0, 1.0);
    let positive_lo = fa > 0.0;
    let mut evaluations = 2;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let Some(fm) = f(mid) else { break };
        evaluations += 1;
        if (fm > 0.0) == positive_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    vertex.t = 0.5 * (lo + hi);
    evaluations
}

/// Bilinear interpolant of the lattice at fractional coordinates.
pub fn bilinear(lattice: &Lattice<'_>, x: f64, y: f64) -> Option<f64> {
    let i = (x.floor() as usize).min(lattice.nx.saturating_sub(2));
    let j = (y.floor() as usize).min(lattice.ny.saturating_sub(2));
    let (u, v) = (x - i as f64, y - j as f64);
    let f00 = lattice.get(i, j)?;
    let f10 = lattice.get(i + 1, j)?;
    let f01 = lattice.get(i, j + 1)?;
    let f11 = lattice.get(i + 1, j + 1)?;
    Some(f00 * (1.0 - u) * (1.0 - v) + f10 * u * (1.0 - v) + f01 * (1.0 - u) * v + f11 * u * v)
}

fn orientation(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

pub fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

pub fn polylines_intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.windows(2).any(|s| b.windows(2).any(|t| segments_intersect(s[0], s[1], t[0], t[1])))
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Smallest distance between two polylines (zero when they cross).
pub fn polyline_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if polylines_intersect(a, b) {
        return 0.0;
    }
    let one_way = |a: &[(f64, f64)], b: &[(f64, f64)]| {
        a.iter()
            .flat_map(|&p| b.windows(2).map(move |s| point_segment_distance(p, s[0], s[1])))
            .fold(f64::INFINITY, f64::min)
    };
    one_way(a, b).min(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Vec<Option<f64>> {
        (0..ny).flat_map(|j| (0..nx).map(move |i| (i, j))).map(|(i, j)| Some(f(i as f64, j as f64))).collect()
    }

    #[test]
    fn constant_sign_has_no_contour() {
        let v = sample(16, 16, |_, _| 1.0);
        assert!(marching_squares(&Lattice { nx: 16, ny: 16, values: &v }, None).is_empty());
    }

    #[test]
    fn diagonal_line() {
        let v = sample(16, 16, |x, y| x - y + 0.5);
        let lines = marching_squares(&Lattice { nx: 16, ny: 16, values: &v }, None);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        for vx in &lines[0].vertices {
            let (x, y) = vx.point();
            assert!((x - y + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_is_closed() {
        let v = sample(32, 32, |x, y| (x - 15.3).powi(2) + (y - 16.1).powi(2) - 64.0);
        let lat = Lattice { nx: 32, ny: 32, values: &v };
        let lines = marching_squares(&lat, None);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for vx in &lines[0].vertices {
            let (x, y) = vx.point();
            assert!(bilinear(&lat, x, y).unwrap().abs() < 1e-9);
            let r = ((x - 15.3).powi(2) + (y - 16.1).powi(2)).sqrt();
            assert!((r - 8.0).abs() < 0.1);
        }
    }

    #[test]
    fn saddle_uses_centre_value() {
        // Corners + - + -, centre sign decides the pairing.
        let v = vec![Some(1.0), Some(-1.0), Some(-1.0), Some(1.0)];
        let lat = Lattice { nx: 2, ny: 2, values: &v };
        let pos = |_, _| Some(0.5);
        let neg = |_, _| Some(-0.5);
        let a = marching_squares(&lat, Some(&pos));
        let b = marching_squares(&lat, Some(&neg));
        assert_eq!(a.len(), 2);
        assert_eq!(b.len(), 2);
        let edges = |ls: &[Polyline]| {
            let mut e: Vec<(Edge, Edge)> =
                ls.iter().map(|l| (l.vertices[0].edge, l.vertices[1].edge)).collect();
            e.sort();
            e
        };
        assert_ne!(edges(&a), edges(&b));
        assert!(
            edges(&a).contains(&(Edge::H(0, 0), Edge::V(1, 0)))
                || edges(&a).contains(&(Edge::V(1, 0), Edge::H(0, 0)))
        );
    }

    #[test]
    fn missing_nodes_skip_cells() {
        let mut v = sample(8, 8, |x, _| x - 3.5);
        v[3 * 8 + 3] = None;
        let lines = marching_squares(&Lattice { nx: 8, ny: 8, values: &v }, None);
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn bisection_refines_vertex() {
        let mut vx = Vertex { edge: Edge::H(0, 0), t: 0.5 };
        bisect_edge(&mut vx, |t| Some(t * t - 0.3), 1e-10);
        assert!((vx.t - 0.3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn intersections_and_distance() {
        let a = [(0.0, 0.0), (1.0, 1.0)];
        let b = [(0.0, 1.0), (1.0, 0.0)];
        let c = [(0.0, 2.0), (1.0, 3.0)];
        assert!(polylines_intersect(&a, &b));
        assert!(!polylines_intersect(&a, &c));
        assert_eq!(polyline_distance(&a, &b), 0.0);
        assert!((polyline_distance(&a, &c) - 2f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn vertices_bracket_sign_changes(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -3.0f64..3.0) {
            let v = sample(20, 20, |x, y| (0.3 * x + a).sin() + (0.2 * y + b).cos() + 0.1 * c);
            let lat = Lattice { nx: 20, ny: 20, values: &v };
            for line in marching_squares(&lat, None) {
                for vx in &line.vertices {
                    let ((i0, j0), (i1, j1)) = vx.edge.nodes();
                    let (f0, f1) = (lat.get(i0, j0).unwrap(), lat.get(i1, j1).unwrap());
                    prop_assert!((f0 > 0.0) != (f1 > 0.0));
                    prop_assert!((0.0..=1.0).contains(&vx.t));
                    let (x, y) = vx.point();
                    prop_assert!(bilinear(&lat, x, y).unwrap().abs() < 1e-12);
                }
            }
        }

        #[test]
        fn every_segment_is_used_once(seed in 0u64..1000) {
            let s = seed as f64;
            let v = sample(16, 16, |x, y| (x * 0.7 + s).sin() * (y * 0.5 - s).cos());
            let lat = Lattice { nx: 16, ny: 16, values: &v };
            let lines = marching_squares(&lat, None);
            let segments: usize = lines.iter().map(|l| l.vertices.len() - 1).sum();
            let mut expected = 0;
            for j in 0..15 {
                for i in 0..15 {
                    let c = [lat.get(i, j), lat.get(i + 1, j), lat.get(i + 1, j + 1), lat.get(i, j + 1)]
                        .map(|x| x.unwrap() > 0.0);
                    let flips = (0..4).filter(|&k| c[k] != c[(k + 1) % 4]).count();
                    expected += flips / 2;
                }
            }
            prop_assert_eq!(segments, expected);
        }
    }
}
