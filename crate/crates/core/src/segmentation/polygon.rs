//! Reviewer-drawn contour polygons: validation and rasterization.

/// Vertices are `[row, col]` pairs in ROI pixel coordinates.
pub type Vertex = [i64; 2];

fn cross(o: Vertex, a: Vertex, b: Vertex) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Vertex, a: Vertex, b: Vertex) -> bool {
    cross(a, b, p) == 0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Vertex, b: Vertex, c: Vertex, d: Vertex) -> bool {
    let d1 = cross(c, d, a).signum();
    let d2 = cross(c, d, b).signum();
    let d3 = cross(a, b, c).signum();
    let d4 = cross(a, b, d).signum();
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// A closed polygon (last vertex implicitly joined to the first) with at
/// least three vertices, no zero-length edges and no self-intersections.
pub fn is_simple_polygon(vertices: &[Vertex]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    if (0..n).any(|i| edge(i).0 == edge(i).1) {
        return false;
    }
    let area2: i64 = (0..n).map(|i| cross([0, 0], edge(i).0, edge(i).1)).sum();
    if area2 == 0 {
        return false;
    }
    for i in 0..n {
        let (a, b) = edge(i);
        for j in i + 1..n {
            let (c, d) = edge(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Neighbouring edges may only share their common vertex.
                let (shared, far_i, far_j) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if cross(shared, far_i, far_j) == 0 {
                    let back = (far_i[0] - shared[0]) * (far_j[0] - shared[0])
                        + (far_i[1] - shared[1]) * (far_j[1] - shared[1]);
                    if back > 0 {
                        return false;
                    }
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even-odd fill evaluated at pixel centers; pixels lying exactly on an edge
/// count as inside so axis-aligned outlines include their border.
pub fn rasterize_polygon(vertices: &[Vertex], width: usize, height: usize) -> Vec<bool> {
    let n = vertices.len();
    let mut bits = vec![false; width * height];
    if n < 3 {
        return bits;
    }
    for row in 0..height as i64 {
        for col in 0..width as i64 {
            let p = [row, col];
            let mut inside = false;
            let mut boundary = false;
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                if on_segment(p, a, b) {
                    boundary = true;
                    break;
                }
                // Half-open crossing rule on the row axis.
                if (a[0] > row) != (b[0] > row) {
                    let t_num = (row - a[0]) as f64;
                    let t_den = (b[0] - a[0]) as f64;
                    let x = a[1] as f64 + t_num / t_den * (b[1] - a[1]) as f64;
                    if (col as f64) < x {
                        inside = !inside;
                    }
                }
            }
            if boundary || inside {
                bits[row as usize * width + col as usize] = true;
            }
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_simple() {
        assert!(is_simple_polygon(&[[0, 0], [0, 4], [4, 4], [4, 0]]));
    }

    #[test]
    fn bowtie_is_not_simple() {
        assert!(!is_simple_polygon(&[[0, 0], [4, 4], [0, 4], [4, 0]]));
    }

    #[test]
    fn degenerate_polygons() {
        assert!(!is_simple_polygon(&[[0, 0], [1, 1]]));
        assert!(!is_simple_polygon(&[[0, 0], [1, 1], [2, 2]]));
        assert!(!is_simple_polygon(&[[0, 0], [0, 0], [2, 2], [2, 0]]));
        // Spike that doubles back along its own edge.
        assert!(!is_simple_polygon(&[[0, 0], [0, 4], [0, 2], [3, 2]]));
    }

    #[test]
    fn square_rasterizes_to_block() {
        let bits = rasterize_polygon(&[[0, 0], [0, 4], [4, 4], [4, 0]], 8, 8);
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(bits[r * 8 + c], r <= 4 && c <= 4, "({r},{c})");
            }
        }
    }

    /// Brute-force oracle: winding-free point-in-polygon via ray casting on
    /// the column axis, plus explicit edge membership.
    fn oracle_inside(p: Vertex, poly: &[Vertex]) -> bool {
        let n = poly.len();
        let mut crossings = 0;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let r = a[0] as f64
                    + (p[1] - a[1]) as f64 / (b[1] - a[1]) as f64 * (b[0] - a[0]) as f64;
                if (p[0] as f64) < r {
                    crossings += 1;
                }
            }
        }
        crossings % 2 == 1
    }

    #[test]
    fn concave_polygon_matches_oracle() {
        let poly = [[1, 1], [1, 10], [6, 6], [11, 10], [11, 1], [6, 4]];
        assert!(is_simple_polygon(&poly));
        let bits = rasterize_polygon(&poly, 13, 13);
        for r in 0..13 {
            for c in 0..13 {
                assert_eq!(bits[r * 13 + c], oracle_inside([r as i64, c as i64], &poly));
            }
        }
    }
}
