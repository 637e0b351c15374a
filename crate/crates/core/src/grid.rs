//! Recursively subdivided icosahedral grids on the unit sphere.

use std::collections::HashMap;

use crate::Vec3;

/// Vertices and triangles of a subdivided icosahedron projected onto the
/// unit sphere. Level `l` has `10 * 4^l + 2` vertices and `20 * 4^l`
/// triangles.
#[derive(Debug, Clone)]
pub struct IcoGrid {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl IcoGrid {
    pub fn new(level: u32) -> Self {
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, phi, 0.0),
            (1.0, phi, 0.0),
            (-1.0, -phi, 0.0),
            (1.0, -phi, 0.0),
            (0.0, -1.0, phi),
            (0.0, 1.0, phi),
            (0.0, -1.0, -phi),
            (0.0, 1.0, -phi),
            (phi, 0.0, -1.0),
            (phi, 0.0, 1.0),
            (-phi, 0.0, -1.0),
            (-phi, 0.0, 1.0),
        ]
        .into_iter()
        .map(|(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut triangles = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    vertices.push((vertices[a] + vertices[b]).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for [a, b, c] in triangles {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        Self { vertices, triangles }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Triangle centroids projected to the sphere, with the exact spherical
    /// triangle areas as weights. The weights sum to `4π`.
    pub fn cells(&self) -> Vec<(Vec3, f64)> {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
                ((a + b + c).normalize(), spherical_triangle_area(&a, &b, &c))
            })
            .collect()
    }

    /// Vertices with one third of the adjacent triangle areas each.
    pub fn weighted_vertices(&self) -> Vec<(Vec3, f64)> {
        let mut weights = vec![0.0; self.vertices.len()];
        for &[a, b, c] in &self.triangles {
            let area = spherical_triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c]);
            for v in [a, b, c] {
                weights[v] += area / 3.0;
            }
        }
        self.vertices.iter().copied().zip(weights).collect()
    }

    /// Largest angular edge length, a measure of the grid resolution.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| self.vertices[a].angle(&self.vertices[b]))
            .fold(0.0, f64::max)
    }
}

/// Area of the spherical triangle with unit-vector vertices.
pub fn spherical_triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let numerator = a.dot(&b.cross(c)).abs();
    let denominator = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * numerator.atan2(denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn counts_and_total_area() {
        for level in 0..4 {
            let grid = IcoGrid::new(level);
            let n = 4usize.pow(level);
            assert_eq!(grid.vertices().len(), 10 * n + 2);
            assert_eq!(grid.triangles().len(), 20 * n);
            let total: f64 = grid.cells().iter().map(|c| c.1).sum();
            assert!((total - 4.0 * PI).abs() < 1e-10, "level {level}: {total}");
            let total: f64 = grid.weighted_vertices().iter().map(|c| c.1).sum();
            assert!((total - 4.0 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn octant_area() {
        let area = spherical_triangle_area(&Vec3::x(), &Vec3::y(), &Vec3::z());
        assert!((area - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_is_symmetric_under_antipodes() {
        let grid = IcoGrid::new(2);
        for v in grid.vertices() {
            assert!(grid.vertices().iter().any(|w| (w + v).norm() < 1e-12));
        }
    }
}
