//! Triangle meshes, OBJ ingestion and the geometric queries the distance
//! field needs.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Pose, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    watertight: bool,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= vertices.len())) {
            return Err(Error::invalid(format!("triangle {t:?} indexes past {} vertices", vertices.len())));
        }
        if !vertices.iter().all(|v| v.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("mesh vertices must be finite"));
        }
        let watertight = is_closed_and_consistent(&triangles);
        Ok(TriMesh {
            vertices,
            triangles,
            watertight,
        })
    }

    /// Every edge is shared by exactly two triangles that traverse it in
    /// opposite directions.
    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn transformed(&self, t: &Pose) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| t.transform_point(v)).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, s: f64) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| tri_area(&self.triangle(i))).sum()
    }

    /// Generalized winding number at `p`: ≈1 inside, ≈0 outside for a closed,
    /// outward-oriented mesh (−1 inside when inward-oriented).
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        let mut total = 0.0;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(i).map(|v| v - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * PI)
    }

    /// Area-weighted random surface samples.
    pub fn sample_surface(&self, n: usize, rng: &mut impl Rng) -> Vec<Vec3> {
        if self.triangles.is_empty() || n == 0 {
            return Vec::new();
        }
        let mut cdf = Vec::with_capacity(self.triangles.len());
        let mut acc = 0.0;
        for i in 0..self.triangles.len() {
            acc += tri_area(&self.triangle(i));
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let r = rng.random_range(0.0..1.0) * acc;
                let idx = cdf.partition_point(|c| *c < r).min(cdf.len() - 1);
                let [a, b, c] = self.triangle(idx);
                let (mut u, mut v): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }

    /// Axis-aligned box mesh with outward winding.
    pub fn cuboid(min: Vec3, max: Vec3) -> TriMesh {
        let v = |x: usize, y: usize, z: usize| {
            Vec3::new(
                if x == 0 { min.x } else { max.x },
                if y == 0 { min.y } else { max.y },
                if z == 0 { min.z } else { max.z },
            )
        };
        let vertices = vec![
            v(0, 0, 0),
            v(1, 0, 0),
            v(1, 1, 0),
            v(0, 1, 0),
            v(0, 0, 1),
            v(1, 0, 1),
            v(1, 1, 1),
            v(0, 1, 1),
        ];
        let triangles = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ];
        TriMesh::new(vertices, triangles).expect("valid cuboid")
    }

    /// Subdivided icosahedron projected onto a sphere.
    pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> TriMesh {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
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
        for _ in 0..subdivisions {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut verts);
                let bc = midpoint(b, c, &mut verts);
                let ca = midpoint(c, a, &mut verts);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = verts.into_iter().map(|v| center + v * radius).collect();
        TriMesh::new(vertices, faces).expect("valid icosphere")
    }

    /// Writes the mesh as OBJ text.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
        s
    }
}

fn is_closed_and_consistent(triangles: &[[usize; 3]]) -> bool {
    if triangles.is_empty() {
        return false;
    }
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let e = (t[k], t[(k + 1) % 3]);
            if e.0 == e.1 {
                return false;
            }
            *directed.entry(e).or_default() += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}

pub fn tri_area(t: &[Vec3; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Parses triangle/polygon faces from OBJ text. Polygons are fan-split,
/// texture/normal indices and materials are ignored, negative indices are
/// resolved relative to the current vertex count.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::invalid(format!("obj line {}: {e}", lineno + 1)))?;
                if xyz.len() != 3 {
                    return Err(Error::invalid(format!("obj line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|tok| {
                        let raw: i64 = tok
                            .split('/')
                            .next()
                            .unwrap_or("")
                            .parse()
                            .map_err(|e| Error::invalid(format!("obj line {}: {e}", lineno + 1)))?;
                        let resolved = if raw < 0 { vertices.len() as i64 + raw } else { raw - 1 };
                        usize::try_from(resolved)
                            .map_err(|_| Error::invalid(format!("obj line {}: bad index {raw}", lineno + 1)))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::invalid(format!("obj line {}: face needs 3 vertices", lineno + 1)));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

pub fn load_obj(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_obj(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn primitives_are_watertight() {
        assert!(TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0)).is_watertight());
        let s = TriMesh::icosphere(Vec3::zeros(), 1.0, 2);
        assert!(s.is_watertight());
        assert_eq!(s.triangles.len(), 320);
    }

    #[test]
    fn open_or_flipped_meshes_are_not_watertight() {
        let mut m = TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0));
        m.triangles.pop();
        assert!(!TriMesh::new(m.vertices.clone(), m.triangles.clone()).unwrap().is_watertight());
        let mut tris = TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0)).triangles;
        tris[0].swap(1, 2);
        assert!(!TriMesh::new(m.vertices, tris).unwrap().is_watertight());
    }

    #[test]
    fn winding_number_inside_outside() {
        let m = TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0));
        assert_abs_diff_eq!(m.winding_number(&Vec3::repeat(0.5)), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.winding_number(&Vec3::repeat(2.0)), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn obj_quads_split_and_materials_ignored() {
        let text = "mtllib x.mtl\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nusemtl red\nf 1/1/1 2/2/2 3/3/3 4/4/4\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        let round = parse_obj(&TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0)).to_obj()).unwrap();
        assert!(round.is_watertight());
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert_eq!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap().triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        assert_abs_diff_eq!(closest_point_on_triangle(&Vec3::new(0.2, 0.2, 1.0), &a, &b, &c), Vec3::new(0.2, 0.2, 0.0), epsilon = 1e-15);
        assert_eq!(closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&Vec3::new(0.5, -1.0, 0.0), &a, &b, &c), Vec3::new(0.5, 0.0, 0.0));
        let p = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert_abs_diff_eq!(p, Vec3::new(0.5, 0.5, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn surface_samples_lie_on_surface() {
        let m = TriMesh::icosphere(Vec3::zeros(), 1.0, 1);
        let pts = m.sample_surface(200, &mut crate::synth::rng(3));
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|p| p.norm() <= 1.0 + 1e-12 && p.norm() > 0.7));
        assert_abs_diff_eq!(TriMesh::cuboid(Vec3::zeros(), Vec3::repeat(1.0)).surface_area(), 6.0, epsilon = 1e-12);
    }
}
