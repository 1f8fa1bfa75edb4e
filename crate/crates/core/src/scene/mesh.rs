use serde::{Deserialize, Serialize};

use super::{Hit, Raycast};
use crate::geometry::{RigidTransform, Vec3};
use crate::{Error, Result};

/// Indexed triangle mesh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = TriangleMesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidArgument(format!(
                "mesh face {f:?} indexes past {n} vertices"
            )));
        }
        if self.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument("mesh vertices must be finite".into()));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn transformed(&self, transform: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| transform.apply(v)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Splits every triangle into four at its edge midpoints.
    pub fn subdivided(&self) -> TriangleMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoints = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push((vertices[a as usize] + vertices[b as usize]) * 0.5);
                vertices.len() as u32 - 1
            })
        };
        let mut faces = Vec::with_capacity(self.faces.len() * 4);
        for &[a, b, c] in &self.faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            faces.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        TriangleMesh { vertices, faces }
    }

    /// Appends `other`, offsetting its indices.
    pub fn append(&mut self, other: &TriangleMesh) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
    }
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    /// Entry distance of the ray, if it meets the box before `t_max`.
    fn enter(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            // NaN (0 * inf) leaves the bounds untouched.
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the left child; the
    /// right child follows it.
    start: u32,
    /// Primitive count for leaves, zero for interior nodes.
    count: u32,
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
}

const LEAF_SIZE: usize = 4;
pub(crate) const RAY_EPSILON: f64 = 1e-6;

/// Bounding-volume hierarchy over a triangle mesh for nearest-hit queries.
#[derive(Debug, Clone)]
pub struct MeshBvh {
    nodes: Vec<Node>,
    tris: Vec<Tri>,
    surface_id: u32,
}

impl MeshBvh {
    pub fn build(mesh: &TriangleMesh, surface_id: u32) -> Self {
        let mut tris: Vec<Tri> = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let [a, b, c] = mesh.triangle(i);
                Tri {
                    v0: a,
                    e1: b - a,
                    e2: c - a,
                }
            })
            .collect();
        let mut centroids: Vec<Vec3> = tris
            .iter()
            .map(|t| t.v0 + (t.e1 + t.e2) / 3.0)
            .collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: tris.len() as u32,
        });
        if !tris.is_empty() {
            Self::split(&mut nodes, 0, &mut tris, &mut centroids, 0);
        }
        MeshBvh {
            nodes,
            tris,
            surface_id,
        }
    }

    fn tri_bounds(t: &Tri) -> Aabb {
        let mut b = Aabb::empty();
        b.grow(&t.v0);
        b.grow(&(t.v0 + t.e1));
        b.grow(&(t.v0 + t.e2));
        b
    }

    fn split(nodes: &mut Vec<Node>, index: usize, tris: &mut [Tri], cents: &mut [Vec3], start: usize) {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for (t, c) in tris.iter().zip(cents.iter()) {
            bounds.merge(&Self::tri_bounds(t));
            cbounds.grow(c);
        }
        nodes[index].bounds = bounds;
        nodes[index].start = start as u32;
        nodes[index].count = tris.len() as u32;
        if tris.len() <= LEAF_SIZE {
            return;
        }
        let extent = cbounds.max - cbounds.min;
        let axis = extent.imax();
        if !(extent[axis] > 0.0) {
            return;
        }
        let mid = tris.len() / 2;
        // Sort the primitive slice and its centroids together by permutation.
        let mut order: Vec<usize> = (0..tris.len()).collect();
        order.select_nth_unstable_by(mid, |&a, &b| cents[a][axis].total_cmp(&cents[b][axis]));
        let sorted_tris: Vec<Tri> = order.iter().map(|&i| tris[i]).collect();
        let sorted_cents: Vec<Vec3> = order.iter().map(|&i| cents[i]).collect();
        tris.copy_from_slice(&sorted_tris);
        cents.copy_from_slice(&sorted_cents);

        let left = nodes.len();
        let placeholder = Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        };
        nodes.push(placeholder);
        nodes.push(placeholder);
        nodes[index].start = left as u32;
        nodes[index].count = 0;
        let (lt, rt) = tris.split_at_mut(mid);
        let (lc, rc) = cents.split_at_mut(mid);
        Self::split(nodes, left, lt, lc, start);
        Self::split(nodes, left + 1, rt, rc, start + mid);
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    fn intersect_tri(t: &Tri, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let p = dir.cross(&t.e2);
        let det = t.e1.dot(&p);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / det;
        let s = origin - t.v0;
        let u = s.dot(&p) * inv;
        if !(-1e-12..=1.0 + 1e-12).contains(&u) {
            return None;
        }
        let q = s.cross(&t.e1);
        let v = dir.dot(&q) * inv;
        if v < -1e-12 || u + v > 1.0 + 1e-12 {
            return None;
        }
        let dist = t.e2.dot(&q) * inv;
        (dist > RAY_EPSILON).then_some(dist)
    }
}

impl Raycast for MeshBvh {
    fn raycast(&self, origin: &Vec3, direction: &Vec3) -> Option<Hit> {
        if self.tris.is_empty() {
            return None;
        }
        let inv_dir = direction.map(|d| 1.0 / d);
        let mut best_t = f64::INFINITY;
        let mut best: Option<usize> = None;
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        self.nodes[0].bounds.enter(origin, &inv_dir, best_t)?;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.count > 0 {
                let first = node.start as usize;
                for (k, tri) in self.tris[first..first + node.count as usize].iter().enumerate() {
                    if let Some(t) = Self::intersect_tri(tri, origin, direction) {
                        if t < best_t {
                            best_t = t;
                            best = Some(first + k);
                        }
                    }
                }
                continue;
            }
            let l = node.start as usize;
            let hl = self.nodes[l].bounds.enter(origin, &inv_dir, best_t);
            let hr = self.nodes[l + 1].bounds.enter(origin, &inv_dir, best_t);
            match (hl, hr) {
                (Some(a), Some(b)) => {
                    let (near, far) = if a <= b { (l, l + 1) } else { (l + 1, l) };
                    stack[top] = far as u32;
                    stack[top + 1] = near as u32;
                    top += 2;
                }
                (Some(_), None) => {
                    stack[top] = l as u32;
                    top += 1;
                }
                (None, Some(_)) => {
                    stack[top] = (l + 1) as u32;
                    top += 1;
                }
                (None, None) => {}
            }
        }
        best.map(|i| {
            let tri = &self.tris[i];
            let mut normal = tri.e1.cross(&tri.e2).normalize();
            if normal.dot(direction) > 0.0 {
                normal = -normal;
            }
            Hit {
                point: origin + direction * best_t,
                normal,
                surface_id: self.surface_id,
                t: best_t,
            }
        })
    }
}

/// A mesh together with its acceleration structure.
#[derive(Debug, Clone)]
pub struct IndexedMesh {
    pub mesh: TriangleMesh,
    bvh: MeshBvh,
}

impl IndexedMesh {
    pub fn new(mesh: TriangleMesh, surface_id: u32) -> Self {
        let bvh = MeshBvh::build(&mesh, surface_id);
        IndexedMesh { mesh, bvh }
    }

    pub fn bvh(&self) -> &MeshBvh {
        &self.bvh
    }
}

impl Raycast for IndexedMesh {
    fn raycast(&self, origin: &Vec3, direction: &Vec3) -> Option<Hit> {
        self.bvh.raycast(origin, direction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference: test every triangle.
    fn brute_force(mesh: &TriangleMesh, o: &Vec3, d: &Vec3) -> Option<f64> {
        (0..mesh.faces.len())
            .filter_map(|i| {
                let [a, b, c] = mesh.triangle(i);
                let tri = Tri {
                    v0: a,
                    e1: b - a,
                    e2: c - a,
                };
                MeshBvh::intersect_tri(&tri, o, d)
            })
            .min_by(|a, b| a.total_cmp(b))
    }

    fn bumpy_grid(n: usize) -> TriangleMesh {
        let mut vertices = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let x = i as f64 / n as f64 - 0.5;
                let y = j as f64 / n as f64 - 0.5;
                vertices.push(Vec3::new(x, y, 2.0 + 0.1 * (7.0 * x).sin() * (5.0 * y).cos()));
            }
        }
        let mut faces = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = (j * n + i) as u32;
                let b = a + 1;
                let c = a + n as u32;
                faces.push([a, b, c]);
                faces.push([b, c + 1, c]);
            }
        }
        TriangleMesh::new(vertices, faces).unwrap()
    }

    #[test]
    fn bvh_matches_brute_force() {
        let mesh = bumpy_grid(40);
        let bvh = MeshBvh::build(&mesh, 7);
        for k in 0..500 {
            let a = k as f64 * 0.37;
            let d = Vec3::new(0.3 * a.sin(), 0.25 * (1.3 * a).cos(), 1.0).normalize();
            let o = Vec3::new(0.01 * a.cos(), 0.0, 0.0);
            let hit = bvh.raycast(&o, &d).map(|h| h.t);
            let reference = brute_force(&mesh, &o, &d);
            match (hit, reference) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                other => panic!("mismatch {other:?}"),
            }
        }
    }

    #[test]
    fn subdivision_keeps_surface() {
        let mesh = bumpy_grid(6);
        let fine = mesh.subdivided();
        assert_eq!(fine.faces.len(), mesh.faces.len() * 4);
        let coarse = MeshBvh::build(&mesh, 0);
        let dense = MeshBvh::build(&fine, 0);
        let d = Vec3::new(0.05, -0.02, 1.0).normalize();
        let a = coarse.raycast(&Vec3::zeros(), &d).unwrap();
        let b = dense.raycast(&Vec3::zeros(), &d).unwrap();
        assert!((a.point - b.point).norm() < 1e-12);
    }

    #[test]
    fn invalid_face_rejected() {
        assert!(TriangleMesh::new(vec![Vec3::zeros()], vec![[0, 0, 1]]).is_err());
    }
}
