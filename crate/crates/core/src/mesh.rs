//! Uniform conforming triangulations of the unit square Ω = (0,1)².
//!
//! Every N×N grid cell is split along its lower-left → upper-right diagonal,
//! giving (N+1)² vertices, 2N² counterclockwise triangles and 3N² + 2N faces.
//! Vertices are numbered row-major; triangles and faces are enumerated in a
//! fixed deterministic order, so the mesh is a pure function of N.

use std::collections::HashMap;

/// Sentinel for "no element": the minus side of a boundary face.
pub const BOUNDARY: usize = usize::MAX;

/// One mesh face (edge) with orientation and adjacency data.
#[derive(Debug, Clone)]
pub struct Face {
    /// Endpoint vertex indices, ordered counterclockwise as seen from `t_plus`.
    pub vertices: [usize; 2],
    /// The element from which the face was first enumerated.
    pub t_plus: usize,
    /// The element on the other side, or [`BOUNDARY`].
    pub t_minus: usize,
    /// Unit normal pointing from `t_plus` into `t_minus` (outward on the boundary).
    pub normal: [f64; 2],
    /// Face length |F|.
    pub length: f64,
    /// Face barycentre x_F.
    pub midpoint: [f64; 2],
}

impl Face {
    /// Whether the face lies on ∂Ω.
    pub fn is_boundary(&self) -> bool {
        self.t_minus == BOUNDARY
    }
}

/// Structured triangulation of the unit square.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Subdivisions per side.
    pub n: usize,
    /// Vertex coordinates, row-major: vertex (i, j) ↦ j(N+1) + i at (i/N, j/N).
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Faces with adjacency and orientation.
    pub faces: Vec<Face>,
    /// Per-triangle face indices; local face k is opposite local vertex k.
    pub tri_faces: Vec<[usize; 3]>,
    /// Per-element area |T|.
    pub area: Vec<f64>,
    /// Per-element diameter h_T.
    pub diameter: Vec<f64>,
    /// Per-element barycentre x_T.
    pub centroid: Vec<[f64; 2]>,
    /// Whether each vertex lies on ∂Ω.
    pub boundary_vertex: Vec<bool>,
}

/// Build the uniform N×N triangulation.
pub fn build_uniform(n: usize) -> Mesh {
    assert!(n >= 1, "mesh subdivision count must be at least 1");
    let np = n + 1;
    let h = 1.0 / n as f64;

    let mut vertices = Vec::with_capacity(np * np);
    let mut boundary_vertex = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([i as f64 * h, j as f64 * h]);
            boundary_vertex.push(i == 0 || i == n || j == 0 || j == n);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * np + i;
            let v10 = v00 + 1;
            let v01 = v00 + np;
            let v11 = v01 + 1;
            // both triangles share the v00–v11 diagonal and are counterclockwise
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut faces: Vec<Face> = Vec::with_capacity(3 * n * n + 2 * n);
    let mut tri_faces = vec![[usize::MAX; 3]; triangles.len()];
    let mut index_of_edge: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            match index_of_edge.get(&key) {
                Some(&f) => {
                    assert!(
                        faces[f].t_minus == BOUNDARY,
                        "face shared by more than two elements"
                    );
                    faces[f].t_minus = t;
                    tri_faces[t][k] = f;
                }
                None => {
                    let pa = vertices[a];
                    let pb = vertices[b];
                    let d = [pb[0] - pa[0], pb[1] - pa[1]];
                    let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    // outward normal of the counterclockwise triangle t on edge a→b
                    let normal = [d[1] / length, -d[0] / length];
                    let f = faces.len();
                    faces.push(Face {
                        vertices: [a, b],
                        t_plus: t,
                        t_minus: BOUNDARY,
                        normal,
                        length,
                        midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                    });
                    index_of_edge.insert(key, f);
                    tri_faces[t][k] = f;
                }
            }
        }
    }

    let mut area = Vec::with_capacity(triangles.len());
    let mut diameter = Vec::with_capacity(triangles.len());
    let mut centroid = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let [p0, p1, p2] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        assert!(twice > 0.0, "triangle is not counterclockwise");
        area.push(0.5 * twice);
        let e = |a: [f64; 2], b: [f64; 2]| ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        diameter.push(e(p0, p1).max(e(p1, p2)).max(e(p2, p0)));
        centroid.push([(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]);
    }

    Mesh {
        n,
        vertices,
        triangles,
        faces,
        tri_faces,
        area,
        diameter,
        centroid,
        boundary_vertex,
    }
}

impl Mesh {
    /// Orientation and geometry of one face; panics on an out-of-range index.
    pub fn face_patch(&self, face: usize) -> &Face {
        &self.faces[face]
    }

    /// Coordinates of the three vertices of triangle `t`.
    pub fn tri_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Sign of the stored face orientation relative to element `t`:
    /// +1 if `t` is the plus element (normal points outward of `t`), −1 otherwise.
    pub fn face_sign(&self, face: usize, t: usize) -> f64 {
        let f = &self.faces[face];
        if f.t_plus == t {
            1.0
        } else {
            debug_assert_eq!(f.t_minus, t);
            -1.0
        }
    }

    /// Gradients of the three barycentric coordinates on triangle `t`
    /// (constant vectors; gradient k belongs to the hat of local vertex k).
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [p0, p1, p2] = self.tri_coords(t);
        let inv2a = 1.0 / (2.0 * self.area[t]);
        // ∇λ_k = rot90(p_{k+2} − p_{k+1}) / (2|T|) with rot90(x, y) = (−y, x)
        let g = |a: [f64; 2], b: [f64; 2]| [(b[1] - a[1]) * inv2a, (a[0] - b[0]) * inv2a];
        [g(p2, p1), g(p0, p2), g(p1, p0)]
    }

    /// Barycentric coordinates of point `x` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let [p0, p1, p2] = self.tri_coords(t);
        let inv2a = 1.0 / (2.0 * self.area[t]);
        let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        };
        [
            cross(p1, p2, x) * inv2a,
            cross(p2, p0, x) * inv2a,
            cross(p0, p1, x) * inv2a,
        ]
    }

    /// Plain-text dump with `vertices`, `triangles` and `faces` sections,
    /// one entity per line; intended for debugging only.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(s, "{} {:.17e} {:.17e}", i, v[0], v[1]).unwrap();
        }
        writeln!(s, "triangles {}", self.triangles.len()).unwrap();
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(s, "{} {} {} {}", t, tri[0], tri[1], tri[2]).unwrap();
        }
        writeln!(s, "faces {}", self.faces.len()).unwrap();
        for (f, face) in self.faces.iter().enumerate() {
            let minus = if face.is_boundary() {
                "boundary".to_string()
            } else {
                face.t_minus.to_string()
            };
            writeln!(
                s,
                "{} {} {} {} {}",
                f, face.vertices[0], face.vertices[1], face.t_plus, minus
            )
            .unwrap();
        }
        s
    }
}
