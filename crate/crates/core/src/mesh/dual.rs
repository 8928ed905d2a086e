use super::{midpoint, polygon_area, Mesh, Point};

/// One centroid-to-edge-midpoint segment of a box boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxSegment {
    /// Edge midpoint, then element centroid.
    pub endpoints: [Point; 2],
    pub midpoint: Point,
    /// Unit normal pointing out of the owning box.
    pub normal: Point,
    pub length: f64,
    pub triangle: usize,
    /// Vertex whose box lies on the other side.
    pub neighbor: usize,
}

/// Control volumes `V_i` built by joining element centroids to edge midpoints.
#[derive(Clone, Debug)]
pub struct DualMesh {
    pub boxes: Vec<Vec<FluxSegment>>,
    /// `|V_i ∩ T|` for the three local vertices of each triangle.
    pub sub_volumes: Vec<[f64; 3]>,
    pub box_areas: Vec<f64>,
    /// `true` for interior vertices, whose boxes carry an equation.
    pub interior_mask: Vec<bool>,
}

/// The interior dual segment of `t` crossing local edge `j`, as
/// `(edge midpoint, centroid, unit normal from box j to box j+1)`.
pub fn internal_segment(mesh: &Mesh, t: usize, j: usize) -> (Point, Point, Point) {
    let p = mesh.corners(t);
    let m = midpoint(&p[j], &p[(j + 1) % 3]);
    let s = mesh.centroid(t);
    let d = [s[0] - m[0], s[1] - m[1]];
    let len = d[0].hypot(d[1]);
    let mut n = [d[1] / len, -d[0] / len];
    let e = [p[(j + 1) % 3][0] - p[j][0], p[(j + 1) % 3][1] - p[j][1]];
    if n[0] * e[0] + n[1] * e[1] < 0.0 {
        n = [-n[0], -n[1]];
    }
    (m, s, n)
}

/// `V_i ∩ T` for local vertex `k` of `t`, split into the two triangles
/// (vertex, next-edge midpoint, centroid) and (vertex, centroid, previous-edge
/// midpoint). Both are counter-clockwise.
pub fn sub_volume_triangles(mesh: &Mesh, t: usize, k: usize) -> [[Point; 3]; 2] {
    let p = mesh.corners(t);
    let v = p[k];
    let next = midpoint(&p[k], &p[(k + 1) % 3]);
    let prev = midpoint(&p[(k + 2) % 3], &p[k]);
    let s = mesh.centroid(t);
    [[v, next, s], [v, s, prev]]
}

/// Barycentric corners (w.r.t. the parent triangle) of the two pieces of
/// `V_k ∩ T`, each of area `|T|/6`.
pub fn sub_volume_barycentric(k: usize) -> [[[f64; 3]; 3]; 2] {
    let mut vertex = [0.0; 3];
    vertex[k] = 1.0;
    let mut next = [0.0; 3];
    next[k] = 0.5;
    next[(k + 1) % 3] = 0.5;
    let mut prev = [0.0; 3];
    prev[k] = 0.5;
    prev[(k + 2) % 3] = 0.5;
    let centroid = [1.0 / 3.0; 3];
    [[vertex, next, centroid], [vertex, centroid, prev]]
}

/// Area of the quadrilateral (vertex, next edge midpoint, centroid, previous
/// edge midpoint), built from edge vectors relative to the vertex so that the
/// relative rounding error does not grow as the triangle shrinks.
fn sub_volume_area(mesh: &Mesh, t: usize, k: usize) -> f64 {
    let p = mesh.corners(t);
    let v = p[k];
    let d1 = [p[(k + 1) % 3][0] - v[0], p[(k + 1) % 3][1] - v[1]];
    let d2 = [p[(k + 2) % 3][0] - v[0], p[(k + 2) % 3][1] - v[1]];
    let quad = [
        [0.0, 0.0],
        [0.5 * d1[0], 0.5 * d1[1]],
        [(d1[0] + d2[0]) / 3.0, (d1[1] + d2[1]) / 3.0],
        [0.5 * d2[0], 0.5 * d2[1]],
    ];
    polygon_area(&quad)
}

impl DualMesh {
    pub fn new(mesh: &Mesh) -> Self {
        let nv = mesh.num_vertices();
        let mut boxes: Vec<Vec<FluxSegment>> = vec![Vec::new(); nv];
        let mut sub_volumes = Vec::with_capacity(mesh.num_triangles());
        let mut box_areas = vec![0.0; nv];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for j in 0..3 {
                let (m, s, n) = internal_segment(mesh, t, j);
                let (a, b) = (tri.vertices[j], tri.vertices[(j + 1) % 3]);
                let seg = FluxSegment {
                    endpoints: [m, s],
                    midpoint: midpoint(&m, &s),
                    normal: n,
                    length: (s[0] - m[0]).hypot(s[1] - m[1]),
                    triangle: t,
                    neighbor: b,
                };
                boxes[a].push(seg);
                boxes[b].push(FluxSegment {
                    normal: [-n[0], -n[1]],
                    neighbor: a,
                    ..seg
                });
            }
            let mut areas = [0.0; 3];
            for (k, area) in areas.iter_mut().enumerate() {
                *area = sub_volume_area(mesh, t, k);
                box_areas[tri.vertices[k]] += *area;
            }
            sub_volumes.push(areas);
        }
        let interior_mask = mesh.boundary_vertices().iter().map(|&b| !b).collect();
        Self {
            boxes,
            sub_volumes,
            box_areas,
            interior_mask,
        }
    }

    pub fn num_interior(&self) -> usize {
        self.interior_mask.iter().filter(|&&i| i).count()
    }
}
