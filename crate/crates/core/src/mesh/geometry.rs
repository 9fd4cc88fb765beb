use super::{Point, PolyMesh};
use crate::error::{Error, Result};

/// Per-entity geometric quantities. Face normals follow the stored loop
/// orientation.
#[derive(Debug, Clone)]
pub struct GeometricCache {
    pub edge_length: Vec<f64>,
    pub edge_tangent: Vec<Point>,
    pub edge_midpoint: Vec<Point>,
    pub face_area: Vec<f64>,
    pub face_normal: Vec<Point>,
    pub face_centroid: Vec<Point>,
    pub cell_volume: Vec<f64>,
    pub cell_centroid: Vec<Point>,
    pub cell_diameter: Vec<f64>,
    /// Largest cell diameter.
    pub h: f64,
}

pub fn compute_geometry(mesh: &PolyMesh) -> Result<GeometricCache> {
    let v = mesh.vertices();

    let mut edge_length = Vec::with_capacity(mesh.n_edges());
    let mut edge_tangent = Vec::with_capacity(mesh.n_edges());
    let mut edge_midpoint = Vec::with_capacity(mesh.n_edges());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let d = v[b] - v[a];
        let len = d.norm();
        if !(len > 0.0) {
            return Err(Error::Geometry(format!("edge {e} has zero length")));
        }
        edge_length.push(len);
        edge_tangent.push(d / len);
        edge_midpoint.push((v[a] + v[b]) * 0.5);
    }

    let mut face_area = Vec::with_capacity(mesh.n_faces());
    let mut face_normal = Vec::with_capacity(mesh.n_faces());
    let mut face_centroid = Vec::with_capacity(mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let pts: Vec<Point> = mesh.face_vertices(f).into_iter().map(|i| v[i]).collect();
        let (area, normal, centroid) = polygon_geometry(&pts);
        let perimeter: f64 = mesh.faces()[f]
            .iter()
            .map(|e| edge_length[e.index])
            .sum();
        if !(area > 1e-14 * perimeter * perimeter) {
            return Err(Error::Geometry(format!("face {f} has zero area")));
        }
        face_area.push(area);
        face_normal.push(normal);
        face_centroid.push(centroid);
    }

    let mut cell_volume = Vec::with_capacity(mesh.n_cells());
    let mut cell_centroid = Vec::with_capacity(mesh.n_cells());
    let mut cell_diameter = Vec::with_capacity(mesh.n_cells());
    for (c, faces) in mesh.cells().iter().enumerate() {
        // divergence theorem with the field x/3
        let volume: f64 = faces
            .iter()
            .map(|f| {
                f.sign_f64() * face_area[f.index] * face_normal[f.index].dot(&face_centroid[f.index])
            })
            .sum::<f64>()
            / 3.0;
        if !(volume > 0.0) {
            return Err(Error::Geometry(format!(
                "cell {c} has non-positive volume {volume:e}"
            )));
        }

        let verts = mesh.cell_vertices(c);
        let reference = verts.iter().map(|&i| v[i]).sum::<Point>() / verts.len() as f64;
        // first moment from signed tetrahedra (reference, face fan triangle)
        let mut moment = Point::zeros();
        let mut tet_volume = 0.0;
        for f in faces {
            let loop_pts: Vec<Point> = mesh
                .face_vertices(f.index)
                .into_iter()
                .map(|i| v[i])
                .collect();
            let fan = face_centroid[f.index];
            let k = loop_pts.len();
            for i in 0..k {
                let (a, b) = (loop_pts[i], loop_pts[(i + 1) % k]);
                let vol = f.sign_f64()
                    * (fan - reference).dot(&(a - reference).cross(&(b - reference)))
                    / 6.0;
                tet_volume += vol;
                moment += (reference + fan + a + b) * (vol / 4.0);
            }
        }
        let centroid = if tet_volume.abs() > 0.0 {
            moment / tet_volume
        } else {
            reference
        };

        let mut diam: f64 = 0.0;
        for (i, &a) in verts.iter().enumerate() {
            for &b in &verts[i + 1..] {
                diam = diam.max((v[a] - v[b]).norm());
            }
        }
        cell_volume.push(volume);
        cell_centroid.push(centroid);
        cell_diameter.push(diam);
    }

    let h = cell_diameter.iter().copied().fold(0.0, f64::max);
    Ok(GeometricCache {
        edge_length,
        edge_tangent,
        edge_midpoint,
        face_area,
        face_normal,
        face_centroid,
        cell_volume,
        cell_centroid,
        cell_diameter,
        h,
    })
}

/// Area, unit normal and centroid of a planar polygon, via a fan from the
/// vertex average.
fn polygon_geometry(pts: &[Point]) -> (f64, Point, Point) {
    let k = pts.len();
    let center = pts.iter().sum::<Point>() / k as f64;
    let mut area_vec = Point::zeros();
    let mut tris = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (pts[i], pts[(i + 1) % k]);
        let av = (a - center).cross(&(b - center)) * 0.5;
        area_vec += av;
        tris.push((av, (center + a + b) / 3.0));
    }
    let area = area_vec.norm();
    if area == 0.0 {
        return (0.0, Point::zeros(), center);
    }
    let normal = area_vec / area;
    let mut centroid = Point::zeros();
    for (av, c) in &tris {
        centroid += c * av.dot(&normal);
    }
    (area, normal, centroid / area)
}
