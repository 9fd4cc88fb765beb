use serde::{Deserialize, Serialize};

use super::{MeshBuilder, Point, PolyMesh};
use crate::error::{Error, Result};

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxDomain {
    pub fn unit() -> Self {
        Self {
            min: [0.0; 3],
            max: [1.0; 3],
        }
    }

    fn check(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.max[i] > self.min[i]) || !self.min[i].is_finite() || !self.max[i].is_finite()
            {
                return Err(Error::InvalidArgument(format!(
                    "degenerate box along axis {i}: [{}, {}]",
                    self.min[i], self.max[i]
                )));
            }
        }
        Ok(())
    }
}

impl Default for BoxDomain {
    fn default() -> Self {
        Self::unit()
    }
}

struct Lattice {
    counts: [usize; 3],
}

impl Lattice {
    fn new(counts: [usize; 3]) -> Result<Self> {
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!(
                "cell counts must be positive, got {counts:?}"
            )));
        }
        Ok(Self { counts })
    }

    fn points(&self, domain: &BoxDomain) -> Vec<Point> {
        let [nx, ny, nz] = self.counts;
        let coord = |axis: usize, i: usize, n: usize| {
            // exact at both ends of the box
            let t = i as f64 / n as f64;
            domain.min[axis] + t * (domain.max[axis] - domain.min[axis])
        };
        let mut pts = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    pts.push(Point::new(coord(0, i, nx), coord(1, j, ny), coord(2, k, nz)));
                }
            }
        }
        pts
    }

    fn vertex(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.counts;
        i + (nx + 1) * (j + (ny + 1) * k)
    }

    /// Corner `c` of cube `(i, j, k)`, bit 0 = x, bit 1 = y, bit 2 = z.
    fn corner(&self, i: usize, j: usize, k: usize, c: usize) -> usize {
        self.vertex(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
    }

    fn cubes(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let [nx, ny, nz] = self.counts;
        (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j, k))))
    }
}

/// Quad faces of a cube given its 8 corners (bit-indexed as in `Lattice`).
pub(crate) fn cube_faces(c: [usize; 8]) -> Vec<Vec<usize>> {
    vec![
        vec![c[0], c[2], c[6], c[4]],
        vec![c[1], c[3], c[7], c[5]],
        vec![c[0], c[1], c[5], c[4]],
        vec![c[2], c[3], c[7], c[6]],
        vec![c[0], c[1], c[3], c[2]],
        vec![c[4], c[5], c[7], c[6]],
    ]
}

/// Structured mesh of `nx × ny × nz` cubes.
pub fn generate_hex(counts: [usize; 3], domain: &BoxDomain) -> Result<PolyMesh> {
    domain.check()?;
    let lat = Lattice::new(counts)?;
    let mut b = MeshBuilder::new(lat.points(domain));
    for (i, j, k) in lat.cubes() {
        let c: [usize; 8] = std::array::from_fn(|q| lat.corner(i, j, k, q));
        b.add_convex_cell(&cube_faces(c))?;
    }
    b.build()
}

/// Each cube split into six tetrahedra around its `(0,0,0)–(1,1,1)` diagonal.
/// All cubes use the same diagonal direction, so the split is conforming.
pub fn generate_tet(counts: [usize; 3], domain: &BoxDomain) -> Result<PolyMesh> {
    domain.check()?;
    let lat = Lattice::new(counts)?;
    let mut b = MeshBuilder::new(lat.points(domain));
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for (i, j, k) in lat.cubes() {
        for p in PERMS {
            let b1 = 1 << p[0];
            let b2 = b1 | (1 << p[1]);
            let t = [
                lat.corner(i, j, k, 0),
                lat.corner(i, j, k, b1),
                lat.corner(i, j, k, b2),
                lat.corner(i, j, k, 7),
            ];
            b.add_convex_cell(&[
                vec![t[0], t[1], t[2]],
                vec![t[0], t[1], t[3]],
                vec![t[0], t[2], t[3]],
                vec![t[1], t[2], t[3]],
            ])?;
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube_counts() {
        let m = generate_hex([1, 1, 1], &BoxDomain::unit()).unwrap();
        assert_eq!(
            (m.n_vertices(), m.n_edges(), m.n_faces(), m.n_cells()),
            (8, 12, 6, 1)
        );
    }

    #[test]
    fn hex_counts_follow_closed_forms() {
        for n in 1..=4 {
            let m = generate_hex([n; 3], &BoxDomain::unit()).unwrap();
            assert_eq!(m.n_vertices(), (n + 1).pow(3));
            assert_eq!(m.n_edges(), 3 * n * (n + 1) * (n + 1));
            assert_eq!(m.n_faces(), 3 * n * n * (n + 1));
            assert_eq!(m.n_cells(), n.pow(3));
        }
    }

    #[test]
    fn hex_dof_totals() {
        let m2 = generate_hex([2; 3], &BoxDomain::unit()).unwrap();
        assert_eq!(m2.n_edges() + m2.n_faces(), 90);
        let m8 = generate_hex([8; 3], &BoxDomain::unit()).unwrap();
        assert_eq!(m8.n_edges(), 1944);
        assert_eq!(m8.n_faces(), 1728);
        assert_eq!(m8.total_dofs(), 3672);
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(matches!(
            generate_hex([0, 1, 1], &BoxDomain::unit()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(generate_tet([1, 0, 1], &BoxDomain::unit()).is_err());
    }

    #[test]
    fn degenerate_box_is_rejected() {
        let d = BoxDomain {
            min: [0.0; 3],
            max: [1.0, 0.0, 1.0],
        };
        assert!(generate_hex([1; 3], &d).is_err());
    }

    #[test]
    fn tet_split_of_one_cube() {
        let m = generate_tet([1; 3], &BoxDomain::unit()).unwrap();
        assert_eq!(m.n_cells(), 6);
        assert!(m.cells().iter().all(|c| c.len() == 4));
        assert!(m.faces().iter().all(|f| f.len() == 3));
    }

    #[test]
    fn axis_edges_point_along_positive_axes() {
        let m = generate_hex([2; 3], &BoxDomain::unit()).unwrap();
        for &[a, b] in m.edges() {
            let d = m.vertices()[b] - m.vertices()[a];
            assert!(d.iter().all(|&x| x >= 0.0));
        }
    }
}
