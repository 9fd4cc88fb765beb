//! PMESH: line-oriented text format for oriented polyhedral meshes.
//!
//! ```text
//! pmesh 1
//! <nv> <ne> <nf> <nc>
//! x y z                 (nv lines)
//! v1 v2                 (ne lines, 0-based vertices)
//! k s1*e1 ... sk*ek     (nf lines, signed 1-based edges)
//! k s1*f1 ... sk*fk     (nc lines, signed 1-based faces, + = outward)
//! ```
//! `#` starts a comment. Boundary flags are derived, never stored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{Oriented, Point, PolyMesh};
use crate::error::{Error, Result};

pub fn save_mesh(mesh: &PolyMesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn write_mesh(mesh: &PolyMesh) -> String {
    let mut s = String::new();
    s.push_str("pmesh 1\n");
    let _ = writeln!(
        s,
        "{} {} {} {}",
        mesh.n_vertices(),
        mesh.n_edges(),
        mesh.n_faces(),
        mesh.n_cells()
    );
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    for [a, b] in mesh.edges() {
        let _ = writeln!(s, "{a} {b}");
    }
    let signed_line = |s: &mut String, list: &[Oriented]| {
        let _ = write!(s, "{}", list.len());
        for o in list {
            let _ = write!(s, " {}", i64::from(o.sign) * (o.index as i64 + 1));
        }
        s.push('\n');
    };
    for f in mesh.faces() {
        signed_line(&mut s, f);
    }
    for c in mesh.cells() {
        signed_line(&mut s, c);
    }
    s
}

pub fn load_mesh(path: &Path) -> Result<PolyMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: PathBuf,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, plus its 1-based number.
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                self.last = i + 1;
                return Ok((i + 1, toks));
            }
        }
        Err(self.err(self.last + 1, "unexpected end of file"))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn number<T: std::str::FromStr>(&self, line: usize, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(line, format!("cannot parse `{tok}`")))
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<PolyMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path: path.to_path_buf(),
        last: 0,
    };

    let (ln, head) = lines.next()?;
    if head != ["pmesh", "1"] {
        return Err(lines.err(ln, "expected header `pmesh 1`"));
    }
    let (ln, counts) = lines.next()?;
    if counts.len() != 4 {
        return Err(lines.err(ln, "expected four entity counts `nv ne nf nc`"));
    }
    let mut n = [0usize; 4];
    for (slot, tok) in n.iter_mut().zip(&counts) {
        *slot = lines.number(ln, tok)?;
    }
    let [nv, ne, nf, nc] = n;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = lines.next()?;
        if t.len() != 3 {
            return Err(lines.err(ln, "vertex line needs three coordinates"));
        }
        let c: [f64; 3] = [
            lines.number(ln, t[0])?,
            lines.number(ln, t[1])?,
            lines.number(ln, t[2])?,
        ];
        if c.iter().any(|x| !x.is_finite()) {
            return Err(lines.err(ln, "non-finite coordinate"));
        }
        vertices.push(Point::new(c[0], c[1], c[2]));
    }

    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, t) = lines.next()?;
        if t.len() != 2 {
            return Err(lines.err(ln, "edge line needs two vertex indices"));
        }
        let a: usize = lines.number(ln, t[0])?;
        let b: usize = lines.number(ln, t[1])?;
        if a >= nv || b >= nv {
            return Err(lines.err(ln, format!("vertex index out of range (nv = {nv})")));
        }
        if a == b {
            return Err(lines.err(ln, "edge endpoints coincide"));
        }
        edges.push([a, b]);
    }

    let mut signed_block = |count: usize, bound: usize, what: &str| -> Result<Vec<(usize, Vec<Oriented>)>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, t) = lines.next()?;
            let k: usize = lines.number(ln, t[0])?;
            if k < 3 || t.len() != k + 1 {
                return Err(lines.err(
                    ln,
                    format!("expected {k} signed {what} indices (at least 3)"),
                ));
            }
            let mut list = Vec::with_capacity(k);
            for tok in &t[1..] {
                let s: i64 = lines.number(ln, tok)?;
                let idx = s.unsigned_abs() as usize;
                if s == 0 || idx > bound {
                    return Err(lines.err(
                        ln,
                        format!("{what} index {s} out of range (1..={bound})"),
                    ));
                }
                list.push(Oriented::new(idx - 1, if s > 0 { 1 } else { -1 }));
            }
            out.push((ln, list));
        }
        Ok(out)
    };

    let faces = signed_block(nf, ne, "edge")?;
    let cells = signed_block(nc, nf, "face")?;

    if let Ok((ln, _)) = lines.next() {
        return Err(lines.err(ln, "trailing content after the last cell"));
    }

    for (ln, face) in &faces {
        if !loop_closed(&vertices, &edges, face) {
            return Err(lines.err(*ln, "face edge loop is not closed"));
        }
    }

    PolyMesh::new(
        vertices,
        edges,
        faces.into_iter().map(|(_, f)| f).collect(),
        cells.into_iter().map(|(_, c)| c).collect(),
    )
}

fn loop_closed(vertices: &[Point], edges: &[[usize; 2]], face: &[Oriented]) -> bool {
    let ends = |o: &Oriented| {
        let [a, b] = edges[o.index];
        if o.sign > 0 {
            (a, b)
        } else {
            (b, a)
        }
    };
    let k = face.len();
    let chained = (0..k).all(|i| ends(&face[i]).1 == ends(&face[(i + 1) % k]).0);
    let mut sum = Point::zeros();
    let mut perimeter = 0.0;
    for o in face {
        let [a, b] = edges[o.index];
        let d = vertices[b] - vertices[a];
        sum += d * o.sign_f64();
        perimeter += d.norm();
    }
    chained && sum.norm() <= 1e-12 * perimeter
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_hex, validate_topology, BoxDomain};

    const TET: &str = "\
# single tetrahedron
pmesh 1
4 6 4 1
0 0 0
1 0 0
0 1 0
0 0 1
0 1
1 2
0 2   # third edge
0 3
1 3
2 3
3 1 2 -3
3 1 5 -4
3 2 6 -5
3 3 6 -4
4 -1 2 3 -4
";

    #[test]
    fn hand_written_tetrahedron() {
        let m = parse_mesh(TET, Path::new("tet.pmesh")).unwrap();
        assert_eq!(
            (m.n_vertices(), m.n_edges(), m.n_faces(), m.n_cells()),
            (4, 6, 4, 1)
        );
        let report = validate_topology(&m);
        assert!(report.passed(), "{report}");
        assert!((0..4).all(|f| m.is_boundary_face(f)));
    }

    #[test]
    fn round_trip_is_identity() {
        let m = generate_hex([1; 3], &BoxDomain::unit()).unwrap();
        let back = parse_mesh(&write_mesh(&m), Path::new("x")).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn out_of_range_edge_reports_line() {
        let bad = TET.replace("3 1 2 -3\n", "3 1 2 -9\n");
        match parse_mesh(&bad, Path::new("bad.pmesh")) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 14);
                assert!(msg.contains("out of range"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn open_face_loop_is_rejected() {
        let bad = TET.replace("3 1 2 -3\n", "3 1 2 3\n");
        assert!(matches!(
            parse_mesh(&bad, Path::new("bad.pmesh")),
            Err(Error::Parse { line: 14, .. })
        ));
    }

    #[test]
    fn malformed_counts() {
        let bad = TET.replace("4 6 4 1", "4 6 4");
        assert!(matches!(
            parse_mesh(&bad, Path::new("bad.pmesh")),
            Err(Error::Parse { line: 3, .. })
        ));
        let short = TET.replace("4 6 4 1", "5 6 4 1");
        assert!(parse_mesh(&short, Path::new("bad.pmesh")).is_err());
    }
}
