//! Plain-text formats: XYZ and ASCII PLY point clouds, OBJ and ASCII PLY
//! meshes, and the per-iteration diagnostics CSV.
//!
//! Coordinates are written in shortest round-trip form, so reading a file back
//! reproduces every `f64` exactly and identical meshes give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{FoilError, Result};
use crate::geometry::{TriMesh, Vec3};
use crate::integrator::IterationStats;

pub const DIAGNOSTICS_HEADER: &str =
    "iteration,max_displacement,mean_nn_distance,spring_energy,kinetic_energy,snapped_count,degenerate_face_count";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Xyz,
    Ply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

impl PointFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match extension(path).as_str() {
            "xyz" | "txt" => Ok(PointFormat::Xyz),
            "ply" => Ok(PointFormat::Ply),
            other => Err(FoilError::Config(format!(
                "cannot infer point format from extension {other:?} of {} (expected .xyz or .ply)",
                path.display()
            ))),
        }
    }
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match extension(path).as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(FoilError::Config(format!(
                "cannot infer mesh format from extension {other:?} of {} (expected .obj or .ply)",
                path.display()
            ))),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> FoilError {
    FoilError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite coordinate {tok:?}")));
    }
    Ok(v)
}

fn parse_triple<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec3> {
    let mut c = [0.0; 3];
    for (k, slot) in c.iter_mut().enumerate() {
        let tok = toks
            .next()
            .ok_or_else(|| parse_err(line, format!("expected 3 coordinates, found {k}")))?;
        *slot = parse_coord(tok, line)?;
    }
    Ok(Vec3::new(c[0], c[1], c[2]))
}

/// One `x y z` triple per line; blank lines and lines starting with `#` are skipped.
pub fn parse_xyz(text: &str) -> Result<Vec<Vec3>> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let p = parse_triple(&mut toks, i + 1)?;
        if toks.next().is_some() {
            return Err(parse_err(i + 1, "expected exactly 3 coordinates"));
        }
        points.push(p);
    }
    Ok(points)
}

struct PlyElement {
    name: String,
    count: usize,
    /// Scalar property names; list properties are recorded as `None`.
    props: Vec<Option<String>>,
}

struct PlyDoc<'a> {
    elements: Vec<PlyElement>,
    /// Body lines with their 1-based line numbers.
    body: Vec<(usize, &'a str)>,
}

fn parse_ply_doc(text: &str) -> Result<PlyDoc<'_>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "missing 'ply' magic line")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    let mut ended = false;
    for (n, line) in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => saw_format = true,
            ["format", other, ..] => {
                return Err(parse_err(
                    n,
                    format!("unsupported PLY format {other:?}; only ascii is read"),
                ));
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(n, format!("bad element count {count:?}")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", _, _, _name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(n, "property before any element"))?;
                el.props.push(None);
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(n, "property before any element"))?;
                el.props.push(Some(name.to_string()));
            }
            ["end_header"] => {
                ended = true;
                break;
            }
            _ => return Err(parse_err(n, format!("unrecognized header line {line:?}"))),
        }
    }
    if !saw_format {
        return Err(parse_err(1, "missing 'format ascii 1.0' line"));
    }
    if !ended {
        return Err(parse_err(text.lines().count(), "missing end_header"));
    }
    let body = lines.filter(|(_, l)| !l.is_empty()).collect();
    Ok(PlyDoc { elements, body })
}

struct PlyData {
    vertices: Vec<Vec3>,
    faces: Vec<Vec<usize>>,
}

fn parse_ply(text: &str) -> Result<PlyData> {
    let doc = parse_ply_doc(text)?;
    let mut body = doc.body.into_iter();
    let mut data = PlyData {
        vertices: Vec::new(),
        faces: Vec::new(),
    };
    let mut saw_vertex = false;
    for el in &doc.elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let axes = if is_vertex {
            saw_vertex = true;
            let find = |a: &str| el.props.iter().position(|p| p.as_deref() == Some(a));
            match (find("x"), find("y"), find("z")) {
                (Some(x), Some(y), Some(z)) => Some([x, y, z]),
                _ => return Err(parse_err(1, "vertex element lacks x, y, z properties")),
            }
        } else {
            None
        };
        for _ in 0..el.count {
            let (n, line) = body
                .next()
                .ok_or_else(|| parse_err(text.lines().count(), format!("truncated {} element", el.name)))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if let Some(axes) = axes {
                if toks.len() < el.props.len() {
                    return Err(parse_err(n, format!("expected {} values", el.props.len())));
                }
                let [x, y, z] = axes;
                data.vertices.push(Vec3::new(
                    parse_coord(toks[x], n)?,
                    parse_coord(toks[y], n)?,
                    parse_coord(toks[z], n)?,
                ));
            } else if is_face {
                let count: usize = toks
                    .first()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(n, "face line must start with a vertex count"))?;
                if toks.len() < count + 1 {
                    return Err(parse_err(n, format!("face lists {count} vertices but has fewer")));
                }
                let idx = toks[1..=count]
                    .iter()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| parse_err(n, format!("bad vertex index {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                data.faces.push(idx);
            }
        }
    }
    if !saw_vertex {
        return Err(parse_err(1, "no vertex element"));
    }
    Ok(data)
}

/// Vertices of an ASCII PLY file; other elements are ignored.
pub fn parse_ply_points(text: &str) -> Result<Vec<Vec3>> {
    Ok(parse_ply(text)?.vertices)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| FoilError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| FoilError::io(path, e))
}

pub fn load_points(path: &Path, format: PointFormat) -> Result<Vec<Vec3>> {
    let text = read_text(path)?;
    let points = match format {
        PointFormat::Xyz => parse_xyz(&text)?,
        PointFormat::Ply => parse_ply_points(&text)?,
    };
    if points.is_empty() {
        return Err(FoilError::InsufficientInput(format!(
            "{} contains no points",
            path.display()
        )));
    }
    Ok(points)
}

fn push_vertex(out: &mut String, prefix: &str, p: &Vec3) {
    let _ = writeln!(out, "{prefix}{:?} {:?} {:?}", p.x, p.y, p.z);
}

pub fn format_points(points: &[Vec3], format: PointFormat) -> String {
    let mut out = String::new();
    if format == PointFormat::Ply {
        let _ = write!(
            out,
            "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
            points.len()
        );
    }
    for p in points {
        push_vertex(&mut out, "", p);
    }
    out
}

pub fn write_points(points: &[Vec3], path: &Path, format: PointFormat) -> Result<()> {
    write_text(path, &format_points(points, format))
}

pub fn format_mesh(mesh: &TriMesh, format: MeshFormat) -> String {
    let mut out = String::new();
    match format {
        MeshFormat::Obj => {
            for p in &mesh.positions {
                push_vertex(&mut out, "v ", p);
            }
            for [a, b, c] in &mesh.faces {
                let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
            }
        }
        MeshFormat::Ply => {
            let _ = write!(
                out,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
                 element face {}\nproperty list uchar int vertex_indices\nend_header\n",
                mesh.vertex_count(),
                mesh.face_count()
            );
            for p in &mesh.positions {
                push_vertex(&mut out, "", p);
            }
            for [a, b, c] in &mesh.faces {
                let _ = writeln!(out, "3 {a} {b} {c}");
            }
        }
    }
    out
}

pub fn write_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<()> {
    write_text(path, &format_mesh(mesh, format))
}

/// Polygons with more than three corners are fan-triangulated.
fn triangulate(poly: &[usize], line: usize, faces: &mut Vec<[usize; 3]>) -> Result<()> {
    if poly.len() < 3 {
        return Err(parse_err(line, format!("face with {} vertices", poly.len())));
    }
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
    Ok(())
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => positions.push(parse_triple(toks, n)?),
            Some("f") => {
                let poly = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let k: i64 = head
                            .parse()
                            .map_err(|_| parse_err(n, format!("bad face index {t:?}")))?;
                        let idx = if k > 0 { k - 1 } else { positions.len() as i64 + k };
                        if k == 0 || idx < 0 {
                            return Err(parse_err(n, format!("face index {k} out of range")));
                        }
                        Ok(idx as usize)
                    })
                    .collect::<Result<Vec<_>>>()?;
                triangulate(&poly, n, &mut faces)?;
            }
            _ => {}
        }
    }
    TriMesh::new(positions, faces)
}

pub fn parse_ply_mesh(text: &str) -> Result<TriMesh> {
    let data = parse_ply(text)?;
    let mut faces = Vec::new();
    for poly in &data.faces {
        triangulate(poly, 0, &mut faces)?;
    }
    TriMesh::new(data.vertices, faces)
}

pub fn read_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh> {
    let text = read_text(path)?;
    match format {
        MeshFormat::Obj => parse_obj(&text),
        MeshFormat::Ply => parse_ply_mesh(&text),
    }
}

/// Header plus one row per iteration; floats carry 17 significant digits.
pub fn format_diagnostics(history: &[IterationStats]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for s in history {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            s.iteration,
            s.max_displacement,
            s.mean_nn_distance,
            s.spring_energy,
            s.kinetic_energy,
            s.snapped_count,
            s.degenerate_face_count
        );
    }
    out
}

pub fn write_diagnostics(history: &[IterationStats], path: &Path) -> Result<()> {
    write_text(path, &format_diagnostics(history))
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<IterationStats>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == DIAGNOSTICS_HEADER => {}
        _ => return Err(parse_err(1, "unexpected diagnostics header")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let n = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(parse_err(n, format!("expected 7 fields, found {}", f.len())));
            }
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| parse_err(n, format!("bad integer {s:?}")))
            };
            let real = |s: &str| s.parse::<f64>().map_err(|_| parse_err(n, format!("bad number {s:?}")));
            Ok(IterationStats {
                iteration: int(f[0])?,
                max_displacement: real(f[1])?,
                mean_nn_distance: real(f[2])?,
                spring_energy: real(f[3])?,
                kinetic_energy: real(f[4])?,
                snapped_count: int(f[5])?,
                degenerate_face_count: int(f[6])?,
            })
        })
        .collect()
}

pub fn snapshot_path(dir: &Path, iteration: usize) -> PathBuf {
    dir.join(format!("snapshot_{iteration:06}.obj"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_basic() {
        let pts = parse_xyz("0 0 0\n1 0 0\n").unwrap();
        assert_eq!(pts, vec![Vec3::zeros(), Vec3::x()]);
        let pts = parse_xyz("# header\n\n  1 2 3  \n# tail\n").unwrap();
        assert_eq!(pts, vec![Vec3::new(1.0, 2.0, 3.0)]);
    }

    #[test]
    fn xyz_missing_coordinate_names_line() {
        match parse_xyz("1 2\n") {
            Err(FoilError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        match parse_xyz("0 0 0\n# c\n1 x 2\n") {
            Err(FoilError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_xyz("nan 0 0\n").is_err());
        assert!(parse_xyz("1 2 3 4\n").is_err());
    }

    #[test]
    fn single_triangle_obj() {
        let mesh = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let text = format_mesh(&mesh, MeshFormat::Obj);
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(
            text.lines().filter(|l| l.starts_with("f ")).collect::<Vec<_>>(),
            vec!["f 1 2 3"]
        );
        assert_eq!(parse_obj(&text).unwrap(), mesh);
    }

    #[test]
    fn ply_mesh_round_trip() {
        let mesh = TriMesh::new(
            vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.0 / 3.0, 0.0, -2.5e-9), Vec3::y()],
            vec![[0, 2, 1]],
        )
        .unwrap();
        let text = format_mesh(&mesh, MeshFormat::Ply);
        assert_eq!(parse_ply_mesh(&text).unwrap(), mesh);
        assert_eq!(parse_ply_points(&text).unwrap(), mesh.positions);
    }

    #[test]
    fn ply_with_extra_properties() {
        let text = "ply\nformat ascii 1.0\ncomment x\nelement vertex 2\nproperty float nx\nproperty float x\n\
                    property float y\nproperty float z\nend_header\n9 1 2 3\n9 4 5 6\n";
        assert_eq!(
            parse_ply_points(text).unwrap(),
            vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)]
        );
        assert!(parse_ply_points("ply\nformat binary_little_endian 1.0\nend_header\n").is_err());
    }

    #[test]
    fn obj_quads_and_slashes() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
    }

    #[test]
    fn diagnostics_lines() {
        assert_eq!(format_diagnostics(&[]), format!("{DIAGNOSTICS_HEADER}\n"));
        let row = IterationStats {
            iteration: 1,
            max_displacement: 0.1,
            mean_nn_distance: 0.2,
            spring_energy: 1.0 / 3.0,
            kinetic_energy: 0.0,
            snapped_count: 2,
            degenerate_face_count: 0,
        };
        let hist: Vec<_> = (1..=3)
            .map(|i| IterationStats {
                iteration: i,
                ..row.clone()
            })
            .collect();
        let text = format_diagnostics(&hist);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(parse_diagnostics(&text).unwrap(), hist);
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_path(Path::new("d"), 42), Path::new("d/snapshot_000042.obj"));
    }
}
