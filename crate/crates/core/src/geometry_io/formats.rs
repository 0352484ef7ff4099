use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::error::{BitrError, Result};
use crate::tensor_field::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    /// Whitespace-separated rows of 3 (points) or 6 (points and normals) values.
    Xyz,
    /// ASCII PLY; only the vertex element is read.
    Ply,
    /// Wavefront OBJ `v` records.
    Obj,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        ext.parse()
    }
}

impl FromStr for CloudFormat {
    type Err = BitrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz" | "txt" | "pts" => Ok(CloudFormat::Xyz),
            "ply" => Ok(CloudFormat::Ply),
            "obj" => Ok(CloudFormat::Obj),
            other => Err(BitrError::UnknownFormat(other.to_owned())),
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> BitrError {
    BitrError::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

fn numbers(path: &Path, line: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("not a number: {f:?}")))
        })
        .collect()
}

/// Loads a cloud; the format is taken from the extension when not given.
pub fn load_cloud(path: &Path, format: Option<CloudFormat>) -> Result<PointCloud<f64>> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let text = fs::read_to_string(path)?;
    match format {
        CloudFormat::Xyz => parse_xyz(path, &text),
        CloudFormat::Ply => parse_ply(path, &text),
        CloudFormat::Obj => parse_obj(path, &text).map(|m| PointCloud::new(m.vertices)),
    }
}

fn parse_xyz(path: &Path, text: &str) -> Result<PointCloud<f64>> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        let lineno = idx + 1;
        if fields.len() != 3 && fields.len() != 6 {
            return Err(parse_err(path, lineno, format!("expected 3 or 6 columns, found {}", fields.len())));
        }
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(parse_err(path, lineno, "column count differs from earlier rows"));
        }
        let v = numbers(path, lineno, &fields)?;
        points.push(Vector3::new(v[0], v[1], v[2]));
        if v.len() == 6 {
            normals.push(Vector3::new(v[3], v[4], v[5]));
        }
    }
    if width == Some(6) {
        PointCloud::with_normals(points, normals)
    } else {
        Ok(PointCloud::new(points))
    }
}

fn parse_ply(path: &Path, text: &str) -> Result<PointCloud<f64>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }
    // (name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    loop {
        let (idx, raw) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "header not terminated by end_header"))?;
        let lineno = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(path, lineno, format!("unsupported PLY format {other}")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad element count"))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", .., name] => match elements.last_mut() {
                Some(el) => el.2.push(name.to_string()),
                None => return Err(parse_err(path, lineno, "property before any element")),
            },
            _ => return Err(parse_err(path, lineno, format!("unrecognized header line {raw:?}"))),
        }
    }
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut has_normals = false;
    for (name, count, props) in &elements {
        let pos = |p: &str| props.iter().position(|q| q == p);
        let xyz = [pos("x"), pos("y"), pos("z")];
        let nxyz = [pos("nx"), pos("ny"), pos("nz")];
        let is_vertex = name == "vertex";
        if is_vertex && xyz.iter().any(Option::is_none) {
            return Err(parse_err(path, 0, "vertex element lacks x, y or z"));
        }
        has_normals = is_vertex && nxyz.iter().all(Option::is_some);
        for _ in 0..*count {
            let (idx, raw) = lines
                .next()
                .ok_or_else(|| parse_err(path, 0, format!("file ends inside element {name}")))?;
            if !is_vertex {
                continue;
            }
            let lineno = idx + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.len() < props.len() {
                return Err(parse_err(path, lineno, "vertex row shorter than its properties"));
            }
            let v = numbers(path, lineno, &fields[..props.len()])?;
            let get = |i: [Option<usize>; 3]| Vector3::new(v[i[0].unwrap()], v[i[1].unwrap()], v[i[2].unwrap()]);
            points.push(get(xyz));
            if has_normals {
                normals.push(get(nxyz));
            }
        }
        if is_vertex {
            break;
        }
    }
    if has_normals {
        PointCloud::with_normals(points, normals)
    } else {
        Ok(PointCloud::new(points))
    }
}

fn parse_obj(path: &Path, text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut fields = raw.split_whitespace();
        match fields.next() {
            Some("v") => {
                let rest: Vec<&str> = fields.collect();
                if rest.len() < 3 {
                    return Err(parse_err(path, lineno, "vertex needs three coordinates"));
                }
                let v = numbers(path, lineno, &rest[..3])?;
                vertices.push(Vector3::new(v[0], v[1], v[2]));
            }
            Some("f") => {
                let mut ids = Vec::new();
                for f in fields {
                    let head = f.split('/').next().unwrap_or("");
                    let k: i64 = head
                        .parse()
                        .map_err(|_| parse_err(path, lineno, format!("bad face index {f:?}")))?;
                    let resolved = if k > 0 {
                        k - 1
                    } else {
                        vertices.len() as i64 + k
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(parse_err(path, lineno, format!("face index {k} out of range")));
                    }
                    ids.push(resolved as usize);
                }
                if ids.len() < 3 {
                    return Err(parse_err(path, lineno, "face needs at least three vertices"));
                }
                for w in 1..ids.len() - 1 {
                    faces.push([ids[0], ids[w], ids[w + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Loads a triangle mesh from an OBJ file.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path)?;
    parse_obj(path, &text)
}

fn fmt_vec(out: &mut String, v: &Vector3<f64>) {
    let _ = write!(out, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
}

/// Writes a cloud with 17 significant digits per coordinate.
pub fn save_cloud(path: &Path, cloud: &PointCloud<f64>, format: Option<CloudFormat>) -> Result<()> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let mut out = String::new();
    match format {
        CloudFormat::Xyz => {
            for (i, p) in cloud.points.iter().enumerate() {
                fmt_vec(&mut out, p);
                if let Some(ns) = &cloud.normals {
                    out.push(' ');
                    fmt_vec(&mut out, &ns[i]);
                }
                out.push('\n');
            }
        }
        CloudFormat::Ply => {
            out.push_str("ply\nformat ascii 1.0\n");
            let _ = writeln!(out, "element vertex {}", cloud.len());
            out.push_str("property double x\nproperty double y\nproperty double z\n");
            if cloud.normals.is_some() {
                out.push_str("property double nx\nproperty double ny\nproperty double nz\n");
            }
            out.push_str("end_header\n");
            for (i, p) in cloud.points.iter().enumerate() {
                fmt_vec(&mut out, p);
                if let Some(ns) = &cloud.normals {
                    out.push(' ');
                    fmt_vec(&mut out, &ns[i]);
                }
                out.push('\n');
            }
        }
        CloudFormat::Obj => {
            for p in &cloud.points {
                out.push_str("v ");
                fmt_vec(&mut out, p);
                out.push('\n');
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}
