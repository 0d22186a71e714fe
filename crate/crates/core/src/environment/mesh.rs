use std::collections::HashMap;
use std::path::Path;

use nalgebra::Isometry3;

use super::EnvError;
use crate::Vec3;

/// Triangles below this area (m²) are rejected as degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and triangle areas.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, EnvError> {
        let mesh = Self {
            name: name.into(),
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self
            .vertices
            .iter()
            .any(|v| !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()))
        {
            return Err(EnvError::DegenerateGeometry(format!(
                "{}: non-finite vertex",
                self.name
            )));
        }
        for (k, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= self.vertices.len()) {
                return Err(EnvError::DegenerateGeometry(format!(
                    "{}: triangle {k} has an out-of-range index",
                    self.name
                )));
            }
            let area = self.triangle_area(k);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(EnvError::DegenerateGeometry(format!(
                    "{}: triangle {k} has area {area:e} m^2",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn triangle(&self, k: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle(k);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Self {
        Self {
            name: self.name.clone(),
            vertices: self
                .vertices
                .iter()
                .map(|v| iso.transform_point(&(*v).into()).coords)
                .collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        edges.values().all(|&n| n == 2)
    }

    /// Ray-parity containment test. Meaningful only for closed meshes.
    pub fn contains(&self, p: Vec3) -> bool {
        // fixed, axis-skewed direction so rays rarely graze edges
        let dir = Vec3::new(0.5773, 0.5774, 0.5775).normalize();
        let mut hits = 0;
        for k in 0..self.triangles.len() {
            if ray_hits_triangle(p, dir, &self.triangle(k)) {
                hits += 1;
            }
        }
        hits % 2 == 1
    }

    /// Merges duplicate vertices (exact match), as produced by STL soups.
    fn welded(name: String, soup: Vec<[Vec3; 3]>) -> Self {
        let mut index: HashMap<[u64; 3], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::with_capacity(soup.len());
        for tri in soup {
            let mut t = [0usize; 3];
            for (slot, v) in t.iter_mut().zip(tri.iter()) {
                let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
                *slot = *index.entry(key).or_insert_with(|| {
                    vertices.push(*v);
                    vertices.len() - 1
                });
            }
            triangles.push(t);
        }
        Self {
            name,
            vertices,
            triangles,
        }
    }
}

/// Möller–Trumbore, counting hits strictly in front of the origin.
fn ray_hits_triangle(o: Vec3, d: Vec3, t: &[Vec3; 3]) -> bool {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return false;
    }
    let inv = 1.0 / det;
    let s = o - t[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&q) * inv > 0.0
}

fn parse_err(line: usize, msg: impl Into<String>) -> EnvError {
    EnvError::Parse {
        line,
        message: msg.into(),
    }
}

/// Meaningful lines of a text file with 1-based numbers, comments (`#`) stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_floats<const N: usize>(line: usize, fields: &[&str]) -> Result<[f64; N], EnvError> {
    if fields.len() < N {
        return Err(parse_err(
            line,
            format!("expected {N} numbers, found {}", fields.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f
            .parse()
            .map_err(|_| parse_err(line, format!("invalid number '{f}'")))?;
    }
    Ok(out)
}

/// Object File Format: `OFF`, counts line, vertices, then polygon faces.
/// Polygons with more than three vertices are fan-triangulated.
pub fn parse_off(name: &str, text: &str) -> Result<TriangleMesh, EnvError> {
    let mut lines = content_lines(text);
    let (ln, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let counts_line = if first == "OFF" {
        lines
            .next()
            .ok_or_else(|| parse_err(ln + 1, "missing counts line"))?
    } else if let Some(rest) = first.strip_prefix("OFF") {
        (ln, rest.trim())
    } else {
        return Err(parse_err(ln, "missing OFF header"));
    };
    let (cl, counts) = counts_line;
    let c: Vec<&str> = counts.split_whitespace().collect();
    if c.len() < 2 {
        return Err(parse_err(cl, "expected vertex and face counts"));
    }
    let nv: usize = c[0]
        .parse()
        .map_err(|_| parse_err(cl, "invalid vertex count"))?;
    let nf: usize = c[1]
        .parse()
        .map_err(|_| parse_err(cl, "invalid face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(cl, format!("expected {nv} vertices")))?;
        let f: Vec<&str> = s.split_whitespace().collect();
        let [x, y, z] = parse_floats::<3>(l, &f)?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = lines
            .next()
            .ok_or_else(|| parse_err(cl, format!("expected {nf} faces")))?;
        let f: Vec<&str> = s.split_whitespace().collect();
        let k: usize = f
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(l, "invalid face vertex count"))?;
        if k < 3 || f.len() < k + 1 {
            return Err(parse_err(l, "face needs at least 3 vertex indices"));
        }
        let idx: Vec<usize> = f[1..=k]
            .iter()
            .map(|v| {
                v.parse()
                    .map_err(|_| parse_err(l, format!("invalid index '{v}'")))
            })
            .collect::<Result<_, _>>()?;
        if let Some(bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(l, format!("vertex index {bad} out of range")));
        }
        for j in 1..k - 1 {
            triangles.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    TriangleMesh::new(name, vertices, triangles)
}

/// ASCII STL (`solid` … `facet` … `vertex x y z` … `endsolid`).
pub fn parse_stl(name: &str, text: &str) -> Result<TriangleMesh, EnvError> {
    let mut lines = content_lines(text).peekable();
    match lines.next() {
        Some((_, l)) if l.starts_with("solid") => {}
        Some((ln, _)) => return Err(parse_err(ln, "missing 'solid' header")),
        None => return Err(parse_err(1, "empty file")),
    }
    let mut soup = Vec::new();
    let mut current: Vec<Vec3> = Vec::new();
    let mut facet_line = 0;
    let mut ended = false;
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        match f[0] {
            "facet" => {
                current.clear();
                facet_line = ln;
            }
            "outer" | "endloop" => {}
            "vertex" => current.push({
                let [x, y, z] = parse_floats::<3>(ln, &f[1..])?;
                Vec3::new(x, y, z)
            }),
            "endfacet" => {
                if current.len() != 3 {
                    return Err(parse_err(
                        facet_line,
                        format!("facet has {} vertices, expected 3", current.len()),
                    ));
                }
                soup.push([current[0], current[1], current[2]]);
            }
            "endsolid" => {
                ended = true;
                break;
            }
            other => return Err(parse_err(ln, format!("unexpected token '{other}'"))),
        }
    }
    if !ended {
        return Err(parse_err(text.lines().count().max(1), "missing 'endsolid'"));
    }
    if soup.is_empty() {
        return Err(parse_err(1, "no facets"));
    }
    let mesh = TriangleMesh::welded(name.to_string(), soup);
    mesh.validate()?;
    Ok(mesh)
}

/// Loads an ASCII STL or OFF file, chosen by extension and falling back to
/// the header.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh, EnvError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase());
    match ext.as_deref() {
        Some("off") => parse_off(&name, &text),
        Some("stl") => parse_stl(&name, &text),
        _ if text.trim_start().starts_with("solid") => parse_stl(&name, &text),
        _ => parse_off(&name, &text),
    }
}

/// Closed axis-aligned box with corners `min`, `max` (12 triangles).
pub fn box_mesh(name: &str, min: Vec3, max: Vec3) -> Result<TriangleMesh, EnvError> {
    let v = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices = (0..8).map(v).collect();
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3], // z = min
        [4, 5, 6],
        [5, 7, 6], // z = max
        [0, 1, 4],
        [1, 5, 4], // y = min
        [2, 6, 3],
        [3, 6, 7], // y = max
        [0, 4, 2],
        [2, 4, 6], // x = min
        [1, 3, 5],
        [3, 7, 5], // x = max
    ];
    TriangleMesh::new(name, vertices, triangles)
}

/// Mesh serialised as OFF text.
pub fn to_off_string(mesh: &TriangleMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        s.push_str(&format!("{:?} {:?} {:?}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s
}
