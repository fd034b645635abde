//! Triangular mesh type and OFF/OBJ text I/O.
//!
//! Vertex indices are 1-based everywhere in this crate. OFF files store
//! 0-based indices and are converted on the way in and out.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// A triangular mesh: float vertex positions and 1-based triangle indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
}

/// Structural invariant violations of a [`Mesh`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeshError {
    #[error("mesh needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("mesh needs at least one face")]
    NoFaces,
    #[error("face {face} references vertex {index}, valid range is 1..={count}")]
    IndexOutOfRange {
        face: usize,
        index: u32,
        count: usize,
    },
    #[error("face {face} repeats a vertex index")]
    DegenerateFace { face: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("expected {expected} vertices, found {found}")]
    VertexCountMismatch { expected: usize, found: usize },
    #[error("vertex count {0} does not fit in 32 bits")]
    TooManyVertices(usize),
}

/// Text-format parse failures. Every variant names the 1-based line number.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("input is not valid UTF-8 text")]
    NotText,
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: face has {arity} vertices, only triangles are supported")]
    NonTriangularFace { line: usize, arity: usize },
    #[error("line {line}: vertex index {index} out of range for {count} vertices")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("line {line}: face repeats a vertex index")]
    DegenerateFace { line: usize },
    #[error("line {line}: expected a number, found {token:?}")]
    NonNumeric { line: usize, token: String },
    #[error("line {line}: unsupported element: {what}")]
    Unsupported { line: usize, what: String },
    #[error("line {line}: unexpected end of file, {expected}")]
    UnexpectedEof { line: usize, expected: String },
    #[error("line {line}: unexpected trailing data")]
    TrailingData { line: usize },
    #[error(transparent)]
    Invalid(#[from] MeshError),
}

/// Supported text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    /// Detect format from file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            _ => None,
        }
    }
}

impl Mesh {
    /// Build a mesh, checking every structural invariant.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        if n < 3 {
            return Err(MeshError::TooFewVertices(n));
        }
        if u32::try_from(n).is_err() {
            return Err(MeshError::TooManyVertices(n));
        }
        if faces.is_empty() {
            return Err(MeshError::NoFaces);
        }
        if let Some(vertex) = vertices
            .iter()
            .position(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(MeshError::NonFinite { vertex: vertex + 1 });
        }
        for (f, face) in faces.iter().enumerate() {
            for &index in face {
                if index == 0 || index as usize > n {
                    return Err(MeshError::IndexOutOfRange {
                        face: f + 1,
                        index,
                        count: n,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(MeshError::DegenerateFace { face: f + 1 });
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    /// Faces as 1-based vertex index triples.
    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same faces, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<[f64; 3]>) -> Result<Self, MeshError> {
        if vertices.len() != self.vertices.len() {
            return Err(MeshError::VertexCountMismatch {
                expected: self.vertices.len(),
                found: vertices.len(),
            });
        }
        Self::new(vertices, self.faces.clone())
    }

    /// Largest absolute coordinate value.
    pub fn max_abs_coordinate(&self) -> f64 {
        self.vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Divide every coordinate by the smallest power of two that brings all
    /// of them strictly inside (-1, 1). Division by a power of two is exact,
    /// so [`Normalization::undo`] restores the input bit for bit.
    pub fn normalize(&self) -> (Mesh, Normalization) {
        let norm = Normalization::for_magnitude(self.max_abs_coordinate());
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.map(|c| c / norm.scale))
            .collect();
        (
            Mesh {
                vertices,
                faces: self.faces.clone(),
            },
            norm,
        )
    }
}

/// Power-of-two scale applied before quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization { scale: 1.0 };

    fn for_magnitude(max_abs: f64) -> Self {
        let mut scale = 1.0_f64;
        while max_abs >= scale {
            scale *= 2.0;
        }
        while scale > 1.0 && max_abs < scale / 2.0 {
            scale /= 2.0;
        }
        Self { scale }
    }

    pub fn apply(&self, mesh: &Mesh) -> Mesh {
        Mesh {
            vertices: mesh
                .vertices
                .iter()
                .map(|v| v.map(|c| c / self.scale))
                .collect(),
            faces: mesh.faces.clone(),
        }
    }

    pub fn undo(&self, mesh: &Mesh) -> Mesh {
        Mesh {
            vertices: mesh
                .vertices
                .iter()
                .map(|v| v.map(|c| c * self.scale))
                .collect(),
            faces: mesh.faces.clone(),
        }
    }
}

/// Parse an OFF or OBJ document.
pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<Mesh, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError::NotText)?;
    match format {
        MeshFormat::Off => parse_off(text),
        MeshFormat::Obj => parse_obj(text),
    }
}

/// Read a mesh file, picking the format from the extension.
pub fn load_mesh(path: &Path) -> Result<Mesh, LoadError> {
    let format =
        MeshFormat::from_path(path).ok_or_else(|| LoadError::UnknownFormat(path.into()))?;
    let bytes = std::fs::read(path)?;
    Ok(parse_mesh(&bytes, format)?)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot infer mesh format from {0:?} (expected .off or .obj)")]
    UnknownFormat(std::path::PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_f64(token: &str, line: usize) -> Result<f64, ParseError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::NonNumeric {
            line,
            token: token.to_string(),
        })
}

fn parse_int(token: &str, line: usize) -> Result<i64, ParseError> {
    token.parse::<i64>().map_err(|_| ParseError::NonNumeric {
        line,
        token: token.to_string(),
    })
}

fn parse_coords(tokens: &[&str], line: usize) -> Result<[f64; 3], ParseError> {
    if tokens.len() < 3 {
        return Err(ParseError::MalformedHeader {
            line,
            reason: format!("vertex needs 3 coordinates, found {}", tokens.len()),
        });
    }
    if tokens.len() > 3 {
        return Err(ParseError::Unsupported {
            line,
            what: "extra per-vertex attributes".into(),
        });
    }
    Ok([
        parse_f64(tokens[0], line)?,
        parse_f64(tokens[1], line)?,
        parse_f64(tokens[2], line)?,
    ])
}

fn check_triangle(face: [u32; 3], line: usize) -> Result<[u32; 3], ParseError> {
    if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
        return Err(ParseError::DegenerateFace { line });
    }
    Ok(face)
}

fn parse_off(text: &str) -> Result<Mesh, ParseError> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or(ParseError::UnexpectedEof {
        line: 1,
        expected: "expected OFF header".into(),
    })?;
    let mut header_tokens = header.split_whitespace();
    match header_tokens.next() {
        Some("OFF") => {}
        Some(tag) if tag.ends_with("OFF") => {
            return Err(ParseError::Unsupported {
                line: header_line,
                what: format!("{tag} variant (normals, colours or texture coordinates)"),
            })
        }
        _ => {
            return Err(ParseError::MalformedHeader {
                line: header_line,
                reason: "first line must be \"OFF\"".into(),
            })
        }
    }
    let inline_counts: Vec<&str> = header_tokens.collect();
    let (count_line, counts) = if inline_counts.is_empty() {
        let (line, body) = lines.next().ok_or(ParseError::UnexpectedEof {
            line: header_line + 1,
            expected: "expected vertex/face counts".into(),
        })?;
        (line, body.split_whitespace().collect::<Vec<_>>())
    } else {
        (header_line, inline_counts)
    };
    if counts.len() < 2 || counts.len() > 3 {
        return Err(ParseError::MalformedHeader {
            line: count_line,
            reason: format!("expected \"n m [e]\", found {} fields", counts.len()),
        });
    }
    let parse_count = |tok: &str| -> Result<usize, ParseError> {
        let v = parse_int(tok, count_line)?;
        usize::try_from(v).map_err(|_| ParseError::MalformedHeader {
            line: count_line,
            reason: format!("negative count {v}"),
        })
    };
    let n = parse_count(counts[0])?;
    let m = parse_count(counts[1])?;
    if let Some(edges) = counts.get(2) {
        parse_count(edges)?;
    }

    let mut last_line = count_line;
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        let (line, body) = lines.next().ok_or_else(|| ParseError::UnexpectedEof {
            line: last_line + 1,
            expected: format!("expected vertex {} of {n}", i + 1),
        })?;
        last_line = line;
        let tokens: Vec<&str> = body.split_whitespace().collect();
        vertices.push(parse_coords(&tokens, line)?);
    }

    let mut faces = Vec::with_capacity(m);
    for i in 0..m {
        let (line, body) = lines.next().ok_or_else(|| ParseError::UnexpectedEof {
            line: last_line + 1,
            expected: format!("expected face {} of {m}", i + 1),
        })?;
        last_line = line;
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let arity = parse_int(tokens[0], line)?;
        if arity != 3 {
            return Err(ParseError::NonTriangularFace {
                line,
                arity: usize::try_from(arity).unwrap_or(0),
            });
        }
        if tokens.len() > 4 {
            return Err(ParseError::Unsupported {
                line,
                what: "per-face colour".into(),
            });
        }
        if tokens.len() < 4 {
            return Err(ParseError::NonTriangularFace {
                line,
                arity: tokens.len() - 1,
            });
        }
        let mut face = [0u32; 3];
        for (slot, tok) in face.iter_mut().zip(&tokens[1..]) {
            let index = parse_int(tok, line)?;
            if index < 0 || index as usize >= n {
                return Err(ParseError::IndexOutOfRange {
                    line,
                    index,
                    count: n,
                });
            }
            *slot = index as u32 + 1;
        }
        faces.push(check_triangle(face, line)?);
    }

    if let Some((line, _)) = lines.next() {
        return Err(ParseError::TrailingData { line });
    }
    Ok(Mesh::new(vertices, faces)?)
}

fn parse_obj(text: &str) -> Result<Mesh, ParseError> {
    let mut vertices = Vec::new();
    // (line, raw indices) resolved once the vertex count is known
    let mut raw_faces: Vec<(usize, [i64; 3])> = Vec::new();

    for (line, body) in content_lines(text) {
        let mut tokens = body.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let rest: Vec<&str> = tokens.collect();
        match keyword {
            "v" => vertices.push(parse_coords(&rest, line)?),
            "f" => {
                if rest.len() != 3 {
                    return Err(ParseError::NonTriangularFace {
                        line,
                        arity: rest.len(),
                    });
                }
                let mut face = [0i64; 3];
                for (slot, tok) in face.iter_mut().zip(&rest) {
                    if tok.contains('/') {
                        return Err(ParseError::Unsupported {
                            line,
                            what: "texture/normal references in face".into(),
                        });
                    }
                    let index = parse_int(tok, line)?;
                    // negative indices count back from the latest vertex
                    *slot = if index < 0 {
                        vertices.len() as i64 + index + 1
                    } else {
                        index
                    };
                    if *slot <= 0 {
                        return Err(ParseError::IndexOutOfRange {
                            line,
                            index,
                            count: vertices.len(),
                        });
                    }
                }
                raw_faces.push((line, face));
            }
            "vn" | "vt" | "vp" => {
                return Err(ParseError::Unsupported {
                    line,
                    what: format!(
                        "\"{keyword}\" (normals and texture coordinates are not supported)"
                    ),
                })
            }
            "o" | "g" | "s" | "usemtl" | "mtllib" => {}
            other => {
                return Err(ParseError::Unsupported {
                    line,
                    what: format!("\"{other}\" statement"),
                })
            }
        }
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(raw_faces.len());
    for (line, face) in raw_faces {
        if let Some(&index) = face.iter().find(|&&i| i as usize > n) {
            return Err(ParseError::IndexOutOfRange {
                line,
                index,
                count: n,
            });
        }
        faces.push(check_triangle(face.map(|i| i as u32), line)?);
    }
    Ok(Mesh::new(vertices, faces)?)
}

/// Serialize a mesh. Coordinates use the shortest decimal form that parses
/// back to the same `f64`, so a round trip is exact.
pub fn write_mesh(mesh: &Mesh, format: MeshFormat) -> Vec<u8> {
    let mut out = String::with_capacity(32 * (mesh.vertex_count() + mesh.face_count()));
    match format {
        MeshFormat::Off => {
            let _ = writeln!(out, "OFF");
            let _ = writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count());
            for [x, y, z] in &mesh.vertices {
                let _ = writeln!(out, "{x:?} {y:?} {z:?}");
            }
            for [a, b, c] in &mesh.faces {
                let _ = writeln!(out, "3 {} {} {}", a - 1, b - 1, c - 1);
            }
        }
        MeshFormat::Obj => {
            for [x, y, z] in &mesh.vertices {
                let _ = writeln!(out, "v {x:?} {y:?} {z:?}");
            }
            for [a, b, c] in &mesh.faces {
                let _ = writeln!(out, "f {a} {b} {c}");
            }
        }
    }
    out.into_bytes()
}
