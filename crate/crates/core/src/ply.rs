//! Minimal PLY reader/writer: triangle meshes and labeled point clouds.
//!
//! Reading accepts `binary_little_endian`, `binary_big_endian` and `ascii`
//! bodies; writing always produces `binary_little_endian`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Format {
    Ascii,
    BinaryLe,
    BinaryBe,
}

/// Values of one element instance; list properties are flattened into `lists`.
#[derive(Default)]
struct Row {
    scalars: Vec<f64>,
    lists: Vec<Vec<f64>>,
}

/// Contents of a PLY file relevant to this crate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlyData {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Per-vertex `part_id` property, if present.
    pub part_ids: Option<Vec<i32>>,
}

struct Cursor<R> {
    inner: R,
    format: Format,
    tokens: std::vec::IntoIter<String>,
}

impl<R: BufRead> Cursor<R> {
    fn next_token(&mut self) -> std::io::Result<Option<String>> {
        loop {
            if let Some(t) = self.tokens.next() {
                return Ok(Some(t));
            }
            let mut line = String::new();
            if self.inner.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            self.tokens = line
                .split_whitespace()
                .map(str::to_owned)
                .collect::<Vec<_>>()
                .into_iter();
        }
    }

    fn read(&mut self, ty: Scalar) -> std::result::Result<f64, String> {
        if self.format == Format::Ascii {
            let tok = self
                .next_token()
                .map_err(|e| e.to_string())?
                .ok_or("unexpected end of ascii body")?;
            return tok.parse::<f64>().map_err(|e| e.to_string());
        }
        let mut buf = [0u8; 8];
        let n = ty.size();
        self.inner
            .read_exact(&mut buf[..n])
            .map_err(|_| "unexpected end of binary body".to_string())?;
        let b = &mut buf[..n];
        if self.format == Format::BinaryBe {
            b.reverse();
        }
        Ok(match ty {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(buf),
        })
    }
}

fn read_header<R: BufRead>(r: &mut R) -> std::result::Result<(Format, Vec<Element>), String> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| e.to_string())?;
    if line.trim() != "ply" {
        return Err("missing 'ply' magic".into());
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            return Err("header not terminated".into());
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", f, _] => {
                format = Some(match *f {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    "binary_big_endian" => Format::BinaryBe,
                    other => return Err(format!("unknown format {other}")),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| "bad element count")?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, name] => {
                let el = elements.last_mut().ok_or("property before element")?;
                el.props.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(c).ok_or("bad list count type")?,
                    item: Scalar::parse(i).ok_or("bad list item type")?,
                });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or("property before element")?;
                el.props.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| format!("bad type {ty}"))?,
                });
            }
            [] | ["comment", ..] | ["obj_info", ..] => {}
            _ => return Err(format!("unrecognized header line: {}", line.trim())),
        }
    }
    Ok((format.ok_or("missing format line")?, elements))
}

fn read_row<R: BufRead>(c: &mut Cursor<R>, el: &Element) -> std::result::Result<Row, String> {
    let mut row = Row::default();
    for p in &el.props {
        match p {
            Property::Scalar { ty, .. } => row.scalars.push(c.read(*ty)?),
            Property::List { count, item, .. } => {
                let n = c.read(*count)?;
                if n < 0.0 {
                    return Err("negative list length".into());
                }
                let items = (0..n as usize)
                    .map(|_| c.read(*item))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                row.lists.push(items);
            }
        }
    }
    Ok(row)
}

pub fn read_ply(path: &Path) -> Result<PlyData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ply(BufReader::new(file)).map_err(|m| Error::parse(path, m))
}

fn parse_ply<R: BufRead>(mut r: R) -> std::result::Result<PlyData, String> {
    let (format, elements) = read_header(&mut r)?;
    let mut cursor = Cursor {
        inner: r,
        format,
        tokens: Vec::new().into_iter(),
    };
    let mut out = PlyData::default();
    for el in &elements {
        let scalar_idx = |name: &str| {
            el.props
                .iter()
                .filter(|p| matches!(p, Property::Scalar { .. }))
                .position(|p| p.name() == name)
        };
        let list_idx = el
            .props
            .iter()
            .filter(|p| matches!(p, Property::List { .. }))
            .position(|p| p.name() == "vertex_indices" || p.name() == "vertex_index");
        let is_vertex = el.name == "vertex";
        let (ix, iy, iz) = (scalar_idx("x"), scalar_idx("y"), scalar_idx("z"));
        let ipart = scalar_idx("part_id");
        if is_vertex && (ix.is_none() || iy.is_none() || iz.is_none()) {
            return Err("vertex element lacks x/y/z".into());
        }
        let mut part_ids = Vec::new();
        for _ in 0..el.count {
            let row = read_row(&mut cursor, el)?;
            if is_vertex {
                let (x, y, z) = (ix.unwrap(), iy.unwrap(), iz.unwrap());
                out.positions
                    .push(Vec3::new(row.scalars[x], row.scalars[y], row.scalars[z]));
                if let Some(ip) = ipart {
                    part_ids.push(row.scalars[ip] as i32);
                }
            } else if el.name == "face" {
                let idx = list_idx.ok_or("face element lacks vertex_indices")?;
                let poly = &row.lists[idx];
                if poly.len() < 3 {
                    return Err("face with fewer than 3 vertices".into());
                }
                for k in 1..poly.len() - 1 {
                    out.faces
                        .push([poly[0] as u32, poly[k] as u32, poly[k + 1] as u32]);
                }
            }
        }
        if is_vertex && ipart.is_some() {
            out.part_ids = Some(part_ids);
        }
    }
    Ok(out)
}

/// Writes a binary little-endian PLY. `part_ids`, when given, must match the
/// number of positions and becomes an `int part_id` vertex property.
pub fn write_ply(
    path: &Path,
    positions: &[Vec3],
    faces: &[[u32; 3]],
    part_ids: Option<&[i32]>,
) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + positions.len() * 16 + faces.len() * 13);
    encode_ply(&mut buf, positions, faces, part_ids);
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_ply(
    buf: &mut Vec<u8>,
    positions: &[Vec3],
    faces: &[[u32; 3]],
    part_ids: Option<&[i32]>,
) {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header += &format!("element vertex {}\n", positions.len());
    header += "property float x\nproperty float y\nproperty float z\n";
    if part_ids.is_some() {
        header += "property int part_id\n";
    }
    if !faces.is_empty() {
        header += &format!("element face {}\n", faces.len());
        header += "property list uchar int vertex_indices\n";
    }
    header += "end_header\n";
    buf.write_all(header.as_bytes()).unwrap();
    for (i, p) in positions.iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
        if let Some(ids) = part_ids {
            buf.extend_from_slice(&ids[i].to_le_bytes());
        }
    }
    for f in faces {
        buf.push(3);
        for &v in f {
            buf.extend_from_slice(&(v as i32).to_le_bytes());
        }
    }
}
