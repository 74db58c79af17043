//! Oriented point clouds as binary little-endian PLY (`x y z nx ny nz`,
//! float32) and as 6-column text.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use cadrev_core::geometry::PointCloud;

use crate::error::{format_error, IoContext, Result};

const PROPS: [&str; 6] = ["x", "y", "z", "nx", "ny", "nz"];

pub fn encode_ply(pc: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(200 + pc.len() * 24);
    out.extend_from_slice(b"ply\nformat binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", pc.len()).as_bytes());
    for p in PROPS {
        out.extend_from_slice(format!("property float {p}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");
    for (p, n) in pc.points.iter().zip(&pc.normals) {
        for v in p.iter().chain(n) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

fn scalar_size(ty: &str) -> Option<usize> {
    Some(match ty {
        "char" | "uchar" | "int8" | "uint8" => 1,
        "short" | "ushort" | "int16" | "uint16" => 2,
        "int" | "uint" | "int32" | "uint32" | "float" | "float32" => 4,
        "double" | "float64" => 8,
        _ => return None,
    })
}

fn read_scalar(ty: &str, b: &[u8]) -> f64 {
    match ty {
        "char" | "int8" => f64::from(b[0] as i8),
        "uchar" | "uint8" => f64::from(b[0]),
        "short" | "int16" => f64::from(i16::from_le_bytes([b[0], b[1]])),
        "ushort" | "uint16" => f64::from(u16::from_le_bytes([b[0], b[1]])),
        "int" | "int32" => f64::from(i32::from_le_bytes(b[..4].try_into().expect("4 bytes"))),
        "uint" | "uint32" => f64::from(u32::from_le_bytes(b[..4].try_into().expect("4 bytes"))),
        "float" | "float32" => f64::from(f32::from_le_bytes(b[..4].try_into().expect("4 bytes"))),
        _ => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
    }
}

/// Reads the vertex element of an ASCII or binary little-endian PLY. Needs
/// `x y z nx ny nz` scalar properties; others are skipped.
pub fn decode_ply(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    let err = |m: &str| format_error(path, m.to_string());
    let mut reader = BufReader::new(bytes);
    let mut line = String::new();
    let mut encoding = None;
    let mut vertices = None;
    let mut props: Vec<(String, String)> = Vec::new();
    let mut in_vertex = false;
    let mut first = true;
    loop {
        line.clear();
        if reader.read_line(&mut line).at(path)? == 0 {
            return Err(err("unterminated PLY header"));
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if first {
            if t != ["ply"] {
                return Err(err("not a PLY file"));
            }
            first = false;
            continue;
        }
        match t.as_slice() {
            ["format", "ascii", _] => encoding = Some(Encoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(Encoding::BinaryLe),
            ["format", other, _] => return Err(err(&format!("unsupported PLY format {other}"))),
            ["element", name, count] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertices = Some(count.parse::<usize>().map_err(|_| err("bad vertex count"))?);
                } else if vertices.is_none() {
                    return Err(err("elements before vertex are not supported"));
                }
            }
            ["property", "list", ..] if in_vertex => return Err(err("list properties on vertices are not supported")),
            ["property", ty, name] if in_vertex => {
                scalar_size(ty).ok_or_else(|| err(&format!("unknown property type {ty}")))?;
                props.push((ty.to_string(), name.to_string()));
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let encoding = encoding.ok_or_else(|| err("missing format line"))?;
    let n = vertices.ok_or_else(|| err("missing vertex element"))?;
    let index: Vec<usize> = PROPS
        .iter()
        .map(|p| props.iter().position(|(_, name)| name == p).ok_or_else(|| err(&format!("missing property {p}"))))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    match encoding {
        Encoding::BinaryLe => {
            let stride: usize = props.iter().map(|(ty, _)| scalar_size(ty).expect("checked")).sum();
            let mut body = vec![0u8; n * stride];
            reader.read_exact(&mut body).map_err(|_| err("truncated PLY body"))?;
            for rec in body.chunks(stride) {
                let mut off = 0;
                let mut row = Vec::with_capacity(props.len());
                for (ty, _) in &props {
                    let s = scalar_size(ty).expect("checked");
                    row.push(read_scalar(ty, &rec[off..off + s]));
                    off += s;
                }
                rows.push(row);
            }
        }
        Encoding::Ascii => {
            for _ in 0..n {
                line.clear();
                if reader.read_line(&mut line).at(path)? == 0 {
                    return Err(err("truncated PLY body"));
                }
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| err("bad number in PLY body")))
                    .collect::<Result<_>>()?;
                if row.len() < props.len() {
                    return Err(err("short PLY row"));
                }
                rows.push(row);
            }
        }
    }
    let pick = |r: &Vec<f64>, o: usize| [r[index[o]], r[index[o + 1]], r[index[o + 2]]];
    let points = rows.iter().map(|r| pick(r, 0)).collect();
    let normals = rows.iter().map(|r| pick(r, 3)).collect();
    Ok(PointCloud::new(points, normals)?)
}

pub fn write_ply(path: &Path, pc: &PointCloud) -> Result<()> {
    std::fs::write(path, encode_ply(pc)).at(path)
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    decode_ply(&std::fs::read(path).at(path)?, path)
}

pub fn write_xyz(path: &Path, pc: &PointCloud) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).at(path)?);
    for (p, n) in pc.points.iter().zip(&pc.normals) {
        writeln!(f, "{} {} {} {} {} {}", p[0], p[1], p[2], n[0], n[1], n[2]).at(path)?;
    }
    f.flush().at(path)
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).at(path)?;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| format_error(path, format!("line {}: bad number", i + 1))))
            .collect::<Result<_>>()?;
        if v.len() != 6 {
            return Err(format_error(path, format!("line {}: expected 6 columns, found {}", i + 1, v.len())));
        }
        points.push([v[0], v[1], v[2]]);
        normals.push([v[3], v[4], v[5]]);
    }
    Ok(PointCloud::new(points, normals)?)
}

/// Reads `.ply` or `.xyz` by extension.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("xyz") => read_xyz(path),
        _ => read_ply(path),
    }
}

/// Rounds coordinates to float32, the precision stored in PLY files.
pub fn to_f32_precision(pc: &PointCloud) -> PointCloud {
    let r = |p: &[f64; 3]| p.map(|v| f64::from(v as f32));
    PointCloud { points: pc.points.iter().map(r).collect(), normals: pc.normals.iter().map(r).collect() }
}
