//! Binary little-endian PLY in the common 3DGS export layout:
//! `x y z [nx ny nz] f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::cloud::{sh_coeff_count, GaussianCloud};
use super::{io_err, AssetError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

#[derive(Debug)]
struct Property {
    name: String,
    ty: ScalarType,
}

#[derive(Debug)]
struct Header {
    vertex_count: usize,
    properties: Vec<Property>,
}

fn read_header<R: BufRead>(reader: &mut R, path: &Path) -> Result<Header, AssetError> {
    let parse_err = |line: usize, content: &str, reason: &str| AssetError::Parse {
        path: path.to_path_buf(),
        line,
        content: content.to_string(),
        reason: reason.to_string(),
    };

    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex = false;
    let mut seen_other_element = false;
    let mut line_no = 0;
    loop {
        line_no += 1;
        let mut raw = Vec::new();
        let n = reader
            .read_until(b'\n', &mut raw)
            .map_err(io_err(path))?;
        if n == 0 {
            return Err(parse_err(line_no, "", "unexpected end of file before end_header"));
        }
        let line = String::from_utf8_lossy(&raw);
        let line = line.trim_end_matches(['\n', '\r']);
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if line != "ply" {
                return Err(parse_err(line_no, line, "missing 'ply' magic"));
            }
            continue;
        }
        match tokens.first().copied() {
            Some("format") => {
                if tokens.get(1) != Some(&"binary_little_endian") {
                    return Err(parse_err(
                        line_no,
                        line,
                        "only binary_little_endian PLY is supported",
                    ));
                }
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, line, "expected 'element <name> <count>'"));
                }
                let count: usize = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, line, "invalid element count"))?;
                if tokens[1] == "vertex" {
                    if seen_other_element {
                        return Err(parse_err(
                            line_no,
                            line,
                            "vertex element must be the first element",
                        ));
                    }
                    vertex_count = Some(count);
                    in_vertex = true;
                } else {
                    seen_other_element = true;
                    in_vertex = false;
                }
            }
            Some("property") => {
                if tokens.get(1) == Some(&"list") {
                    if in_vertex {
                        return Err(parse_err(line_no, line, "list properties on vertices are not supported"));
                    }
                    continue;
                }
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, line, "expected 'property <type> <name>'"));
                }
                let ty = ScalarType::parse(tokens[1])
                    .ok_or_else(|| parse_err(line_no, line, "unknown property type"))?;
                if in_vertex {
                    properties.push(Property {
                        name: tokens[2].to_string(),
                        ty,
                    });
                } else if vertex_count.is_none() {
                    return Err(parse_err(line_no, line, "property outside of any element"));
                }
            }
            Some("end_header") => break,
            _ => return Err(parse_err(line_no, line, "unrecognized header line")),
        }
    }
    let vertex_count = vertex_count.ok_or_else(|| parse_err(line_no, "end_header", "no vertex element"))?;
    Ok(Header {
        vertex_count,
        properties,
    })
}

/// Column offsets of every required field inside one vertex record.
struct Layout {
    stride: usize,
    degree: u8,
    pos: [usize; 3],
    dc: [usize; 3],
    rest: Vec<usize>,
    opacity: usize,
    scale: [usize; 3],
    rot: [usize; 4],
}

fn resolve_layout(header: &Header) -> Result<Layout, AssetError> {
    let mut offsets = std::collections::HashMap::new();
    let mut stride = 0;
    for p in &header.properties {
        offsets.insert(p.name.as_str(), (stride, p.ty));
        stride += p.ty.size();
    }
    let field = |name: &str| -> Result<usize, AssetError> {
        match offsets.get(name) {
            Some((off, ScalarType::F32)) => Ok(*off),
            Some((_, ty)) => Err(AssetError::UnsupportedLayout(format!(
                "property {name} has type {ty:?}, expected float"
            ))),
            None => Err(AssetError::UnsupportedLayout(format!("missing property {name}"))),
        }
    };

    let rest_count = header
        .properties
        .iter()
        .filter(|p| p.name.starts_with("f_rest_"))
        .count();
    let degree = match rest_count {
        0 => 0,
        9 => 1,
        24 => 2,
        45 => 3,
        n => {
            return Err(AssetError::UnsupportedLayout(format!(
                "{n} f_rest properties do not match any SH degree (expected 0, 9, 24 or 45)"
            )))
        }
    };
    let rest = (0..rest_count)
        .map(|i| field(&format!("f_rest_{i}")))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Layout {
        stride,
        degree,
        pos: [field("x")?, field("y")?, field("z")?],
        dc: [field("f_dc_0")?, field("f_dc_1")?, field("f_dc_2")?],
        rest,
        opacity: field("opacity")?,
        scale: [field("scale_0")?, field("scale_1")?, field("scale_2")?],
        rot: [field("rot_0")?, field("rot_1")?, field("rot_2")?, field("rot_3")?],
    })
}

fn f32_at(record: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(record[off..off + 4].try_into().unwrap())
}

/// Loads and validates a gaussian scene from a binary PLY file.
pub fn load_gaussian_ply(path: impl AsRef<Path>) -> Result<GaussianCloud, AssetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let header = read_header(&mut reader, path)?;
    let layout = resolve_layout(&header)?;

    let n = header.vertex_count;
    let mut payload = vec![0u8; n * layout.stride];
    reader.read_exact(&mut payload).map_err(io_err(path))?;

    let k = sh_coeff_count(layout.degree);
    let mut cloud = GaussianCloud::with_capacity(layout.degree, n);
    let mut sh = vec![0f32; k * 3];
    for record in payload.chunks_exact(layout.stride.max(1)).take(n) {
        for c in 0..3 {
            sh[c] = f32_at(record, layout.dc[c]);
            for j in 1..k {
                sh[j * 3 + c] = f32_at(record, layout.rest[c * (k - 1) + (j - 1)]);
            }
        }
        cloud.push(
            layout.pos.map(|o| f32_at(record, o)),
            &sh,
            f32_at(record, layout.opacity),
            layout.scale.map(|o| f32_at(record, o)),
            layout.rot.map(|o| f32_at(record, o)),
        );
    }
    cloud.validate()?;
    Ok(cloud)
}

/// Writes `cloud` as binary little-endian PLY (no normals).
pub fn save_gaussian_ply(cloud: &GaussianCloud, path: impl AsRef<Path>) -> Result<(), AssetError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let k = cloud.sh_count();

    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header += &format!("element vertex {}\n", cloud.len());
    let mut names: Vec<String> = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3 * (k - 1)).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    for name in &names {
        header += &format!("property float {name}\n");
    }
    header += "end_header\n";
    w.write_all(header.as_bytes()).map_err(io_err(path))?;

    let mut record = Vec::with_capacity(names.len() * 4);
    for i in 0..cloud.len() {
        record.clear();
        let sh = cloud.sh_of(i);
        let mut put = |v: f32| record.extend_from_slice(&v.to_le_bytes());
        cloud.positions[i].iter().for_each(|v| put(*v));
        (0..3).for_each(|c| put(sh[c]));
        for c in 0..3 {
            for j in 1..k {
                put(sh[j * 3 + c]);
            }
        }
        put(cloud.opacities[i]);
        cloud.log_scales[i].iter().for_each(|v| put(*v));
        cloud.rotations[i].iter().for_each(|v| put(*v));
        w.write_all(&record).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(dir: &Path, header: &str, payload: &[f32]) -> std::path::PathBuf {
        let path = dir.join("raw.ply");
        let mut bytes = header.as_bytes().to_vec();
        for v in payload {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        path
    }

    const DEG0_HEADER: &str = "ply\nformat binary_little_endian 1.0\nelement vertex 1\n\
property float x\nproperty float y\nproperty float z\n\
property float nx\nproperty float ny\nproperty float nz\n\
property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n\
property float opacity\nproperty float scale_0\nproperty float scale_1\nproperty float scale_2\n\
property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\nend_header\n";

    #[test]
    fn degree_zero_with_normals() {
        let dir = tempfile::tempdir().unwrap();
        let payload = [
            1.0, 2.0, 3.0, 9.0, 9.0, 9.0, 0.5, 0.25, 0.125, 0.0, -1.0, -2.0, -3.0, 1.0, 0.0, 0.0,
            0.0,
        ];
        let cloud = load_gaussian_ply(write_raw(dir.path(), DEG0_HEADER, &payload)).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.sh_degree(), 0);
        assert_eq!(cloud.positions[0], [1.0, 2.0, 3.0]);
        assert_eq!(cloud.sh_of(0), &[0.5, 0.25, 0.125]);
        assert_eq!(cloud.opacity(0), 0.5);
        assert_eq!(cloud.log_scales[0], [-1.0, -2.0, -3.0]);
    }

    #[test]
    fn malformed_header_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let header = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty floot x\nend_header\n";
        let err = load_gaussian_ply(write_raw(dir.path(), header, &[])).unwrap_err();
        match err {
            AssetError::Parse { line, content, .. } => {
                assert_eq!(line, 4);
                assert_eq!(content, "property floot x");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ascii_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let header = "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n";
        let err = load_gaussian_ply(write_raw(dir.path(), header, &[])).unwrap_err();
        assert!(matches!(err, AssetError::Parse { line: 2, .. }));
    }

    #[test]
    fn odd_rest_count_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let mut header = String::from(DEG0_HEADER);
        let extra: String = (0..5).map(|i| format!("property float f_rest_{i}\n")).collect();
        header = header.replace("property float opacity", &format!("{extra}property float opacity"));
        let err = load_gaussian_ply(write_raw(dir.path(), &header, &[])).unwrap_err();
        assert!(matches!(err, AssetError::UnsupportedLayout(_)), "{err}");
    }

    #[test]
    fn nan_payload_lists_indices() {
        let dir = tempfile::tempdir().unwrap();
        let header = DEG0_HEADER.replace("element vertex 1", "element vertex 2");
        let mut payload = vec![0.0f32; 34];
        payload[13] = 1.0;
        payload[17 + 13] = 1.0;
        payload[17 + 6] = f32::NAN;
        let err = load_gaussian_ply(write_raw(dir.path(), &header, &payload)).unwrap_err();
        assert!(matches!(err, AssetError::Validation(ref m) if m.contains("[1]")), "{err}");
    }

    #[test]
    fn degree_one_declares_nine_rest_properties() {
        let dir = tempfile::tempdir().unwrap();
        let mut cloud = GaussianCloud::new(1);
        cloud.push([0.0; 3], &[0.0; 12], 0.0, [0.0; 3], [1.0, 0.0, 0.0, 0.0]);
        let path = dir.path().join("d1.ply");
        save_gaussian_ply(&cloud, &path).unwrap();
        let text = std::fs::read(&path).unwrap();
        let text = String::from_utf8_lossy(&text);
        let head = text.split("end_header").next().unwrap();
        assert_eq!(head.matches("f_rest_").count(), 9);
    }

    #[test]
    fn empty_cloud_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.ply");
        save_gaussian_ply(&GaussianCloud::new(0), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("element vertex 0"));
        assert!(load_gaussian_ply(&path).unwrap().is_empty());
    }
}
