//! `.brj`: the native JSON interchange format for [`Solid`].
//!
//! Every float is written in scientific notation with 17 significant digits,
//! which round-trips any `f64` exactly.

use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::brep::{
    AnalyticSurface, Face, Placement, Shape, Solid, SurfaceKind, TrimLoop, UvDomain,
};

pub const FORMAT_TAG: &str = "brj";
pub const FORMAT_VERSION: u64 = 1;
/// Axis length / orthogonality tolerance enforced at load.
pub const FRAME_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum BrjError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

impl BrjError {
    /// JSON-pointer path of a schema violation.
    pub fn path(&self) -> Option<&str> {
        match self {
            BrjError::Schema { path, .. } => Some(path),
            _ => None,
        }
    }
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> BrjError {
    BrjError::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

struct SciFloat;

impl serde_json::ser::Formatter for SciFloat {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

fn face_value(f: &Face) -> Value {
    let d = f.surface.domain;
    json!({
        "id": f.id,
        "kind": f.kind().name(),
        "placement": f.surface.placement.to_array().to_vec(),
        "radii": f.surface.shape.radii(),
        "uv_domain": [d.u_min, d.u_max, d.v_min, d.v_max],
        "orientation": f.same_sense,
        "label": f.label,
        "loops": f.loops.iter().map(|l| json!({
            "outer": l.outer,
            "points": l.points.iter().map(|p| vec![p[0], p[1]]).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Document form of a solid.
pub fn to_value(solid: &Solid) -> Value {
    json!({
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "metadata": { "name": solid.name, "class_label": solid.class_label },
        "faces": solid.faces.iter().map(face_value).collect::<Vec<_>>(),
        "edges": solid.edges.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
    })
}

fn check_finite(solid: &Solid) -> Result<(), BrjError> {
    for f in &solid.faces {
        let d = f.surface.domain;
        let mut nums: Vec<f64> = f.surface.placement.to_array().to_vec();
        nums.extend(f.surface.shape.radii());
        nums.extend([d.u_min, d.u_max, d.v_min, d.v_max]);
        nums.extend(f.loops.iter().flat_map(|l| l.points.iter().flatten().copied()));
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(BrjError::NonFinite(format!("face {}", f.id)));
        }
    }
    Ok(())
}

pub fn to_string(solid: &Solid) -> Result<String, BrjError> {
    check_finite(solid)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFloat);
    serde::Serialize::serialize(&to_value(solid), &mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serializer emits UTF-8"))
}

pub fn save_brj(solid: &Solid, path: impl AsRef<Path>) -> Result<(), BrjError> {
    std::fs::write(path, to_string(solid)?)?;
    Ok(())
}

pub fn load_brj(path: impl AsRef<Path>) -> Result<Solid, BrjError> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn from_str(text: &str) -> Result<Solid, BrjError> {
    from_value(&serde_json::from_str(text)?)
}

fn field<'a>(obj: &'a Value, path: &str, key: &str) -> Result<&'a Value, BrjError> {
    let here = format!("{path}/{key}");
    match obj.as_object() {
        Some(m) => m.get(key).ok_or_else(|| schema(here, "missing field")),
        None => Err(schema(path, "expected an object")),
    }
}

fn number(v: &Value, path: &str) -> Result<f64, BrjError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn index(v: &Value, path: &str) -> Result<usize, BrjError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, BrjError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn numbers(v: &Value, path: &str, len: Option<usize>) -> Result<Vec<f64>, BrjError> {
    let items = array(v, path)?;
    if let Some(n) = len {
        if items.len() != n {
            return Err(schema(path, format!("expected {n} numbers, found {}", items.len())));
        }
    }
    items
        .iter()
        .enumerate()
        .map(|(k, x)| number(x, &format!("{path}/{k}")))
        .collect()
}

fn optional_int(v: &Value, path: &str) -> Result<Option<i64>, BrjError> {
    match v {
        Value::Null => Ok(None),
        _ => v
            .as_i64()
            .map(Some)
            .ok_or_else(|| schema(path, "expected an integer or null")),
    }
}

fn parse_face(v: &Value, path: &str) -> Result<Face, BrjError> {
    let id = index(field(v, path, "id")?, &format!("{path}/id"))?;
    let kind_path = format!("{path}/kind");
    let kind_name = field(v, path, "kind")?
        .as_str()
        .ok_or_else(|| schema(&kind_path, "expected a string"))?;
    let kind = SurfaceKind::from_name(kind_name)
        .ok_or_else(|| schema(&kind_path, format!("unknown surface kind {kind_name:?}")))?;

    let pl_path = format!("{path}/placement");
    let arr: [f64; 12] = numbers(field(v, path, "placement")?, &pl_path, Some(12))?
        .try_into()
        .expect("length checked");
    let placement = Placement::from_array(&arr);
    if placement.frame_error() > FRAME_TOL {
        return Err(schema(
            pl_path,
            format!("face {id}: axes are not unit length, orthogonal and right-handed"),
        ));
    }

    let radii_path = format!("{path}/radii");
    let radii = numbers(field(v, path, "radii")?, &radii_path, None)?;
    let shape = Shape::from_radii(kind, &radii)
        .ok_or_else(|| schema(&radii_path, format!("face {id}: bad radii for {kind_name}")))?;

    let dom_path = format!("{path}/uv_domain");
    let d = numbers(field(v, path, "uv_domain")?, &dom_path, Some(4))?;
    if !(d[0] < d[1] && d[2] < d[3]) {
        return Err(schema(dom_path, format!("face {id}: empty uv domain")));
    }
    let domain = UvDomain::new(d[0], d[1], d[2], d[3]);

    let orient_path = format!("{path}/orientation");
    let same_sense = field(v, path, "orientation")?
        .as_bool()
        .ok_or_else(|| schema(orient_path, "expected a boolean"))?;
    let label = optional_int(field(v, path, "label")?, &format!("{path}/label"))?;

    let loops_path = format!("{path}/loops");
    let mut loops = Vec::new();
    for (k, l) in array(field(v, path, "loops")?, &loops_path)?.iter().enumerate() {
        let lp = format!("{loops_path}/{k}");
        let outer = field(l, &lp, "outer")?
            .as_bool()
            .ok_or_else(|| schema(format!("{lp}/outer"), "expected a boolean"))?;
        let pts_path = format!("{lp}/points");
        let points = array(field(l, &lp, "points")?, &pts_path)?
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let xy = numbers(p, &format!("{pts_path}/{j}"), Some(2))?;
                Ok([xy[0], xy[1]])
            })
            .collect::<Result<Vec<_>, BrjError>>()?;
        loops.push(TrimLoop { points, outer });
    }

    let face = Face {
        id,
        surface: AnalyticSurface::new(shape, placement, domain),
        loops,
        same_sense,
        label,
    };
    face.validate().map_err(|e| schema(path, e.to_string()))?;
    Ok(face)
}

/// Validates and converts a parsed document.
pub fn from_value(doc: &Value) -> Result<Solid, BrjError> {
    let fmt = field(doc, "", "format")?;
    if fmt.as_str() != Some(FORMAT_TAG) {
        return Err(schema("/format", format!("expected {FORMAT_TAG:?}")));
    }
    let version = index(field(doc, "", "version")?, "/version")?;
    if version as u64 != FORMAT_VERSION {
        return Err(schema("/version", format!("unsupported version {version}")));
    }
    let empty = Value::Object(Map::new());
    let meta = doc.get("metadata").unwrap_or(&empty);
    let name = match meta.get("name") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("/metadata/name", "expected a string")),
    };
    let class_label = match meta.get("class_label") {
        None => None,
        Some(v) => optional_int(v, "/metadata/class_label")?,
    };

    let faces = array(field(doc, "", "faces")?, "/faces")?
        .iter()
        .enumerate()
        .map(|(k, f)| parse_face(f, &format!("/faces/{k}")))
        .collect::<Result<Vec<_>, _>>()?;
    let edges = array(field(doc, "", "edges")?, "/edges")?
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let p = format!("/edges/{k}");
            match e.as_array().map(Vec::as_slice) {
                Some([a, b]) => Ok((index(a, &format!("{p}/0"))?, index(b, &format!("{p}/1"))?)),
                _ => Err(schema(p, "expected a pair of face ids")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let solid = Solid {
        faces,
        edges,
        name,
        class_label,
    };
    solid.validate().map_err(|e| schema("/edges", e.to_string()))?;
    Ok(solid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> Value {
        let face = Face::untrimmed(
            0,
            AnalyticSurface::new(
                Shape::Cylinder { radius: 0.1 },
                Placement::canonical(),
                UvDomain::new(0.0, 1.0, -0.3, 0.3),
            ),
            false,
        );
        let solid = Solid {
            faces: vec![face],
            edges: vec![],
            name: "c".into(),
            class_label: Some(2),
        };
        to_value(&solid)
    }

    #[test]
    fn missing_faces() {
        let mut d = doc();
        d.as_object_mut().unwrap().remove("faces");
        assert_eq!(from_value(&d).unwrap_err().path(), Some("/faces"));
    }

    #[test]
    fn non_unit_axes_name_the_face() {
        let mut d = doc();
        d["faces"][0]["placement"][3] = json!(2.0);
        let err = from_value(&d).unwrap_err();
        assert_eq!(err.path(), Some("/faces/0/placement"));
        assert!(err.to_string().contains("face 0"));
    }

    #[test]
    fn typed_field_errors() {
        let mut d = doc();
        d["faces"][0]["kind"] = json!("nurbs");
        assert_eq!(from_value(&d).unwrap_err().path(), Some("/faces/0/kind"));
        let mut d = doc();
        d["faces"][0]["loops"][0]["points"][1] = json!([1.0]);
        assert_eq!(from_value(&d).unwrap_err().path(), Some("/faces/0/loops/0/points/1"));
        let mut d = doc();
        d["edges"] = json!([[0, 0]]);
        assert_eq!(from_value(&d).unwrap_err().path(), Some("/edges"));
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let face = Face::untrimmed(
            0,
            AnalyticSurface::new(Shape::Plane, Placement::canonical(), UvDomain::new(0.1, 0.7, 0.0, 1.0 / 3.0)),
            true,
        );
        let s = Solid {
            faces: vec![face],
            ..Default::default()
        };
        let text = to_string(&s).unwrap();
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        assert!(text.contains("1.0000000000000001e-1"));
    }
}
