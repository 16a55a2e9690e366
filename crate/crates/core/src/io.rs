//! JSON files for decompositions and cellular automorphisms.
//!
//! Disk and cell indices are 1-based in files.
//!
//! ```text
//! band:     { "cylinder_group": "1", "a": 1, "c": 3,
//!             "disks": [{ "group": "Z", "delta"?: { "group": "1", "generators": [] } }, ...],
//!             "sigma": [[target, sign], ...], "gamma"?: "perm[1, 0]" }
//! surface:  { "genus": 3, "background_group": "Z", "mobius_pieces": [band, ...] }
//! cellular: { "vertices": 1, "edges": [[1, 1]], "faces": [[[1, 1], [1, 1]]], "base_face": 1,
//!             "perm": [[1], [1], [1]], "sign": [[1], [1]], "eta"?: [0, 1] }
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arith::Carrier;
use crate::cw::{CellMap, CwAutomorphism, CwComplex};
use crate::error::{Error, Result};
use crate::parse::{parse_expr, parse_gamma};
use crate::pi1::SurfaceDecomposition;
use crate::surface::{DeltaRecord, DiskRecord, MobiusDecomposition, SignedPermutation};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    group: String,
    #[serde(default)]
    generators: Vec<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisk {
    group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<RawDelta>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    cylinder_group: String,
    a: u64,
    c: u64,
    disks: Vec<RawDisk>,
    sigma: Vec<(usize, i8)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    genus: u64,
    background_group: String,
    mobius_pieces: Vec<RawBand>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCw {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    faces: Vec<Vec<(usize, i8)>>,
    base_face: usize,
    perm: [Vec<usize>; 3],
    sign: [Vec<i8>; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<(i64, u64)>,
}

pub enum InputFile {
    Band(MobiusDecomposition),
    Surface(SurfaceDecomposition),
    Cellular(CwAutomorphism),
}

fn schema(e: serde_json::Error) -> Error {
    Error::Schema(e.to_string())
}

fn one_based(i: usize, what: &str) -> Result<usize> {
    i.checked_sub(1).ok_or_else(|| Error::Schema(format!("{what} indices start at 1")))
}

fn band_from_raw(raw: RawBand) -> Result<MobiusDecomposition> {
    let mut disks = Vec::with_capacity(raw.disks.len());
    for (i, d) in raw.disks.into_iter().enumerate() {
        let group = parse_expr(&d.group)?;
        let delta = match d.delta {
            None => None,
            Some(delta) => {
                let carrier = Carrier::from_expr(&group);
                let generators = delta
                    .generators
                    .iter()
                    .map(|v| carrier.element_from_json(v))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::Schema(format!("disk {}: {e}", i + 1)))?;
                Some(DeltaRecord { group: parse_expr(&delta.group)?, generators })
            }
        };
        disks.push(DiskRecord { group, delta });
    }
    let image = raw
        .sigma
        .iter()
        .map(|&(t, s)| Ok((one_based(t, "sigma")?, s)))
        .collect::<Result<Vec<_>>>()?;
    let sigma = SignedPermutation::new(image).map_err(|e| Error::Schema(e.to_string()))?;
    let mut dec = MobiusDecomposition {
        cylinder_group: parse_expr(&raw.cylinder_group)?,
        c: raw.c,
        a: raw.a,
        disks,
        sigma,
        gamma: None,
    };
    if let Some(text) = raw.gamma {
        dec.gamma = Some(parse_gamma(&text, &dec.h_group())?);
    }
    Ok(dec)
}

pub fn band_from_json(v: &Value) -> Result<MobiusDecomposition> {
    band_from_raw(serde_json::from_value(v.clone()).map_err(schema)?)
}

pub fn band_to_json(d: &MobiusDecomposition) -> Value {
    let raw = RawBand {
        cylinder_group: d.cylinder_group.to_string(),
        a: d.a,
        c: d.c,
        disks: d
            .disks
            .iter()
            .map(|x| RawDisk {
                group: x.group.to_string(),
                delta: x.delta.as_ref().map(|dl| RawDelta {
                    group: dl.group.to_string(),
                    generators: dl.generators.iter().map(|g| g.to_json()).collect(),
                }),
            })
            .collect(),
        sigma: d.sigma.entries().iter().map(|&(t, s)| (t + 1, s)).collect(),
        gamma: d.gamma.as_ref().map(|g| g.to_string()),
    };
    serde_json::to_value(raw).expect("plain data serializes")
}

pub fn surface_from_json(v: &Value) -> Result<SurfaceDecomposition> {
    let raw: RawSurface = serde_json::from_value(v.clone()).map_err(schema)?;
    Ok(SurfaceDecomposition {
        genus: raw.genus,
        background_group: parse_expr(&raw.background_group)?,
        mobius_pieces: raw.mobius_pieces.into_iter().map(band_from_raw).collect::<Result<_>>()?,
    })
}

pub fn cellular_from_json(v: &Value) -> Result<CwAutomorphism> {
    let raw: RawCw = serde_json::from_value(v.clone()).map_err(schema)?;
    let edges = raw
        .edges
        .iter()
        .map(|&(u, w)| Ok((one_based(u, "vertex")?, one_based(w, "vertex")?)))
        .collect::<Result<Vec<_>>>()?;
    let faces = raw
        .faces
        .iter()
        .map(|cycle| cycle.iter().map(|&(e, s)| Ok((one_based(e, "edge")?, s))).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let complex = CwComplex { vertices: raw.vertices, edges, faces, base_face: one_based(raw.base_face, "face")? };
    let mut perm: [Vec<usize>; 3] = Default::default();
    for (dim, p) in raw.perm.iter().enumerate() {
        perm[dim] = p.iter().map(|&x| one_based(x, "cell")).collect::<Result<_>>()?;
    }
    let [s1, s2] = raw.sign;
    let map = CellMap { perm, sign: [vec![1; raw.vertices], s1, s2] };
    Ok(CwAutomorphism { complex: Arc::new(complex), map, eta: raw.eta })
}

pub fn cellular_to_json(w: &CwAutomorphism) -> Value {
    let x = &w.complex;
    let raw = RawCw {
        vertices: x.vertices,
        edges: x.edges.iter().map(|&(u, v)| (u + 1, v + 1)).collect(),
        faces: x.faces.iter().map(|c| c.iter().map(|&(e, s)| (e + 1, s)).collect()).collect(),
        base_face: x.base_face + 1,
        perm: w.map.perm.clone().map(|p| p.into_iter().map(|i| i + 1).collect()),
        sign: [w.map.sign[1].clone(), w.map.sign[2].clone()],
        eta: w.eta,
    };
    serde_json::to_value(raw).expect("plain data serializes")
}

/// Dispatches on the top-level keys.
pub fn read_input(text: &str) -> Result<InputFile> {
    let v: Value = serde_json::from_str(text).map_err(schema)?;
    let has = |k: &str| v.get(k).is_some();
    if has("genus") {
        surface_from_json(&v).map(InputFile::Surface)
    } else if has("edges") {
        cellular_from_json(&v).map(InputFile::Cellular)
    } else {
        band_from_json(&v).map(InputFile::Band)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cw::{LatticeModel, Layout};
    use crate::expr::{GroupExpr, InvolutiveAutomorphism};

    #[test]
    fn band_round_trip() {
        let text = r#"{ "cylinder_group": "Z", "a": 2, "c": 4,
            "disks": [{ "group": "Z2", "delta": { "group": "1" } }, { "group": "Z2 x Z3" }],
            "sigma": [[1, -1], [2, -1]], "gamma": "inv" }"#;
        let InputFile::Band(d) = read_input(text).unwrap() else { panic!() };
        assert_eq!(d.b(), 2);
        assert_eq!(d.sigma.apply((0, 1)), (0, -1));
        assert!(matches!(d.gamma, Some(InvolutiveAutomorphism::Table(_))));
        assert!(d.validate().is_valid(), "{}", d.validate());
        let back = band_from_json(&band_to_json(&d)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(read_input("{"), Err(Error::Schema(_))));
        let zero = r#"{ "cylinder_group": "1", "a": 1, "c": 1, "disks": [{ "group": "Z" }], "sigma": [[0, 1]] }"#;
        assert!(matches!(read_input(zero), Err(Error::Schema(_))));
        let extra = r#"{ "cylinder_group": "1", "a": 1, "c": 1, "disks": [], "sigma": [], "b": 1 }"#;
        assert!(matches!(read_input(extra), Err(Error::Schema(_))));
        let bad_delta = r#"{ "cylinder_group": "1", "a": 1, "c": 1,
            "disks": [{ "group": "Z2", "delta": { "group": "Z2", "generators": [5] } }], "sigma": [[1, 1]] }"#;
        assert!(read_input(bad_delta).is_err());
    }

    #[test]
    fn cellular_round_trip() {
        let dec = MobiusDecomposition::from_orbits(GroupExpr::Unit, 2, &[GroupExpr::IntLine], &[GroupExpr::Unit], None)
            .unwrap();
        let model = LatticeModel::build(&dec, &Layout::single_band(1)).unwrap();
        let w = model.automorphism(1);
        let InputFile::Cellular(back) = read_input(&cellular_to_json(&w).to_string()).unwrap() else { panic!() };
        assert_eq!(*back.complex, *w.complex);
        assert_eq!(back.map, w.map);
        assert_eq!(back.eta, Some((1, 2)));
    }

    #[test]
    fn surface_file() {
        let text = r#"{ "genus": 2, "background_group": "Z",
            "mobius_pieces": [{ "cylinder_group": "1", "a": 1, "c": 1, "disks": [], "sigma": [] }] }"#;
        let InputFile::Surface(s) = read_input(text).unwrap() else { panic!() };
        assert_eq!(s.mobius_pieces.len(), 1);
    }
}
