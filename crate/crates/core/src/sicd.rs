//! Reader for the subset of SICD metadata needed by the constant-COA geometry.
//!
//! Two encodings are accepted: the SICD XML (matched on local element names, so any
//! namespace version works) and a flat JSON sidecar whose layout is documented in the
//! repository README. NITF containers are not handled.

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geodesy::{llh_to_ecef, EcefPoint, LlhPoint, Polynomial1D, Vec3};
use crate::rd_solver::LookSide;

/// Polynomial in two variables; `coefs[i][j]` multiplies `x^i * y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial2D {
    coefs: Vec<Vec<f64>>,
}

impl Polynomial2D {
    pub fn new(coefs: Vec<Vec<f64>>) -> Result<Self> {
        if coefs.is_empty() || coefs[0].is_empty() {
            return Err(GeoError::Domain(
                "2-D polynomial needs at least one coefficient".into(),
            ));
        }
        let width = coefs[0].len();
        if coefs.iter().any(|row| row.len() != width) {
            return Err(GeoError::Domain(
                "2-D polynomial coefficient grid is ragged".into(),
            ));
        }
        if coefs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeoError::Domain(
                "2-D polynomial coefficient is not finite".into(),
            ));
        }
        Ok(Self { coefs })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coefs: vec![vec![c]],
        }
    }

    pub fn coefs(&self) -> &[Vec<f64>] {
        &self.coefs
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.coefs.iter().rev().fold(0.0, |acc, row| {
            acc * x + row.iter().rev().fold(0.0, |a, &c| a * y + c)
        })
    }
}

/// Per-axis aperture reference point polynomials in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArpPoly {
    pub x: Polynomial1D,
    pub y: Polynomial1D,
    pub z: Polynomial1D,
}

impl ArpPoly {
    pub fn position(&self, t: f64) -> Vec3 {
        Vec3::new(self.x.eval(t), self.y.eval(t), self.z.eval(t))
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        Vec3::new(
            self.x.derivative().eval(t),
            self.y.derivative().eval(t),
            self.z.derivative().eval(t),
        )
    }
}

/// Platform state stated explicitly for the center of aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoaState {
    pub pos: EcefPoint,
    pub vel: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicdMeta {
    pub scp_ecef: EcefPoint,
    pub scp_llh: LlhPoint,
    pub scp_row: f64,
    pub scp_col: f64,
    pub rows: usize,
    pub cols: usize,
    pub row_spacing: f64,
    pub col_spacing: f64,
    /// COA time as a polynomial in (range meters, azimuth meters) from the SCP.
    pub time_coa_poly: Polynomial2D,
    pub polar_ang_poly: Polynomial1D,
    pub spatial_freq_sf_poly: Polynomial1D,
    pub arp_poly: ArpPoly,
    pub coa_state: Option<CoaState>,
    pub center_frequency: f64,
    pub side_of_track: LookSide,
    pub collect_start: Option<String>,
}

impl SicdMeta {
    fn validate(self) -> Result<Self> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(GeoError::Metadata(format!(
                    "{name} (must be positive, got {v})"
                )))
            }
        };
        positive(self.row_spacing, "row spacing")?;
        positive(self.col_spacing, "col spacing")?;
        positive(self.center_frequency, "center frequency")?;
        if self.rows == 0 || self.cols == 0 {
            return Err(GeoError::Metadata("image shape (must be non-zero)".into()));
        }
        if !self.scp_ecef.is_finite() {
            return Err(GeoError::Metadata("SCP ECF".into()));
        }
        Ok(self)
    }

    /// Non-fatal inconsistencies worth surfacing to a user.
    pub fn consistency_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = llh_to_ecef(&self.scp_llh).distance(&self.scp_ecef);
        if d > 1.0 {
            out.push(format!("SCP LLH and ECF disagree by {d:.3} m"));
        }
        if let Some(coa) = &self.coa_state {
            let t = self.time_coa_poly.coefs()[0][0];
            let dp = (self.arp_poly.position(t) - coa.pos.vec()).norm();
            let dv = (self.arp_poly.velocity(t) - coa.vel).norm();
            if dp > 1.0 || dv > 1e-3 {
                out.push(format!(
                    "SCPCOA ARP state disagrees with ARPPoly at t_COA by {dp:.3} m / {dv:.6} m/s"
                ));
            }
        }
        out
    }
}

/// Reads either encoding, deciding by the first non-blank character.
pub fn parse_meta(text: &str) -> Result<SicdMeta> {
    match text.trim_start().chars().next() {
        Some('<') => parse_sicd_xml(text),
        Some(_) => parse_meta_json(text),
        None => Err(GeoError::Metadata("empty metadata document".into())),
    }
}

// ---------------------------------------------------------------------------
// XML

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn find<'a, 'i>(root: Node<'a, 'i>, path: &str) -> Option<Node<'a, 'i>> {
    path.split('/')
        .try_fold(root, |node, name| child(node, name))
}

fn require<'a, 'i>(root: Node<'a, 'i>, path: &str) -> Result<Node<'a, 'i>> {
    find(root, path).ok_or_else(|| GeoError::Metadata(path.to_string()))
}

fn text_f64(node: Node, path: &str) -> Result<f64> {
    node.text()
        .map(str::trim)
        .and_then(|t| t.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| GeoError::Metadata(format!("{path} (not a finite number)")))
}

fn num(root: Node, path: &str) -> Result<f64> {
    text_f64(require(root, path)?, path)
}

fn opt_num(root: Node, path: &str) -> Result<Option<f64>> {
    find(root, path).map(|n| text_f64(n, path)).transpose()
}

fn xyz(root: Node, path: &str) -> Result<Vec3> {
    let n = require(root, path)?;
    Ok(Vec3::new(
        num(n, "X").map_err(|_| GeoError::Metadata(format!("{path}/X")))?,
        num(n, "Y").map_err(|_| GeoError::Metadata(format!("{path}/Y")))?,
        num(n, "Z").map_err(|_| GeoError::Metadata(format!("{path}/Z")))?,
    ))
}

fn exponent(node: Node, attr: &str, path: &str) -> Result<usize> {
    node.attribute(attr)
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| GeoError::Metadata(format!("{path}/Coef@{attr}")))
}

fn poly1d(root: Node, path: &str) -> Result<Polynomial1D> {
    let node = require(root, path)?;
    let mut terms = Vec::new();
    for coef in node
        .children()
        .filter(|c| c.is_element() && c.tag_name().name() == "Coef")
    {
        terms.push((exponent(coef, "exponent1", path)?, text_f64(coef, path)?));
    }
    if terms.is_empty() {
        return Err(GeoError::Metadata(format!("{path}/Coef")));
    }
    let degree = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let mut coefs = vec![0.0; degree + 1];
    for (k, c) in terms {
        coefs[k] = c;
    }
    Polynomial1D::new(coefs).map_err(|_| GeoError::Metadata(path.to_string()))
}

fn poly2d(root: Node, path: &str) -> Result<Polynomial2D> {
    let node = require(root, path)?;
    let mut terms = Vec::new();
    for coef in node
        .children()
        .filter(|c| c.is_element() && c.tag_name().name() == "Coef")
    {
        terms.push((
            exponent(coef, "exponent1", path)?,
            exponent(coef, "exponent2", path)?,
            text_f64(coef, path)?,
        ));
    }
    if terms.is_empty() {
        return Err(GeoError::Metadata(format!("{path}/Coef")));
    }
    let n1 = terms.iter().map(|t| t.0).max().unwrap_or(0) + 1;
    let n2 = terms.iter().map(|t| t.1).max().unwrap_or(0) + 1;
    let mut coefs = vec![vec![0.0; n2]; n1];
    for (i, j, c) in terms {
        coefs[i][j] = c;
    }
    Polynomial2D::new(coefs).map_err(|_| GeoError::Metadata(path.to_string()))
}

fn usize_at(root: Node, path: &str) -> Result<usize> {
    let v = num(root, path)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(GeoError::Metadata(format!(
            "{path} (not a non-negative integer)"
        )));
    }
    Ok(v as usize)
}

fn parse_side(s: &str, path: &str) -> Result<LookSide> {
    match s.trim() {
        "L" | "LEFT" | "Left" => Ok(LookSide::Left),
        "R" | "RIGHT" | "Right" => Ok(LookSide::Right),
        other => Err(GeoError::Metadata(format!(
            "{path} (expected L or R, got {other:?})"
        ))),
    }
}

/// Parses a standalone SICD XML document.
pub fn parse_sicd_xml(text: &str) -> Result<SicdMeta> {
    let doc = Document::parse(text)?;
    let root = doc.root_element();

    if let Some(algo) = find(root, "ImageFormation/ImageFormAlgo").and_then(|n| n.text()) {
        if algo.trim() != "PFA" {
            return Err(GeoError::UnsupportedFormat(format!(
                "image formation algorithm {:?}; only PFA is supported",
                algo.trim()
            )));
        }
    }
    if let Some(kind) = find(root, "Grid/Type").and_then(|n| n.text()) {
        if kind.trim() != "RGAZIM" {
            return Err(GeoError::UnsupportedFormat(format!(
                "grid type {:?}; only RGAZIM polar-format grids are supported",
                kind.trim()
            )));
        }
    }

    let scp_ecef = EcefPoint::from_vec(&xyz(root, "GeoData/SCP/ECF")?);
    let scp_llh = LlhPoint::new(
        num(root, "GeoData/SCP/LLH/Lat")?,
        num(root, "GeoData/SCP/LLH/Lon")?,
        num(root, "GeoData/SCP/LLH/HAE")?,
    )
    .map_err(|e| GeoError::Metadata(format!("GeoData/SCP/LLH ({e})")))?;

    let coa_state = match (find(root, "SCPCOA/ARPPos"), find(root, "SCPCOA/ARPVel")) {
        (Some(_), Some(_)) => Some(CoaState {
            pos: EcefPoint::from_vec(&xyz(root, "SCPCOA/ARPPos")?),
            vel: xyz(root, "SCPCOA/ARPVel")?,
        }),
        _ => None,
    };

    let center_frequency = match (
        opt_num(root, "ImageFormation/TxFrequencyProc/MinProc")?,
        opt_num(root, "ImageFormation/TxFrequencyProc/MaxProc")?,
    ) {
        (Some(lo), Some(hi)) => 0.5 * (lo + hi),
        _ => {
            0.5 * (num(root, "RadarCollection/TxFrequency/Min")?
                + num(root, "RadarCollection/TxFrequency/Max")?)
        }
    };

    let side_path = "SCPCOA/SideOfTrack";
    let side_of_track = parse_side(
        require(root, side_path)?.text().unwrap_or_default(),
        side_path,
    )?;

    let collect_start = find(root, "Timeline/CollectStart")
        .and_then(|n| n.text())
        .map(|s| s.trim().to_string());

    SicdMeta {
        scp_ecef,
        scp_llh,
        scp_row: num(root, "ImageData/SCPPixel/Row")?,
        scp_col: num(root, "ImageData/SCPPixel/Col")?,
        rows: usize_at(root, "ImageData/NumRows")?,
        cols: usize_at(root, "ImageData/NumCols")?,
        row_spacing: num(root, "Grid/Row/SS")?,
        col_spacing: num(root, "Grid/Col/SS")?,
        time_coa_poly: poly2d(root, "Grid/TimeCOAPoly")?,
        polar_ang_poly: poly1d(root, "PFA/PolarAngPoly")?,
        spatial_freq_sf_poly: poly1d(root, "PFA/SpatialFreqSFPoly")?,
        arp_poly: ArpPoly {
            x: poly1d(root, "Position/ARPPoly/X")?,
            y: poly1d(root, "Position/ARPPoly/Y")?,
            z: poly1d(root, "Position/ARPPoly/Z")?,
        },
        coa_state,
        center_frequency,
        side_of_track,
        collect_start,
    }
    .validate()
}

// ---------------------------------------------------------------------------
// JSON sidecar

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaJson {
    scp_ecef: [f64; 3],
    scp_llh: [f64; 3],
    scp_pixel: [f64; 2],
    shape: [usize; 2],
    spacing: [f64; 2],
    time_coa_poly: Vec<Vec<f64>>,
    polar_ang_poly: Vec<f64>,
    spatial_freq_sf_poly: Vec<f64>,
    arp_poly: ArpPolyJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coa_state: Option<CoaStateJson>,
    center_frequency_hz: f64,
    side_of_track: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collect_start: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArpPolyJson {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoaStateJson {
    pos: [f64; 3],
    vel: [f64; 3],
}

fn json_poly(coefs: Vec<f64>, name: &str) -> Result<Polynomial1D> {
    Polynomial1D::new(coefs).map_err(|e| GeoError::Metadata(format!("{name} ({e})")))
}

/// Parses the JSON sidecar encoding.
pub fn parse_meta_json(text: &str) -> Result<SicdMeta> {
    if text.trim().is_empty() {
        return Err(GeoError::Metadata("empty metadata document".into()));
    }
    let j: MetaJson = serde_json::from_str(text)?;
    let side_of_track = parse_side(&j.side_of_track, "side_of_track")?;
    let scp_llh = LlhPoint::new(j.scp_llh[0], j.scp_llh[1], j.scp_llh[2])
        .map_err(|e| GeoError::Metadata(format!("scp_llh ({e})")))?;
    SicdMeta {
        scp_ecef: EcefPoint::new(j.scp_ecef[0], j.scp_ecef[1], j.scp_ecef[2]),
        scp_llh,
        scp_row: j.scp_pixel[0],
        scp_col: j.scp_pixel[1],
        rows: j.shape[0],
        cols: j.shape[1],
        row_spacing: j.spacing[0],
        col_spacing: j.spacing[1],
        time_coa_poly: Polynomial2D::new(j.time_coa_poly)
            .map_err(|e| GeoError::Metadata(format!("time_coa_poly ({e})")))?,
        polar_ang_poly: json_poly(j.polar_ang_poly, "polar_ang_poly")?,
        spatial_freq_sf_poly: json_poly(j.spatial_freq_sf_poly, "spatial_freq_sf_poly")?,
        arp_poly: ArpPoly {
            x: json_poly(j.arp_poly.x, "arp_poly.x")?,
            y: json_poly(j.arp_poly.y, "arp_poly.y")?,
            z: json_poly(j.arp_poly.z, "arp_poly.z")?,
        },
        coa_state: j.coa_state.map(|c| CoaState {
            pos: EcefPoint::new(c.pos[0], c.pos[1], c.pos[2]),
            vel: Vec3::new(c.vel[0], c.vel[1], c.vel[2]),
        }),
        center_frequency: j.center_frequency_hz,
        side_of_track,
        collect_start: j.collect_start,
    }
    .validate()
}

/// Serializes metadata to the JSON sidecar encoding.
pub fn meta_to_json(m: &SicdMeta) -> String {
    let j = MetaJson {
        scp_ecef: [m.scp_ecef.x, m.scp_ecef.y, m.scp_ecef.z],
        scp_llh: [m.scp_llh.lat(), m.scp_llh.lon(), m.scp_llh.height()],
        scp_pixel: [m.scp_row, m.scp_col],
        shape: [m.rows, m.cols],
        spacing: [m.row_spacing, m.col_spacing],
        time_coa_poly: m.time_coa_poly.coefs().to_vec(),
        polar_ang_poly: m.polar_ang_poly.coefs().to_vec(),
        spatial_freq_sf_poly: m.spatial_freq_sf_poly.coefs().to_vec(),
        arp_poly: ArpPolyJson {
            x: m.arp_poly.x.coefs().to_vec(),
            y: m.arp_poly.y.coefs().to_vec(),
            z: m.arp_poly.z.coefs().to_vec(),
        },
        coa_state: m.coa_state.map(|c| CoaStateJson {
            pos: [c.pos.x, c.pos.y, c.pos.z],
            vel: [c.vel.x, c.vel.y, c.vel.z],
        }),
        center_frequency_hz: m.center_frequency,
        side_of_track: match m.side_of_track {
            LookSide::Left => "L".into(),
            LookSide::Right => "R".into(),
        },
        collect_start: m.collect_start.clone(),
    };
    let mut s = serde_json::to_string_pretty(&j).expect("metadata serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<SICD xmlns="urn:SICD:1.3.0">
  <ImageData><NumRows>100</NumRows><NumCols>200</NumCols>
    <SCPPixel><Row>50</Row><Col>100</Col></SCPPixel></ImageData>
  <GeoData><SCP><ECF><X>6378137</X><Y>0</Y><Z>0</Z></ECF>
    <LLH><Lat>0</Lat><Lon>0</Lon><HAE>0</HAE></LLH></SCP></GeoData>
  <Grid><Type>RGAZIM</Type><Row><SS>0.5</SS></Row><Col><SS>0.25</SS></Col>
    <TimeCOAPoly order1="0" order2="0"><Coef exponent1="0" exponent2="0">3.2</Coef></TimeCOAPoly></Grid>
  <RadarCollection><TxFrequency><Min>9.5e9</Min><Max>9.9e9</Max></TxFrequency></RadarCollection>
  <Position><ARPPoly>
    <X order1="0"><Coef exponent1="0">7000000</Coef></X>
    <Y order1="1"><Coef exponent1="1">7500</Coef></Y>
    <Z order1="0"><Coef exponent1="0">0</Coef></Z></ARPPoly></Position>
  <SCPCOA><SideOfTrack>L</SideOfTrack></SCPCOA>
  <PFA><PolarAngPoly order1="0"><Coef exponent1="0">0.1</Coef></PolarAngPoly>
    <SpatialFreqSFPoly order1="0"><Coef exponent1="0">1.0</Coef></SpatialFreqSFPoly></PFA>
</SICD>"#;

    #[test]
    fn minimal_document_parses() {
        let m = parse_sicd_xml(MINIMAL).unwrap();
        assert_eq!((m.rows, m.cols), (100, 200));
        assert_eq!(m.center_frequency, 9.7e9);
        assert_eq!(m.arp_poly.y.coefs(), &[0.0, 7500.0]);
        assert_eq!(m.time_coa_poly.eval(10.0, 20.0), 3.2);
        assert!(m.coa_state.is_none());
        assert_eq!(m.side_of_track, LookSide::Left);
    }

    #[test]
    fn missing_sf_poly_is_named() {
        let text = MINIMAL.replace(
            r#"<SpatialFreqSFPoly order1="0"><Coef exponent1="0">1.0</Coef></SpatialFreqSFPoly>"#,
            "",
        );
        let err = parse_sicd_xml(&text).unwrap_err();
        assert!(err.to_string().contains("PFA/SpatialFreqSFPoly"), "{err}");
    }

    #[test]
    fn non_pfa_grids_are_rejected() {
        let text = MINIMAL.replace("<Type>RGAZIM</Type>", "<Type>RGZERO</Type>");
        assert!(matches!(
            parse_sicd_xml(&text),
            Err(GeoError::UnsupportedFormat(_))
        ));
        let text = MINIMAL.replace(
            "<PFA>",
            "<ImageFormation><ImageFormAlgo>RMA</ImageFormAlgo></ImageFormation><PFA>",
        );
        assert!(matches!(
            parse_sicd_xml(&text),
            Err(GeoError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn bad_values_are_metadata_errors() {
        let text = MINIMAL.replace("<SS>0.5</SS>", "<SS>-0.5</SS>");
        assert!(matches!(parse_sicd_xml(&text), Err(GeoError::Metadata(_))));
        let text = MINIMAL.replace(
            "<SideOfTrack>L</SideOfTrack>",
            "<SideOfTrack>Q</SideOfTrack>",
        );
        assert!(matches!(parse_sicd_xml(&text), Err(GeoError::Metadata(_))));
        let text = MINIMAL.replace("<NumRows>100</NumRows>", "<NumRows>abc</NumRows>");
        let err = parse_sicd_xml(&text).unwrap_err();
        assert!(err.to_string().contains("ImageData/NumRows"));
    }

    #[test]
    fn poly2d_layout() {
        let p = Polynomial2D::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(p.eval(2.0, 5.0), 1.0 + 2.0 * 5.0 + 3.0 * 2.0 + 4.0 * 10.0);
        assert!(Polynomial2D::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let m = parse_sicd_xml(MINIMAL).unwrap();
        let back = parse_meta_json(&meta_to_json(&m)).unwrap();
        assert_eq!(m, back);
        assert!(parse_meta_json("").is_err());
        assert!(parse_meta("   ").is_err());
        let err = parse_meta_json("{}").unwrap_err();
        assert!(err.to_string().contains("scp_ecef"), "{err}");
    }
}
