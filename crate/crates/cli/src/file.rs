//! Scheme files: JSON with every number written as a string in the file's mode.

use std::fmt;

use paperfold::dd::Dd;
use paperfold::geometry::{polygon_validate, BoundaryPos, BoundarySegment, Point};
use paperfold::scalar::{Rational, Scalar};
use paperfold::scheme::{Arrangement, FoldingScheme, SegmentPairing, TailFamily, TailKind};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = "paperfold-scheme/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact `p/q` strings.
    Rational,
    /// `f64` decimal strings; incidence tolerance `1e-10`.
    Float,
    /// `hi+lo` pairs of `f64`; tolerance `1e-28`.
    DoubleDouble,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub version: String,
    pub mode: Mode,
    pub polygons: Vec<Vec<[String; 2]>>,
    #[serde(default)]
    pub pairings: Vec<PairingEntry>,
    #[serde(default)]
    pub tails: Vec<TailEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub singular: Vec<PosEntry>,
    /// Collar height used by `modulus`; chosen automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar_height: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub component: usize,
    pub start: String,
    pub length: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingEntry {
    pub a: SegmentEntry,
    pub b: SegmentEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosEntry {
    pub component: usize,
    pub t: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KindEntry {
    Geometric { ratio: String, scale: String },
    PowerLaw { exponent: String, sum: String },
    MiddleThirdsCantor { sum: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrangementEntry {
    Contiguous,
    DisjointCantorStyle,
    CrossedPairs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailEntry {
    pub kind: KindEntry,
    pub anchor: PosEntry,
    pub direction: i8,
    pub arrangement: ArrangementEntry,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "parse error at line {}, column {}: {}", self.line, self.column, self.message)
        } else {
            write!(f, "parse error: {}", self.message)
        }
    }
}

fn semantic(message: String) -> ParseError {
    ParseError { line: 0, column: 0, message }
}

/// A parsed scheme in the scalar type chosen by its mode.
#[derive(Clone, Debug)]
pub enum AnyScheme {
    Rational(FoldingScheme<Rational>),
    Float(FoldingScheme<f64>),
    DoubleDouble(FoldingScheme<Dd>),
}

pub struct Loaded {
    pub file: SchemeFile,
    pub scheme: AnyScheme,
}

pub fn parse_text(text: &str) -> Result<Loaded, ParseError> {
    let file: SchemeFile = serde_json::from_str(text)
        .map_err(|e| ParseError { line: e.line(), column: e.column(), message: e.to_string() })?;
    if file.version != VERSION {
        return Err(semantic(format!("unsupported version {:?}, expected {VERSION:?}", file.version)));
    }
    let scheme = match file.mode {
        Mode::Rational => AnyScheme::Rational(to_scheme(&file)?),
        Mode::Float => AnyScheme::Float(to_scheme(&file)?),
        Mode::DoubleDouble => AnyScheme::DoubleDouble(to_scheme(&file)?),
    };
    Ok(Loaded { file, scheme })
}

fn num<S: Scalar>(s: &str, at: &str) -> Result<S, ParseError> {
    S::parse(s).ok_or_else(|| semantic(format!("{at}: cannot read {s:?} as a number")))
}

fn to_scheme<S: Scalar>(f: &SchemeFile) -> Result<FoldingScheme<S>, ParseError> {
    let mut polygons = Vec::with_capacity(f.polygons.len());
    for (i, vs) in f.polygons.iter().enumerate() {
        let mut pts = Vec::with_capacity(vs.len());
        for (j, [x, y]) in vs.iter().enumerate() {
            let at = format!("polygons[{i}][{j}]");
            pts.push(Point::new(num(x, &at)?, num(y, &at)?));
        }
        polygons.push(polygon_validate(pts).map_err(|e| semantic(format!("polygons[{i}]: {e:?}")))?);
    }
    let seg = |e: &SegmentEntry, at: &str| -> Result<BoundarySegment<S>, ParseError> {
        Ok(BoundarySegment::new(e.component, num(&e.start, at)?, num(&e.length, at)?))
    };
    let mut pairings = Vec::with_capacity(f.pairings.len());
    for (i, p) in f.pairings.iter().enumerate() {
        let at = format!("pairings[{i}]");
        pairings.push(SegmentPairing::new(seg(&p.a, &at)?, seg(&p.b, &at)?));
    }
    let mut tails = Vec::with_capacity(f.tails.len());
    for (i, t) in f.tails.iter().enumerate() {
        let at = format!("tails[{i}]");
        let kind = match &t.kind {
            KindEntry::Geometric { ratio, scale } => TailKind::Geometric { ratio: num(ratio, &at)?, scale: num(scale, &at)? },
            KindEntry::PowerLaw { exponent, sum } => {
                TailKind::PowerLaw { exponent: num::<f64>(exponent, &at)?, sum: num(sum, &at)? }
            }
            KindEntry::MiddleThirdsCantor { sum } => TailKind::MiddleThirdsCantor { sum: num(sum, &at)? },
        };
        let arrangement = match t.arrangement {
            ArrangementEntry::Contiguous => Arrangement::Contiguous,
            ArrangementEntry::DisjointCantorStyle => Arrangement::DisjointCantorStyle,
            ArrangementEntry::CrossedPairs => Arrangement::CrossedPairs,
        };
        tails.push(TailFamily {
            kind,
            anchor: BoundaryPos::new(t.anchor.component, num(&t.anchor.t, &at)?),
            direction: t.direction,
            arrangement,
        });
    }
    let mut scheme = FoldingScheme::new(polygons, pairings, tails);
    for (i, p) in f.singular.iter().enumerate() {
        scheme.singular.push(BoundaryPos::new(p.component, num(&p.t, &format!("singular[{i}]"))?));
    }
    Ok(scheme)
}

pub trait Moded: Scalar {
    const MODE: Mode;
}

impl Moded for Rational {
    const MODE: Mode = Mode::Rational;
}

impl Moded for f64 {
    const MODE: Mode = Mode::Float;
}

impl Moded for Dd {
    const MODE: Mode = Mode::DoubleDouble;
}

pub fn from_scheme<S: Moded>(s: &FoldingScheme<S>, collar_height: Option<String>) -> SchemeFile {
    let seg = |b: &BoundarySegment<S>| SegmentEntry { component: b.start.component, start: b.start.t.emit(), length: b.length.emit() };
    let pos = |p: &BoundaryPos<S>| PosEntry { component: p.component, t: p.t.emit() };
    SchemeFile {
        version: VERSION.to_string(),
        mode: S::MODE,
        polygons: s.polygons.iter().map(|p| p.vertices().iter().map(|v| [v.x.emit(), v.y.emit()]).collect()).collect(),
        pairings: s.pairings.iter().map(|p| PairingEntry { a: seg(&p.a), b: seg(&p.b) }).collect(),
        tails: s
            .tails
            .iter()
            .map(|t| TailEntry {
                kind: match t.kind {
                    TailKind::Geometric { ratio, scale } => KindEntry::Geometric { ratio: ratio.emit(), scale: scale.emit() },
                    TailKind::PowerLaw { exponent, sum } => KindEntry::PowerLaw { exponent: exponent.emit(), sum: sum.emit() },
                    TailKind::MiddleThirdsCantor { sum } => KindEntry::MiddleThirdsCantor { sum: sum.emit() },
                },
                anchor: pos(&t.anchor),
                direction: t.direction,
                arrangement: match t.arrangement {
                    Arrangement::Contiguous => ArrangementEntry::Contiguous,
                    Arrangement::DisjointCantorStyle => ArrangementEntry::DisjointCantorStyle,
                    Arrangement::CrossedPairs => ArrangementEntry::CrossedPairs,
                },
            })
            .collect(),
        singular: s.singular.iter().map(pos).collect(),
        collar_height,
    }
}

pub fn to_text(f: &SchemeFile) -> String {
    let mut s = serde_json::to_string_pretty(f).expect("scheme files always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{
  "version": "paperfold-scheme/1",
  "mode": "rational",
  "polygons": [[["0","0"],["1","0"],["1","1"],["0","1"]]],
  "pairings": [
    {"a": {"component": 0, "start": "1", "length": "1"}, "b": {"component": 0, "start": "3", "length": "1"}},
    {"a": {"component": 0, "start": "2", "length": "1/2"}, "b": {"component": 0, "start": "5/2", "length": "1/2"}}
  ],
  "tails": [
    {"kind": {"type": "geometric", "ratio": "2", "scale": "1/2"}, "anchor": {"component": 0, "t": "1"},
     "direction": -1, "arrangement": "contiguous"}
  ]
}"#;

    #[test]
    fn round_trip_is_identity() {
        let a = parse_text(SQUARE).unwrap();
        let AnyScheme::Rational(s) = &a.scheme else { panic!("mode") };
        let text = to_text(&from_scheme(s, None));
        let b = parse_text(&text).unwrap();
        let AnyScheme::Rational(t) = &b.scheme else { panic!("mode") };
        assert_eq!(format!("{s:?}"), format!("{t:?}"));
        assert_eq!(text, to_text(&b.file));
    }

    #[test]
    fn truncated_file_reports_position() {
        let e = parse_text(&SQUARE[..120]).err().unwrap();
        assert!(e.line > 0 && e.column > 0);
    }

    #[test]
    fn bad_number_is_named() {
        let e = parse_text(&SQUARE.replace("\"1/2\"", "\"x\"")).err().unwrap();
        assert!(e.message.contains("pairings[1]"), "{}", e.message);
    }
}
