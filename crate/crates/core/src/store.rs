//! Line-oriented text format for coefficient fragments.
//!
//! ```text
//! level=277
//! weight=2
//! field=Q
//! eigen=+277
//! coverage=n<=4 m<=2
//! 1 0 1 -24
//! ```
//!
//! Header lines come first, then one `n r m value` record per line. Values
//! are exact rationals `p/q` over `Q` and residues in `[0, p)` over `F_p`.
//! Jacobi fragments use the same layout with `index`, `weight`, `field`,
//! `n_max` headers and `n r value` records; absent records are zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::field::{Field, FieldTag, PrimeField, Rationals};
use crate::jacobi::JacobiFormFragment;
use crate::paramodular::{format_eigen, parse_eigen, EigenData, FourierIndex, ParamodularFragment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("header mismatch: expected {expected}, found {found}")]
    HeaderMismatch { expected: String, found: String },
}

fn perr(line: usize, msg: impl Into<String>) -> StoreError {
    StoreError::Parse { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbHeader {
    pub level: i64,
    pub weight: i64,
    pub field: FieldTag,
    pub eigen: Option<EigenData>,
    pub coverage: String,
}

impl DbHeader {
    pub fn expect(&self, level: i64, weight: i64) -> Result<(), StoreError> {
        if self.level != level || self.weight != weight {
            return Err(StoreError::HeaderMismatch {
                expected: format!("level={level} weight={weight}"),
                found: format!("level={} weight={}", self.level, self.weight),
            });
        }
        Ok(())
    }
}

/// Header plus exact records, kept as their text form until a field is
/// chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffDB {
    pub header: DbHeader,
    pub records: BTreeMap<FourierIndex, String>,
}

impl CoeffDB {
    pub fn from_fragment<F: Field>(frag: &ParamodularFragment<F>, coverage: &str) -> Self {
        let f = frag.field();
        CoeffDB {
            header: DbHeader {
                level: frag.level(),
                weight: frag.weight(),
                field: f.tag(),
                eigen: frag.eigen().cloned(),
                coverage: coverage.to_string(),
            },
            records: frag.coeffs().iter().map(|(t, v)| (*t, f.format(v))).collect(),
        }
    }

    /// Values in `field`, which must match the header.
    pub fn to_fragment<F: Field>(&self, field: F) -> Result<ParamodularFragment<F>, StoreError> {
        if field.tag() != self.header.field {
            return Err(StoreError::HeaderMismatch {
                expected: format!("field={}", field.tag()),
                found: format!("field={}", self.header.field),
            });
        }
        let mut coeffs = BTreeMap::new();
        for (t, s) in &self.records {
            let v = field.parse(s).map_err(|e| perr(0, format!("{t}: {e}")))?;
            coeffs.insert(*t, v);
        }
        let frag = ParamodularFragment::from_map(field, self.header.level, self.header.weight, coeffs)
            .map_err(|e| perr(0, e.to_string()))?;
        match &self.header.eigen {
            Some(e) => frag.with_eigen(e.clone()).map_err(|e| perr(0, e.to_string())),
            None => Ok(frag),
        }
    }

    pub fn serialize(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "level={}", h.level);
        let _ = writeln!(out, "weight={}", h.weight);
        let _ = writeln!(out, "field={}", h.field);
        if let Some(e) = &h.eigen {
            let _ = writeln!(out, "eigen={}", format_eigen(e));
        }
        let _ = writeln!(out, "coverage={}", h.coverage);
        for (t, v) in &self.records {
            let _ = writeln!(out, "{} {} {} {}", t.n, t.r, t.m, v);
        }
        out
    }

    /// Parses and checks every record against the header: positive indices,
    /// no repeats, values valid in the header's field.
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let mut level = None;
        let mut weight = None;
        let mut field = None;
        let mut eigen = None;
        let mut coverage = String::new();
        let mut records = BTreeMap::new();
        let mut in_body = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if !in_body {
                if let Some((k, v)) = l.split_once('=') {
                    match k.trim() {
                        "level" => level = Some(v.trim().parse::<i64>().map_err(|e| perr(line, e.to_string()))?),
                        "weight" => weight = Some(v.trim().parse::<i64>().map_err(|e| perr(line, e.to_string()))?),
                        "field" => field = Some(v.trim().parse::<FieldTag>().map_err(|e| perr(line, e.to_string()))?),
                        "eigen" => eigen = Some(parse_eigen(v.trim()).map_err(|e| perr(line, e))?),
                        "coverage" => coverage = v.trim().to_string(),
                        other => return Err(perr(line, format!("unknown header key {other:?}"))),
                    }
                    continue;
                }
                in_body = true;
            }
            let level = level.ok_or_else(|| perr(line, "missing level"))?;
            let tag = field.ok_or_else(|| perr(line, "missing field"))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(perr(line, "expected `n r m value`"));
            }
            let num = |s: &str| s.parse::<i64>().map_err(|e| perr(line, e.to_string()));
            let t = FourierIndex::new(level, num(parts[0])?, num(parts[1])?, num(parts[2])?)
                .map_err(|e| perr(line, e.to_string()))?;
            if !value_ok(tag, parts[3]) {
                return Err(perr(line, format!("bad value {:?} for field {tag}", parts[3])));
            }
            if records.insert(t, parts[3].to_string()).is_some() {
                return Err(perr(line, format!("repeated index {t}")));
            }
        }
        let header = DbHeader {
            level: level.ok_or_else(|| perr(0, "missing level"))?,
            weight: weight.ok_or_else(|| perr(0, "missing weight"))?,
            field: field.ok_or_else(|| perr(0, "missing field"))?,
            eigen,
            coverage,
        };
        Ok(CoeffDB { header, records })
    }
}

/// Splits header lines from records; `on_key` sees each `key=value`.
fn split_header<'a>(
    text: &'a str,
    mut on_key: impl FnMut(usize, &str, &str) -> Result<(), StoreError>,
) -> Result<Vec<(usize, &'a str)>, StoreError> {
    let mut body = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if body.is_empty() {
            if let Some((k, v)) = l.split_once('=') {
                on_key(i + 1, k.trim(), v.trim())?;
                continue;
            }
        }
        body.push((i + 1, l));
    }
    Ok(body)
}

/// Text form of a [`JacobiFormFragment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacobiDB {
    pub index: i64,
    pub weight: i64,
    pub field: FieldTag,
    pub n_max: i64,
    pub records: BTreeMap<(i64, i64), String>,
}

impl JacobiDB {
    pub fn from_form<F: Field>(form: &JacobiFormFragment<F>) -> Self {
        let f = form.field();
        JacobiDB {
            index: form.index(),
            weight: form.weight(),
            field: f.tag(),
            n_max: form.n_max(),
            records: form.coeffs().iter().map(|(k, v)| (*k, f.format(v))).collect(),
        }
    }

    pub fn to_form<F: Field>(&self, field: F) -> Result<JacobiFormFragment<F>, StoreError> {
        if field.tag() != self.field {
            return Err(StoreError::HeaderMismatch {
                expected: format!("field={}", field.tag()),
                found: format!("field={}", self.field),
            });
        }
        let mut coeffs = BTreeMap::new();
        for ((n, r), s) in &self.records {
            coeffs.insert((*n, *r), field.parse(s).map_err(|e| perr(0, format!("({n},{r}): {e}")))?);
        }
        JacobiFormFragment::new(field, self.weight, self.index, self.n_max, coeffs).map_err(|e| perr(0, e.to_string()))
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "index={}", self.index);
        let _ = writeln!(out, "weight={}", self.weight);
        let _ = writeln!(out, "field={}", self.field);
        let _ = writeln!(out, "n_max={}", self.n_max);
        for ((n, r), v) in &self.records {
            let _ = writeln!(out, "{n} {r} {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let (mut index, mut weight, mut field, mut n_max) = (None, None, None, None);
        let body = split_header(text, |line, k, v| {
            let int = |v: &str| v.parse::<i64>().map_err(|e| perr(line, e.to_string()));
            match k {
                "index" => index = Some(int(v)?),
                "weight" => weight = Some(int(v)?),
                "n_max" => n_max = Some(int(v)?),
                "field" => field = Some(v.parse::<FieldTag>().map_err(|e| perr(line, e.to_string()))?),
                other => return Err(perr(line, format!("unknown header key {other:?}"))),
            }
            Ok(())
        })?;
        let missing = |k: &str| perr(0, format!("missing {k}"));
        let db_field = field.ok_or_else(|| missing("field"))?;
        let n_max = n_max.ok_or_else(|| missing("n_max"))?;
        let mut records = BTreeMap::new();
        for (line, l) in body {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(perr(line, "expected `n r value`"));
            }
            let n: i64 = parts[0].parse().map_err(|e: std::num::ParseIntError| perr(line, e.to_string()))?;
            let r: i64 = parts[1].parse().map_err(|e: std::num::ParseIntError| perr(line, e.to_string()))?;
            if n < 0 || n > n_max {
                return Err(perr(line, format!("n = {n} outside 0..={n_max}")));
            }
            if !value_ok(db_field, parts[2]) {
                return Err(perr(line, format!("bad value {:?} for field {db_field}", parts[2])));
            }
            if records.insert((n, r), parts[2].to_string()).is_some() {
                return Err(perr(line, format!("repeated index ({n},{r})")));
            }
        }
        Ok(JacobiDB {
            index: index.ok_or_else(|| missing("index"))?,
            weight: weight.ok_or_else(|| missing("weight"))?,
            field: db_field,
            n_max,
            records,
        })
    }
}

fn value_ok(tag: FieldTag, s: &str) -> bool {
    match tag {
        FieldTag::Rationals => Rationals.parse(s).is_ok(),
        FieldTag::Prime(p) => PrimeField::new(p).map(|f| f.parse(s).is_ok()).unwrap_or(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rat;

    fn header() -> DbHeader {
        DbHeader { level: 277, weight: 2, field: FieldTag::Rationals, eigen: None, coverage: String::new() }
    }

    #[test]
    fn empty_round_trip() {
        let db = CoeffDB { header: header(), records: BTreeMap::new() };
        let s = db.serialize();
        assert!(s.lines().all(|l| l.contains('=')));
        assert_eq!(CoeffDB::parse(&s).unwrap(), db);
    }

    #[test]
    fn record_line() {
        let mut f = ParamodularFragment::new(Rationals, 277, 2);
        f.insert(FourierIndex::new(277, 1, 0, 1).unwrap(), Rat::from_int(-24)).unwrap();
        let s = CoeffDB::from_fragment(&f, "").serialize();
        assert!(s.lines().any(|l| l == "1 0 1 -24"));
        let back = CoeffDB::parse(&s).unwrap().to_fragment(Rationals).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let s = "level=277\nweight=2\nfield=Q\n1 0 1 3\n1 2 x 4\n";
        assert_eq!(CoeffDB::parse(s).unwrap_err(), StoreError::Parse { line: 5, msg: "invalid digit found in string".into() });
        let s = "level=277\nweight=2\nfield=Q\n1 0 1 3\n1 0 1 4\n";
        assert!(matches!(CoeffDB::parse(s), Err(StoreError::Parse { line: 5, .. })));
        let s = "level=5\nweight=2\nfield=F7\n1 0 1 9\n";
        assert!(matches!(CoeffDB::parse(s), Err(StoreError::Parse { line: 4, .. })));
        let s = "level=5\nweight=2\nfield=Q\n0 0 1 1\n";
        assert!(matches!(CoeffDB::parse(s), Err(StoreError::Parse { line: 4, .. })));
    }

    #[test]
    fn header_mismatch() {
        let db = CoeffDB { header: header(), records: BTreeMap::new() };
        assert!(matches!(db.to_fragment(PrimeField::new(7).unwrap()), Err(StoreError::HeaderMismatch { .. })));
        assert!(matches!(db.header.expect(277, 4), Err(StoreError::HeaderMismatch { .. })));
        assert!(db.header.expect(277, 2).is_ok());
    }

    #[test]
    fn jacobi_round_trip() {
        use crate::series::QDEN;
        use crate::theta::ThetaBlock;
        let tb = ThetaBlock::new(-6, vec![1, 1, 1, 2, 2, 2, 3, 3, 4, 5]).unwrap();
        let f = JacobiFormFragment::from_series(&tb.expand(Rationals, QDEN * 4).unwrap(), 2, 37).unwrap();
        let text = JacobiDB::from_form(&f).serialize();
        let db = JacobiDB::parse(&text).unwrap();
        assert_eq!(db.serialize(), text);
        assert_eq!(db.to_form(Rationals).unwrap(), f);
        let bad = text.replacen("n_max=4", "n_max=3", 1);
        assert!(matches!(JacobiDB::parse(&bad), Err(StoreError::Parse { .. })));
    }
}
