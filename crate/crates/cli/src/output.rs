//! Result files: CSV tables and JSON documents with a schema version, all
//! floats written with 17 significant digits, plus a run manifest.

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};
use slotlab::liouville::ClassicalField;
use slotlab::{Error, Result, SlotDistribution, SlotPartition};

use crate::scenario::Scenario;

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u32 = 1;
const CSV_MARKER: &str = "# schema_version=";

/// `d.ddddddddddddddddde±x`; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Pretty JSON with every float in [`fmt_f64`] form.
struct FixedDigits(PrettyFormatter<'static>);

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// A JSON document tagged with the schema version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: String,
    pub kind: String,
    pub data: T,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn document<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    to_json(&Document { schema_version: SCHEMA_VERSION.into(), kind: kind.into(), data })
}

fn check_version(found: &str) -> Result<()> {
    let major = found.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(SCHEMA_MAJOR) {
        return Err(Error::Schema { found: found.into(), expected: SCHEMA_MAJOR });
    }
    Ok(())
}

pub fn parse_document<T: DeserializeOwned>(text: &str) -> Result<Document<T>> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: String,
    }
    let v: Version = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    check_version(&v.schema_version)?;
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Parse(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(format!("{CSV_MARKER}{SCHEMA_VERSION}\n{}", String::from_utf8_lossy(&body)))
}

/// Header and rows of a CSV file written by this module.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let (first, body) = text.split_once('\n').ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let version = first
        .strip_prefix(CSV_MARKER)
        .ok_or_else(|| Error::Parse("CSV lacks a schema_version line".into()))?;
    check_version(version.trim())?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()).map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

const SLOT_COLUMNS: [&str; 5] = ["i", "j", "x_center", "p_center", "probability"];

fn slot_row(part: &SlotPartition, (i, j): (i64, i64), p: f64) -> Vec<String> {
    let (x, pc) = part.slot_center(i, j);
    vec![i.to_string(), j.to_string(), fmt_f64(x), fmt_f64(pc), fmt_f64(p)]
}

/// One row per populated slot.
pub fn distribution_csv(d: &SlotDistribution) -> Result<String> {
    csv_text(&SLOT_COLUMNS, d.iter().map(|(s, p)| slot_row(d.partition(), s, p)))
}

/// One row per nonzero slot of a classical field.
pub fn field_csv(f: &ClassicalField) -> Result<String> {
    let rows = f.window.slots().zip(&f.values).filter(|(_, v)| **v != 0.0).map(|(s, &v)| slot_row(&f.partition, s, v));
    csv_text(&SLOT_COLUMNS, rows)
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad {what} `{s}`")))
}

pub fn parse_distribution_csv(text: &str, part: SlotPartition) -> Result<SlotDistribution> {
    let (header, rows) = parse_csv(text)?;
    if header != SLOT_COLUMNS {
        return Err(Error::Parse(format!("unexpected columns {header:?}")));
    }
    let mut d = SlotDistribution::new(part);
    for r in rows {
        d.insert((num(&r[0], "i")?, num(&r[1], "j")?), num(&r[4], "probability")?)?;
    }
    Ok(d)
}

/// Time series: first column `t`, then the named metrics.
pub fn series_csv(metrics: &[&str], rows: &[(f64, Vec<f64>)]) -> Result<String> {
    let mut header = vec!["t"];
    header.extend_from_slice(metrics);
    csv_text(
        &header,
        rows.iter().map(|(t, vals)| std::iter::once(fmt_f64(*t)).chain(vals.iter().map(|v| fmt_f64(*v))).collect()),
    )
}

/// Generic table with preformatted cells.
pub fn table_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    csv_text(header, rows)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical serialization of a resolved scenario. The output
/// directory is not part of the configuration.
pub fn config_hash(s: &Scenario) -> Result<String> {
    let mut s = s.clone();
    s.output = None;
    Ok(sha256_hex(to_json(&s)?.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub slotlab_version: String,
    pub cli_version: String,
    pub files: Vec<FileEntry>,
}

/// Files produced by one command, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

impl RunOutput {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

pub fn manifest(command: &str, scenario: &Scenario, out: &RunOutput) -> Result<Manifest> {
    Ok(Manifest {
        command: command.into(),
        scenario: scenario.name.clone(),
        config_hash: config_hash(scenario)?,
        seed: scenario.seed,
        slotlab_version: slotlab_version().into(),
        cli_version: env!("CARGO_PKG_VERSION").into(),
        files: out.files.iter().map(|(n, c)| FileEntry { name: n.clone(), sha256: sha256_hex(c.as_bytes()) }).collect(),
    })
}

fn slotlab_version() -> &'static str {
    // both crates share the workspace version
    env!("CARGO_PKG_VERSION")
}

/// Writes every file of `out` and `manifest.json` into `dir`, one after another.
pub fn write_run(dir: &Path, command: &str, scenario: &Scenario, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &out.files {
        std::fs::write(dir.join(name), contents)?;
    }
    let m = manifest(command, scenario, out)?;
    std::fs::write(dir.join("manifest.json"), document("manifest", &m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    fn part() -> SlotPartition {
        SlotPartition::new(2.0, 1.5, -1.0, 0.25).unwrap()
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-0.5), "-5.0000000000000000e-1");
        let json = to_json(&vec![0.1, 2.0]).unwrap();
        assert!(json.contains("1.0000000000000001e-1") && json.contains("2.0000000000000000e0"), "{json}");
        let back: Vec<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![0.1, 2.0]);
    }

    #[test]
    fn csv_row_count_is_populated_slots() {
        let d = SlotDistribution::from_entries(part(), [((0, 0), 0.5), ((3, -2), 0.25), ((-1, 1), 0.25)]).unwrap();
        let text = distribution_csv(&d).unwrap();
        let (_, rows) = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), d.len());
    }

    #[test]
    fn rejects_unknown_major() {
        let d = SlotDistribution::from_entries(part(), [((0, 0), 1.0)]).unwrap();
        let text = distribution_csv(&d).unwrap().replacen("=1.0", "=2.0", 1);
        assert!(matches!(parse_distribution_csv(&text, part()), Err(Error::Schema { .. })));
        let doc = document("x", &1.0).unwrap().replacen("\"1.0\"", "\"3.1\"", 1);
        assert!(matches!(parse_document::<f64>(&doc), Err(Error::Schema { .. })));
        assert!(parse_document::<f64>(&document("x", &1.0).unwrap()).is_ok());
    }

    #[test]
    fn manifest_hash_tracks_every_field() {
        let base = presets::builtin("harmonic").unwrap();
        let h0 = config_hash(&base).unwrap();
        assert_eq!(h0, config_hash(&base.clone()).unwrap());
        let mut edits: Vec<Scenario> = Vec::new();
        let mut s = base.clone();
        s.seed += 1;
        edits.push(s);
        let mut s = base.clone();
        s.grid.n = 2048;
        edits.push(s);
        let mut s = base.clone();
        s.partition.p_origin = 0.5;
        edits.push(s);
        let mut s = base.clone();
        s.state.sigma_x = 1.5;
        edits.push(s);
        let mut s = base.clone();
        s.schedule.times[3] += 1e-12;
        edits.push(s);
        let mut s = base.clone();
        s.name = "other".into();
        edits.push(s);
        let mut s = base.clone();
        s.propagator.dt = Some(1e-4);
        edits.push(s);
        for e in edits {
            assert_ne!(config_hash(&e).unwrap(), h0);
        }
    }

    #[test]
    fn write_run_fails_on_unwritable_target() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let s = presets::builtin("micro").unwrap();
        let mut out = RunOutput::default();
        out.add("a.csv", "x".into());
        assert!(write_run(&blocker.join("sub"), "evolve", &s, &out).is_err());
    }

    proptest! {
        #[test]
        fn distribution_round_trip(entries in proptest::collection::btree_map((-50i64..50, -50i64..50), 0.0f64..=1.0, 1..40)) {
            let d = SlotDistribution::from_entries(part(), entries).unwrap();
            let back = parse_distribution_csv(&distribution_csv(&d).unwrap(), part()).unwrap();
            prop_assert_eq!(back, d);
        }

        #[test]
        fn float_text_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
