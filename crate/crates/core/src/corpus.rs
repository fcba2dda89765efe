//! Line-delimited JSON corpus of per-token channel series.
//!
//! One record per line:
//! `{"id": str, "label": 0|1 (optional), "channels": {name: [finite numbers]}}`.
//! An optional `text` field is carried through for display only.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    pub channels: BTreeMap<String, Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl InstanceRecord {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    /// Checks the per-record invariants; `Err` carries a field-addressed
    /// message.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("id must be non-empty".into());
        }
        if let Some(label) = self.label {
            if label > 1 {
                return Err("label must be 0 or 1".into());
            }
        }
        for (name, series) in &self.channels {
            if series.is_empty() {
                return Err(format!("channel `{name}` is empty"));
            }
            if let Some(pos) = series.iter().position(|v| !v.is_finite()) {
                return Err(format!(
                    "channel `{name}` has a non-finite value at index {pos}"
                ));
            }
        }
        Ok(())
    }
}

/// Channel map that rejects repeated keys instead of keeping the last one.
struct UniqueChannels(BTreeMap<String, Vec<f64>>);

impl<'de> Deserialize<'de> for UniqueChannels {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ChannelVisitor;

        impl<'de> Visitor<'de> for ChannelVisitor {
            type Value = UniqueChannels;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from channel name to an array of numbers")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut channels = BTreeMap::new();
                while let Some((name, series)) = map.next_entry::<String, Vec<f64>>()? {
                    if channels.contains_key(&name) {
                        return Err(de::Error::custom(format!("duplicate channel `{name}`")));
                    }
                    channels.insert(name, series);
                }
                Ok(UniqueChannels(channels))
            }
        }

        deserializer.deserialize_map(ChannelVisitor)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    #[serde(default)]
    label: Option<serde_json::Value>,
    channels: UniqueChannels,
    #[serde(default)]
    text: Option<String>,
}

fn parse_label(value: Option<serde_json::Value>) -> std::result::Result<Option<u8>, String> {
    match value {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(v) => match v.as_u64() {
            Some(0) => Ok(Some(0)),
            Some(1) => Ok(Some(1)),
            _ => Err("label must be 0 or 1".into()),
        },
    }
}

/// Parses a corpus from any reader; `source` names it in error messages.
pub fn parse_corpus<R: BufRead>(reader: R, source: &str) -> Result<Vec<InstanceRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        let label = parse_label(raw.label).map_err(|m| Error::parse(source, lineno, m))?;
        let record = InstanceRecord {
            id: raw.id,
            label,
            channels: raw.channels.0,
            text: raw.text,
        };
        record
            .validate()
            .map_err(|m| Error::parse(source, lineno, m))?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::parse(
                source,
                lineno,
                format!("duplicate id `{}`", record.id),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<InstanceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), &path.display().to_string())
}

pub fn write_corpus_to<W: Write>(records: &[InstanceRecord], mut out: W) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| Error::Serialize(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Serialize(e.to_string()))?;
    }
    Ok(())
}

pub fn write_corpus(records: &[InstanceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus_to(records, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub instances: usize,
    pub positives: usize,
    pub negatives: usize,
    pub unlabeled: usize,
}

pub fn class_counts(records: &[InstanceRecord]) -> ClassCounts {
    let mut counts = ClassCounts {
        instances: records.len(),
        positives: 0,
        negatives: 0,
        unlabeled: 0,
    };
    for r in records {
        match r.label {
            Some(1) => counts.positives += 1,
            Some(_) => counts.negatives += 1,
            None => counts.unlabeled += 1,
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<InstanceRecord>> {
        parse_corpus(text.as_bytes(), "test.jsonl")
    }

    #[test]
    fn parses_a_record() {
        let recs = parse(r#"{"id":"a","label":1,"channels":{"anger":[0.1,0.9]}}"#).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].label, Some(1));
        assert_eq!(recs[0].channels.len(), 1);
        assert_eq!(recs[0].channel("anger"), Some(&[0.1, 0.9][..]));
    }

    #[test]
    fn label_is_optional() {
        let recs = parse("{\"id\":\"a\",\"channels\":{\"x\":[1]}}\n\n{\"id\":\"b\",\"label\":null,\"channels\":{}}\n").unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.label.is_none()));
    }

    #[test]
    fn rejects_bad_label_with_line_number() {
        let text = "{\"id\":\"a\",\"channels\":{\"x\":[1]}}\n{\"id\":\"b\",\"label\":2,\"channels\":{\"x\":[1]}}";
        let err = parse(text).unwrap_err().to_string();
        assert!(err.contains("label must be 0 or 1"), "{err}");
        assert!(err.contains("test.jsonl:2"), "{err}");
        assert!(parse(r#"{"id":"a","label":0.5,"channels":{}}"#).is_err());
        assert!(parse(r#"{"id":"a","label":"1","channels":{}}"#).is_err());
    }

    #[test]
    fn rejects_invariant_violations() {
        let cases = [
            (r#"{"id":"a","channels":{"x":[]}}"#, "empty"),
            (
                r#"{"id":"a","channels":{"x":[1],"x":[2]}}"#,
                "duplicate channel",
            ),
            (r#"{"id":"a","channels":{"x":[1e999]}}"#, ""),
            (r#"{"id":"a","channels":{"x":[null]}}"#, ""),
            (
                r#"{"id":"a","channels":{"x":[1]},"extra":1}"#,
                "unknown field",
            ),
            ("not json", ""),
        ];
        for (line, needle) in cases {
            let err = parse(line).unwrap_err().to_string();
            assert!(err.contains("test.jsonl:1"), "{err}");
            assert!(err.contains(needle), "{err}");
        }
        let dup = "{\"id\":\"a\",\"channels\":{}}\n{\"id\":\"a\",\"channels\":{}}";
        let err = parse(dup).unwrap_err().to_string();
        assert!(err.contains("duplicate id") && err.contains(":2"), "{err}");
    }

    #[test]
    fn channels_may_differ_in_length() {
        let recs = parse(r#"{"id":"a","channels":{"llama":[0.1,0.2,0.3],"anger":[0.5]}}"#).unwrap();
        assert_eq!(recs[0].channel("llama").unwrap().len(), 3);
        assert_eq!(recs[0].channel("anger").unwrap().len(), 1);
    }

    #[test]
    fn reports_class_counts_for_a_published_ratio() {
        // 8000 instances at a 1 : 0.62 joke to non-joke ratio
        let positives = (8000.0_f64 / 1.62).round() as usize;
        assert_eq!(positives, 4938);
        let records: Vec<InstanceRecord> = (0..8000)
            .map(|i| InstanceRecord {
                id: format!("t{i}"),
                label: Some(u8::from(i < positives)),
                channels: BTreeMap::from([("anger".to_string(), vec![0.5])]),
                text: None,
            })
            .collect();
        let mut buf = Vec::new();
        write_corpus_to(&records, &mut buf).unwrap();
        let back = parse_corpus(&buf[..], "mem").unwrap();
        let counts = class_counts(&back);
        assert_eq!((counts.positives, counts.negatives), (4938, 3062));
        assert_eq!(counts.unlabeled, 0);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = concat!(
            r#"{"id":"a","label":1,"channels":{"anger":[0.1,0.30000000000000004],"joy":[1e-300]},"text":"hi"}"#,
            "\n",
            r#"{"id":"b","channels":{"x":[-0.0,5]}}"#,
            "\n"
        );
        let recs = parse(text).unwrap();
        let mut buf = Vec::new();
        write_corpus_to(&recs, &mut buf).unwrap();
        let again = parse_corpus(&buf[..], "mem").unwrap();
        assert_eq!(recs, again);
        let mut buf2 = Vec::new();
        write_corpus_to(&again, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
