// SPDX-License-Identifier: MIT OR Apache-2.0

//! Culture grouping: maps raw culture tags (e.g. country–language pairs) onto
//! grouped cultures before aggregation. Unmapped tags pass through unchanged.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::actlog::{LogHeader, SampleRecord};
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CultureGrouping {
    map: BTreeMap<String, String>,
}

impl CultureGrouping {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            map: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    /// Reads a JSON object `{"raw tag": "group", ...}`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn group<'a>(&'a self, culture: &'a str) -> &'a str {
        self.map.get(culture).map_or(culture, String::as_str)
    }

    /// Header with cultures replaced by their groups, de-duplicated in order of
    /// first appearance.
    pub fn apply_header(&self, header: &LogHeader) -> LogHeader {
        let mut cultures: Vec<String> = Vec::new();
        for c in &header.cultures {
            let g = self.group(c);
            if !cultures.iter().any(|x| x == g) {
                cultures.push(g.to_string());
            }
        }
        LogHeader {
            cultures,
            ..header.clone()
        }
    }

    pub fn apply_record(&self, record: &mut SampleRecord) {
        if let Some(g) = self.map.get(&record.culture) {
            record.culture = g.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_and_passes_through() {
        let g = CultureGrouping::new([("India-Hindi", "IND"), ("India-Tamil", "IND")]);
        let header = LogHeader::new(
            "m",
            vec![2],
            vec!["India-Hindi".into(), "Japan-Japanese".into(), "India-Tamil".into()],
        );
        assert_eq!(g.apply_header(&header).cultures, vec!["IND".to_string(), "Japan-Japanese".to_string()]);
        assert_eq!(g.group("Japan-Japanese"), "Japan-Japanese");
        assert_eq!(CultureGrouping::default().apply_header(&header), header);
    }

    #[test]
    fn parses_json_object() {
        let g = CultureGrouping::from_reader(&br#"{"Chile-Spanish":"ESP"}"#[..]).unwrap();
        assert_eq!(g.group("Chile-Spanish"), "ESP");
    }
}
