use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Category, GroupKey, Technique};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid webshot name `{name}`: {reason}")]
pub struct NameError {
    pub name: String,
    pub reason: &'static str,
}

/// Parsed form of a webshot file name such as `B2Netherlands_791.jpg`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WebshotName {
    pub technique: Technique,
    pub category: Category,
    /// Country name with spaces removed.
    pub country: String,
    pub seq: u32,
}

impl WebshotName {
    pub fn new(technique: Technique, category: Category, country: &str, seq: u32) -> Self {
        WebshotName {
            technique,
            category,
            country: compact_country(country),
            seq,
        }
    }

    pub fn for_group(group: &GroupKey, seq: u32) -> Self {
        Self::new(group.technique, group.category, &group.country, seq)
    }

    /// Group key of the name. The country is the compacted form.
    pub fn group(&self) -> GroupKey {
        GroupKey {
            technique: self.technique,
            category: self.category,
            country: self.country.clone(),
        }
    }
}

pub fn compact_country(country: &str) -> String {
    country.chars().filter(|c| !c.is_whitespace()).collect()
}

impl fmt::Display for WebshotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}_{}.jpg",
            self.technique.letter(),
            self.category.id(),
            self.country,
            self.seq
        )
    }
}

impl FromStr for WebshotName {
    type Err = NameError;

    fn from_str(name: &str) -> Result<Self, Self::Err> {
        let err = |reason| NameError {
            name: name.to_string(),
            reason,
        };
        let stem = name.strip_suffix(".jpg").ok_or_else(|| err("missing .jpg extension"))?;
        let mut chars = stem.chars();
        let technique = chars
            .next()
            .and_then(Technique::from_letter)
            .ok_or_else(|| err("technique letter must be B or S"))?;
        let category = chars
            .next()
            .and_then(|c| c.to_digit(10))
            .and_then(|d| Category::from_id(d as u8).ok())
            .ok_or_else(|| err("category digit must be 1-6"))?;
        let (country, seq) = chars
            .as_str()
            .rsplit_once('_')
            .ok_or_else(|| err("missing `_<seq>` suffix"))?;
        if country.is_empty() {
            return Err(err("empty country"));
        }
        if country.chars().any(char::is_whitespace) {
            return Err(err("country contains whitespace"));
        }
        if seq.is_empty() || !seq.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("sequence must be a positive integer"));
        }
        let seq: u32 = seq.parse().map_err(|_| err("sequence out of range"))?;
        if seq == 0 {
            return Err(err("sequence must be a positive integer"));
        }
        Ok(WebshotName {
            technique,
            category,
            country: country.to_string(),
            seq,
        })
    }
}

/// `<T><C><Country>_<seq>.jpg`, spaces removed from the country name.
pub fn make_name(technique: Technique, category: Category, country: &str, seq: u32) -> String {
    WebshotName::new(technique, category, country, seq).to_string()
}

pub fn parse_name(name: &str) -> Result<WebshotName, NameError> {
    name.parse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn netherlands_example() {
        assert_eq!(
            make_name(Technique::Browsing, Category::BusinessEconomy, "Netherlands", 791),
            "B2Netherlands_791.jpg"
        );
        let p = parse_name("B2Netherlands_791.jpg").unwrap();
        assert_eq!(p.technique, Technique::Browsing);
        assert_eq!(p.category.id(), 2);
        assert_eq!(p.country, "Netherlands");
        assert_eq!(p.seq, 791);
    }

    #[test]
    fn spaces_removed() {
        assert_eq!(
            make_name(Technique::Searching, Category::ArtsEntertainment, "Spain", 1),
            "S1Spain_1.jpg"
        );
        assert_eq!(
            make_name(Technique::Searching, Category::NewsMedia, "New Zealand", 4),
            "S5NewZealand_4.jpg"
        );
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "B2Netherlands_791.png",
            "X2Netherlands_791.jpg",
            "B7Netherlands_791.jpg",
            "B0Netherlands_791.jpg",
            "B2Netherlands791.jpg",
            "B2_791.jpg",
            "B2Netherlands_.jpg",
            "B2Netherlands_0.jpg",
            "B2Netherlands_-3.jpg",
            "B2Netherlands_+3.jpg",
        ] {
            assert!(parse_name(bad).is_err(), "{bad} should be rejected");
        }
    }

    proptest! {
        #[test]
        fn roundtrip(
            t in prop::sample::select(Technique::ALL.to_vec()),
            c in prop::sample::select(Category::ALL.to_vec()),
            country in "[A-Za-z][A-Za-z_'.-]{0,30}",
            seq in 1u32..,
        ) {
            let name = make_name(t, c, &country, seq);
            prop_assert_eq!(parse_name(&name).unwrap(), WebshotName { technique: t, category: c, country, seq });
        }
    }
}
