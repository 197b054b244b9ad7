//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown continent `{0}`")]
    UnknownContinent(String),
    #[error("unknown technique `{0}`")]
    UnknownTechnique(String),
    #[error("category id {0} outside 1..=6")]
    UnknownCategory(u8),
    #[error("invalid country: {0}")]
    InvalidCountry(String),
    #[error("malformed countries line {line}: {reason}")]
    CountriesLine { line: usize, reason: String },
    #[error("invalid url `{url}`: {reason}")]
    InvalidUrl { url: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Continent {
    Africa,
    Americas,
    Asia,
    Europe,
    Oceania,
}

impl Continent {
    pub const ALL: [Continent; 5] = [
        Continent::Africa,
        Continent::Americas,
        Continent::Asia,
        Continent::Europe,
        Continent::Oceania,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Continent::Africa => "Africa",
            Continent::Americas => "Americas",
            Continent::Asia => "Asia",
            Continent::Europe => "Europe",
            Continent::Oceania => "Oceania",
        }
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Continent {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Continent::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownContinent(s.to_string()))
    }
}

/// A country together with its country-code top-level domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Country {
    name: String,
    cc_tld: String,
    continent: Continent,
}

impl Country {
    /// Validates the name and normalizes the ccTLD (leading dot stripped, lowercased).
    pub fn new(name: &str, cc_tld: &str, continent: Continent) -> Result<Self, ModelError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ModelError::InvalidCountry("empty name".into()));
        }
        let cc = cc_tld.trim().trim_start_matches('.').to_ascii_lowercase();
        if !(2..=3).contains(&cc.len()) || !cc.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(ModelError::InvalidCountry(format!(
                "country code `{cc_tld}` for {name} must be 2-3 letters"
            )));
        }
        Ok(Country {
            name: name.to_string(),
            cc_tld: cc,
            continent,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cc_tld(&self) -> &str {
        &self.cc_tld
    }

    pub fn continent(&self) -> Continent {
        self.continent
    }
}

/// Parses a countries file: one `name<TAB>cc_tld<TAB>continent` record per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_countries(text: &str) -> Result<Vec<Country>, ModelError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(ModelError::CountriesLine {
                line: idx + 1,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let continent = fields[2].parse().map_err(|e: ModelError| ModelError::CountriesLine {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        let country =
            Country::new(fields[0], fields[1], continent).map_err(|e| ModelError::CountriesLine {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        out.push(country);
    }
    Ok(out)
}

/// The six thematic categories. Discriminants are the category ids used in
/// webshot names and datasheets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Category {
    ArtsEntertainment = 1,
    BusinessEconomy = 2,
    Education = 3,
    Government = 4,
    NewsMedia = 5,
    ScienceEnvironment = 6,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::ArtsEntertainment,
        Category::BusinessEconomy,
        Category::Education,
        Category::Government,
        Category::NewsMedia,
        Category::ScienceEnvironment,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self, ModelError> {
        Category::ALL
            .get((id as usize).wrapping_sub(1))
            .copied()
            .ok_or(ModelError::UnknownCategory(id))
    }

    /// Search keywords joined with `OR` in the Searching query.
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            Category::ArtsEntertainment => &[
                "arts",
                "entertainment",
                "dance",
                "museums",
                "theatre",
                "literature",
                "artists",
                "galleries",
            ],
            Category::BusinessEconomy => &[
                "business",
                "economy",
                "marketing",
                "computers",
                "internet",
                "construction",
                "financial",
                "industry",
                "shopping",
                "restaurant",
            ],
            Category::Education => &["education", "academy", "university", "college", "school"],
            Category::Government => &["government", "military", "presidency"],
            Category::NewsMedia => &["news", "media", "magazine", "radio", "television", "newspaper"],
            Category::ScienceEnvironment => &["science", "environment", "archaeology"],
        }
    }

    /// Human-readable label.
    pub fn label(self) -> &'static str {
        match self {
            Category::ArtsEntertainment => "Arts and Entertainment",
            Category::BusinessEconomy => "Business and Economy",
            Category::Education => "Education",
            Category::Government => "Government",
            Category::NewsMedia => "News and Media",
            Category::ScienceEnvironment => "Science and Environment",
        }
    }

    /// Hyphenated directory slug, e.g. `Arts-and-Entertainment`. Also used as
    /// the per-category image folder name.
    pub fn slug(self) -> &'static str {
        match self {
            Category::ArtsEntertainment => "Arts-and-Entertainment",
            Category::BusinessEconomy => "Business-and-Economy",
            Category::Education => "Education",
            Category::Government => "Government",
            Category::NewsMedia => "News-and-Media",
            Category::ScienceEnvironment => "Science-and-Environment",
        }
    }

    pub fn from_slug(slug: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.slug() == slug)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technique {
    Browsing,
    Searching,
}

impl Technique {
    pub const ALL: [Technique; 2] = [Technique::Browsing, Technique::Searching];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Browsing => "Browsing",
            Technique::Searching => "Searching",
        }
    }

    /// Single-letter prefix used in webshot names.
    pub fn letter(self) -> char {
        match self {
            Technique::Browsing => 'B',
            Technique::Searching => 'S',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'B' => Some(Technique::Browsing),
            'S' => Some(Technique::Searching),
            _ => None,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "browsing" | "b" => Ok(Technique::Browsing),
            "searching" | "s" => Ok(Technique::Searching),
            _ => Err(ModelError::UnknownTechnique(s.to_string())),
        }
    }
}

/// One collected link with its provenance. Only the country name and
/// continent travel with the record; the country code is a collection input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlRecord {
    pub url: String,
    pub country: String,
    pub continent: Continent,
    pub category: Category,
    pub technique: Technique,
}

impl UrlRecord {
    pub fn new(
        url: &str,
        country: &Country,
        category: Category,
        technique: Technique,
    ) -> Result<Self, ModelError> {
        Self::from_parts(url, country.name(), country.continent(), category, technique)
    }

    pub fn from_parts(
        url: &str,
        country: &str,
        continent: Continent,
        category: Category,
        technique: Technique,
    ) -> Result<Self, ModelError> {
        if country.trim().is_empty() {
            return Err(ModelError::InvalidCountry("empty name".into()));
        }
        let parsed = url::Url::parse(url).map_err(|e| ModelError::InvalidUrl {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        if !matches!(parsed.scheme(), "http" | "https") {
            return Err(ModelError::InvalidUrl {
                url: url.to_string(),
                reason: format!("unsupported scheme `{}`", parsed.scheme()),
            });
        }
        Ok(UrlRecord {
            url: url.to_string(),
            country: country.to_string(),
            continent,
            category,
            technique,
        })
    }

    /// The `(technique, category, country)` group used for webshot sequencing.
    pub fn group(&self) -> GroupKey {
        GroupKey {
            technique: self.technique,
            category: self.category,
            country: self.country.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub technique: Technique,
    pub category: Category,
    pub country: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_ids_are_a_bijection() {
        for c in Category::ALL {
            assert_eq!(Category::from_id(c.id()).unwrap(), c);
            assert_eq!(Category::from_slug(c.slug()), Some(c));
        }
        assert_eq!(Category::BusinessEconomy.id(), 2);
        assert!(Category::from_id(0).is_err());
        assert!(Category::from_id(7).is_err());
    }

    #[test]
    fn country_code_normalized() {
        let c = Country::new("Spain", ".ES", Continent::Europe).unwrap();
        assert_eq!(c.cc_tld(), "es");
        assert!(Country::new("Spain", "", Continent::Europe).is_err());
        assert!(Country::new("", "es", Continent::Europe).is_err());
        assert!(Country::new("X", "abcd", Continent::Europe).is_err());
    }

    #[test]
    fn countries_file_parses() {
        let text = "# name\tcc\tcontinent\nSpain\tes\tEurope\n\nGhana\tgh\tafrica\r\n";
        let cs = parse_countries(text).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].continent(), Continent::Africa);
        let err = parse_countries("Spain\tes\n").unwrap_err();
        assert!(matches!(err, ModelError::CountriesLine { line: 1, .. }));
        assert!(parse_countries("Spain\tes\tAtlantis\n").is_err());
    }

    #[test]
    fn url_record_requires_absolute_http() {
        let es = Country::new("Spain", "es", Continent::Europe).unwrap();
        let ok = UrlRecord::new("https://a.es/", &es, Category::Education, Technique::Searching);
        assert_eq!(ok.unwrap().country, "Spain");
        assert!(UrlRecord::new("/relative", &es, Category::Education, Technique::Searching).is_err());
        assert!(UrlRecord::new("ftp://a.es/", &es, Category::Education, Technique::Searching).is_err());
    }
}
