//! The claim/summary pair corpus: loading, curation, descriptive statistics
//! and annotator agreement.
//!
//! Dataset files are JSON Lines with one pair per line:
//!
//! ```json
//! {"smc": "...", "scr": "...", "fca_url": "https://...", "publisher": "...",
//!  "source_country": "IN", "category": "Politics", "summarizable": true,
//!  "smc_language": "en", "scr_language": "en"}
//! ```
//!
//! `smc`, `scr`, `fca_url` and `source_country` are required. The remaining
//! fields default to an empty publisher, category `Other`, `summarizable =
//! true` and English.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{similarity_buckets, EvalError, TfidfModel};
use crate::lexer;
use crate::preprocess::{self, remove_urls, HandleMap, PreprocessError, Strategy};
use crate::retrieve::{normalize_url, FcaRecord};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error("dataset is empty")]
    Empty,
    #[error("annotation records are not paired A/B for: {}", .0.join(", "))]
    Unpaired(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceCountry {
    #[serde(rename = "IN")]
    India,
    #[serde(rename = "US")]
    UnitedStates,
    #[serde(rename = "other")]
    Other,
}

impl FromStr for SourceCountry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in" | "ind" | "india" => Ok(Self::India),
            "us" | "usa" | "united states" => Ok(Self::UnitedStates),
            "other" => Ok(Self::Other),
            _ => Err(format!("unknown source_country '{s}'")),
        }
    }
}

impl fmt::Display for SourceCountry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::India => "IN",
            Self::UnitedStates => "US",
            Self::Other => "other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Politics,
    #[serde(rename = "Crime and Terrorism")]
    CrimeAndTerrorism,
    World,
    Entertainment,
    Technology,
    Food,
    Religion,
    Sports,
    Health,
    Education,
    Business,
    Environment,
    Other,
}

impl Category {
    pub const ALL: [Category; 13] = [
        Self::Politics,
        Self::CrimeAndTerrorism,
        Self::World,
        Self::Entertainment,
        Self::Technology,
        Self::Food,
        Self::Religion,
        Self::Sports,
        Self::Health,
        Self::Education,
        Self::Business,
        Self::Environment,
        Self::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Politics => "Politics",
            Self::CrimeAndTerrorism => "Crime and Terrorism",
            Self::World => "World",
            Self::Entertainment => "Entertainment",
            Self::Technology => "Technology",
            Self::Food => "Food",
            Self::Religion => "Religion",
            Self::Sports => "Sports",
            Self::Health => "Health",
            Self::Education => "Education",
            Self::Business => "Business",
            Self::Environment => "Environment",
            Self::Other => "Other",
        }
    }
}

impl FromStr for Category {
    type Err = String;

    /// Case- and punctuation-insensitive; "Crime & Terrorism", "crime" and
    /// "misc" are accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        let found = match key.as_str() {
            "crime" | "crimeandterrorism" | "crimeterrorism" | "terrorism" => Some(Self::CrimeAndTerrorism),
            "other" | "misc" | "miscellaneous" | "othermiscellaneous" => Some(Self::Other),
            _ => Self::ALL
                .into_iter()
                .find(|c| c.name().to_ascii_lowercase() == key),
        };
        found.ok_or_else(|| format!("unknown category '{s}'"))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPair {
    pub smc: String,
    pub scr: String,
    /// Normalized at load time.
    pub fca_url: String,
    pub publisher: String,
    pub source_country: SourceCountry,
    pub category: Category,
    pub summarizable: bool,
    pub smc_language: String,
    pub scr_language: String,
}

impl DatasetPair {
    pub fn is_english(&self) -> bool {
        is_english(&self.smc_language) && is_english(&self.scr_language)
    }
}

/// Primary subtag of a BCP-47 code is `en`.
fn is_english(code: &str) -> bool {
    code.split(['-', '_'])
        .next()
        .is_some_and(|primary| primary.eq_ignore_ascii_case("en"))
}

#[derive(Deserialize)]
struct RawPair {
    smc: Option<String>,
    scr: Option<String>,
    fca_url: Option<String>,
    #[serde(default)]
    publisher: String,
    source_country: Option<String>,
    category: Option<String>,
    summarizable: Option<bool>,
    smc_language: Option<String>,
    scr_language: Option<String>,
}

fn required(field: Option<String>, name: &str) -> Result<String, String> {
    match field {
        Some(v) if !v.trim().is_empty() => Ok(v),
        Some(_) => Err(format!("field '{name}' is empty")),
        None => Err(format!("missing field '{name}'")),
    }
}

impl TryFrom<RawPair> for DatasetPair {
    type Error = String;

    fn try_from(raw: RawPair) -> Result<Self, String> {
        let smc = required(raw.smc, "smc")?;
        let scr = required(raw.scr, "scr")?;
        let url = required(raw.fca_url, "fca_url")?;
        let fca_url = normalize_url(&url).map_err(|e| e.to_string())?;
        let source_country = required(raw.source_country, "source_country")?.parse()?;
        let category = match raw.category {
            Some(c) if !c.trim().is_empty() => c.parse()?,
            _ => Category::Other,
        };
        let lang = |l: Option<String>| l.filter(|s| !s.trim().is_empty()).unwrap_or_else(|| "en".into());
        Ok(Self {
            smc,
            scr,
            fca_url,
            publisher: raw.publisher,
            source_country,
            category,
            summarizable: raw.summarizable.unwrap_or(true),
            smc_language: lang(raw.smc_language),
            scr_language: lang(raw.scr_language),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Result of a tolerant load: valid pairs in file order plus per-line
/// rejections.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub pairs: Vec<DatasetPair>,
    pub errors: Vec<LineError>,
    pub warnings: Vec<String>,
}

/// Parses JSON Lines text. Blank lines are skipped; bad lines are reported
/// and skipped.
pub fn parse(text: &str) -> LoadReport {
    let mut report = LoadReport::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawPair>(line)
            .map_err(|e| format!("invalid JSON: {e}"))
            .and_then(DatasetPair::try_from);
        match parsed {
            Ok(pair) => report.pairs.push(pair),
            Err(message) => report.errors.push(LineError { line: i + 1, message }),
        }
    }
    if report.pairs.is_empty() && report.errors.is_empty() {
        report.warnings.push("dataset file contains no records".into());
    }
    report
}

pub fn load(path: &Path) -> Result<LoadReport, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse(&text))
}

/// Strips URLs from each SMC, removes exact `(smc, scr)` duplicates keeping
/// the first, and drops non-summarizable or non-English pairs.
pub fn curate(pairs: &[DatasetPair]) -> Vec<DatasetPair> {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::new();
    for pair in pairs {
        let mut pair = pair.clone();
        pair.smc = remove_urls(&lexer::lex(&pair.smc)).source;
        if !seen.insert((pair.smc.clone(), pair.scr.clone())) {
            continue;
        }
        if pair.summarizable && pair.is_english() {
            out.push(pair);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub pairs: usize,
    pub unique_smc: usize,
    pub unique_scr: usize,
    /// Percentage of pairs per source country.
    pub source_country: BTreeMap<SourceCountry, f64>,
    pub median_smc_chars: usize,
    pub median_smc_words: usize,
    pub median_scr_chars: usize,
    pub median_scr_words: usize,
    pub categories: BTreeMap<Category, usize>,
}

/// Lower median: the element at position `ceil(n/2)` (1-based) once sorted.
pub fn lower_median(values: &mut [usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[values.len().div_ceil(2) - 1])
}

pub fn stats(pairs: &[DatasetPair]) -> Result<DatasetStats, DatasetError> {
    if pairs.is_empty() {
        return Err(DatasetError::Empty);
    }
    let n = pairs.len();
    let unique = |f: fn(&DatasetPair) -> &str| pairs.iter().map(f).collect::<HashSet<_>>().len();
    let median = |f: fn(&DatasetPair) -> usize| {
        let mut v: Vec<usize> = pairs.iter().map(f).collect();
        lower_median(&mut v).expect("non-empty")
    };
    let mut countries: BTreeMap<SourceCountry, usize> = BTreeMap::new();
    let mut categories = BTreeMap::new();
    for p in pairs {
        *countries.entry(p.source_country).or_default() += 1;
        *categories.entry(p.category).or_default() += 1;
    }
    Ok(DatasetStats {
        pairs: n,
        unique_smc: unique(|p| &p.smc),
        unique_scr: unique(|p| &p.scr),
        source_country: countries
            .into_iter()
            .map(|(c, k)| (c, 100.0 * k as f64 / n as f64))
            .collect(),
        median_smc_chars: median(|p| p.smc.chars().count()),
        median_smc_words: median(|p| p.smc.split_whitespace().count()),
        median_scr_chars: median(|p| p.scr.chars().count()),
        median_scr_words: median(|p| p.scr.split_whitespace().count()),
        categories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Annotator {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub annotator_id: Annotator,
    pub summarizable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default)]
    pub languages: Vec<String>,
}

/// Raw percent agreement on the summarizable flag. Every pair id needs
/// exactly one record from each annotator.
pub fn agreement(records: &[AnnotationRecord]) -> Result<f64, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut by_pair: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_pair.entry(&r.pair_id).or_default().push(r);
    }
    let mut unpaired = Vec::new();
    let mut agree = 0;
    for (id, recs) in &by_pair {
        let a: Vec<_> = recs.iter().filter(|r| r.annotator_id == Annotator::A).collect();
        let b: Vec<_> = recs.iter().filter(|r| r.annotator_id == Annotator::B).collect();
        if a.len() != 1 || b.len() != 1 {
            unpaired.push((*id).to_owned());
        } else if a[0].summarizable == b[0].summarizable {
            agree += 1;
        }
    }
    if !unpaired.is_empty() {
        return Err(DatasetError::Unpaired(unpaired));
    }
    Ok(100.0 * agree as f64 / by_pair.len() as f64)
}

/// One fact-check record per distinct article URL, first pair wins.
pub fn fca_records(pairs: &[DatasetPair]) -> Vec<FcaRecord> {
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut out = Vec::new();
    for p in pairs {
        if seen.insert(&p.fca_url, ()).is_some() {
            continue;
        }
        let site = url::Url::parse(&p.fca_url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_owned))
            .unwrap_or_default();
        out.push(FcaRecord {
            url: p.fca_url.clone(),
            scr: p.scr.clone(),
            publisher: p.publisher.clone(),
            site,
            language: p.scr_language.clone(),
            review_date: None,
            verdict: None,
        });
    }
    out
}

pub const COMPLEXITY_THRESHOLDS: [f64; 3] = [0.25, 0.5, 0.75];

/// SMC/SCR similarity profile: SMCs are preprocessed with `strategy`, the
/// unigram IDF is fitted on the processed SMCs and the SCRs pooled, and each
/// threshold maps to the fraction of pairs at or above it.
pub fn complexity_buckets(
    pairs: &[DatasetPair],
    strategy: Strategy,
    handles: Option<&HandleMap>,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>, DatasetError> {
    if pairs.is_empty() {
        return Err(DatasetError::Empty);
    }
    let processed = pairs
        .iter()
        .map(|p| Ok((preprocess::apply_text(strategy, &p.smc, handles)?, p.scr.as_str())))
        .collect::<Result<Vec<_>, PreprocessError>>()?;
    let corpus: Vec<&str> = processed
        .iter()
        .flat_map(|(smc, scr)| [smc.as_str(), *scr])
        .collect();
    let model = TfidfModel::fit(&corpus, 1)?;
    Ok(similarity_buckets(&processed, thresholds, &model)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(smc: &str, scr: &str, url: &str) -> String {
        serde_json::json!({
            "smc": smc, "scr": scr, "fca_url": url, "publisher": "Alt News",
            "source_country": "IN", "category": "Politics", "summarizable": true,
            "smc_language": "en", "scr_language": "en"
        })
        .to_string()
    }

    fn pair(smc: &str, scr: &str) -> DatasetPair {
        DatasetPair {
            smc: smc.into(),
            scr: scr.into(),
            fca_url: "https://x.org/a".into(),
            publisher: String::new(),
            source_country: SourceCountry::India,
            category: Category::Other,
            summarizable: true,
            smc_language: "en".into(),
            scr_language: "en".into(),
        }
    }

    #[test]
    fn load_well_formed() {
        let text = [
            line("a", "b", "https://x.org/1"),
            line("c", "d", "https://x.org/2"),
            line("e", "f", "https://x.org/3/?utm=1"),
        ]
        .join("\n");
        let report = parse(&text);
        assert_eq!(report.pairs.len(), 3);
        assert!(report.errors.is_empty());
        assert_eq!(report.pairs[2].fca_url, "https://x.org/3");
    }

    #[test]
    fn bad_line_rejected_with_number() {
        let text = [
            line("a", "b", "https://x.org/1"),
            r#"{"smc": "c", "fca_url": "https://x.org/2", "source_country": "IN"}"#.to_owned(),
            line("e", "f", "https://x.org/3"),
            "not json".to_owned(),
            line("g", "h", "ftp://x.org/4"),
        ]
        .join("\n");
        let report = parse(&text);
        assert_eq!(report.pairs.len(), 2);
        let lines: Vec<usize> = report.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, [2, 4, 5]);
        assert!(report.errors[0].message.contains("scr"));
    }

    #[test]
    fn bad_enums_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&line("a", "b", "https://x.org/1")).unwrap();
        v["category"] = "Astrology".into();
        assert_eq!(parse(&v.to_string()).errors.len(), 1);
        v["category"] = "crime & terrorism".into();
        v["source_country"] = "Mars".into();
        assert_eq!(parse(&v.to_string()).errors.len(), 1);
        v["source_country"] = "us".into();
        let r = parse(&v.to_string());
        assert_eq!(r.pairs[0].category, Category::CrimeAndTerrorism);
        assert_eq!(r.pairs[0].source_country, SourceCountry::UnitedStates);
    }

    #[test]
    fn empty_file_warns() {
        let r = parse("\n\n");
        assert!(r.pairs.is_empty() && r.errors.is_empty());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn curate_rules() {
        let pairs = vec![
            pair("same claim", "s"),
            pair("same claim", "s"),
            pair("look https://t.co/abc here", "s"),
            pair("look https://t.co/xyz here", "s"),
            DatasetPair {
                summarizable: false,
                ..pair("not summarizable", "s")
            },
            DatasetPair {
                smc_language: "hi".into(),
                ..pair("hindi", "s")
            },
            DatasetPair {
                smc_language: "en-IN".into(),
                ..pair("indian english", "s")
            },
        ];
        let curated = curate(&pairs);
        let smcs: Vec<&str> = curated.iter().map(|p| p.smc.as_str()).collect();
        assert_eq!(smcs, ["same claim", "look here", "indian english"]);
        assert_eq!(curate(&curated), curated);
    }

    #[test]
    fn stats_single_pair() {
        let s = stats(&[pair("a b c", "x y")]).unwrap();
        assert_eq!((s.median_smc_words, s.median_scr_words), (3, 2));
        assert_eq!((s.median_smc_chars, s.median_scr_chars), (5, 3));
        assert_eq!(s.source_country[&SourceCountry::India], 100.0);
        assert!(matches!(stats(&[]), Err(DatasetError::Empty)));
    }

    #[test]
    fn stats_counts() {
        let pairs = [pair("a", "x"), pair("a", "y"), pair("b", "x"), pair("c d e f", "x")];
        let s = stats(&pairs).unwrap();
        assert_eq!((s.pairs, s.unique_smc, s.unique_scr), (4, 3, 2));
        // Word counts 1,1,1,4: lower median is the 2nd value.
        assert_eq!(s.median_smc_words, 1);
    }

    #[test]
    fn lower_median_even() {
        assert_eq!(lower_median(&mut [4, 1, 3, 2]), Some(2));
        assert_eq!(lower_median(&mut [5, 1, 3]), Some(3));
        assert_eq!(lower_median(&mut []), None);
    }

    fn rec(id: &str, who: Annotator, s: bool) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: id.into(),
            annotator_id: who,
            summarizable: s,
            category: None,
            languages: vec![],
        }
    }

    #[test]
    fn agreement_examples() {
        use Annotator::*;
        let all = [rec("1", A, true), rec("1", B, true), rec("2", A, false), rec("2", B, false)];
        assert_eq!(agreement(&all).unwrap(), 100.0);
        let mut three_of_four = Vec::new();
        for (i, b) in [true, true, true, false].into_iter().enumerate() {
            three_of_four.push(rec(&i.to_string(), A, true));
            three_of_four.push(rec(&i.to_string(), B, b));
        }
        assert_eq!(agreement(&three_of_four).unwrap(), 75.0);
        let bad = [rec("1", A, true), rec("1", A, true), rec("2", B, true)];
        match agreement(&bad) {
            Err(DatasetError::Unpaired(ids)) => assert_eq!(ids, ["1", "2"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complexity_rows() {
        let pairs = [pair("Same words here #tag", "same words here"), pair("nothing shared", "other text")];
        let np = complexity_buckets(&pairs, Strategy::NP, None, &COMPLEXITY_THRESHOLDS).unwrap();
        let phm = complexity_buckets(&pairs, Strategy::PHM, None, &COMPLEXITY_THRESHOLDS).unwrap();
        assert_eq!(phm, vec![(0.25, 0.5), (0.5, 0.5), (0.75, 0.5)]);
        assert!(np[2].1 <= phm[2].1);
        assert!(complexity_buckets(&[], Strategy::NP, None, &COMPLEXITY_THRESHOLDS).is_err());
    }

    #[test]
    fn fca_records_dedup_by_url() {
        let mut b = pair("c2", "other summary");
        b.fca_url = "https://y.org/b".into();
        let records = fca_records(&[pair("c1", "s"), pair("c3", "s"), b]);
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].site, "x.org");
        assert_eq!(records[1].scr, "other summary");
    }
}
