//! Request handling independent of the transport, shared by the HTTP
//! routes and the command line.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scisumm_core::index::{IndexError, SearchFilter, SearchResult};
use scisumm_core::query::{ProfileOrigin, QueryBuilder};
use scisumm_core::snapshot::Snapshot;
use scisumm_core::summarizer::{summarize_paper, SummaryOutput};
use scisumm_core::{Config, EntityKey, PaperRecord};

pub const DEFAULT_K: usize = 10;
pub const MAX_K: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApiError {
    EmptyRequest,
    MalformedRequest(String),
    NotFound(String),
    InvalidLength(i64),
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> u16 {
        match self {
            ApiError::EmptyRequest => 400,
            ApiError::MalformedRequest(_) | ApiError::InvalidLength(_) => 422,
            ApiError::NotFound(_) => 404,
            ApiError::Internal(_) => 500,
        }
    }

    /// Process exit code for the same failure: 2 for contract errors, 1 for
    /// internal ones.
    pub fn exit_code(&self) -> i32 {
        if self.status() >= 500 {
            1
        } else {
            2
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ApiError::EmptyRequest => "EmptyRequest",
            ApiError::MalformedRequest(_) => "MalformedRequest",
            ApiError::NotFound(_) => "NotFound",
            ApiError::InvalidLength(_) => "InvalidLength",
            ApiError::Internal(_) => "Internal",
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ApiError::EmptyRequest => f.write_str("request needs a query or a non-empty filter"),
            ApiError::MalformedRequest(m) => write!(f, "malformed request: {m}"),
            ApiError::NotFound(id) => write!(f, "unknown paper {id:?}"),
            ApiError::InvalidLength(l) => write!(f, "length must be at least 1, got {l}"),
            ApiError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for ApiError {}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
}

impl From<&ApiError> for ErrorBody {
    fn from(e: &ApiError) -> Self {
        Self { error: e.kind(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterBody {
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub year_range: Option<(i64, i64)>,
    #[serde(default)]
    pub author: Option<String>,
    #[serde(default)]
    pub entities: Vec<EntityKey>,
}

impl FilterBody {
    pub fn into_filter(self) -> Result<SearchFilter, ApiError> {
        if let Some((lo, hi)) = self.year_range {
            if lo > hi {
                return Err(ApiError::MalformedRequest(format!("year_range [{lo}, {hi}] is empty")));
            }
        }
        let blank = |s: Option<String>| s.filter(|v| !v.trim().is_empty());
        Ok(SearchFilter {
            venue: blank(self.venue),
            year_range: self.year_range,
            author: blank(self.author),
            entities: self.entities.into_iter().collect(),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub filters: Option<FilterBody>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetCount {
    pub kind: String,
    pub entity: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileInfo {
    pub origin: ProfileOrigin,
    /// Heaviest terms first, at most 20.
    pub top_terms: Vec<(String, f64)>,
    pub entities: Vec<EntityKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<SearchResult>,
    pub facets: Vec<FacetCount>,
    pub profile: Option<ProfileInfo>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarizeRequest {
    pub paper_id: String,
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub length: Option<i64>,
}

/// Decodes a JSON body: syntax errors are the caller's 400, shape errors 422.
pub fn decode<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    let text = if body.iter().all(u8::is_ascii_whitespace) { &b"{}"[..] } else { body };
    serde_json::from_slice(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ApiError::MalformedRequest(e.to_string()),
        _ => ApiError::MalformedRequest(format!("invalid JSON: {e}")),
    })
}

pub fn search(snap: &Snapshot, cfg: &Config, req: SearchRequest) -> Result<SearchResponse, ApiError> {
    let filter = req.filters.unwrap_or_default().into_filter()?;
    let query = req.query.filter(|q| !q.trim().is_empty());
    let index = &snap.index;
    let tokens = query.as_deref().map(|q| index.text_processor().normalize(q)).unwrap_or_default();
    if tokens.is_empty() && filter.is_empty() {
        return Err(ApiError::EmptyRequest);
    }
    let k = req.k.unwrap_or(DEFAULT_K).min(MAX_K);
    let results = index.search(&tokens, &filter, k).map_err(|e| match e {
        IndexError::EmptyRequest => ApiError::EmptyRequest,
        other => ApiError::Internal(other.to_string()),
    })?;
    let qcfg = cfg.query();
    let builder = QueryBuilder::new(index, &snap.dictionary, &qcfg);
    let profile = query.as_deref().and_then(|q| builder.from_query(q, &filter.entities)).map(|p| {
        let mut top: Vec<(String, f64)> = p.terms.iter().map(|(t, w)| (t.clone(), *w)).collect();
        top.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        top.truncate(20);
        ProfileInfo { origin: p.origin, top_terms: top, entities: p.entities.into_iter().collect() }
    });
    let facets = index
        .facet_counts(&filter)
        .into_iter()
        .map(|(key, count)| FacetCount { kind: key.kind().as_str().to_owned(), entity: key.canonical().to_owned(), count })
        .collect();
    Ok(SearchResponse { results, facets, profile })
}

/// Seed derived from the paper id and the query text.
pub fn summary_seed(paper_id: &str, query: Option<&str>) -> u64 {
    let mut h = Sha256::new();
    h.update(paper_id.as_bytes());
    h.update([0u8]);
    h.update(query.unwrap_or("").as_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Validated summarize request with defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SummaryKey {
    pub paper_id: String,
    pub query: Option<String>,
    pub length: usize,
    pub seed: u64,
}

impl SummaryKey {
    pub fn new(req: SummarizeRequest, cfg: &Config, seed: Option<u64>) -> Result<Self, ApiError> {
        let length = match req.length {
            Some(l) if l < 1 => return Err(ApiError::InvalidLength(l)),
            Some(l) => l as usize,
            None => cfg.summarizer.summary_length,
        };
        let query = req.query.filter(|q| !q.trim().is_empty());
        let seed = seed.unwrap_or_else(|| summary_seed(&req.paper_id, query.as_deref()));
        Ok(Self { paper_id: req.paper_id, query, length, seed })
    }
}

pub fn summarize(snap: &Snapshot, cfg: &Config, key: &SummaryKey) -> Result<SummaryOutput, ApiError> {
    let paper: &PaperRecord = snap.index.paper(&key.paper_id).ok_or_else(|| ApiError::NotFound(key.paper_id.clone()))?;
    let qcfg = cfg.query();
    let builder = QueryBuilder::new(&snap.index, &snap.dictionary, &qcfg);
    let profile = builder.build(key.query.as_deref(), paper, &BTreeSet::new());
    let ce = cfg.summarizer.with_length(key.length).with_seed(key.seed);
    let summary = summarize_paper(paper, &profile, &ce).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(SummaryOutput::new(paper, &summary, Some(&profile)))
}

/// Paper record with its distinct entities attached.
pub fn paper(snap: &Snapshot, id: &str) -> Result<serde_json::Value, ApiError> {
    let record = snap.index.paper(id).ok_or_else(|| ApiError::NotFound(id.to_owned()))?;
    let mut value = serde_json::to_value(record).map_err(|e| ApiError::Internal(e.to_string()))?;
    let entities: Vec<&EntityKey> = snap.index.paper_entities(id).into_iter().flatten().collect();
    value["entities"] = serde_json::to_value(entities).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_both_inputs() {
        assert_eq!(summary_seed("a", Some("q")), summary_seed("a", Some("q")));
        assert_ne!(summary_seed("a", Some("q")), summary_seed("a", None));
        assert_ne!(summary_seed("a", None), summary_seed("b", None));
    }

    #[test]
    fn decode_classifies_errors() {
        assert_eq!(decode::<SearchRequest>(b"").unwrap(), SearchRequest::default());
        let r: SearchRequest = decode(br#"{"query":"x","k":3}"#).unwrap();
        assert_eq!(r.k, Some(3));
        assert!(matches!(decode::<SearchRequest>(br#"{"filters":{"entities":[["Nope","x"]]}}"#), Err(ApiError::MalformedRequest(_))));
        assert!(matches!(decode::<SearchRequest>(br#"{"filters":{"year_range":"2019"}}"#), Err(ApiError::MalformedRequest(_))));
    }

    #[test]
    fn length_validation() {
        let cfg = Config::default();
        let req = |length| SummarizeRequest { paper_id: "p".into(), query: None, length };
        assert_eq!(SummaryKey::new(req(Some(0)), &cfg, None), Err(ApiError::InvalidLength(0)));
        assert_eq!(SummaryKey::new(req(None), &cfg, None).unwrap().length, 10);
        assert_eq!(SummaryKey::new(req(Some(3)), &cfg, Some(5)).unwrap().seed, 5);
        assert_eq!(ApiError::InvalidLength(0).status(), 422);
        assert_eq!(ApiError::InvalidLength(0).exit_code(), 2);
        assert_eq!(ApiError::Internal(String::new()).exit_code(), 1);
    }
}
