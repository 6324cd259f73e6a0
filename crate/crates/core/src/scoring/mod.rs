//! Chunk scorers.
//!
//! A [`Scorer`] turns `(src_text, hyp_text)` requests into one finite score
//! each. Built-in scorers are pure and run in-process; [`ExternalScorer`]
//! talks to a separate process over a line-delimited JSON protocol.

mod builtin;
mod external;
pub mod mock;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use builtin::{lexical_overlap, length_ratio, BuiltinScorer};
pub use external::{ExternalOptions, ExternalScorer};
pub use mock::ContextMock;

use crate::error::{Result, SlideError};
use crate::exec::Execution;

/// Environment variable holding the default external scorer endpoint
/// (`host:port`), used when an external spec names neither a command nor
/// an endpoint.
pub const ENDPOINT_ENV: &str = "SLIDE_SCORER_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub request_id: u64,
    pub src_text: String,
    pub hyp_text: String,
}

impl ScoreRequest {
    pub fn new(request_id: u64, src_text: impl Into<String>, hyp_text: impl Into<String>) -> Self {
        ScoreRequest {
            request_id,
            src_text: src_text.into(),
            hyp_text: hyp_text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub request_id: u64,
    pub score: f64,
}

pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    /// Score every request; responses come back in request order.
    fn score_batch(&self, reqs: &[ScoreRequest]) -> Result<Vec<ScoreResponse>>;

    /// True when scores depend only on the request text, which makes
    /// caching and parallel fan-out safe.
    fn is_pure(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Constant,
    LengthRatio,
    LexicalOverlap,
    ContextAwareMock,
    External,
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerKind::Constant => "constant",
            ScorerKind::LengthRatio => "length_ratio",
            ScorerKind::LexicalOverlap => "lexical_overlap",
            ScorerKind::ContextAwareMock => "context_aware_mock",
            ScorerKind::External => "external",
        })
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = SlideError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "constant" => Ok(ScorerKind::Constant),
            "length_ratio" => Ok(ScorerKind::LengthRatio),
            "lexical_overlap" => Ok(ScorerKind::LexicalOverlap),
            "context_aware_mock" | "context_mock" => Ok(ScorerKind::ContextAwareMock),
            "external" => Ok(ScorerKind::External),
            _ => Err(SlideError::Config(format!("unknown scorer kind `{s}`"))),
        }
    }
}

/// Declarative scorer description.
///
/// Parameters by kind:
/// - `constant`: `value` (required)
/// - `context_aware_mock`: `antecedent_prefix`, `marker_prefix` (optional)
/// - `external`: `command` or `endpoint` (falls back to [`ENDPOINT_ENV`]),
///   `timeout_ms`, `window`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
}

impl ScorerSpec {
    pub fn new(kind: ScorerKind) -> Self {
        ScorerSpec {
            kind,
            parameters: BTreeMap::new(),
        }
    }

    pub fn constant(value: f64) -> Self {
        ScorerSpec::new(ScorerKind::Constant).with("value", value.to_string())
    }

    pub fn external_command(command: &str) -> Self {
        ScorerSpec::new(ScorerKind::External).with("command", command)
    }

    pub fn external_endpoint(addr: &str) -> Self {
        ScorerSpec::new(ScorerKind::External).with("endpoint", addr)
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.parameters.insert(key.to_owned(), value.into());
        self
    }

    fn param<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.parameters
            .get(key)
            .map(|raw| {
                raw.parse().map_err(|_| {
                    SlideError::Config(format!("scorer parameter `{key}` has bad value `{raw}`"))
                })
            })
            .transpose()
    }

    /// Check parameters without starting anything.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScorerKind::Constant => {
                let v: f64 = self
                    .param("value")?
                    .ok_or_else(|| SlideError::Config("constant scorer needs `value`".into()))?;
                if !v.is_finite() {
                    return Err(SlideError::Config("constant value must be finite".into()));
                }
            }
            ScorerKind::External => {
                if !self.parameters.contains_key("command")
                    && !self.parameters.contains_key("endpoint")
                    && std::env::var_os(ENDPOINT_ENV).is_none()
                {
                    return Err(SlideError::Config(format!(
                        "external scorer needs `command` or `endpoint` (or ${ENDPOINT_ENV})"
                    )));
                }
                self.param::<u64>("timeout_ms")?;
                if self.param::<usize>("window")? == Some(0) {
                    return Err(SlideError::Config("in-flight window must be >= 1".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Instantiate the scorer. External scorers are started (and the
    /// handshake completed) here.
    pub fn build(&self, exec: Execution) -> Result<Box<dyn Scorer>> {
        self.validate()?;
        let builtin = match self.kind {
            ScorerKind::Constant => builtin::Builtin::Constant(self.param("value")?.unwrap()),
            ScorerKind::LengthRatio => builtin::Builtin::LengthRatio,
            ScorerKind::LexicalOverlap => builtin::Builtin::LexicalOverlap,
            ScorerKind::ContextAwareMock => {
                let mut mock = ContextMock::default();
                if let Some(p) = self.parameters.get("antecedent_prefix") {
                    mock.antecedent_prefix = p.clone();
                }
                if let Some(p) = self.parameters.get("marker_prefix") {
                    mock.marker_prefix = p.clone();
                }
                builtin::Builtin::ContextMock(mock)
            }
            ScorerKind::External => {
                let mut opts = ExternalOptions::default();
                if let Some(ms) = self.param::<u64>("timeout_ms")? {
                    opts.timeout = Duration::from_millis(ms);
                }
                if let Some(w) = self.param::<usize>("window")? {
                    opts.window = w;
                }
                let scorer = if let Some(cmd) = self.parameters.get("command") {
                    let argv: Vec<String> = cmd.split_whitespace().map(str::to_owned).collect();
                    ExternalScorer::spawn(&argv, opts)?
                } else {
                    let addr = match self.parameters.get("endpoint") {
                        Some(a) => a.clone(),
                        None => std::env::var(ENDPOINT_ENV).map_err(|_| {
                            SlideError::Config(format!("${ENDPOINT_ENV} is not set"))
                        })?,
                    };
                    ExternalScorer::connect(&addr, opts)?
                };
                return Ok(Box::new(scorer));
            }
        };
        Ok(Box::new(BuiltinScorer::new(builtin, exec)))
    }
}

pub(crate) fn check_distinct_ids(reqs: &[ScoreRequest]) -> Result<()> {
    let mut seen = HashSet::with_capacity(reqs.len());
    for r in reqs {
        if !seen.insert(r.request_id) {
            return Err(SlideError::DuplicateRequestId(r.request_id));
        }
    }
    Ok(())
}

/// Score a single request.
pub fn score_chunk(scorer: &dyn Scorer, req: ScoreRequest) -> Result<ScoreResponse> {
    let mut out = scorer.score_batch(std::slice::from_ref(&req))?;
    out.pop()
        .ok_or_else(|| SlideError::Scorer("scorer returned no response".into()))
}

/// Score a batch, checking the one-response-per-request contract.
pub fn score_batch(scorer: &dyn Scorer, reqs: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
    check_distinct_ids(reqs)?;
    let out = scorer.score_batch(reqs)?;
    if out.len() != reqs.len() {
        return Err(SlideError::Scorer(format!(
            "expected {} responses, got {}",
            reqs.len(),
            out.len()
        )));
    }
    for (req, resp) in reqs.iter().zip(&out) {
        if req.request_id != resp.request_id {
            return Err(SlideError::Scorer(format!(
                "response for {} arrived in the slot of {}",
                resp.request_id, req.request_id
            )));
        }
        if !resp.score.is_finite() {
            return Err(SlideError::Scorer(format!(
                "non-finite score for request {}",
                resp.request_id
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(spec: &ScorerSpec) -> Box<dyn Scorer> {
        spec.build(Execution::Sequential).unwrap()
    }

    #[test]
    fn constant_scores_everything_the_same() {
        let s = build(&ScorerSpec::constant(0.5));
        let r = score_chunk(s.as_ref(), ScoreRequest::new(1, "whatever", "x y")).unwrap();
        assert_eq!(r.score, 0.5);

        let s = build(&ScorerSpec::constant(0.2));
        let reqs: Vec<_> = (0..3).map(|i| ScoreRequest::new(i, "a", "b")).collect();
        let out = score_batch(s.as_ref(), &reqs).unwrap();
        assert_eq!(out.iter().map(|r| r.score).collect::<Vec<_>>(), vec![0.2; 3]);
        assert_eq!(out.iter().map(|r| r.request_id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let s = build(&ScorerSpec::constant(0.2));
        let reqs = vec![ScoreRequest::new(4, "a", "b"), ScoreRequest::new(4, "c", "d")];
        assert!(matches!(
            score_batch(s.as_ref(), &reqs),
            Err(SlideError::DuplicateRequestId(4))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(ScorerSpec::new(ScorerKind::Constant).validate().is_err());
        assert!(ScorerSpec::constant(f64::NAN).validate().is_err());
        assert!(ScorerSpec::external_command("x").with("window", "0").validate().is_err());
        assert!(ScorerSpec::external_command("x").with("timeout_ms", "soon").validate().is_err());
        assert!(ScorerSpec::new(ScorerKind::LengthRatio).validate().is_ok());
        assert_eq!("context-aware-mock".parse::<ScorerKind>().unwrap(), ScorerKind::ContextAwareMock);
    }

    #[test]
    fn builtins_are_pure() {
        for kind in [
            ScorerKind::LengthRatio,
            ScorerKind::LexicalOverlap,
            ScorerKind::ContextAwareMock,
        ] {
            let s = build(&ScorerSpec::new(kind));
            assert!(s.is_pure());
            let req = ScoreRequest::new(0, "a b c ENT1=m", "PRO1=f b");
            let a = score_chunk(s.as_ref(), req.clone()).unwrap();
            let b = score_chunk(s.as_ref(), req).unwrap();
            assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }
}
