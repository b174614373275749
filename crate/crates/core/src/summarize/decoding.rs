use std::fmt;

use serde::{Deserialize, Serialize};

use super::SummarizeError;

/// Decoding strategy plus the one parameter each strategy needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecodingStrategy {
    Greedy,
    Beam { beam_width: u32 },
    TopK { top_k: u32 },
    TopP { top_p: f64 },
}

/// Generation settings forwarded verbatim to an external summarizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingConfig {
    pub strategy: DecodingStrategy,
    pub no_repeat_ngram: Option<u32>,
    pub max_tokens: u32,
    pub early_stopping: bool,
}

impl Default for DecodingConfig {
    /// Beam search, width 6, no repeated bigrams, 15 tokens, early stopping.
    fn default() -> Self {
        Self {
            strategy: DecodingStrategy::Beam { beam_width: 6 },
            no_repeat_ngram: Some(2),
            max_tokens: 15,
            early_stopping: true,
        }
    }
}

impl DecodingConfig {
    pub fn greedy(max_tokens: u32) -> Self {
        Self {
            strategy: DecodingStrategy::Greedy,
            no_repeat_ngram: None,
            max_tokens,
            early_stopping: false,
        }
    }

    pub fn validate(&self) -> Result<(), SummarizeError> {
        let bad = |msg: String| Err(SummarizeError::InvalidConfig(msg));
        if self.max_tokens == 0 {
            return bad("max_tokens must be at least 1".into());
        }
        if self.no_repeat_ngram == Some(0) {
            return bad("no_repeat_ngram must be positive when set".into());
        }
        match self.strategy {
            DecodingStrategy::Greedy => Ok(()),
            DecodingStrategy::Beam { beam_width: 0 } => bad("beam_width must be at least 1".into()),
            DecodingStrategy::TopK { top_k: 0 } => bad("top_k must be at least 1".into()),
            DecodingStrategy::TopP { top_p } if !(top_p > 0.0 && top_p <= 1.0) => {
                bad(format!("top_p must lie in (0, 1], got {top_p}"))
            }
            _ => Ok(()),
        }
    }

    pub fn to_wire(&self) -> WireDecoding {
        let mut wire = WireDecoding {
            strategy: self.strategy.name().to_owned(),
            beam_width: None,
            no_repeat_ngram: self.no_repeat_ngram,
            top_k: None,
            top_p: None,
            max_tokens: self.max_tokens,
            early_stopping: self.early_stopping,
        };
        match self.strategy {
            DecodingStrategy::Greedy => {}
            DecodingStrategy::Beam { beam_width } => wire.beam_width = Some(beam_width),
            DecodingStrategy::TopK { top_k } => wire.top_k = Some(top_k),
            DecodingStrategy::TopP { top_p } => wire.top_p = Some(top_p),
        }
        wire
    }
}

impl DecodingStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            DecodingStrategy::Greedy => "greedy",
            DecodingStrategy::Beam { .. } => "beam",
            DecodingStrategy::TopK { .. } => "top_k",
            DecodingStrategy::TopP { .. } => "top_p",
        }
    }
}

impl fmt::Display for DecodingConfig {
    /// Short label such as `BW6NG2`, `greedy` or `topk50`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strategy {
            DecodingStrategy::Greedy => f.write_str("greedy")?,
            DecodingStrategy::Beam { beam_width } => write!(f, "BW{beam_width}")?,
            DecodingStrategy::TopK { top_k } => write!(f, "topk{top_k}")?,
            DecodingStrategy::TopP { top_p } => write!(f, "topp{top_p}")?,
        }
        if let Some(n) = self.no_repeat_ngram {
            write!(f, "NG{n}")?;
        }
        Ok(())
    }
}

/// The `decoding` object of a summarizer request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDecoding {
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_repeat_ngram: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    pub max_tokens: u32,
    pub early_stopping: bool,
}

impl TryFrom<WireDecoding> for DecodingConfig {
    type Error = SummarizeError;

    fn try_from(wire: WireDecoding) -> Result<Self, Self::Error> {
        let missing = |field: &str| {
            SummarizeError::InvalidConfig(format!("strategy '{}' requires {field}", wire.strategy))
        };
        let strategy = match wire.strategy.as_str() {
            "greedy" => DecodingStrategy::Greedy,
            "beam" => DecodingStrategy::Beam {
                beam_width: wire.beam_width.ok_or_else(|| missing("beam_width"))?,
            },
            "top_k" => DecodingStrategy::TopK {
                top_k: wire.top_k.ok_or_else(|| missing("top_k"))?,
            },
            "top_p" => DecodingStrategy::TopP {
                top_p: wire.top_p.ok_or_else(|| missing("top_p"))?,
            },
            other => {
                return Err(SummarizeError::InvalidConfig(format!(
                    "unknown decoding strategy '{other}'"
                )))
            }
        };
        let config = DecodingConfig {
            strategy,
            no_repeat_ngram: wire.no_repeat_ngram,
            max_tokens: wire.max_tokens,
            early_stopping: wire.early_stopping,
        };
        config.validate()?;
        Ok(config)
    }
}
