//! Tweet preprocessing strategies.
//!
//! Every strategy other than [`Strategy::NP`] builds on the base `P`
//! normalization: hashtag and mention sigils are stripped (their text is
//! kept), emoji, punctuation and URLs are dropped, whitespace runs collapse
//! to one space, and the result is lowercased. The variants then replace
//! emoji with a placeholder, drop hashtags and/or mentions, keep only the
//! first member of each hashtag/mention run, or swap handles for display
//! names.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{self, is_valid_handle, Token, TokenKind, TokenStream};

/// Placeholder substituted for each emoji by [`Strategy::PERep`].
pub const EMOJI_PLACEHOLDER: &str = "$EMOJI$";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Verbatim.
    #[serde(rename = "NP")]
    NP,
    #[serde(rename = "P")]
    P,
    #[serde(rename = "P+ERep")]
    PERep,
    #[serde(rename = "P-H")]
    PH,
    #[serde(rename = "P-M")]
    PM,
    #[serde(rename = "P-H-M")]
    PHM,
    #[serde(rename = "P-MRR-HRR")]
    PMrrHrr,
    #[serde(rename = "P-MRR-HRR+MRep")]
    PMrrHrrMRep,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::NP,
        Strategy::P,
        Strategy::PERep,
        Strategy::PH,
        Strategy::PM,
        Strategy::PHM,
        Strategy::PMrrHrr,
        Strategy::PMrrHrrMRep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NP => "NP",
            Strategy::P => "P",
            Strategy::PERep => "P+ERep",
            Strategy::PH => "P-H",
            Strategy::PM => "P-M",
            Strategy::PHM => "P-H-M",
            Strategy::PMrrHrr => "P-MRR-HRR",
            Strategy::PMrrHrrMRep => "P-MRR-HRR+MRep",
        }
    }

    pub fn needs_handle_map(self) -> bool {
        self == Strategy::PMrrHrrMRep
    }

    fn drops_hashtags(self) -> bool {
        matches!(self, Strategy::PH | Strategy::PHM)
    }

    fn drops_mentions(self) -> bool {
        matches!(self, Strategy::PM | Strategy::PHM)
    }

    fn collapses_runs(self) -> bool {
        matches!(self, Strategy::PMrrHrr | Strategy::PMrrHrrMRep)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '+')
            .collect::<String>()
            .to_ascii_uppercase();
        let strategy = match key.as_str() {
            "NP" => Strategy::NP,
            "P" => Strategy::P,
            "P+EREP" | "PEREP" => Strategy::PERep,
            "PH" => Strategy::PH,
            "PM" => Strategy::PM,
            "PHM" => Strategy::PHM,
            "PMRRHRR" => Strategy::PMrrHrr,
            "PMRRHRR+MREP" | "PMRRHRRMREP" => Strategy::PMrrHrrMRep,
            _ => return Err(PreprocessError::UnknownStrategy(s.to_owned())),
        };
        Ok(strategy)
    }
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("strategy {0} requires a handle map")]
    MissingHandleMap(Strategy),
    #[error("unknown preprocessing strategy '{0}'")]
    UnknownStrategy(String),
    #[error("handle map line {line}: {message}")]
    HandleMapSyntax { line: usize, message: String },
    #[error("reading handle map: {0}")]
    Io(#[from] std::io::Error),
}

/// Lowercase handle (no `@`) to display name.
///
/// Display names are stored already passed through base `P`, so a
/// substituted name never reintroduces punctuation, emoji or uppercase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HandleMap {
    entries: HashMap<String, String>,
}

impl HandleMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, handle: &str, display_name: &str) -> Result<(), PreprocessError> {
        let handle = handle.strip_prefix('@').unwrap_or(handle);
        if !is_valid_handle(handle) {
            return Err(PreprocessError::HandleMapSyntax {
                line: 0,
                message: format!("'{handle}' is not a valid handle"),
            });
        }
        let name = render(&lexer::lex(display_name), Strategy::P, None);
        self.entries.insert(handle.to_ascii_lowercase(), name);
        Ok(())
    }

    /// Case-insensitive lookup. Names that normalize to nothing count as
    /// unmapped.
    pub fn get(&self, handle: &str) -> Option<&str> {
        let handle = handle.strip_prefix('@').unwrap_or(handle);
        self.entries
            .get(&handle.to_ascii_lowercase())
            .map(String::as_str)
            .filter(|name| !name.is_empty())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `handle<TAB>display name` lines; blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        let mut map = HandleMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (handle, name) = raw.split_once('\t').ok_or_else(|| PreprocessError::HandleMapSyntax {
                line,
                message: "expected `handle<TAB>display name`".into(),
            })?;
            map.insert(handle.trim(), name.trim()).map_err(|e| match e {
                PreprocessError::HandleMapSyntax { message, .. } => {
                    PreprocessError::HandleMapSyntax { line, message }
                }
                other => other,
            })?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Applies `strategy` to a token stream.
pub fn apply(
    strategy: Strategy,
    stream: &TokenStream,
    handles: Option<&HandleMap>,
) -> Result<String, PreprocessError> {
    if strategy.needs_handle_map() && handles.is_none() {
        return Err(PreprocessError::MissingHandleMap(strategy));
    }
    Ok(render(stream, strategy, handles))
}

/// Convenience wrapper: lex (without the claim length limit) and apply.
pub fn apply_text(
    strategy: Strategy,
    text: &str,
    handles: Option<&HandleMap>,
) -> Result<String, PreprocessError> {
    apply(strategy, &lexer::lex(text), handles)
}

fn render(stream: &TokenStream, strategy: Strategy, handles: Option<&HandleMap>) -> String {
    if strategy == Strategy::NP {
        return stream.source.clone();
    }
    let tokens = &stream.tokens;
    let run_followers = if strategy.collapses_runs() {
        run_followers(tokens)
    } else {
        vec![false; tokens.len()]
    };

    let mut out = String::with_capacity(stream.source.len());
    let mut i = 0;
    while i < tokens.len() {
        let token = &tokens[i];
        match token.kind {
            TokenKind::Word => out.push_str(&token.text),
            TokenKind::Whitespace => out.push(' '),
            TokenKind::Hashtag => {
                if !strategy.drops_hashtags() && !run_followers[i] {
                    out.push_str(token.body());
                }
            }
            TokenKind::Mention => {
                if !strategy.drops_mentions() && !run_followers[i] {
                    let mapped = match (strategy, handles) {
                        (Strategy::PMrrHrrMRep, Some(map)) => map.get(token.body()),
                        _ => None,
                    };
                    match mapped {
                        Some(name) => {
                            out.push(' ');
                            out.push_str(name);
                            out.push(' ');
                        }
                        None => out.push_str(token.body()),
                    }
                }
            }
            TokenKind::Emoji => {
                if strategy == Strategy::PERep {
                    push_placeholder(&mut out);
                }
            }
            TokenKind::Punct => {
                if strategy == Strategy::PERep && is_placeholder_at(tokens, i) {
                    push_placeholder(&mut out);
                    i += 3;
                    continue;
                }
            }
            TokenKind::Url => {}
        }
        i += 1;
    }
    finish(&out)
}

fn push_placeholder(out: &mut String) {
    out.push(' ');
    out.push_str(EMOJI_PLACEHOLDER);
    out.push(' ');
}

/// `$`, `EMOJI`, `$` as lexed from an earlier replacement.
fn is_placeholder_at(tokens: &[Token], i: usize) -> bool {
    matches!(
        tokens.get(i..i + 3),
        Some([a, b, c]) if a.text == "$" && b.kind == TokenKind::Word && b.text == "EMOJI" && c.text == "$"
    )
}

/// Marks hashtags and mentions that follow a same-kind token separated only
/// by whitespace; those are the run members after the first.
fn run_followers(tokens: &[Token]) -> Vec<bool> {
    let mut followers = vec![false; tokens.len()];
    let mut previous: Option<TokenKind> = None;
    for (i, token) in tokens.iter().enumerate() {
        match token.kind {
            TokenKind::Whitespace => {}
            kind @ (TokenKind::Hashtag | TokenKind::Mention) => {
                followers[i] = previous == Some(kind);
                previous = Some(kind);
            }
            _ => previous = None,
        }
    }
    followers
}

/// Collapses whitespace, trims, and lowercases everything except
/// placeholders.
fn finish(raw: &str) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .split(EMOJI_PLACEHOLDER)
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(EMOJI_PLACEHOLDER)
}

/// Base `P` normalization split into words. This is the analyzer shared by
/// the local index and the text metrics.
pub fn normalized_words(text: &str) -> Vec<String> {
    render(&lexer::lex(text), Strategy::P, None)
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Drops URL tokens. Whitespace left adjacent by a removal is merged into
/// the first whitespace token, and dropped entirely at either end of the
/// text. The result is re-lexed against its new source; since a removal can
/// change how the neighbours segment (a combining mark joining a preceding
/// emoji, say), this repeats until no URL token remains.
pub fn remove_urls(stream: &TokenStream) -> TokenStream {
    let mut current = stream.clone();
    while current.iter().any(|t| t.kind == TokenKind::Url) {
        current = remove_urls_once(&current);
    }
    current
}

fn remove_urls_once(stream: &TokenStream) -> TokenStream {
    let mut kept: Vec<&Token> = Vec::with_capacity(stream.len());
    let mut after_removal = false;
    for token in stream {
        match token.kind {
            TokenKind::Url => after_removal = true,
            TokenKind::Whitespace if after_removal => {
                let last_is_space = kept.last().is_some_and(|t| t.kind == TokenKind::Whitespace);
                if !last_is_space && !kept.is_empty() {
                    kept.push(token);
                }
            }
            _ => {
                after_removal = false;
                kept.push(token);
            }
        }
    }
    // Whitespace that preceded a removed URL at the very end.
    while kept.last().is_some_and(|t| t.kind == TokenKind::Whitespace) && after_removal {
        kept.pop();
    }
    let text: String = kept.iter().map(|t| t.text.as_str()).collect();
    lexer::lex(&text)
}
