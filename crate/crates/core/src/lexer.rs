//! Lossless tokenizer for raw tweet text.
//!
//! Every byte of the input belongs to exactly one [`Token`], so the token
//! texts concatenated in order always reproduce the source. Classification
//! follows platform conventions:
//!
//! * `Mention`: `@` followed by 1 to 15 ASCII letters, digits or `_`.
//!   A longer handle is not a mention and the `@` becomes punctuation.
//! * `Hashtag`: `#` followed by at least one letter, digit or `_`.
//! * `Url`: a run of URL characters starting with `http://`, `https://`
//!   or `www.` (ASCII case-insensitive), minus trailing sentence punctuation.
//! * `Emoji`: a whole grapheme cluster starting with a non-ASCII codepoint
//!   carrying the Unicode `Emoji` property, or an ASCII keycap base
//!   (`0-9`, `#`, `*`) followed by U+FE0F or U+20E3. ZWJ sequences and flags
//!   stay one token.
//! * `Whitespace`: a maximal run of whitespace.
//! * `Word`: a letter, digit or `_`, followed by letters, digits, `_` and
//!   combining marks.
//! * `Punct`: any other single character.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_properties::{GeneralCategoryGroup, UnicodeEmoji, UnicodeGeneralCategory};
use unicode_segmentation::UnicodeSegmentation;

/// Largest input, in characters, accepted by [`tokenize`].
pub const MAX_INPUT_CHARS: usize = 10_000;

const MAX_HANDLE_LEN: usize = 15;
const VARIATION_SELECTOR_16: char = '\u{FE0F}';
const COMBINING_KEYCAP: char = '\u{20E3}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
    Emoji,
    Url,
    Punct,
    Whitespace,
}

/// Byte range into the source text, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    /// Hashtag or mention text without its sigil; the full text otherwise.
    pub fn body(&self) -> &str {
        match self.kind {
            TokenKind::Hashtag | TokenKind::Mention => &self.text[1..],
            _ => &self.text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub source: String,
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn count(&self, kind: TokenKind) -> usize {
        self.tokens.iter().filter(|t| t.kind == kind).count()
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    InvalidUtf8 { offset: usize },
    #[error("input has {chars} characters, the limit is {limit}")]
    TooLong { chars: usize, limit: usize },
    #[error("malformed token stream: {0}")]
    Malformed(String),
}

/// Tokenizes `text`, rejecting inputs longer than [`MAX_INPUT_CHARS`].
pub fn tokenize(text: &str) -> Result<TokenStream, LexError> {
    let chars = text.chars().count();
    if chars > MAX_INPUT_CHARS {
        return Err(LexError::TooLong {
            chars,
            limit: MAX_INPUT_CHARS,
        });
    }
    Ok(lex(text))
}

/// Validates `bytes` as UTF-8 and tokenizes them.
pub fn tokenize_bytes(bytes: &[u8]) -> Result<TokenStream, LexError> {
    let text = std::str::from_utf8(bytes).map_err(|e| LexError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    tokenize(text)
}

/// Rebuilds the source text from the tokens, checking that spans are
/// contiguous, cover the whole source and agree with the token texts.
pub fn detokenize(stream: &TokenStream) -> Result<String, LexError> {
    let mut out = String::with_capacity(stream.source.len());
    let mut cursor = 0;
    for (i, token) in stream.tokens.iter().enumerate() {
        let Span { start, end } = token.span;
        if start != cursor {
            return Err(LexError::Malformed(format!(
                "token {i} starts at byte {start}, expected {cursor}"
            )));
        }
        if end <= start {
            return Err(LexError::Malformed(format!("token {i} has an empty span")));
        }
        match stream.source.get(start..end) {
            Some(slice) if slice == token.text => {}
            Some(_) => {
                return Err(LexError::Malformed(format!(
                    "token {i} text does not match source bytes {start}..{end}"
                )))
            }
            None => {
                return Err(LexError::Malformed(format!(
                    "token {i} span {start}..{end} is outside the source or splits a character"
                )))
            }
        }
        out.push_str(&token.text);
        cursor = end;
    }
    if cursor != stream.source.len() {
        return Err(LexError::Malformed(format!(
            "tokens cover {cursor} of {} source bytes",
            stream.source.len()
        )));
    }
    Ok(out)
}

/// Tokenizes without the length limit. Used internally where the text is
/// not user-facing claim input (index documents, metric inputs).
pub(crate) fn lex(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let (kind, len) = next_token(&text[pos..]);
        debug_assert!(len > 0);
        tokens.push(Token {
            kind,
            text: text[pos..pos + len].to_owned(),
            span: Span {
                start: pos,
                end: pos + len,
            },
        });
        pos += len;
    }
    TokenStream {
        source: text.to_owned(),
        tokens,
    }
}

fn next_token(rest: &str) -> (TokenKind, usize) {
    let first = rest.chars().next().expect("non-empty input");

    if first.is_whitespace() {
        let len = rest
            .char_indices()
            .find(|(_, c)| !c.is_whitespace())
            .map_or(rest.len(), |(i, _)| i);
        return (TokenKind::Whitespace, len);
    }
    if let Some(len) = url_len(rest) {
        return (TokenKind::Url, len);
    }
    if let Some(len) = emoji_len(rest) {
        return (TokenKind::Emoji, len);
    }
    match first {
        '#' => {
            let body = word_len(&rest[1..]);
            if body > 0 {
                return (TokenKind::Hashtag, 1 + body);
            }
        }
        '@' => {
            let body = rest[1..]
                .bytes()
                .take_while(|b| is_handle_byte(*b))
                .count();
            if (1..=MAX_HANDLE_LEN).contains(&body) {
                return (TokenKind::Mention, 1 + body);
            }
        }
        _ => {}
    }
    let len = word_len(rest);
    if len > 0 {
        return (TokenKind::Word, len);
    }
    (TokenKind::Punct, first.len_utf8())
}

pub(crate) fn is_handle_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Checks a handle against the mention grammar (without the `@`).
pub fn is_valid_handle(handle: &str) -> bool {
    (1..=MAX_HANDLE_LEN).contains(&handle.len()) && handle.bytes().all(is_handle_byte)
}

fn is_word_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_word_continue(c: char) -> bool {
    is_word_start(c) || c.general_category_group() == GeneralCategoryGroup::Mark
}

/// Length of the word starting at `s`, stopping before anything that begins
/// an emoji.
fn word_len(s: &str) -> usize {
    let mut len = 0;
    for (i, c) in s.char_indices() {
        let ok = if i == 0 {
            is_word_start(c)
        } else {
            is_word_continue(c)
        };
        if !ok || emoji_len(&s[i..]).is_some() {
            break;
        }
        len = i + c.len_utf8();
    }
    len
}

fn emoji_len(s: &str) -> Option<usize> {
    let mut chars = s.chars();
    let first = chars.next()?;
    let is_emoji = if first.is_ascii() {
        matches!(first, '0'..='9' | '#' | '*')
            && matches!(chars.next(), Some(VARIATION_SELECTOR_16 | COMBINING_KEYCAP))
    } else {
        first.is_emoji_char()
    };
    if !is_emoji {
        return None;
    }
    s.graphemes(true).next().map(str::len)
}

fn is_url_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b"-._~:/?#[]@!$&'()*+,;=%".contains(&b)
}

fn url_len(s: &str) -> Option<usize> {
    let prefix = ["https://", "http://", "www."]
        .into_iter()
        .find(|p| s.len() >= p.len() && s.as_bytes()[..p.len()].eq_ignore_ascii_case(p.as_bytes()))?;
    let bytes = s.as_bytes();
    let mut end = bytes.iter().take_while(|b| is_url_byte(**b)).count();
    let balanced = bytes[..end].iter().filter(|b| **b == b'(').count();
    while end > prefix.len() {
        match bytes[end - 1] {
            b'.' | b',' | b';' | b':' | b'!' | b'?' | b'\'' | b'"' => end -= 1,
            b')' if balanced == 0 => end -= 1,
            _ => break,
        }
    }
    let rest = &bytes[prefix.len()..end];
    if rest.iter().any(|b| b.is_ascii_alphanumeric()) {
        Some(end)
    } else {
        None
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TokenKind::Word => "word",
            TokenKind::Hashtag => "hashtag",
            TokenKind::Mention => "mention",
            TokenKind::Emoji => "emoji",
            TokenKind::Url => "url",
            TokenKind::Punct => "punct",
            TokenKind::Whitespace => "whitespace",
        };
        f.write_str(name)
    }
}

#[cfg(test)]
mod tests {
    use super::TokenKind::*;
    use super::*;

    fn kinds(text: &str) -> Vec<(TokenKind, String)> {
        tokenize(text)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn k(kind: TokenKind, text: &str) -> (TokenKind, String) {
        (kind, text.to_owned())
    }

    #[test]
    fn mixed_tweet() {
        assert_eq!(
            kinds("Check this #Fake @user 😀"),
            vec![
                k(Word, "Check"),
                k(Whitespace, " "),
                k(Word, "this"),
                k(Whitespace, " "),
                k(Hashtag, "#Fake"),
                k(Whitespace, " "),
                k(Mention, "@user"),
                k(Whitespace, " "),
                k(Emoji, "😀"),
            ]
        );
    }

    #[test]
    fn empty_input() {
        let stream = tokenize("").unwrap();
        assert!(stream.tokens.is_empty());
        assert_eq!(stream.source, "");
        assert_eq!(detokenize(&stream).unwrap(), "");
    }

    #[test]
    fn hashtag_mention_tail() {
        let stream = tokenize("#Afghanistan #Taliban @cnn @FoxNews @BBCWorld").unwrap();
        assert_eq!(stream.count(Hashtag), 2);
        assert_eq!(stream.count(Mention), 3);
        assert_eq!(stream.count(Whitespace), 4);
        assert_eq!(stream.len(), 9);
        for (i, t) in stream.iter().enumerate() {
            let expected = if i % 2 == 1 { Whitespace } else if i < 4 { Hashtag } else { Mention };
            assert_eq!(t.kind, expected, "token {i}");
        }
    }

    #[test]
    fn bare_sigils_are_punct() {
        assert_eq!(kinds("# @ #"), vec![
            k(Punct, "#"),
            k(Whitespace, " "),
            k(Punct, "@"),
            k(Whitespace, " "),
            k(Punct, "#"),
        ]);
        assert_eq!(kinds("@!"), vec![k(Punct, "@"), k(Punct, "!")]);
    }

    #[test]
    fn overlong_handle_is_not_a_mention() {
        let handle = "a".repeat(16);
        let text = format!("@{handle}");
        assert_eq!(kinds(&text), vec![k(Punct, "@"), k(Word, &handle)]);
        let ok = format!("@{}", "a".repeat(15));
        assert_eq!(kinds(&ok), vec![k(Mention, &ok)]);
    }

    #[test]
    fn mention_stops_at_non_handle_char() {
        assert_eq!(kinds("@user's"), vec![k(Mention, "@user"), k(Punct, "'"), k(Word, "s")]);
    }

    #[test]
    fn unicode_hashtag() {
        assert_eq!(kinds("#भारत #café_2"), vec![
            k(Hashtag, "#भारत"),
            k(Whitespace, " "),
            k(Hashtag, "#café_2"),
        ]);
    }

    #[test]
    fn urls() {
        assert_eq!(kinds("see https://t.co/abc now"), vec![
            k(Word, "see"),
            k(Whitespace, " "),
            k(Url, "https://t.co/abc"),
            k(Whitespace, " "),
            k(Word, "now"),
        ]);
        assert_eq!(kinds("(www.altnews.in/x)."), vec![
            k(Punct, "("),
            k(Url, "www.altnews.in/x"),
            k(Punct, ")"),
            k(Punct, "."),
        ]);
        assert_eq!(kinds("HTTP://X.ORG/a?b=1#c"), vec![k(Url, "HTTP://X.ORG/a?b=1#c")]);
        assert_eq!(kinds("https://en.wikipedia.org/wiki/Foo_(bar)"), vec![k(
            Url,
            "https://en.wikipedia.org/wiki/Foo_(bar)"
        )]);
    }

    #[test]
    fn bare_scheme_is_not_a_url() {
        let stream = tokenize("http://").unwrap();
        assert!(stream.iter().all(|t| t.kind != Url));
        let stream = tokenize("www.").unwrap();
        assert!(stream.iter().all(|t| t.kind != Url));
    }

    #[test]
    fn zwj_and_flag_sequences_are_single_tokens() {
        let family = "👨\u{200D}👩\u{200D}👧";
        assert_eq!(kinds(family), vec![k(Emoji, family)]);
        assert_eq!(kinds("🇮🇳🇺🇸"), vec![k(Emoji, "🇮🇳"), k(Emoji, "🇺🇸")]);
        assert_eq!(kinds("👍🏽ok"), vec![k(Emoji, "👍🏽"), k(Word, "ok")]);
        assert_eq!(kinds("😀😀"), vec![k(Emoji, "😀"), k(Emoji, "😀")]);
    }

    #[test]
    fn keycaps_versus_plain_digits() {
        assert_eq!(kinds("1\u{FE0F}\u{20E3}"), vec![k(Emoji, "1\u{FE0F}\u{20E3}")]);
        assert_eq!(kinds("a1\u{FE0F}\u{20E3}"), vec![
            k(Word, "a"),
            k(Emoji, "1\u{FE0F}\u{20E3}")
        ]);
        assert_eq!(kinds("2021"), vec![k(Word, "2021")]);
        assert_eq!(kinds("#️⃣"), vec![k(Emoji, "#️⃣")]);
    }

    #[test]
    fn combining_marks_stay_in_words() {
        let decomposed = "cafe\u{301}";
        assert_eq!(kinds(decomposed), vec![k(Word, decomposed)]);
        assert_eq!(kinds("!\u{301}"), vec![k(Punct, "!"), k(Punct, "\u{301}")]);
    }

    #[test]
    fn too_long_input_is_rejected() {
        let text = "a".repeat(MAX_INPUT_CHARS + 1);
        assert_eq!(
            tokenize(&text),
            Err(LexError::TooLong { chars: MAX_INPUT_CHARS + 1, limit: MAX_INPUT_CHARS })
        );
        assert!(tokenize(&"é".repeat(MAX_INPUT_CHARS)).is_ok());
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        assert_eq!(tokenize_bytes(b"ab\xffc"), Err(LexError::InvalidUtf8 { offset: 2 }));
        assert_eq!(tokenize_bytes(b"ok").unwrap().source, "ok");
    }

    #[test]
    fn detokenize_round_trip() {
        let stream = tokenize("a #b").unwrap();
        assert_eq!(detokenize(&stream).unwrap(), "a #b");
    }

    #[test]
    fn detokenize_rejects_gaps_and_overlaps() {
        let mut stream = tokenize("ab cd").unwrap();
        stream.tokens.remove(1);
        assert!(matches!(detokenize(&stream), Err(LexError::Malformed(_))));

        let mut stream = tokenize("ab cd").unwrap();
        stream.tokens[1].span.start = 1;
        assert!(matches!(detokenize(&stream), Err(LexError::Malformed(_))));

        let mut stream = tokenize("ab cd").unwrap();
        stream.tokens.pop();
        assert!(matches!(detokenize(&stream), Err(LexError::Malformed(_))));
    }

    #[test]
    fn valid_handles() {
        assert!(is_valid_handle("BBCWorld"));
        assert!(!is_valid_handle(""));
        assert!(!is_valid_handle("with space"));
        assert!(!is_valid_handle(&"x".repeat(16)));
    }
}
