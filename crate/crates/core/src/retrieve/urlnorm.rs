use url::Url;

use super::RetrieveError;

/// Canonical form used for gold matching: lowercase scheme and host, no
/// query, no fragment, no default port, no trailing slash except on the
/// bare root. Redirect targets are not resolved.
pub fn normalize_url(raw: &str) -> Result<String, RetrieveError> {
    let invalid = |reason: String| RetrieveError::InvalidUrl {
        url: raw.to_owned(),
        reason,
    };
    let mut url = Url::parse(raw.trim()).map_err(|e| invalid(e.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(invalid(format!("unsupported scheme '{}'", url.scheme())));
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(invalid("missing host".into()));
    }
    url.set_query(None);
    url.set_fragment(None);
    let trimmed = url.path().trim_end_matches('/').to_owned();
    if trimmed.is_empty() {
        url.set_path("/");
    } else {
        url.set_path(&trimmed);
    }
    Ok(url.into())
}
