//! HTTP provider: the platform's data API for channels, videos and comments,
//! and the public caption endpoint for transcripts.

use std::time::Duration;

use serde_json::Value;
use sillon_core::text::TimedSegment;

use super::ratelimit::{retry, RateLimiter, RetryPolicy};
use super::{ChannelRef, CommentPage, Provider, ProviderError, RemoteChannel, RemoteComment, RemoteVideo};
use crate::domain::{format_timestamp, Timestamp};

pub const API_KEY_ENV: &str = "SILLON_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub api_key: String,
    pub api_base: String,
    pub captions_base: String,
    pub caption_lang: String,
    pub requests_per_s: f64,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl LiveConfig {
    /// Defaults with the key taken from the environment.
    pub fn from_env() -> Result<Self, ProviderError> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| ProviderError::Permanent(format!("set {API_KEY_ENV} to use the live provider")))?;
        Ok(Self { api_key, ..Self::default() })
    }
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            api_key: String::new(),
            api_base: "https://www.googleapis.com/youtube/v3".into(),
            captions_base: "https://www.youtube.com".into(),
            caption_lang: "fr".into(),
            requests_per_s: 5.0,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(30),
        }
    }
}

pub struct LiveProvider {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl std::fmt::Debug for LiveProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveProvider").field("api_base", &self.config.api_base).finish()
    }
}

enum Body {
    Json(Value),
    Text(String),
    Missing,
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Permanent(format!("http client: {e}")))?;
        let limiter = RateLimiter::new(config.requests_per_s, 1);
        Ok(Self { config, client, limiter })
    }

    fn url(&self, base: &str, path: &str, params: &[(&str, &str)]) -> Result<url::Url, ProviderError> {
        let raw = format!("{}/{}", base.trim_end_matches('/'), path);
        url::Url::parse_with_params(&raw, params).map_err(|e| ProviderError::Permanent(format!("bad url {raw}: {e}")))
    }

    fn get(&self, url: url::Url, json: bool) -> Result<Body, ProviderError> {
        retry(&self.config.retry, || {
            self.limiter.acquire();
            let resp = self.client.get(url.clone()).send().map_err(|e| ProviderError::Transient(e.to_string()))?;
            let status = resp.status();
            if status == reqwest::StatusCode::NOT_FOUND {
                return Ok(Body::Missing);
            }
            if status == reqwest::StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
                return Err(ProviderError::Transient(format!("HTTP {status} from {}", url.path())));
            }
            let text = resp.text().map_err(|e| ProviderError::Transient(e.to_string()))?;
            if !status.is_success() {
                if text.contains("commentsDisabled") {
                    return Ok(Body::Missing);
                }
                return Err(ProviderError::Permanent(format!("HTTP {status} from {}", url.path())));
            }
            if json {
                serde_json::from_str(&text).map(Body::Json).map_err(|e| ProviderError::Permanent(format!("bad JSON: {e}")))
            } else {
                Ok(Body::Text(text))
            }
        })
    }

    fn api(&self, path: &str, params: &[(&str, &str)]) -> Result<Option<Value>, ProviderError> {
        let mut all = params.to_vec();
        all.push(("key", &self.config.api_key));
        match self.get(self.url(&self.config.api_base, path, &all)?, true)? {
            Body::Json(v) => Ok(Some(v)),
            _ => Ok(None),
        }
    }
}

fn str_at<'a>(v: &'a Value, path: &[&str]) -> Option<&'a str> {
    path.iter().try_fold(v, |cur, key| cur.get(key))?.as_str()
}

fn items(v: &Value) -> &[Value] {
    v.get("items").and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

/// Seconds in an ISO 8601 duration such as `PT1H2M3S` or `P1DT5M`.
pub fn parse_iso_duration(s: &str) -> Option<f64> {
    let rest = s.strip_prefix('P')?;
    let (mut total, mut number, mut in_time) = (0.0, String::new(), false);
    for c in rest.chars() {
        match c {
            'T' => in_time = true,
            '0'..='9' | '.' => number.push(c),
            unit => {
                let n: f64 = number.parse().ok()?;
                number.clear();
                total += n * match (unit, in_time) {
                    ('D', false) => 86_400.0,
                    ('W', false) => 604_800.0,
                    ('H', true) => 3_600.0,
                    ('M', true) => 60.0,
                    ('S', true) => 1.0,
                    _ => return None,
                };
            }
        }
    }
    number.is_empty().then_some(total)
}

/// Parses the timed-text XML format: `<text start=".." dur="..">..</text>`.
pub fn parse_timedtext(xml: &str) -> Result<Vec<TimedSegment>, ProviderError> {
    use quick_xml::events::Event;
    let bad = |e: String| ProviderError::Permanent(format!("caption XML: {e}"));
    let mut reader = quick_xml::Reader::from_str(xml);
    let mut out = Vec::new();
    let mut current: Option<(f64, f64, String)> = None;
    loop {
        match reader.read_event().map_err(|e| bad(e.to_string()))? {
            Event::Start(e) if e.name().as_ref() == b"text" => {
                let (mut start, mut dur) = (0.0, 0.0);
                for attr in e.attributes() {
                    let attr = attr.map_err(|e| bad(e.to_string()))?;
                    let value: f64 = std::str::from_utf8(&attr.value).ok().and_then(|v| v.parse().ok()).unwrap_or(0.0);
                    match attr.key.as_ref() {
                        b"start" => start = value,
                        b"dur" => dur = value,
                        _ => {}
                    }
                }
                current = Some((start, dur, String::new()));
            }
            Event::Text(t) => {
                if let Some((_, _, text)) = current.as_mut() {
                    text.push_str(&t.decode().map_err(|e| bad(e.to_string()))?);
                }
            }
            Event::GeneralRef(r) => {
                if let Some((_, _, text)) = current.as_mut() {
                    let name = r.decode().map_err(|e| bad(e.to_string()))?;
                    text.push_str(&decode_entity(&name));
                }
            }
            Event::End(e) if e.name().as_ref() == b"text" => {
                if let Some((start, dur, text)) = current.take() {
                    out.push(TimedSegment::new(start, dur, decode_entities(&text)));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

fn decode_entity(name: &str) -> String {
    match name {
        "amp" => "&".into(),
        "lt" => "<".into(),
        "gt" => ">".into(),
        "quot" => "\"".into(),
        "apos" => "'".into(),
        _ => {
            let code = name
                .strip_prefix("#x")
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .or_else(|| name.strip_prefix('#').and_then(|d| d.parse().ok()));
            code.and_then(char::from_u32).map_or_else(|| format!("&{name};"), String::from)
        }
    }
}

// Captions are often escaped twice (`&amp;#39;`); resolve what is left.
fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        match tail.find(';').filter(|&j| j <= 8) {
            Some(j) => {
                out.push_str(&decode_entity(&tail[..j]));
                rest = &tail[j + 1..];
            }
            None => {
                out.push('&');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

fn comment_from(v: &Value, reply_to: Option<String>) -> Option<RemoteComment> {
    let snippet = v.get("snippet")?;
    Some(RemoteComment {
        comment_id: v.get("id")?.as_str()?.to_string(),
        author: str_at(snippet, &["authorChannelId", "value"])
            .or_else(|| str_at(snippet, &["authorDisplayName"]))
            .unwrap_or_default()
            .to_string(),
        published_at: str_at(snippet, &["publishedAt"])?.to_string(),
        text: str_at(snippet, &["textOriginal"]).or_else(|| str_at(snippet, &["textDisplay"]))?.to_string(),
        reply_to,
    })
}

impl Provider for LiveProvider {
    fn channel(&self, channel: &ChannelRef) -> Result<RemoteChannel, ProviderError> {
        let handle;
        let params: [(&str, &str); 2] = match channel {
            ChannelRef::Id(id) => [("part", "snippet"), ("id", id)],
            ChannelRef::Handle(h) => {
                handle = format!("@{h}");
                [("part", "snippet"), ("forHandle", &handle)]
            }
        };
        let body = self.api("channels", &params)?.ok_or_else(|| ProviderError::NotFound(format!("{channel:?}")))?;
        let item = items(&body).first().ok_or_else(|| ProviderError::NotFound(format!("{channel:?}")))?;
        let id = item.get("id").and_then(Value::as_str).ok_or_else(|| ProviderError::Permanent("channel without id".into()))?;
        Ok(RemoteChannel {
            channel_id: id.to_string(),
            title: str_at(item, &["snippet", "title"]).unwrap_or_default().to_string(),
            url: format!("https://www.youtube.com/channel/{id}"),
        })
    }

    fn list_videos(&self, channel_id: &str, since: Option<Timestamp>) -> Result<Vec<RemoteVideo>, ProviderError> {
        let after = since.map(|t| format_timestamp(&t));
        let mut ids: Vec<String> = Vec::new();
        let mut page: Option<String> = None;
        for _ in 0..1000 {
            let mut params = vec![("part", "id"), ("channelId", channel_id), ("type", "video"), ("order", "date"), ("maxResults", "50")];
            if let Some(a) = &after {
                params.push(("publishedAfter", a));
            }
            if let Some(p) = &page {
                params.push(("pageToken", p));
            }
            let Some(body) = self.api("search", &params)? else { break };
            for item in items(&body) {
                if let Some(id) = str_at(item, &["id", "videoId"]) {
                    if !ids.iter().any(|x| x == id) {
                        ids.push(id.to_string());
                    }
                }
            }
            page = str_at(&body, &["nextPageToken"]).map(String::from);
            if page.is_none() {
                break;
            }
        }

        let mut out = Vec::with_capacity(ids.len());
        for chunk in ids.chunks(50) {
            let joined = chunk.join(",");
            let Some(body) = self.api("videos", &[("part", "snippet,contentDetails"), ("id", &joined)])? else { continue };
            for item in items(&body) {
                let Some(id) = item.get("id").and_then(Value::as_str) else { continue };
                out.push(RemoteVideo {
                    video_id: id.to_string(),
                    title: str_at(item, &["snippet", "title"]).unwrap_or_default().to_string(),
                    published_at: str_at(item, &["snippet", "publishedAt"]).unwrap_or_default().to_string(),
                    url: format!("https://www.youtube.com/watch?v={id}"),
                    duration_s: str_at(item, &["contentDetails", "duration"]).and_then(parse_iso_duration).unwrap_or(0.0),
                });
            }
        }
        Ok(out)
    }

    fn get_transcript(&self, video_id: &str) -> Result<Option<Vec<TimedSegment>>, ProviderError> {
        let url = self.url(&self.config.captions_base, "api/timedtext", &[("v", video_id), ("lang", &self.config.caption_lang)])?;
        match self.get(url, false)? {
            Body::Text(xml) if !xml.trim().is_empty() => {
                let segments = parse_timedtext(&xml)?;
                Ok((!segments.is_empty()).then_some(segments))
            }
            _ => Ok(None),
        }
    }

    fn get_comments(&self, video_id: &str, page: Option<&str>) -> Result<CommentPage, ProviderError> {
        let mut params = vec![
            ("part", "snippet,replies"),
            ("videoId", video_id),
            ("maxResults", "100"),
            ("textFormat", "plainText"),
        ];
        if let Some(p) = page {
            params.push(("pageToken", p));
        }
        let Some(body) = self.api("commentThreads", &params)? else { return Ok(CommentPage::default()) };
        let mut comments = Vec::new();
        for thread in items(&body) {
            let Some(top) = thread.get("snippet").and_then(|s| s.get("topLevelComment")) else { continue };
            let Some(top) = comment_from(top, None) else { continue };
            let parent = top.comment_id.clone();
            comments.push(top);
            let replies = thread.get("replies").and_then(|r| r.get("comments")).and_then(Value::as_array);
            for reply in replies.into_iter().flatten() {
                if let Some(c) = comment_from(reply, Some(parent.clone())) {
                    comments.push(c);
                }
            }
        }
        Ok(CommentPage { comments, next_page: str_at(&body, &["nextPageToken"]).map(String::from) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso_durations() {
        assert_eq!(parse_iso_duration("PT1H2M3S"), Some(3723.0));
        assert_eq!(parse_iso_duration("PT45S"), Some(45.0));
        assert_eq!(parse_iso_duration("P1DT1M"), Some(86_460.0));
        assert_eq!(parse_iso_duration("1H"), None);
        assert_eq!(parse_iso_duration("PT5"), None);
    }

    #[test]
    fn timedtext_xml() {
        let xml = r#"<?xml version="1.0" encoding="utf-8" ?><transcript><text start="0.5" dur="2.1">alors là je suis</text><text start="2.6" dur="1">c&amp;#39;est l&amp;amp;eau &lt;ok&gt;</text></transcript>"#;
        let segs = parse_timedtext(xml).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0], TimedSegment::new(0.5, 2.1, "alors là je suis"));
        assert_eq!(segs[1].text, "c'est l&eau <ok>");
    }
}
