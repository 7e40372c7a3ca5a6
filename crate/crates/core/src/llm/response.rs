use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::push_unique;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("unparseable response: {0}")]
    Unparseable(String),
}

/// Native-language and English expansions of one entry.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub native: Vec<String>,
    pub english: Vec<String>,
}

impl ExpansionResult {
    pub fn is_empty(&self) -> bool {
        self.native.is_empty() && self.english.is_empty()
    }
}

/// First JSON value of the wanted shape that starts at one of the `open`
/// characters. Models sometimes wrap the payload in prose.
fn first_json(text: &str, open: char, accept: impl Fn(&Value) -> bool) -> Option<Value> {
    for (pos, _) in text.match_indices(open) {
        let mut stream = serde_json::Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        if let Some(Ok(value)) = stream.next() {
            if accept(&value) {
                return Some(value);
            }
        }
    }
    None
}

fn is_string_array(v: &Value) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(Value::is_string))
}

fn clean_list(values: &[Value]) -> Vec<String> {
    let mut out = Vec::new();
    for v in values {
        if let Some(s) = v.as_str() {
            push_unique(&mut out, s.trim());
        }
    }
    out
}

/// Extracts the first JSON array of strings, trimming each element and
/// dropping duplicates and empty strings.
pub fn parse_clean_response(text: &str) -> Result<Vec<String>, ResponseError> {
    let value = first_json(text, '[', is_string_array)
        .ok_or_else(|| ResponseError::Unparseable(snippet(text)))?;
    Ok(clean_list(value.as_array().expect("checked")))
}

/// Like [`parse_clean_response`] but the whole response must be the array.
pub fn parse_clean_response_strict(text: &str) -> Result<Vec<String>, ResponseError> {
    let value: Value = serde_json::from_str(text.trim()).map_err(|_| ResponseError::Unparseable(snippet(text)))?;
    if !is_string_array(&value) {
        return Err(ResponseError::Unparseable(snippet(text)));
    }
    Ok(clean_list(value.as_array().expect("checked")))
}

/// Reads the request language's list and the `en` list from the first JSON
/// object whose relevant values are string arrays. Missing keys are empty.
/// For English requests the single `en` list is the native list.
pub fn parse_expand_response(text: &str, request_language: &str) -> Result<ExpansionResult, ResponseError> {
    let usable = |v: &Value| {
        v.as_object().is_some_and(|o| {
            [request_language, "en"]
                .iter()
                .all(|k| o.get(*k).is_none_or(is_string_array))
        })
    };
    let value = first_json(text, '{', usable).ok_or_else(|| ResponseError::Unparseable(snippet(text)))?;
    let obj = value.as_object().expect("checked");
    let list = |k: &str| obj.get(k).and_then(Value::as_array).map(|a| clean_list(a)).unwrap_or_default();
    let native = list(request_language);
    let english = if request_language == "en" { Vec::new() } else { list("en") };
    Ok(ExpansionResult { native, english })
}

fn snippet(text: &str) -> String {
    let mut s: String = text.chars().take(80).collect();
    if text.chars().count() > 80 {
        s.push('…');
    }
    s
}
