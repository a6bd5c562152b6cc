//! Parsing the mandated annotation response format.

use serde::Deserialize;

use crate::facs::AuVector;
use crate::tead::{Annotation, MalformedResponse};

#[derive(Deserialize)]
struct RawAnnotation {
    tags: Vec<String>,
    aus: Vec<serde_json::Value>,
    situation: String,
}

/// Extract tags, the 36-entry AU vector and the situation sentence from an
/// LLM reply. The reply must carry a fenced ```json block (a bare JSON
/// object is tolerated); anything that deviates from the mandated shape is a
/// `MalformedResponse`, never a silent default.
pub fn parse_annotation(raw: &str) -> Result<Annotation, MalformedResponse> {
    let json_text = extract_json(raw).ok_or(MalformedResponse::NoJson)?;
    let parsed: RawAnnotation = serde_json::from_str(json_text)
        .map_err(|e| MalformedResponse::BadJson(e.to_string()))?;

    if parsed.aus.len() != crate::facs::AU_COUNT {
        return Err(MalformedResponse::AuCount {
            got: parsed.aus.len(),
        });
    }
    let mut bits = Vec::with_capacity(parsed.aus.len());
    for (index, v) in parsed.aus.iter().enumerate() {
        match v.as_u64() {
            Some(0) => bits.push(0u8),
            Some(1) => bits.push(1u8),
            _ => {
                return Err(MalformedResponse::NonBinaryAu {
                    index,
                    value: v.to_string(),
                })
            }
        }
    }
    let aus = AuVector::from_bits(&bits).expect("length and binariness checked above");

    // Normalize tags: trim, lowercase, drop empties, dedup preserving order.
    // Counting happens after normalization so five copies of one tag do not
    // pass as five tags.
    let mut tags: Vec<String> = Vec::new();
    for tag in &parsed.tags {
        let t = tag.trim().to_lowercase();
        if !t.is_empty() && !tags.contains(&t) {
            tags.push(t);
        }
    }
    if tags.len() < 3 || tags.len() > 5 {
        return Err(MalformedResponse::TagCount { got: tags.len() });
    }

    let situation = parsed.situation.trim().to_string();
    if situation.is_empty() {
        return Err(MalformedResponse::EmptySituation);
    }

    Ok(Annotation {
        tags,
        aus,
        situation,
    })
}

/// Pull the JSON object out of a fenced block, or accept the whole trimmed
/// body when it is itself a JSON object.
fn extract_json(raw: &str) -> Option<&str> {
    if let Some(fence_start) = raw.find("```") {
        let after = &raw[fence_start + 3..];
        // skip an optional language tag on the fence line
        let body_start = after.find('\n')?;
        let body = &after[body_start + 1..];
        let fence_end = body.find("```")?;
        return Some(body[..fence_end].trim());
    }
    let trimmed = raw.trim();
    if trimmed.starts_with('{') {
        Some(trimmed)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fenced(tags: &str, aus: &str, situation: &str) -> String {
        format!("```json\n{{\"tags\": {tags}, \"aus\": {aus}, \"situation\": \"{situation}\"}}\n```")
    }

    fn aus_csv(n: usize) -> String {
        let bits: Vec<&str> = (0..n).map(|i| if i % 7 == 0 { "1" } else { "0" }).collect();
        format!("[{}]", bits.join(","))
    }

    #[test]
    fn well_formed_response_round_trips() {
        let raw = fenced(
            r#"["happy", "joyful", "content", "pleased"]"#,
            &aus_csv(36),
            "Winning a small prize.",
        );
        let ann = parse_annotation(&raw).unwrap();
        assert_eq!(ann.tags, vec!["happy", "joyful", "content", "pleased"]);
        assert_eq!(ann.aus.bits().len(), 36);
        assert!(ann.aus.is_active(0));
        assert_eq!(ann.situation, "Winning a small prize.");
    }

    #[test]
    fn bare_json_object_is_accepted() {
        let raw = format!(
            r#"{{"tags": ["a","b","c"], "aus": {}, "situation": "s"}}"#,
            aus_csv(36)
        );
        assert!(parse_annotation(&raw).is_ok());
    }

    #[test]
    fn wrong_au_count_is_malformed() {
        let raw = fenced(r#"["a","b","c"]"#, &aus_csv(35), "s");
        assert_eq!(
            parse_annotation(&raw).unwrap_err(),
            MalformedResponse::AuCount { got: 35 }
        );
    }

    #[test]
    fn non_binary_au_is_malformed() {
        let mut bits = vec!["0"; 36];
        bits[5] = "2";
        let raw = fenced(
            r#"["a","b","c"]"#,
            &format!("[{}]", bits.join(",")),
            "s",
        );
        assert!(matches!(
            parse_annotation(&raw).unwrap_err(),
            MalformedResponse::NonBinaryAu { index: 5, .. }
        ));
        bits[5] = "0.5";
        let raw = fenced(
            r#"["a","b","c"]"#,
            &format!("[{}]", bits.join(",")),
            "s",
        );
        assert!(matches!(
            parse_annotation(&raw).unwrap_err(),
            MalformedResponse::NonBinaryAu { index: 5, .. }
        ));
    }

    #[test]
    fn six_tags_is_malformed() {
        let raw = fenced(
            r#"["a","b","c","d","e","f"]"#,
            &aus_csv(36),
            "s",
        );
        assert_eq!(
            parse_annotation(&raw).unwrap_err(),
            MalformedResponse::TagCount { got: 6 }
        );
    }

    #[test]
    fn duplicate_tags_collapse_before_counting() {
        // four raw tags, two distinct after normalization -> too few
        let raw = fenced(
            r#"["Happy", "happy", "SAD", "sad"]"#,
            &aus_csv(36),
            "s",
        );
        assert_eq!(
            parse_annotation(&raw).unwrap_err(),
            MalformedResponse::TagCount { got: 2 }
        );
    }

    #[test]
    fn tags_are_lowercased() {
        let raw = fenced(r#"["Happy","JOYFUL","Content"]"#, &aus_csv(36), "s");
        let ann = parse_annotation(&raw).unwrap();
        assert_eq!(ann.tags, vec!["happy", "joyful", "content"]);
    }

    #[test]
    fn missing_field_is_malformed() {
        let raw = r#"```json
{"tags": ["a","b","c"], "situation": "s"}
```"#;
        assert!(matches!(
            parse_annotation(raw).unwrap_err(),
            MalformedResponse::BadJson(_)
        ));
    }

    #[test]
    fn no_json_at_all_is_malformed() {
        assert_eq!(
            parse_annotation("I'd rather chat about the weather.").unwrap_err(),
            MalformedResponse::NoJson
        );
    }

    #[test]
    fn empty_situation_is_malformed() {
        let raw = fenced(r#"["a","b","c"]"#, &aus_csv(36), "   ");
        assert_eq!(
            parse_annotation(&raw).unwrap_err(),
            MalformedResponse::EmptySituation
        );
    }
}
