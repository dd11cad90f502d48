//! Minimal tolerant HTML scanning: link-target extraction from
//! anchor/form/frame elements and visible-text recovery for keyword features.
//! Not a general-purpose parser; handles the tag soup that landing pages
//! actually serve.

/// Elements whose targets count as page links, with the attribute holding the
/// target.
const LINK_ATTRS: [(&str, &str); 5] = [
    ("a", "href"),
    ("area", "href"),
    ("form", "action"),
    ("frame", "src"),
    ("iframe", "src"),
];

#[derive(Debug, Default)]
pub struct ScanResult {
    /// Raw link targets in document order (may contain duplicates).
    pub links: Vec<String>,
    /// Tag-stripped visible text plus all attribute values, whitespace-joined.
    pub text: String,
}

pub fn scan(body: &str) -> ScanResult {
    let bytes = body.as_bytes();
    let mut links = Vec::new();
    let mut text = String::new();
    let mut attr_text = String::new();
    let mut i = 0;

    while i < bytes.len() {
        if bytes[i] == b'<' {
            if bytes[i..].starts_with(b"<!--") {
                i = match find(bytes, i + 4, b"-->") {
                    Some(end) => end + 3,
                    None => bytes.len(),
                };
                continue;
            }
            let (tag, attrs, tag_end) = parse_tag(body, i);
            if tag.is_empty() {
                // stray '<' in text
                text.push('<');
                i += 1;
                continue;
            }
            for (name, value) in &attrs {
                attr_text.push(' ');
                attr_text.push_str(&decode_entities(value));
                for (link_tag, link_attr) in LINK_ATTRS {
                    if tag == link_tag && name == link_attr {
                        let target = decode_entities(value).trim().to_string();
                        if !target.is_empty() {
                            links.push(target);
                        }
                    }
                }
            }
            i = tag_end;
            // script/style bodies are not visible text
            if tag == "script" || tag == "style" {
                let closer = format!("</{tag}");
                i = match find_ci(bytes, i, closer.as_bytes()) {
                    Some(pos) => match find(bytes, pos, b">") {
                        Some(end) => end + 1,
                        None => bytes.len(),
                    },
                    None => bytes.len(),
                };
            }
        } else {
            let next = find(bytes, i, b"<").unwrap_or(bytes.len());
            text.push_str(&decode_entities(&body[i..next]));
            i = next;
        }
    }

    let mut combined: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let attrs_joined = attr_text.split_whitespace().collect::<Vec<_>>().join(" ");
    if !attrs_joined.is_empty() {
        if !combined.is_empty() {
            combined.push(' ');
        }
        combined.push_str(&attrs_joined);
    }
    ScanResult {
        links,
        text: combined,
    }
}

/// Parses one tag starting at `start` (which points at '<'). Returns the
/// lowercased tag name, its attributes, and the index just past '>'.
fn parse_tag(body: &str, start: usize) -> (String, Vec<(String, String)>, usize) {
    let bytes = body.as_bytes();
    let mut i = start + 1;
    if i < bytes.len() && bytes[i] == b'/' {
        i += 1;
    }
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'!') {
        i += 1;
    }
    let name = body[name_start..i].to_ascii_lowercase();
    if name.is_empty() {
        return (String::new(), Vec::new(), start + 1);
    }

    let mut attrs = Vec::new();
    while i < bytes.len() && bytes[i] != b'>' {
        if bytes[i].is_ascii_whitespace() || bytes[i] == b'/' {
            i += 1;
            continue;
        }
        let attr_start = i;
        while i < bytes.len()
            && !bytes[i].is_ascii_whitespace()
            && !matches!(bytes[i], b'=' | b'>' | b'/')
        {
            i += 1;
        }
        let attr_name = body[attr_start..i].to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < bytes.len() && bytes[i] == b'=' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let quote = bytes[i];
                i += 1;
                let v_start = i;
                while i < bytes.len() && bytes[i] != quote {
                    i += 1;
                }
                value = body[v_start..i].to_string();
                i = (i + 1).min(bytes.len());
            } else {
                let v_start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                    i += 1;
                }
                value = body[v_start..i].to_string();
            }
        }
        if !attr_name.is_empty() {
            attrs.push((attr_name, value));
        }
    }
    (name, attrs, (i + 1).min(bytes.len()))
}

fn find(haystack: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= haystack.len() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

fn find_ci(haystack: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= haystack.len() || needle.is_empty() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
        .map(|p| p + from)
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    s.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&nbsp;", " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_anchor_form_frame_targets() {
        let html = r#"<html><body>
            <a href="/a">one</a>
            <a href='https://other.com/x'>two</a>
            <form action="https://docs.google.com/forms/d/e/1/viewform"><input></form>
            <iframe src="/embed"></iframe>
            <area href="/map">
        </body></html>"#;
        let result = scan(html);
        assert_eq!(
            result.links,
            vec![
                "/a",
                "https://other.com/x",
                "https://docs.google.com/forms/d/e/1/viewform",
                "/embed",
                "/map"
            ]
        );
    }

    #[test]
    fn text_skips_script_and_style_keeps_attributes() {
        let html = r#"<p>Donate <b>BTC</b> now</p>
            <script>var hidden = "secretword";</script>
            <style>.x { color: red }</style>
            <img alt="bank transfer details">"#;
        let result = scan(html);
        assert!(result.text.contains("Donate BTC now"));
        assert!(!result.text.contains("secretword"));
        assert!(!result.text.contains("color"));
        assert!(result.text.contains("bank transfer details"));
    }

    #[test]
    fn entities_and_comments() {
        let html = "<p>Fish &amp; Chips</p><!-- <a href=\"/hidden\">x</a> -->";
        let result = scan(html);
        assert!(result.text.contains("Fish & Chips"));
        assert!(result.links.is_empty());
    }

    #[test]
    fn unquoted_attributes() {
        let result = scan("<a href=/plain>x</a>");
        assert_eq!(result.links, vec!["/plain"]);
    }

    #[test]
    fn tolerates_stray_angle_brackets() {
        let result = scan("2 < 3 and <a href=\"/ok\">y</a>");
        assert_eq!(result.links, vec!["/ok"]);
        assert!(result.text.contains("2 < 3"));
    }
}
