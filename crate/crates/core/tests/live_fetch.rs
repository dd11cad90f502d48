//! Live-fetch behavior against a local HTTP server: redirect following,
//! DNS pinning, worker-pool fan-out, and masking of unreachable sites.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::time::Duration;

use campaign_lens::catalog::FeatureId;
use campaign_lens::config::ConfigBundle;
use campaign_lens::dataset::{Dataset, WebsiteRecord};
use campaign_lens::domain::{parse_domain, PublicSuffixList};
use campaign_lens::featurize::{featurize_all, FetchMode};
use campaign_lens::fetch::LiveOptions;
use campaign_lens::intel::IntelStage;

const LANDING_BODY: &str = r#"<html><body>
<p>Welcome to the landing page.</p>
<a href="/inside">in</a>
<a href="https://other-site.org/external/path">out</a>
</body></html>"#;

const B_BODY: &str = r#"<html><body><p>Plain page, no links.</p></body></html>"#;

/// Minimal HTTP responder: routes by Host header and path, one request per
/// connection.
fn spawn_server() -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let _ = stream.set_read_timeout(Some(Duration::from_millis(500)));
            let mut buf = [0u8; 4096];
            let n = stream.read(&mut buf).unwrap_or(0);
            let request = String::from_utf8_lossy(&buf[..n]).to_string();
            let first_line = request.lines().next().unwrap_or("");
            let path = first_line.split_whitespace().nth(1).unwrap_or("/");
            let host = request
                .lines()
                .find_map(|l| {
                    let lower = l.to_ascii_lowercase();
                    lower.strip_prefix("host:").map(|h| h.trim().to_string())
                })
                .unwrap_or_default();
            let response = if host.starts_with("a-test.com") && path == "/" {
                "HTTP/1.1 302 Found\r\nLocation: /landing\r\nContent-Length: 0\r\nConnection: close\r\n\r\n".to_string()
            } else if host.starts_with("a-test.com") && path == "/landing" {
                format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: text/html\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    LANDING_BODY.len(),
                    LANDING_BODY
                )
            } else if host.starts_with("b-test.com") {
                format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: text/html\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    B_BODY.len(),
                    B_BODY
                )
            } else {
                "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
                    .to_string()
            };
            let _ = stream.write_all(response.as_bytes());
        }
    });
    addr
}

fn record(raw: &str) -> WebsiteRecord {
    WebsiteRecord {
        domain: parse_domain(raw).unwrap(),
        first_seen: "2022-03-01".parse().unwrap(),
        is_live: true,
        snapshot_id: None,
        whois_id: None,
        manual_verdict: None,
    }
}

#[test]
fn live_fetch_redirects_pins_and_masks() {
    let addr = spawn_server();
    let mut dns_overrides = BTreeMap::new();
    dns_overrides.insert("a-test.com".to_string(), addr);
    dns_overrides.insert("b-test.com".to_string(), addr);
    // c-test.com pinned to a port nobody listens on: unreachable
    dns_overrides.insert(
        "c-test.com".to_string(),
        SocketAddr::from(([127, 0, 0, 1], 1)),
    );

    let ds = Dataset::new(
        vec![
            record("a-test.com"),
            record("b-test.com"),
            record("c-test.com"),
        ],
        ("2022-02-25".parse().unwrap(), "2022-07-25".parse().unwrap()),
    )
    .unwrap();
    let opts = LiveOptions {
        timeout: Duration::from_secs(5),
        max_redirects: 5,
        parallelism: 3,
        dns_overrides,
        whois_dir: None,
        stage: IntelStage::Fes,
    };
    let (matrix, provenance) = featurize_all(
        &ds,
        &ConfigBundle::default(),
        &FetchMode::Live(opts),
        PublicSuffixList::bundled(),
    )
    .unwrap();

    let col = |id: u8| FeatureId(id).index();
    // a-test.com: redirect followed to /landing on the same host
    assert_eq!(provenance[0].status, "redirect_followed");
    assert_eq!(matrix.value(0, col(19)), 1.0, "same landing domain");
    assert_eq!(matrix.value(0, col(20)), 1.0, "one internal link");
    assert_eq!(matrix.value(0, col(21)), 1.0, "one external link");
    assert_eq!(matrix.value(0, col(18)), LANDING_BODY.len() as f64 / 1024.0);
    assert_eq!(matrix.value(0, col(17)), 0.0, "plain-http server: no TLS");

    // b-test.com: direct 200
    assert_eq!(provenance[1].status, "ok");
    assert_eq!(matrix.value(1, col(20)), 0.0);

    // c-test.com: unreachable, content features masked
    assert!(provenance[2].status.starts_with("error"));
    assert!(provenance[2].masked);
    for c in 16..=29 {
        assert!(matrix.is_masked(2, c), "f{} should be masked", c + 1);
        assert_eq!(matrix.value(2, c), 0.0);
    }
    // lexical and whois features still populated / defined
    assert!(matrix.value(2, col(4)) >= 0.0);
    assert!(!matrix.is_masked(2, col(31)));
}
