use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use sha2::{Digest, Sha256};
use xmlbench::harness::{fetch_corpus, Availability, CorpusManifest, FetchOptions, ManifestEntry};
use xmlbench::xml::Domain;

const A: &str = "<db><row>1</row></db>\n";
const B: &str = "<sites><site id=\"x\">mirror</site></sites>\n";

/// Serves `/a.xml` and `/b.xml`; everything else is a 404.
fn serve() -> (String, thread::JoinHandle<usize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut served = 0;
        for stream in listener.incoming().take(3) {
            let mut stream = stream.unwrap();
            let mut line = String::new();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            reader.read_line(&mut line).unwrap();
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap() == 0 || h == "\r\n" {
                    break;
                }
            }
            let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
            let (status, body) = match path.as_str() {
                "/a.xml" => ("200 OK", A),
                "/b.xml" => ("200 OK", B),
                _ => ("404 Not Found", "gone"),
            };
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            served += 1;
        }
        served
    });
    (base, handle)
}

fn entry(id: &str, domain: Domain, url: String, checksum: Option<String>) -> ManifestEntry {
    ManifestEntry {
        file_id: id.into(),
        domain,
        source_url: Some(url),
        checksum,
        local_path: None,
    }
}

#[test]
fn two_of_three_mirrors_answer() {
    let (base, server) = serve();
    let sum = hex::encode(Sha256::digest(A.as_bytes()));
    let manifest = CorpusManifest::new(vec![
        entry("DB01", Domain::DB, format!("{base}/a.xml"), Some(sum)),
        entry("SI02", Domain::SI, format!("{base}/b.xml"), None),
        entry("DB03", Domain::DB, format!("{base}/dead.xml"), None),
    ])
    .unwrap();
    let cache = tempfile::tempdir().unwrap();
    let report = fetch_corpus(&manifest, &FetchOptions::new(cache.path())).unwrap();
    assert_eq!(server.join().unwrap(), 3);
    assert_eq!(report.summary(), "2/3");
    assert_eq!(report.unavailable(), ["DB03"]);
    let got: Vec<(&str, String)> =
        report.available().map(|(id, p)| (id, std::fs::read_to_string(p).unwrap())).collect();
    assert_eq!(got, [("DB01", A.to_string()), ("SI02", B.to_string())]);
    assert!(matches!(report.entries[0].availability, Availability::Available { downloaded: true, .. }));
    let kept = report.available_manifest(&manifest);
    assert_eq!(kept.entries.len(), 2);

    // second pass: the checksummed entry comes from the cache, the server is gone
    let again = fetch_corpus(&manifest, &FetchOptions::new(cache.path())).unwrap();
    assert!(matches!(again.entries[0].availability, Availability::Available { downloaded: false, .. }));
}
