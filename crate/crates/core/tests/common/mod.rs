//! Shared fixtures and independent reference implementations for the
//! integration and acceptance tests. The oracles here deliberately avoid the
//! library's data structures: they recount everything from token lists.

#![allow(dead_code)]

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use claimcheck::preprocess::{normalized_words, HandleMap, Strategy};
use claimcheck::retrieve::FcaRecord;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use proptest::prelude::{any, prop, prop_oneof};
use proptest::strategy::Strategy as PropStrategy;

// ---------------------------------------------------------------- fixtures

pub const SMC_UTTARAKHAND: &str = "Congratulations to Uttarakhand CM for becoming the first CM ever to charge stranded citizens for rescue operations! Helicopter rides will now be chargeable during rescue operations in Uttarakhand. And if you can't pay, you may safely die. #AchheDin #BJP";
pub const SMC_5G: &str = "@AltNews   We are getting various WhatsApp forward regarding as Corona has been emerges only due to 5G testing  in world.   Please put some light,  seems ,it is only a brain shit.";
pub const SMC_TALIBAN: &str = "This woman in Afghanistan was killed by Taliban for not wearing the proper cloth. #Afghanistan #Taliban @cnn @FoxNews @BBCWorld";
pub const SMC_HUNGER: &str = "\"India is ranked 102nd in the global hunger index, out of 117 countries. We are ranked in between Niger & Sierra Leone. We are the lowest ranked South Asian country. Bangladesh is ranked 88th and Pakistan 94th. They have only recently overtaken us. Our rank was 55,only 5 years ago\"";
pub const SMC_OXYGEN: &str = "\"Oxygen donated  from Saudi and relabelled in india by  Reliance, Share this with your contacts in Saudi and make this viral .. Let the world know the cheapness of this PM   \"";

pub fn golden_handle_map() -> HandleMap {
    HandleMap::parse("# handle\tdisplay name\ncnn\tCNN\nFoxNews\tFox News\nBBCWorld\tBBC News (World)\nAltNews\tAlt News\n")
        .expect("fixture handle map parses")
}

/// `(smc, [(strategy, expected)])` for all eight strategies, derived by
/// applying the rules by hand.
pub fn golden_cases() -> Vec<(&'static str, Vec<(Strategy, String)>)> {
    use Strategy::*;
    let mut cases = Vec::new();

    let base = "congratulations to uttarakhand cm for becoming the first cm ever to charge stranded citizens for rescue operations helicopter rides will now be chargeable during rescue operations in uttarakhand and if you cant pay you may safely die";
    let p = format!("{base} achhedin bjp");
    let first = format!("{base} achhedin");
    cases.push((
        SMC_UTTARAKHAND,
        vec![
            (NP, SMC_UTTARAKHAND.to_owned()),
            (P, p.clone()),
            (PERep, p.clone()),
            (PH, base.to_owned()),
            (PM, p.clone()),
            (PHM, base.to_owned()),
            (PMrrHrr, first.clone()),
            (PMrrHrrMRep, first),
        ],
    ));

    let body = "we are getting various whatsapp forward regarding as corona has been emerges only due to 5g testing in world please put some light seems it is only a brain shit";
    let p = format!("altnews {body}");
    cases.push((
        SMC_5G,
        vec![
            (NP, SMC_5G.to_owned()),
            (P, p.clone()),
            (PERep, p.clone()),
            (PH, p.clone()),
            (PM, body.to_owned()),
            (PHM, body.to_owned()),
            (PMrrHrr, p),
            (PMrrHrrMRep, format!("alt news {body}")),
        ],
    ));

    let base = "this woman in afghanistan was killed by taliban for not wearing the proper cloth";
    let p = format!("{base} afghanistan taliban cnn foxnews bbcworld");
    cases.push((
        SMC_TALIBAN,
        vec![
            (NP, SMC_TALIBAN.to_owned()),
            (P, p.clone()),
            (PERep, p),
            (PH, format!("{base} cnn foxnews bbcworld")),
            (PM, format!("{base} afghanistan taliban")),
            (PHM, base.to_owned()),
            (PMrrHrr, format!("{base} afghanistan cnn")),
            (PMrrHrrMRep, format!("{base} afghanistan cnn")),
        ],
    ));

    let hunger = "india is ranked 102nd in the global hunger index out of 117 countries we are ranked in between niger sierra leone we are the lowest ranked south asian country bangladesh is ranked 88th and pakistan 94th they have only recently overtaken us our rank was 55only 5 years ago";
    let oxygen = "oxygen donated from saudi and relabelled in india by reliance share this with your contacts in saudi and make this viral let the world know the cheapness of this pm";
    for (smc, processed) in [(SMC_HUNGER, hunger), (SMC_OXYGEN, oxygen)] {
        let mut row = vec![(NP, smc.to_owned())];
        row.extend(Strategy::ALL.iter().skip(1).map(|s| (*s, processed.to_owned())));
        cases.push((smc, row));
    }
    cases
}

// ----------------------------------------------------------------- oracles

/// Brute-force Recall@k.
pub fn oracle_recall(ranks: &[Option<usize>], k: usize) -> f64 {
    let mut hits = 0;
    for r in ranks {
        if let Some(r) = r {
            if *r <= k {
                hits += 1;
            }
        }
    }
    100.0 * hits as f64 / ranks.len() as f64
}

/// Brute-force MRR, summed in query order.
pub fn oracle_mrr(ranks: &[Option<usize>]) -> f64 {
    let mut total = 0.0;
    for r in ranks {
        if let Some(r) = r {
            total += 1.0 / *r as f64;
        }
    }
    total / ranks.len() as f64
}

fn count_in(words: &[String], term: &str) -> usize {
    words.iter().filter(|w| *w == term).count()
}

/// Okapi BM25 of every document for `query`, recomputed from scratch per
/// query term.
pub fn oracle_bm25(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    docs.iter()
        .map(|doc| {
            let mut score = 0.0;
            for term in query {
                let df = docs.iter().filter(|d| d.contains(term)).count() as f64;
                if df == 0.0 {
                    continue;
                }
                let tf = count_in(doc, term) as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let norm = if avgdl > 0.0 { doc.len() as f64 / avgdl } else { 1.0 };
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
            }
            score
        })
        .collect()
}

/// Dense TF-IDF cosine with smoothed idf `ln((1+N)/(1+df)) + 1` over the
/// sorted union vocabulary of both documents.
pub fn oracle_cosine(a: &str, b: &str, corpus: &[String]) -> f64 {
    let wa = normalized_words(a);
    let wb = normalized_words(b);
    let docs: Vec<Vec<String>> = corpus.iter().map(|d| normalized_words(d)).collect();
    let mut vocab: Vec<String> = wa.iter().chain(wb.iter()).cloned().collect();
    vocab.sort();
    vocab.dedup();
    let n = docs.len() as f64;
    let weight = |words: &[String], term: &str| {
        let df = docs.iter().filter(|d| d.iter().any(|w| w == term)).count() as f64;
        count_in(words, term) as f64 * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
    };
    let va: Vec<f64> = vocab.iter().map(|t| weight(&wa, t)).collect();
    let vb: Vec<f64> = vocab.iter().map(|t| weight(&wb, t)).collect();
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Sentence BLEU-4 with add-one smoothing of zero order-2+ precisions,
/// written with plain list scans.
pub fn oracle_bleu(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let mut precisions = Vec::new();
    for n in 1..=4usize {
        let grams = |w: &[String]| -> Vec<Vec<String>> {
            if w.len() < n {
                Vec::new()
            } else {
                (0..=w.len() - n).map(|i| w[i..i + n].to_vec()).collect()
            }
        };
        let cand = grams(candidate);
        let mut pool = grams(reference);
        let mut matched = 0usize;
        for g in &cand {
            if let Some(pos) = pool.iter().position(|r| r == g) {
                pool.remove(pos);
                matched += 1;
            }
        }
        let p = if matched == 0 && n >= 2 {
            1.0 / (cand.len() as f64 + 1.0)
        } else if cand.is_empty() {
            0.0
        } else {
            matched as f64 / cand.len() as f64
        };
        precisions.push(p);
    }
    if precisions.iter().any(|p| *p == 0.0) {
        return 0.0;
    }
    let geo = precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    100.0 * bp * geo.exp()
}

// ------------------------------------------------------------ generators

pub fn fragment() -> impl PropStrategy<Value = String> {
    prop_oneof![
        "[A-Za-z0-9_]{1,10}",
        "#[A-Za-z0-9_]{0,10}",
        "@[A-Za-z0-9_]{0,18}",
        "(https?://|www\\.|HTTP://)[a-z0-9]{0,8}(\\.[a-z]{2,3})?(/[a-zA-Z0-9._~%-]{0,6}){0,2}[.,)!?]?",
        prop::sample::select(vec![
            "😀", "👍🏽", "🇮🇳", "❤️", "1️⃣", "#️⃣", "👨‍👩‍👧", "✅", "©", "™", "🙏",
        ])
        .prop_map(str::to_owned),
        prop::sample::select(vec![".", ",", "!", "?", "'", "\"", "&", "..", "(", ")", "-", "$", ":"])
            .prop_map(str::to_owned),
        prop::sample::select(vec![" ", "  ", "\n", "\t", " \u{a0}"]).prop_map(str::to_owned),
        "[ÀÉÎõüßİΣσςķ]{1,4}",
        prop::sample::select(vec!["\u{301}", "\u{ce2}", "\u{200d}", "\u{fe0f}", "\u{20e3}", "\u{1f3fd}"])
            .prop_map(str::to_owned),
        "\\PC{1,4}",
        any::<char>().prop_map(String::from),
    ]
}

/// Tweet-like text: words, hashtags, mentions, URLs, emoji, punctuation,
/// odd whitespace and arbitrary code points, concatenated.
pub fn tweet() -> impl PropStrategy<Value = String> {
    prop::collection::vec(fragment(), 0..40).prop_map(|parts| parts.concat())
}

// ------------------------------------------------------- synthetic corpora

pub const VOCAB: &[&str] = &[
    "vaccine", "election", "minister", "flood", "video", "temple", "police", "army", "oxygen",
    "border", "farmers", "protest", "covid", "doctor", "school", "bridge", "train", "bank",
    "currency", "rally", "court", "river", "china", "pakistan", "hospital", "mask", "lockdown",
    "village", "cricket", "actor", "festival", "tax", "fuel", "price", "data", "phone", "satellite",
    "storm", "fire", "market", "student", "teacher", "factory", "island", "airport", "king",
    "queen", "robot", "bird", "tiger", "milk", "rice", "water", "the", "a", "of", "in", "and",
];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_text(rng: &mut StdRng, min: usize, max: usize) -> String {
    let len = rng.gen_range(min..=max);
    (0..len)
        .map(|_| *VOCAB.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn record(url: &str, scr: &str) -> FcaRecord {
    FcaRecord {
        url: url.to_owned(),
        scr: scr.to_owned(),
        publisher: "Synthetic Checks".into(),
        site: String::new(),
        language: "en".into(),
        review_date: None,
        verdict: Some("False".into()),
    }
}

/// `n` records with 8 to 14 random words each and distinct URLs.
pub fn synthetic_corpus(seed: u64, n: usize) -> Vec<FcaRecord> {
    let mut rng = rng(seed);
    (0..n)
        .map(|i| record(&format!("https://checks.example/{i:03}"), &random_text(&mut rng, 8, 14)))
        .collect()
}

pub fn distinct_ranks(rng: &mut StdRng, queries: usize) -> Vec<Option<usize>> {
    (0..queries)
        .map(|_| if rng.gen_bool(0.3) { None } else { Some(rng.gen_range(1..=25)) })
        .collect()
}

pub fn unique<T: std::hash::Hash + Eq + Clone>(items: &[T]) -> usize {
    items.iter().cloned().collect::<HashSet<_>>().len()
}

// ------------------------------------------------------- stub HTTP server

#[derive(Debug, Clone)]
pub struct StubResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl StubResponse {
    pub fn json(status: u16, body: impl Into<String>) -> Self {
        Self {
            status,
            headers: vec![("Content-Type".into(), "application/json".into())],
            body: body.into(),
        }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub method: String,
    pub target: String,
    pub body: String,
}

type Handler = dyn Fn(&RecordedRequest) -> StubResponse + Send + Sync;

/// Minimal HTTP/1.1 server on an ephemeral port. Every connection is
/// answered by `handler` and closed.
pub struct StubServer {
    pub base: String,
    pub requests: Arc<Mutex<Vec<RecordedRequest>>>,
}

impl StubServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&RecordedRequest) -> StubResponse + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let base = format!("http://{}", listener.local_addr().expect("addr"));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let handler: Arc<Handler> = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let log = Arc::clone(&log);
                let handler = Arc::clone(&handler);
                thread::spawn(move || serve(stream, &*handler, &log));
            }
        });
        Self { base, requests }
    }

    /// Responds with `script` in order, repeating the last entry.
    pub fn scripted(script: Vec<StubResponse>) -> Self {
        let next = Mutex::new(0usize);
        Self::start(move |_| {
            let mut i = next.lock().unwrap();
            let resp = script[(*i).min(script.len() - 1)].clone();
            *i += 1;
            resp
        })
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<RecordedRequest>>) {
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let mut parts = line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_owned();
    let target = parts.next().unwrap_or_default().to_owned();
    let mut content_length = 0;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header).unwrap_or(0) == 0 || header == "\r\n" {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    let _ = reader.read_exact(&mut body);
    let request = RecordedRequest {
        method,
        target,
        body: String::from_utf8_lossy(&body).into_owned(),
    };
    log.lock().unwrap().push(request.clone());
    let response = handler(&request);
    let mut out = stream;
    let mut head = format!("HTTP/1.1 {} Stub\r\nContent-Length: {}\r\nConnection: close\r\n", response.status, response.body.len());
    for (name, value) in &response.headers {
        head.push_str(&format!("{name}: {value}\r\n"));
    }
    head.push_str("\r\n");
    let _ = out.write_all(head.as_bytes());
    let _ = out.write_all(response.body.as_bytes());
    let _ = out.flush();
}
