//! Regenerates the bundled synthetic corpus under `fixtures/synthetic/`.
//!
//! ```text
//! cargo run -p cladesense-cli --example gen_fixture [OUT_DIR]
//! ```
//!
//! Six planted topics (two positive, four negative, one of which is
//! excluded by override) plus isolated outliers. The first six comments
//! come from topics 0..5 in order, so the clustering numbers the topics the
//! same way the generator does.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use serde_json::json;

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    fn normal(&mut self) -> f64 {
        let u = self.unit().max(1e-300);
        let v = self.unit();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.below(xs.len())]
    }
}

const DIM: usize = 12;

struct TopicSpec {
    size: usize,
    center: [f64; 4],
    words: &'static [&'static str],
    /// Brand mentioned in roughly a quarter of the topic's comments.
    brand: Option<&'static str>,
    truth: &'static str,
}

const TOPICS: [TopicSpec; 6] = [
    TopicSpec {
        size: 95,
        center: [10.0, 3.0, 0.0, 0.0],
        words: &[
            "protected", "grateful", "salamat", "effective", "safe", "works", "immunity", "relieved",
            "proud", "fully", "vaccinated", "family", "ligtas", "buti",
        ],
        brand: Some("Pfizer"),
        truth: "positive",
    },
    TopicSpec {
        size: 110,
        center: [-10.0, 0.0, 3.0, 0.0],
        words: &[
            "fever", "lagnat", "sore", "arm", "chills", "headache", "sakit", "ulo", "dizzy", "nausea",
            "reaction", "side", "effects", "nilagnat",
        ],
        brand: Some("AstraZeneca"),
        truth: "negative",
    },
    TopicSpec {
        size: 70,
        center: [10.0, -3.0, 0.0, 0.0],
        words: &[
            "frontliners", "organized", "maayos", "smooth", "nurses", "thankful", "efficient", "friendly",
            "staff", "galing", "mabilis", "volunteers", "site", "kudos",
        ],
        brand: Some("Moderna"),
        truth: "positive",
    },
    TopicSpec {
        size: 85,
        center: [-10.0, 0.0, -3.0, 0.0],
        words: &[
            "experimental", "takot", "scam", "trust", "distrust", "rushed", "untested", "conspiracy",
            "delikado", "ayoko", "refuse", "doubt", "corrupt", "brand",
        ],
        brand: Some("Sinovac"),
        truth: "negative",
    },
    TopicSpec {
        size: 60,
        center: [-10.0, 0.0, 0.0, 3.0],
        words: &[
            "pila", "queue", "waiting", "hours", "hassle", "tagal", "init", "crowded", "cancelled", "slots",
            "registration", "delayed", "gulo", "sayang",
        ],
        brand: None,
        truth: "negative",
    },
    TopicSpec {
        size: 50,
        center: [-10.0, 0.0, 0.0, -3.0],
        words: &[
            "magkano", "price", "saan", "where", "schedule", "paano", "register", "link", "update",
            "announcement", "kailan", "available", "walkin", "info",
        ],
        brand: None,
        truth: "excluded",
    },
];

const OUTLIERS: usize = 30;
const SHARED: &[&str] = &["vaccine", "bakuna", "vaccine", "dose", "shot", "covid"];
const FILLER: &[&str] = &["ang", "the", "ko", "na", "and", "is", "sa", "my", "talaga", "so", "naman", "it"];
const EMOJI: &[&str] = &["😷", "💉", "🙏", "😡", "😂", "❤️", "👍"];
const OUTLIER_WORDS: &[&str] = &[
    "basketball", "weather", "traffic", "ulan", "pagkain", "music", "movie", "jeep", "selfie", "birthday",
    "lotto", "pusa", "aso", "coffee", "exam",
];

fn sentence(rng: &mut SplitMix, words: &[&str], brand: Option<&str>) -> String {
    let mut toks: Vec<String> = Vec::new();
    let n_topic = 4 + rng.below(5);
    for _ in 0..n_topic {
        toks.push(rng.pick(words).to_owned());
    }
    for _ in 0..1 + rng.below(3) {
        toks.push(rng.pick(FILLER).to_owned());
    }
    if rng.unit() < 0.6 {
        toks.push(rng.pick(SHARED).to_owned());
    }
    if let Some(b) = brand {
        toks.push(b.to_owned());
    }
    // Shuffle.
    for i in (1..toks.len()).rev() {
        let j = rng.below(i + 1);
        toks.swap(i, j);
    }
    let mut s = toks.join(" ");
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    match rng.below(6) {
        0 => s.push_str("!!"),
        1 => s.push('?'),
        2 => s.push_str(", don't you think?"),
        3 => s.push('.'),
        _ => {}
    }
    if rng.unit() < 0.35 {
        s.push(' ');
        s.push_str(rng.pick(EMOJI));
    }
    s
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic"));
    fs::create_dir_all(&out).unwrap();
    let mut rng = SplitMix(0x5eed_c1ade);

    // (topic or None for outlier) per comment: one of each topic first,
    // then the rest shuffled.
    let mut slots: Vec<Option<usize>> = Vec::new();
    for (t, spec) in TOPICS.iter().enumerate() {
        slots.extend(std::iter::repeat_n(Some(t), spec.size - 1));
    }
    slots.extend(std::iter::repeat_n(None, OUTLIERS));
    for i in (1..slots.len()).rev() {
        let j = rng.below(i + 1);
        slots.swap(i, j);
    }
    let mut order: Vec<Option<usize>> = (0..TOPICS.len()).map(Some).collect();
    order.extend(slots);

    let mut outlier_points: Vec<[f64; 5]> = Vec::new();
    let mut comments = String::new();
    let mut embeddings = String::new();
    let mut truth = String::from("comment_id,expected\n");
    for (i, slot) in order.iter().enumerate() {
        let id = format!("c{:04}", i + 1);
        let mut v = [0.0f64; DIM];
        let text = match slot {
            Some(t) => {
                let spec = &TOPICS[*t];
                for d in 0..4 {
                    v[d] = spec.center[d] + 0.3 * rng.normal();
                }
                let brand = spec.brand.filter(|_| rng.unit() < 0.25);
                sentence(&mut rng, spec.words, brand)
            }
            None => {
                let p = loop {
                    let mut p = [0.0; 5];
                    let mut norm = 0.0;
                    for x in &mut p {
                        *x = rng.normal();
                        norm += *x * *x;
                    }
                    let r = 25.0 + 10.0 * rng.unit();
                    p.iter_mut().for_each(|x| *x *= r / norm.sqrt());
                    let far = outlier_points
                        .iter()
                        .all(|q| q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 25.0);
                    if far {
                        break p;
                    }
                };
                outlier_points.push(p);
                v[..5].copy_from_slice(&p);
                sentence(&mut rng, OUTLIER_WORDS, None)
            }
        };
        let start = if slot.is_some() { 4 } else { 5 };
        for x in &mut v[start..] {
            *x += 0.05 * rng.normal();
        }
        let day = 1 + rng.below(28);
        let hour = rng.below(24);
        let minute = rng.below(60);
        let rec = json!({
            "id": id,
            "post_id": format!("p{}", rng.below(5)),
            "timestamp": format!("2021-03-{day:02}T{hour:02}:{minute:02}:00Z"),
            "text": text,
        });
        writeln!(comments, "{rec}").unwrap();
        let vector: Vec<f64> = v.iter().map(|x| (x * 1e6).round() / 1e6).collect();
        writeln!(embeddings, "{}", json!({"id": id, "vector": vector})).unwrap();
        let expected = slot.map_or("none", |t| TOPICS[t].truth);
        let expected = if expected == "excluded" { "none" } else { expected };
        writeln!(truth, "{id},{expected}").unwrap();
    }

    let mut posts = String::new();
    let titles = [
        "Vaccination schedule for this week",
        "Bagong bakuna dumating na",
        "Reminder: bring your vaccination card",
        "Walk-in slots available tomorrow",
        "Update sa second dose",
    ];
    for (k, t) in titles.iter().enumerate() {
        let rec = json!({"id": format!("p{k}"), "timestamp": format!("2021-03-{:02}T08:00:00Z", 1 + k), "text": t});
        writeln!(posts, "{rec}").unwrap();
    }

    let brands = json!([
        {"name": "Pfizer", "aliases": ["pfizer", "pfizer biontech"]},
        {"name": "Moderna", "aliases": ["moderna"]},
        {"name": "AstraZeneca", "aliases": ["astrazeneca", "astra"]},
        {"name": "Sinovac", "aliases": ["sinovac", "coronavac"]},
        {"name": "Sinopharm", "aliases": ["sinopharm"]},
    ]);
    let config = json!({
        "inputs": {
            "comments": "comments.jsonl",
            "posts": "posts.jsonl",
            "embeddings": "embeddings.jsonl",
            "brands": "brands.json",
            "topic_names": "topic_names.csv",
            "clade_sentiments": "clade_sentiments.csv",
            "topic_overrides": "topic_overrides.csv"
        },
        "ngrams": {"sizes": [1, 2, 3], "top_k": 20, "mode": "raw"},
        "topics": {
            "provider": "file",
            "pca_dim": 5,
            "eps": 1.5,
            "min_members": 5,
            "top_terms": 8,
            "time_bin": "day"
        },
        "clades": {"n_clades": 2},
        "train": {"seeds": [15, 27, 32, 45, 51], "knn_k": [10, 20]},
        "reputation": {"mode": "mention_centroid", "top_n": 5}
    });

    let write = |name: &str, body: String| fs::write(out.join(name), body).unwrap();
    write("comments.jsonl", comments);
    write("posts.jsonl", posts);
    write("embeddings.jsonl", embeddings);
    write("truth.csv", truth);
    write("brands.json", serde_json::to_string_pretty(&brands).unwrap() + "\n");
    write("config.json", serde_json::to_string_pretty(&config).unwrap() + "\n");
    write("clade_sentiments.csv", "clade_id,sentiment\n0,positive\n1,negative\n".into());
    write("topic_overrides.csv", "topic_id,sentiment\n5,excluded\n".into());
    write(
        "topic_names.csv",
        "topic_id,name\n0,Protection and relief\n1,Side effects\n2,Vaccination site experience\n3,Distrust of vaccines\n4,Queues and delays\n5,Schedules and prices\n"
            .into(),
    );
    println!("wrote fixture to {}", out.display());
}
