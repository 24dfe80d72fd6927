//! Synthetic review corpora, word vectors and token tensors whose labels
//! are recoverable from sentiment words, plus config and CLI helpers.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use revembed::formats::write_token_tensor;
use revembed_core::rng::seeded;
use revembed_core::tlmagg::TokenTensor;

pub const POSITIVE: [&str; 8] = [
    "otimo",
    "excelente",
    "recomendo",
    "perfeito",
    "rapido",
    "adorei",
    "bom",
    "lindo",
];
pub const NEGATIVE: [&str; 8] = [
    "pessimo", "ruim", "atrasou", "defeito", "nunca", "quebrado", "devolvi", "horrivel",
];
pub const NEUTRAL: [&str; 8] = [
    "produto", "entrega", "loja", "compra", "veio", "prazo", "caixa", "pedido",
];

pub const TENSOR_TOKENS: usize = 12;
pub const TENSOR_DIM: usize = 4;

#[derive(Debug, Clone)]
pub struct Review {
    pub text: String,
    pub polarity: u8,
    pub fold: usize,
}

/// `n` reviews, about 60% positive. Each holds neutral filler and one to
/// three sentiment words, one time in ten taken from the other class.
pub fn reviews(n: usize, seed: u64) -> Vec<Review> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|i| {
            let polarity = u8::from(rng.random_bool(0.6));
            let mut words: Vec<&str> = (0..rng.random_range(3..9))
                .map(|_| NEUTRAL[rng.random_range(0..8)])
                .collect();
            for _ in 0..rng.random_range(1..=3) {
                let positive = (polarity == 1) != rng.random_bool(0.1);
                let pool = if positive { &POSITIVE } else { &NEGATIVE };
                let at = rng.random_range(0..=words.len());
                words.insert(at, pool[rng.random_range(0..8)]);
            }
            let mut text = words.join(" ");
            if i % 7 == 0 {
                text.push_str(", Não!");
            }
            Review {
                text,
                polarity,
                fold: i % 10,
            }
        })
        .collect()
}

pub fn reviews_csv(reviews: &[Review], with_folds: bool) -> String {
    let mut out = String::from(if with_folds {
        "review_text,polarity,kfold\n"
    } else {
        "review_text,polarity\n"
    });
    for r in reviews {
        let text = format!("\"{}\"", r.text.replace('"', "\"\""));
        if with_folds {
            let _ = writeln!(out, "{text},{},{}", r.polarity, r.fold);
        } else {
            let _ = writeln!(out, "{text},{}", r.polarity);
        }
    }
    out
}

fn word_vector(word: &str, dim: usize) -> Vec<f32> {
    let sign = if POSITIVE.contains(&word) {
        1.0
    } else if NEGATIVE.contains(&word) {
        -1.0
    } else {
        0.0
    };
    let h = word
        .bytes()
        .fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    let mut rng = seeded(h);
    (0..dim)
        .map(|k| if k == 0 { sign } else { rng.random_range(-0.5f32..0.5) })
        .collect()
}

/// Every synthetic word plus a few the corpus never uses.
pub fn vectors_text(dim: usize) -> String {
    let words: Vec<&str> = POSITIVE
        .iter()
        .chain(&NEGATIVE)
        .chain(&NEUTRAL)
        .chain(&["sobra", "extra"])
        .copied()
        .collect();
    let mut out = format!("{} {dim}\n", words.len());
    for w in words {
        let values: Vec<String> = word_vector(w, dim).iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(out, "{w} {}", values.join(" "));
    }
    out
}

/// A `[CLS] words [SEP]` tensor truncated to [`TENSOR_TOKENS`], pads
/// filled with large junk.
pub fn tensor_for(reviews: &[Review]) -> TokenTensor {
    let mut lengths = Vec::new();
    let mut payload = Vec::new();
    for r in reviews {
        let mut rows = vec![vec![0.25f32; TENSOR_DIM]];
        rows.extend(
            r.text
                .split_whitespace()
                .map(|w| word_vector(w.trim_matches(|c: char| !c.is_alphabetic()), TENSOR_DIM)),
        );
        rows.push(vec![-0.25; TENSOR_DIM]);
        rows.truncate(TENSOR_TOKENS);
        lengths.push(rows.len() as u32);
        rows.resize(TENSOR_TOKENS, vec![1e30; TENSOR_DIM]);
        payload.extend(rows.into_iter().flatten());
    }
    TokenTensor::new(TENSOR_TOKENS, TENSOR_DIM, lengths, payload).unwrap()
}

/// A directory holding `reviews.csv`, `vectors.vec` and `tensor.tlme`
/// for one synthetic corpus.
pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub reviews: Vec<Review>,
}

impl Workspace {
    pub fn new(n: usize, seed: u64) -> Self {
        Self::with_folds(n, seed, true)
    }

    pub fn with_folds(n: usize, seed: u64, with_folds: bool) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let reviews = reviews(n, seed);
        fs::write(dir.path().join("reviews.csv"), reviews_csv(&reviews, with_folds)).unwrap();
        fs::write(dir.path().join("vectors.vec"), vectors_text(8)).unwrap();
        let file = BufWriter::new(File::create(dir.path().join("tensor.tlme")).unwrap());
        write_token_tensor(file, &tensor_for(&reviews)).unwrap();
        Workspace { dir, reviews }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Writes `<name>.toml` with `pipeline` as the `[pipeline]` body.
    pub fn config(&self, name: &str, pipeline: &str) -> PathBuf {
        self.config_with(name, "", pipeline)
    }

    pub fn config_with(&self, name: &str, top: &str, pipeline: &str) -> PathBuf {
        let text = format!(
            "name = \"{name}\"\nseed = 11\n{top}\n[dataset]\npath = \"reviews.csv\"\n\n[pipeline]\n{pipeline}\n"
        );
        let path = self.path(&format!("{name}.toml"));
        fs::write(&path, text).unwrap();
        path
    }
}

pub const TFIDF: &str = "family = \"tfidf\"\nmin_count = 2\nvocab_size = 20\n";
pub const LSA: &str = "family = \"lsa\"\ncomponents = 4\nmin_count = 2\n";
pub const AVG: &str = "family = \"avg_bowv\"\nvectors = \"vectors.vec\"\n";
pub const IDF: &str = "family = \"idf_bowv\"\nvectors = \"vectors.vec\"\n";
pub const TLM: &str = "family = \"tlm_feature\"\ntensor = \"tensor.tlme\"\nmode = \"mean_all\"\n";
pub const CNN: &str = "family = \"cnn\"\nvectors = \"vectors.vec\"\nfilter_sizes = [1, 2]\nfeature_maps = 4\n\
[pipeline.training]\nlearning_rates = [0.02]\nepochs = 4\nbatch_size = 32\n";
pub const LSTM: &str = "family = \"lstm\"\nvectors = \"vectors.vec\"\nhidden_size = 4\npooling = \"average_and_max\"\n\
[pipeline.training]\nlearning_rates = [0.02]\nepochs = 3\nbatch_size = 32\nseq_len = 8\n";

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_revembed"));
    c.env_remove("REVEMBED_WORKERS").env_remove("RUST_LOG");
    c
}

pub fn cli(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
