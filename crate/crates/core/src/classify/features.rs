use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::text::{tokenize, TokenKind};

/// Unigram and bigram features of a text.
///
/// Words, numbers and emoji are kept; of the punctuation only `!` and `?`
/// survive. Bigrams join two consecutive kept tokens with a space.
pub fn feature_terms(text: &str) -> Vec<String> {
    let kept: Vec<String> = tokenize(text)
        .into_iter()
        .filter(|t| t.is_content() || (t.kind == TokenKind::Punct && (t.text == "!" || t.text == "?")))
        .map(|t| t.text)
        .collect();
    let mut out = Vec::with_capacity(kept.len() * 2);
    out.extend(kept.iter().cloned());
    for pair in kept.windows(2) {
        let mut bigram = String::with_capacity(pair[0].len() + pair[1].len() + 1);
        bigram.push_str(&pair[0]);
        bigram.push(' ');
        bigram.push_str(&pair[1]);
        out.push(bigram);
    }
    out
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut d = alloc::vec![0.0; dim];
        for (i, v) in self.iter() {
            d[i] = v;
        }
        d
    }
}

/// Vocabulary and IDF weights fitted on a training set.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`. Feature index `len()` is the
/// constant bias feature.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSpace {
    pub vocabulary: BTreeMap<String, u32>,
    pub idf: Vec<f64>,
}

impl FeatureSpace {
    pub fn fit<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        let mut n_docs = 0u64;
        for text in texts {
            n_docs += 1;
            let distinct: BTreeSet<String> = feature_terms(text).into_iter().collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, count)) in df.into_iter().enumerate() {
            idf.push(math::ln((1.0 + n_docs as f64) / (1.0 + count as f64)) + 1.0);
            vocabulary.insert(term, i as u32);
        }
        Self { vocabulary, idf }
    }

    /// Number of vocabulary features, excluding the bias.
    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// Dimension including the bias feature.
    pub fn dim(&self) -> usize {
        self.len() + 1
    }

    /// TF-IDF vector of `text` (raw counts times IDF) plus the bias feature set to 1.
    /// Out-of-vocabulary terms are ignored.
    pub fn featurize(&self, text: &str) -> SparseVector {
        tfidf_vector(&self.vocabulary, &self.idf, text)
    }
}

pub(crate) fn tfidf_vector(vocabulary: &BTreeMap<String, u32>, idf: &[f64], text: &str) -> SparseVector {
    let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
    for term in feature_terms(text) {
        if let Some(&idx) = vocabulary.get(&term) {
            *tf.entry(idx).or_insert(0) += 1;
        }
    }
    let mut v = SparseVector { indices: Vec::with_capacity(tf.len() + 1), values: Vec::with_capacity(tf.len() + 1) };
    for (idx, count) in tf {
        v.indices.push(idx);
        v.values.push(count as f64 * idf[idx as usize]);
    }
    v.indices.push(idf.len() as u32);
    v.values.push(1.0);
    v
}
