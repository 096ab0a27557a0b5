use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::mle_embed::OpinionEmbedding;

/// Fraction of unordered comment pairs whose opinion vectors have a positive
/// dot product.
pub fn agreement(emb: &OpinionEmbedding) -> Result<f64> {
    let n = emb.c.nrows();
    if n < 2 {
        return Err(Error::TooFewComments(n));
    }
    let mut positive = 0usize;
    for i in 0..n {
        for k in i + 1..n {
            if emb.c.row(i).dot(&emb.c.row(k)) > 0.0 {
                positive += 1;
            }
        }
    }
    Ok(positive as f64 / (n * (n - 1) / 2) as f64)
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Mean Jaccard similarity of the token sets over all unordered pairs.
pub fn lexical_similarity<S: AsRef<str>>(comments: &[S]) -> Result<f64> {
    let n = comments.len();
    if n < 2 {
        return Err(Error::TooFewComments(n));
    }
    let sets: Vec<BTreeSet<String>> = comments.iter().map(|c| tokenize(c.as_ref())).collect();
    let mut total = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            let (a, b) = (&sets[i], &sets[k]);
            total += match (a.is_empty(), b.is_empty()) {
                (true, true) => 1.0,
                (true, false) | (false, true) => 0.0,
                _ => {
                    let inter = a.intersection(b).count();
                    inter as f64 / (a.len() + b.len() - inter) as f64
                }
            };
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn emb(c: Array2<f64>) -> OpinionEmbedding {
        let r = c.ncols();
        OpinionEmbedding {
            c,
            v: Array2::zeros((1, r)),
            alpha: 10.0,
        }
    }

    #[test]
    fn agreement_examples() {
        assert_eq!(
            agreement(&emb(array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])).unwrap(),
            1.0
        );
        assert_eq!(
            agreement(&emb(array![[1.0, 0.0], [-1.0, 0.5]])).unwrap(),
            0.0
        );
        // Pairs: (0,1) positive, (0,2) negative, (1,2) orthogonal.
        let third = agreement(&emb(array![[1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]])).unwrap();
        assert!((third - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            agreement(&emb(array![[1.0]])),
            Err(Error::TooFewComments(1))
        ));
    }

    #[test]
    fn lexical_examples() {
        assert_eq!(
            lexical_similarity(&["Same words here", "same WORDS, here!"]).unwrap(),
            1.0
        );
        assert_eq!(
            lexical_similarity(&["alpha beta", "gamma delta"]).unwrap(),
            0.0
        );
        assert_eq!(lexical_similarity(&["a b c", "b c d"]).unwrap(), 0.5);
        assert_eq!(lexical_similarity(&["", "?!"]).unwrap(), 1.0);
        assert_eq!(lexical_similarity(&["", "word"]).unwrap(), 0.0);
        assert!(matches!(
            lexical_similarity(&["only"]),
            Err(Error::TooFewComments(1))
        ));
    }

    #[test]
    fn tokens_split_on_punctuation() {
        let t: Vec<String> = tokenize("Don't-stop, 2day").into_iter().collect();
        assert_eq!(t, ["2day", "don", "stop", "t"]);
    }
}
