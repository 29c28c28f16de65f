use serde::Serialize;

use crate::error::{LabError, Result};
use crate::systems::bolza::inverse_letter;
use crate::systems::FuchsianGroup;

/// Free homotopy class of a closed curve on the Bolza surface, keyed by a
/// cyclic word over the eight generator letters (`k + 4` inverts `k`).
///
/// The key is canonical for conjugacy in the free group on four letters;
/// words that differ only through the octagon relation get distinct keys.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordClass {
    pub word: Vec<usize>,
    pub trace: f64,
    pub length: f64,
}

/// Inverse word: reversed, each letter inverted.
pub fn inverse_word(word: &[usize]) -> Vec<usize> {
    word.iter().rev().map(|&l| inverse_letter(l)).collect()
}

/// Free reduction followed by stripping cancelling end letters.
pub fn cyclic_reduce(word: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() == Some(&inverse_letter(l)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    let (mut lo, mut hi) = (0, out.len());
    while hi - lo >= 2 && out[hi - 1] == inverse_letter(out[lo]) {
        lo += 1;
        hi -= 1;
    }
    out[lo..hi].to_vec()
}

fn min_rotation(word: &[usize]) -> Vec<usize> {
    (0..word.len())
        .map(|k| {
            let mut r = word.to_vec();
            r.rotate_left(k);
            r
        })
        .min()
        .unwrap_or_default()
}

/// Lexicographically minimal rotation of the cyclically reduced word or
/// of its inverse, so `w`, its conjugates and `w^{-1}` share one key.
pub fn canonical_word(word: &[usize]) -> Vec<usize> {
    let w = cyclic_reduce(word);
    let a = min_rotation(&w);
    let b = min_rotation(&inverse_word(&w));
    a.min(b)
}

/// `2 arccosh(|tr| / 2)` of the word's matrix.
pub fn geodesic_length_word(group: &FuchsianGroup, word: &[usize]) -> Result<f64> {
    Ok(word_class(group, word)?.length)
}

pub fn word_class(group: &FuchsianGroup, word: &[usize]) -> Result<WordClass> {
    if word.is_empty() {
        return Err(LabError::InvalidInput("empty word".into()));
    }
    if let Some(&l) = word.iter().find(|&&l| l >= group.generators.len()) {
        return Err(LabError::InvalidInput(format!("letter {l} out of range")));
    }
    let canon = canonical_word(word);
    if canon.is_empty() {
        return Err(LabError::InvalidInput("word reduces to the identity".into()));
    }
    let m = group.word_matrix(&canon);
    let trace = m[0][0] + m[1][1];
    if trace.abs() <= 2.0 + 1e-12 {
        return Err(LabError::InvalidInput(format!("word {canon:?} is not hyperbolic (trace {trace})")));
    }
    Ok(WordClass { word: canon, trace, length: 2.0 * (trace.abs() / 2.0).acosh() })
}

/// Distinct classes of cyclically reduced words of length `<= max_len`,
/// sorted by length of the closed geodesic.
pub fn enumerate_word_classes(group: &FuchsianGroup, max_len: usize) -> Result<Vec<WordClass>> {
    let letters = group.generators.len();
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..letters {
                if w.last().is_some_and(|&p| p == inverse_letter(l)) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        for w in &next {
            let c = canonical_word(w);
            if c.len() == w.len() && seen.insert(c.clone()) {
                out.push(word_class(group, &c)?);
            }
        }
        frontier = next;
    }
    out.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.word.cmp(&b.word)));
    Ok(out)
}
