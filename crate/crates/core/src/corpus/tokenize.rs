//! Rule-based word tokenizer.
//!
//! Text is lowercased and split on whitespace. Runs of alphanumeric
//! characters form words; every other visible character is a token of its
//! own. An apostrophe between two alphanumerics stays inside the word and
//! common English contractions are then split the Treebank way
//! (`don't` -> `do n't`, `it's` -> `it 's`).

const SUFFIXES: [&str; 6] = ["'s", "'re", "'ve", "'ll", "'d", "'m"];

pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = c == '\'' && !word.is_empty() && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            word.push(c);
            continue;
        }
        flush(&mut word, &mut tokens);
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

fn flush(word: &mut String, tokens: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let w = std::mem::take(word);
    if !w.contains('\'') {
        tokens.push(w);
        return;
    }
    if let Some(stem) = w.strip_suffix("n't").filter(|s| !s.is_empty() && !s.contains('\'')) {
        tokens.push(stem.to_string());
        tokens.push("n't".to_string());
        return;
    }
    for suffix in SUFFIXES {
        if let Some(stem) = w.strip_suffix(suffix).filter(|s| !s.is_empty() && !s.contains('\'')) {
            tokens.push(stem.to_string());
            tokens.push(suffix.to_string());
            return;
        }
    }
    // Any other apostrophe (o'neil, rock'n'roll) is punctuation; a trailing
    // clitic still splits off whole.
    let (body, clitic) = match SUFFIXES.iter().find(|s| w.len() > s.len() && w.ends_with(*s)) {
        Some(s) => (&w[..w.len() - s.len()], Some(*s)),
        None => (w.as_str(), None),
    };
    for (i, part) in body.split('\'').enumerate() {
        if i > 0 {
            tokens.push("'".to_string());
        }
        if !part.is_empty() {
            tokens.push(part.to_string());
        }
    }
    tokens.extend(clitic.map(str::to_string));
}
