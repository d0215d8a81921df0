//! Tokenize a few headlines, build a vocabulary and encode them with
//! unknown-word fallback and truncation.
//!
//! ```text
//! cargo run --example tokenize_and_vocab
//! ```

use regtext::corpus::{encode_document, tokenize, Vocabulary, UNK_TOKEN};

fn main() {
    let texts = [
        "Stocks rally as Fed holds rates steady",
        "Fed's chair says rates won't move soon",
        "Local team wins the cup, fans celebrate!",
    ];
    let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    for (text, toks) in texts.iter().zip(&docs) {
        println!("{text:?}\n  -> {toks:?}");
    }

    // Words seen once are dropped at min_count 2.
    for min_count in [1, 2] {
        let vocab = Vocabulary::build(&docs, min_count);
        println!("\nmin_count {min_count}: {} entries", vocab.len());
        println!("  first ten: {:?}", &vocab.tokens()[..vocab.len().min(10)]);
    }

    let vocab = Vocabulary::build(&docs, 2);
    let unseen = tokenize("Fed rates shock markets");
    let ids = encode_document(&unseen, &vocab, 3);
    let back: Vec<&str> = ids.iter().map(|&i| vocab.token(i).unwrap_or(UNK_TOKEN)).collect();
    println!("\n{unseen:?} capped at 3 tokens -> {ids:?} = {back:?}");
}
