//! Keyword spotting with the lexicon chunker, then an entity/relation
//! guess per keyword from a classifier trained on the index labels.

use kglink::spotter::{extract_keywords, Chunker, ErModel, Question, SpotMode, Stopwords};
use kglink::synthetic::{mini_kg, FOUNDER_QUESTION};

fn main() -> kglink::Result<()> {
    let index = mini_kg()?.index()?;
    let chunker = Chunker::from_index(Stopwords::default(), &index);
    let er = ErModel::train_from_index(&index)?;
    let q = Question::new("founder", FOUNDER_QUESTION);
    println!("{}", q.text);
    for kw in extract_keywords(&q, SpotMode::Chunker, &chunker)? {
        let p = er.predict(&kw)?;
        println!("  {kw:<10} {} ({:.2})", p.kind, p.confidence);
    }
    Ok(())
}
