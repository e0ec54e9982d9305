//! Text rendering of document statistics for the `stats` subcommand.

use std::fmt::Write;

use clickrank_core::text::DocumentStats;

/// One `Name: value` line per statistic, then the word frequency list
/// (`term<TAB>count`, most frequent first) under `Start of list:`.
pub fn render_stats(stats: &DocumentStats) -> String {
    let mut out = String::new();
    let lines: [(&str, String); 12] = [
        ("Number of paragraphs", stats.paragraphs.to_string()),
        ("Number of words", stats.words.to_string()),
        ("Number of sentences", stats.sentences.to_string()),
        ("Number of printable characters (including spaces)", stats.printable_chars.to_string()),
        ("Number of spaces", stats.spaces.to_string()),
        ("Number of tabulations", stats.tabs.to_string()),
        ("Number of Carriage Return", stats.carriage_returns.to_string()),
        ("Number of Line Feed", stats.line_feeds.to_string()),
        ("Number of non-printable characters (others than the above)", stats.nonprintable_others.to_string()),
        ("Number of words per sentence", format!("{:.4}", stats.words_per_sentence)),
        ("Number of syllables per word (approximate)", format!("{:.4}", stats.syllables_per_word)),
        ("Flesch index", format!("{:.4}", stats.flesch)),
    ];
    for (name, value) in lines {
        writeln!(out, "{name}: {value}").unwrap();
    }
    out.push_str("Start of list:\n");
    for (term, count) in &stats.word_frequencies {
        writeln!(out, "{term}\t{count}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use clickrank_core::text::analyze_text;

    #[test]
    fn fixture_report() {
        let got = render_stats(&analyze_text("Hi there.\n\nBye."));
        let want = "\
Number of paragraphs: 2
Number of words: 3
Number of sentences: 2
Number of printable characters (including spaces): 13
Number of spaces: 1
Number of tabulations: 0
Number of Carriage Return: 0
Number of Line Feed: 2
Number of non-printable characters (others than the above): 0
Number of words per sentence: 1.5000
Number of syllables per word (approximate): 1.0000
Flesch index: 120.7125
Start of list:
bye\t1
hi\t1
there\t1
";
        assert_eq!(got, want);
    }
}
