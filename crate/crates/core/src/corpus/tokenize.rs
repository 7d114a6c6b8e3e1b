/// Lowercases `text` and splits it on every non-alphanumeric character.
///
/// No stemming and no stopword removal. Duplicates are preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            terms.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        terms.push(current);
    }
    terms
}

#[cfg(test)]
mod tests {
    use super::tokenize;

    #[test]
    fn punctuation_and_case() {
        assert_eq!(tokenize("Graves' disease"), vec!["graves", "disease"]);
    }

    #[test]
    fn empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.;  ").is_empty());
    }

    #[test]
    fn duplicates_kept() {
        assert_eq!(
            tokenize("SOD1 mutation, SOD1"),
            vec!["sod1", "mutation", "sod1"]
        );
    }

    #[test]
    fn unicode_whitespace_and_letters() {
        assert_eq!(
            tokenize("Café\u{00A0}NAÏVE\u{2003}x"),
            vec!["café", "naïve", "x"]
        );
    }
}
