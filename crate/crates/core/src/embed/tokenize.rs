use std::collections::HashSet;

/// Splits `text` on whitespace, casefolds, trims wrapping punctuation and
/// drops stop-words. Interior punctuation survives, as do a leading `.`
/// before an alphanumeric (`.net`) and trailing `+`/`#` (`c++`, `c#`).
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = trim_token(&raw.to_lowercase());
            (!t.is_empty() && !stopwords.contains(&t)).then_some(t)
        })
        .collect()
}

fn trim_token(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut start = 0;
    while start < chars.len() && !chars[start].is_alphanumeric() {
        let keeps_dot = chars[start] == '.' && chars.get(start + 1).is_some_and(|c| c.is_alphanumeric());
        if keeps_dot {
            break;
        }
        start += 1;
    }
    let mut end = chars.len();
    while end > start && !chars[end - 1].is_alphanumeric() && !matches!(chars[end - 1], '+' | '#') {
        end -= 1;
    }
    // a token that was nothing but `+`/`#` carries no word
    if chars[start..end].iter().all(|c| !c.is_alphanumeric()) {
        return String::new();
    }
    chars[start..end].iter().collect()
}

/// Stop-word list: one token per line; blank lines and `#` comments ignored.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> HashSet<String> {
        HashSet::new()
    }

    #[test]
    fn casefold_only() {
        assert_eq!(tokenize("Senior PHP Developer", &none()), ["senior", "php", "developer"]);
    }

    #[test]
    fn removes_stopwords() {
        let sw = parse_stopwords("and\n# comment\n\nthe\n");
        assert_eq!(tokenize("Engineer and Developer", &sw), ["engineer", "developer"]);
    }

    #[test]
    fn technical_punctuation() {
        assert_eq!(tokenize("C++ / .NET developer", &none()), ["c++", ".net", "developer"]);
        assert_eq!(tokenize("(Node.js), C#; developer.", &none()), ["node.js", "c#", "developer"]);
        assert_eq!(tokenize("++ -- ...", &none()), Vec::<String>::new());
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("   ", &none()).is_empty());
    }
}
