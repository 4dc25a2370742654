/// Canonical symbols in slot order. Upper-case letters fold onto these.
pub const ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz0123456789 .";
/// Candidate tone frequencies; slots past the alphabet are reserved.
pub const SLOTS: usize = 64;
/// Decoded in place of a segment that cannot be read.
pub const UNKNOWN_SYMBOL: char = '?';

const BASE_HZ: f64 = 400.0;
const STEP_HZ: f64 = 25.0;

pub fn symbol_index(c: char) -> Option<usize> {
    let c = c.to_ascii_lowercase();
    ALPHABET.chars().position(|s| s == c)
}

pub fn symbol_for_slot(slot: usize) -> Option<char> {
    ALPHABET.chars().nth(slot)
}

pub fn symbol_frequency(slot: usize) -> f64 {
    BASE_HZ + STEP_HZ * slot as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_map() {
        assert_eq!(ALPHABET.len(), 38);
        assert_eq!(symbol_index('a'), Some(0));
        assert_eq!(symbol_index('T'), Some(19));
        assert_eq!(symbol_index('0'), Some(26));
        assert_eq!(symbol_index(' '), Some(36));
        assert_eq!(symbol_index('.'), Some(37));
        assert_eq!(symbol_index('!'), None);
        assert_eq!(symbol_frequency(0), 400.0);
        assert_eq!(symbol_frequency(SLOTS - 1), 1975.0);
        assert_eq!(symbol_for_slot(40), None);
    }
}
