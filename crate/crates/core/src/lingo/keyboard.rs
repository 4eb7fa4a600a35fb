use std::sync::OnceLock;

const ROWS: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];

/// Horizontal offset of each row in key widths (standard half-key stagger).
const ROW_OFFSETS: [f32; 3] = [0.0, 0.5, 1.0];

/// Physical key adjacency for lowercase ASCII letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyboardLayout {
    neighbors: [Vec<char>; 26],
}

impl KeyboardLayout {
    /// QWERTY: horizontal neighbours in the same row plus keys in the rows
    /// directly above and below whose centres lie within half a key width.
    /// Neighbour lists are sorted alphabetically.
    pub fn qwerty() -> Self {
        let mut keys = Vec::with_capacity(26);
        for (r, row) in ROWS.iter().enumerate() {
            for (i, c) in row.chars().enumerate() {
                keys.push((c, r as i32, i as f32 + ROW_OFFSETS[r]));
            }
        }
        let mut neighbors: [Vec<char>; 26] = Default::default();
        for &(c, r, x) in &keys {
            let mut adj: Vec<char> = keys
                .iter()
                .filter(|&&(d, r2, x2)| {
                    d != c && ((r2 == r && (x2 - x).abs() == 1.0) || ((r2 - r).abs() == 1 && (x2 - x).abs() <= 0.5))
                })
                .map(|&(d, _, _)| d)
                .collect();
            adj.sort_unstable();
            neighbors[(c as u8 - b'a') as usize] = adj;
        }
        Self { neighbors }
    }

    /// Shared QWERTY instance.
    pub fn shared_qwerty() -> &'static KeyboardLayout {
        static LAYOUT: OnceLock<KeyboardLayout> = OnceLock::new();
        LAYOUT.get_or_init(KeyboardLayout::qwerty)
    }

    /// Neighbours of a lowercase letter; empty for anything else.
    pub fn adjacent(&self, c: char) -> &[char] {
        if c.is_ascii_lowercase() {
            &self.neighbors[(c as u8 - b'a') as usize]
        } else {
            &[]
        }
    }
}

/// QWERTY neighbours of `c`.
pub fn adjacent_keys(c: char) -> &'static [char] {
    KeyboardLayout::shared_qwerty().adjacent(c)
}
