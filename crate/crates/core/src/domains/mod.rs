//! Benchmark domains: sliding-tile puzzle, Sokoban, the Witness
//! color-separation puzzle, and explicit synthetic trees.

pub mod sokoban;
pub mod stp;
pub mod synth;
pub mod witness;

use crate::model::FeatureTensor;
use crate::search::Domain;

/// Action indices shared by the grid domains.
pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

/// Domains whose states can be fed to the network.
pub trait Encode: Domain {
    /// (height, width, channels) of every encoded state.
    fn feature_shape(&self) -> (usize, usize, usize);

    fn encode(&self, state: &Self::State) -> FeatureTensor;
}

/// Splits a multi-level text file on `; <id>` separator lines. Returns
/// `(id, first_line_number, lines)` per level; line numbers are 1-based.
pub(crate) fn split_levels(text: &str) -> Vec<(String, usize, Vec<&str>)> {
    let mut out: Vec<(String, usize, Vec<&str>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(id) = line.strip_prefix(';') {
            out.push((id.trim().to_string(), i + 2, Vec::new()));
        } else if let Some(level) = out.last_mut() {
            level.2.push(line);
        } else if !line.trim().is_empty() {
            out.push((String::new(), i + 1, vec![line]));
        }
    }
    for level in &mut out {
        while level.2.last().is_some_and(|l| l.trim().is_empty()) {
            level.2.pop();
        }
    }
    out.retain(|l| !l.2.is_empty());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_levels_on_ids() {
        let text = "; 0\nab\ncd\n\n; 1\nef\n";
        let levels = split_levels(text);
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].0, "0");
        assert_eq!(levels[0].1, 2);
        assert_eq!(levels[0].2, vec!["ab", "cd"]);
        assert_eq!(levels[1].2, vec!["ef"]);
    }
}
