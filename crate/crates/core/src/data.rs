//! Files compiled into the library: alphabet presets and the published
//! LMC/OSR grids for Hungarian, Estonian and Finnish BPE sweeps.

/// Alphabet/config preset for a language tag.
pub fn alphabet_preset(language: &str) -> Option<&'static str> {
    match language {
        "hu" => Some(include_str!("../data/alphabet_hu.json")),
        "fi" => Some(include_str!("../data/alphabet_fi.json")),
        "et" => Some(include_str!("../data/alphabet_et.json")),
        _ => None,
    }
}

/// `k,lmc,osr` CSV of the published 15-point sweep for a language tag.
/// Coverage and over-split rates are fractions, not percentages.
pub fn reference_grid(language: &str) -> Option<&'static str> {
    match language {
        "hu" => Some(include_str!("../data/grid_hu.csv")),
        "fi" => Some(include_str!("../data/grid_fi.csv")),
        "et" => Some(include_str!("../data/grid_et.csv")),
        _ => None,
    }
}

pub const LANGUAGES: [&str; 3] = ["hu", "et", "fi"];
