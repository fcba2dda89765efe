//! Theory configs bundled with the crate.

use crate::error::{Error, Result};
use crate::theory::TheoryConfig;

const SOURCES: [(&str, &str); 4] = [
    ("incongruity", include_str!("../configs/incongruity.toml")),
    ("relief", include_str!("../configs/relief.toml")),
    ("superiority", include_str!("../configs/superiority.toml")),
    (
        "surprise_disambiguation",
        include_str!("../configs/surprise_disambiguation.toml"),
    ),
];

pub fn theory_names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(name, _)| *name)
}

/// Raw TOML of a bundled config.
pub fn theory_source(name: &str) -> Option<&'static str> {
    SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn shipped_theory(name: &str) -> Result<TheoryConfig> {
    let text = theory_source(name).ok_or_else(|| {
        let known: Vec<&str> = theory_names().collect();
        Error::invalid(
            "theory",
            format!(
                "no bundled config `{name}`; available: {}",
                known.join(", ")
            ),
        )
    })?;
    TheoryConfig::from_toml_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse_with_expected_widths() {
        let widths: Vec<(String, usize)> = theory_names()
            .map(|n| {
                let c = shipped_theory(n).unwrap();
                assert_eq!(c.name, n);
                (c.name.clone(), c.features.len())
            })
            .collect();
        let expected = [
            ("incongruity", 48),
            ("relief", 46),
            ("superiority", 25),
            ("surprise_disambiguation", 36),
        ];
        for ((name, width), (en, ew)) in widths.iter().zip(expected) {
            assert_eq!((name.as_str(), *width), (en, ew));
        }
        assert!(shipped_theory("slapstick").is_err());
    }

    #[test]
    fn bundled_configs_read_only_synthetic_channels() {
        for name in theory_names() {
            for spec in shipped_theory(name).unwrap().features {
                assert!(
                    crate::synthgen::CHANNELS.contains(&spec.channel.as_str()),
                    "{}",
                    spec.channel
                );
                assert!(!spec.hypothesis.is_empty());
            }
        }
    }
}
