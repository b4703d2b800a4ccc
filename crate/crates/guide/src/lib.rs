//! The guide in `book/` is plain mdbook, which cannot run Rust listings
//! against workspace crates. Each chapter is included here as the docs of
//! an empty module so that `cargo test --doc` compiles and runs every
//! listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/units.md")]
pub mod units {}
#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}
#[doc = include_str!("../../../book/src/stationary-states.md")]
pub mod stationary_states {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/spectroscopy.md")]
pub mod spectroscopy {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/protocols.md")]
pub mod protocols {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/shortfalls.md")]
pub mod shortfalls {}

#[cfg(test)]
mod tests {
    /// Every chapter listed in SUMMARY.md is included above.
    #[test]
    fn summary_chapters_are_all_tested() {
        let summary = include_str!("../../../book/src/SUMMARY.md");
        let lib = include_str!("lib.rs");
        for line in summary.lines() {
            if let Some(file) = line.split("](").nth(1).and_then(|s| s.strip_suffix(')')) {
                assert!(lib.contains(&format!("book/src/{file}\")")), "{file} is not doc-tested");
            }
        }
    }
}
