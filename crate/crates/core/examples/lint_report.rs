//! Lints every file of the mini corpus and prints grades and findings.
use skill_corpus::io::{discover_sources, read_text};
use skill_corpus::lint::lint_file;

fn main() -> skill_corpus::Result<()> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus");
    for (path, rel) in discover_sources(&root)? {
        let report = lint_file(&read_text(&path)?);
        let grade = if report.passed() { "pass" } else { "fail" };
        println!("{rel:<36} {grade} {:>3}", report.iq);
        for f in &report.findings {
            println!("    {} -{} {}", f.rule_id, f.deduction, f.message);
        }
    }
    Ok(())
}
