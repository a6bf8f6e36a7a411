use std::path::PathBuf;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn map_rows() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(root().join("docs/math-map.md")).unwrap();
    text.lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| concept"))
        .map(|l| {
            let cells: Vec<&str> = l.trim_matches('|').split(" | ").map(str::trim).collect();
            (cells[0].to_string(), cells[1].trim_matches('`').to_string())
        })
        .collect()
}

#[test]
fn every_mapped_operation_exists() {
    let rows = map_rows();
    assert!(rows.len() > 20);
    for (concept, op) in &rows {
        let (file, item) = op.split_once("::").unwrap_or_else(|| panic!("{}: {}", concept, op));
        let src = std::fs::read_to_string(root().join("crates/core/src").join(file)).unwrap();
        let found = ["pub fn ", "pub struct ", "pub enum "].iter().any(|k| {
            src.contains(&format!("{}{}<", k, item))
                || src.contains(&format!("{}{}(", k, item))
                || src.contains(&format!("{}{} ", k, item))
        });
        assert!(found, "{} -> {} not found", concept, op);
    }
}

#[test]
fn map_covers_required_concepts() {
    let rows = map_rows();
    let required = [
        "boundary matrix",
        "Schrödinger",
        "acoustic",
        "Examples 1–4",
        "g(x)",
        "Σ₊",
        "Σ₋",
        "Ξ₁",
        "Ξ₂",
        "Ξ₃",
        "Ξ₄",
        "Σ₀",
        "Λ",
        "`K`, `L`",
        "K = T + H",
    ];
    for key in required {
        let hits = rows.iter().filter(|(c, _)| c.starts_with(key) || c.contains(key)).count();
        assert!(hits >= 1, "{} missing from the map", key);
    }
    let mut ops: Vec<&String> = rows.iter().map(|(_, o)| o).collect();
    ops.sort();
    let n = ops.len();
    ops.dedup();
    assert_eq!(ops.len(), n, "an operation is mapped twice");
}
