use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BilliardBook, GluingPermutation, Leaf, LeafId, LeafKind};
use crate::geometry::ConfocalFamily;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("schema error at line {line}, column {column}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl From<serde_json::Error> for SchemaError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BookDoc {
    family: ConfocalFamily,
    leaves: Vec<LeafDoc>,
    #[serde(default)]
    gluings: Vec<GluingDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafDoc {
    id: LeafId,
    #[serde(skip_serializing_if = "Option::is_none")]
    disk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annulus: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GluingDoc {
    ellipse: f64,
    cycles: Vec<Vec<LeafId>>,
}

#[derive(Deserialize)]
#[serde(try_from = "LeafDoc")]
struct CheckedLeaf(Leaf);

impl TryFrom<LeafDoc> for CheckedLeaf {
    type Error = String;

    fn try_from(d: LeafDoc) -> Result<Self, Self::Error> {
        let kind = match (d.disk, d.annulus) {
            (Some(l), None) => LeafKind::Disk(l),
            (None, Some([outer, inner])) => LeafKind::Annulus { outer, inner },
            _ => return Err(format!("leaf {}: exactly one of \"disk\" or \"annulus\" required", d.id)),
        };
        Ok(CheckedLeaf(Leaf { id: d.id, kind }))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckedDoc {
    family: ConfocalFamily,
    leaves: Vec<CheckedLeaf>,
    #[serde(default)]
    gluings: Vec<GluingDoc>,
}

/// Parses a book document. Leaves bounded by a glued ellipse but absent
/// from its cycles become fixed points.
pub fn book_from_json(text: &str) -> Result<BilliardBook, SchemaError> {
    let doc: CheckedDoc = serde_json::from_str(text)?;
    let leaves: Vec<Leaf> = doc.leaves.into_iter().map(|c| c.0).collect();
    let gluings = doc
        .gluings
        .into_iter()
        .map(|g| {
            let bounded: Vec<LeafId> = leaves
                .iter()
                .filter(|l| l.has_boundary(g.ellipse))
                .map(|l| l.id)
                .collect();
            GluingPermutation::from_cycles(g.ellipse, g.cycles).with_fixed_points(bounded)
        })
        .collect();
    Ok(BilliardBook::new(doc.family, leaves, gluings))
}

/// Pretty-printed book document; fixed points are omitted from the cycles.
pub fn book_to_json(book: &BilliardBook) -> String {
    let doc = BookDoc {
        family: book.family,
        leaves: book
            .leaves
            .iter()
            .map(|l| match l.kind {
                LeafKind::Disk(x) => LeafDoc {
                    id: l.id,
                    disk: Some(x),
                    annulus: None,
                },
                LeafKind::Annulus { outer, inner } => LeafDoc {
                    id: l.id,
                    disk: None,
                    annulus: Some([outer, inner]),
                },
            })
            .collect(),
        gluings: book
            .gluings
            .iter()
            .map(|g| GluingDoc {
                ellipse: g.ellipse,
                cycles: g.cycles().iter().filter(|c| c.len() > 1).cloned().collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("book serialises")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::validate_book;

    const TRIPLE: &str = r#"{
  "family": {"a": 9.0, "b": 4.0},
  "leaves": [{"id": 1, "annulus": [0.0, 2.0]}, {"id": 2, "disk": 2.0}, {"id": 3, "disk": 2.0}],
  "gluings": [{"ellipse": 2.0, "cycles": [[1, 2, 3]]}]
}"#;

    #[test]
    fn parse_and_round_trip() {
        let book = book_from_json(TRIPLE).unwrap();
        assert_eq!(book.leaves.len(), 3);
        assert!(validate_book(&book).is_empty());
        let again = book_from_json(&book_to_json(&book)).unwrap();
        assert_eq!(again, book);
    }

    #[test]
    fn unknown_leaf_kind_is_schema_error() {
        let text = r#"{"family": {"a": 9, "b": 4},
            "leaves": [{"id": 1, "ring": [0, 2]}], "gluings": []}"#;
        let e = book_from_json(text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("ring"), "{}", e.message);
    }

    #[test]
    fn ambiguous_leaf_is_schema_error() {
        let text = r#"{"family": {"a": 9, "b": 4},
            "leaves": [{"id": 1, "disk": 2, "annulus": [0, 2]}]}"#;
        assert!(book_from_json(text).is_err());
        let text = r#"{"family": {"a": 9, "b": 4}, "leaves": [{"id": 1}]}"#;
        assert!(book_from_json(text).is_err());
    }

    #[test]
    fn bad_family_is_schema_error() {
        let text = r#"{"family": {"a": 4, "b": 9}, "leaves": []}"#;
        let e = book_from_json(text).unwrap_err();
        assert!(e.message.contains("a > b"), "{}", e.message);
    }

    #[test]
    fn omitted_fixed_points_are_restored() {
        let text = r#"{"family": {"a": 9, "b": 4},
            "leaves": [{"id": 1, "annulus": [0, 2]}, {"id": 2, "disk": 2}, {"id": 3, "disk": 2}],
            "gluings": [{"ellipse": 2, "cycles": [[2, 3]]}]}"#;
        let book = book_from_json(text).unwrap();
        assert!(validate_book(&book).is_empty());
        let g = book.gluing(2.0).unwrap();
        assert_eq!(g.image(LeafId(1)), Some(LeafId(1)));
        assert!(!book_to_json(&book).contains("[\n          1\n        ]"));
    }
}
