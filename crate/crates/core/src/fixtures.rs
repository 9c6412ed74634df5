//! Reference books in the family `a = 9, b = 4` with boundary ellipses
//! `β ∈ {0, 2, 3.5}` (semi-axes 3×2, √7×√2, √5.5×√0.5).
//!
//! Leaf numbering follows the usual presentation of each book.

use crate::book::{BilliardBook, GluingPermutation, Leaf};
use crate::geometry::ConfocalFamily;

pub const A: f64 = 9.0;
pub const B: f64 = 4.0;
pub const BETA1: f64 = 0.0;
pub const BETA2: f64 = 2.0;
pub const BETA3: f64 = 3.5;

pub fn family() -> ConfocalFamily {
    ConfocalFamily::new(A, B).expect("fixture family")
}

fn book(leaves: Vec<Leaf>, gluings: Vec<GluingPermutation>) -> BilliardBook {
    BilliardBook::validated(family(), leaves, gluings).expect("fixture book is valid")
}

/// Annulus `E1–E2` and two disks in `E2`, `σ₂ = (1 2 3)`.
pub fn annulus_two_disks() -> BilliardBook {
    book(
        vec![
            Leaf::annulus(1, BETA1, BETA2),
            Leaf::disk(2, BETA2),
            Leaf::disk(3, BETA2),
        ],
        vec![GluingPermutation::new(BETA2, &[&[1, 2, 3]])],
    )
}

/// Two copies of the annulus `E1–E2` and two disks in `E2`;
/// `σ₁ = (1 4)`, `σ₂ = (1 2 3 4)`.
pub fn two_annuli_two_disks() -> BilliardBook {
    book(
        vec![
            Leaf::annulus(1, BETA1, BETA2),
            Leaf::disk(2, BETA2),
            Leaf::disk(3, BETA2),
            Leaf::annulus(4, BETA1, BETA2),
        ],
        vec![
            GluingPermutation::new(BETA1, &[&[1, 4]]),
            GluingPermutation::new(BETA2, &[&[1, 2, 3, 4]]),
        ],
    )
}

fn nested_leaves() -> Vec<Leaf> {
    vec![
        Leaf::annulus(1, BETA1, BETA2),
        Leaf::disk(2, BETA2),
        Leaf::annulus(3, BETA2, BETA3),
        Leaf::disk(4, BETA3),
        Leaf::disk(5, BETA3),
    ]
}

/// Five nested leaves, `σ₂ = (1 2 3)`, `σ₃ = (3 4 5)`.
pub fn nested_three_cycles() -> BilliardBook {
    book(
        nested_leaves(),
        vec![
            GluingPermutation::new(BETA2, &[&[1, 2, 3]]),
            GluingPermutation::new(BETA3, &[&[3, 4, 5]]),
        ],
    )
}

/// Same leaves as [`nested_three_cycles`], `σ₂ = (1 3 2)`, `σ₃ = (3 5 4)`.
pub fn nested_three_cycles_reversed() -> BilliardBook {
    book(
        nested_leaves(),
        vec![
            GluingPermutation::new(BETA2, &[&[1, 3, 2]]),
            GluingPermutation::new(BETA3, &[&[3, 5, 4]]),
        ],
    )
}

/// [`nested_three_cycles`] plus the annulus `E1–E3` as leaf 6;
/// `σ₁ = (1 6)`, `σ₂ = (1 2 3)`, `σ₃ = (3 4 5 6)`.
pub fn nested_with_outer_annulus() -> BilliardBook {
    let mut leaves = nested_leaves();
    leaves.push(Leaf::annulus(6, BETA1, BETA3));
    book(
        leaves,
        vec![
            GluingPermutation::new(BETA1, &[&[1, 6]]),
            GluingPermutation::new(BETA2, &[&[1, 2, 3]]),
            GluingPermutation::new(BETA3, &[&[3, 4, 5, 6]]),
        ],
    )
}

fn annulus_disk_annulus_leaves() -> Vec<Leaf> {
    vec![
        Leaf::annulus(1, BETA1, BETA2),
        Leaf::disk(2, BETA2),
        Leaf::annulus(3, BETA2, BETA3),
    ]
}

/// Annulus `E1–E2`, disk in `E2`, annulus `E2–E3`; `σ₂ = (1 2 3)`.
pub fn annulus_disk_annulus() -> BilliardBook {
    book(
        annulus_disk_annulus_leaves(),
        vec![GluingPermutation::new(BETA2, &[&[1, 2, 3]])],
    )
}

/// As [`annulus_disk_annulus`] with `σ₂ = (1 3 2)`.
pub fn annulus_disk_annulus_reversed() -> BilliardBook {
    book(
        annulus_disk_annulus_leaves(),
        vec![GluingPermutation::new(BETA2, &[&[1, 3, 2]])],
    )
}

fn bridged(sigma2: &[u32]) -> BilliardBook {
    let mut leaves = annulus_disk_annulus_leaves();
    leaves.push(Leaf::annulus(4, BETA1, BETA3));
    book(
        leaves,
        vec![
            GluingPermutation::new(BETA1, &[&[1, 4]]),
            GluingPermutation::new(BETA2, &[sigma2]),
            GluingPermutation::new(BETA3, &[&[3, 4]]),
        ],
    )
}

/// [`annulus_disk_annulus`] plus the annulus `E1–E3` as leaf 4;
/// `σ₁ = (1 4)`, `σ₂ = (1 2 3)`, `σ₃ = (3 4)`.
pub fn bridged_annulus_disk_annulus() -> BilliardBook {
    bridged(&[1, 2, 3])
}

/// As [`bridged_annulus_disk_annulus`] with `σ₂ = (1 3 2)`.
pub fn bridged_annulus_disk_annulus_reversed() -> BilliardBook {
    bridged(&[1, 3, 2])
}

/// Annuli `E1–E2`, `E1–E3` and two disks in `E3`; `σ₁ = (1 2)`, `σ₃ = (2 3 4)`.
pub fn length_four_inside() -> BilliardBook {
    book(
        vec![
            Leaf::annulus(1, BETA1, BETA2),
            Leaf::annulus(2, BETA1, BETA3),
            Leaf::disk(3, BETA3),
            Leaf::disk(4, BETA3),
        ],
        vec![
            GluingPermutation::new(BETA1, &[&[1, 2]]),
            GluingPermutation::new(BETA3, &[&[2, 3, 4]]),
        ],
    )
}

/// Annuli `E1–E2` and `E1–E3` with `σ₁ = (1 2)`.
pub fn length_four_outside() -> BilliardBook {
    book(
        vec![Leaf::annulus(1, BETA1, BETA2), Leaf::annulus(2, BETA1, BETA3)],
        vec![GluingPermutation::new(BETA1, &[&[1, 2]])],
    )
}

/// A single annulus `E1–E2`; no gluings.
pub fn plain_annulus() -> BilliardBook {
    book(vec![Leaf::annulus(1, BETA1, BETA2)], vec![])
}

/// A single disk bounded by `E2`.
pub fn single_disk() -> BilliardBook {
    book(vec![Leaf::disk(1, BETA2)], vec![])
}

/// Every named fixture, keyed by a short name.
pub fn all() -> Vec<(&'static str, BilliardBook)> {
    vec![
        ("annulus-two-disks", annulus_two_disks()),
        ("two-annuli-two-disks", two_annuli_two_disks()),
        ("nested-three-cycles", nested_three_cycles()),
        ("nested-three-cycles-reversed", nested_three_cycles_reversed()),
        ("nested-with-outer-annulus", nested_with_outer_annulus()),
        ("annulus-disk-annulus", annulus_disk_annulus()),
        ("annulus-disk-annulus-reversed", annulus_disk_annulus_reversed()),
        ("bridged-annulus-disk-annulus", bridged_annulus_disk_annulus()),
        (
            "bridged-annulus-disk-annulus-reversed",
            bridged_annulus_disk_annulus_reversed(),
        ),
        ("length-four-inside", length_four_inside()),
        ("length-four-outside", length_four_outside()),
        ("plain-annulus", plain_annulus()),
        ("single-disk", single_disk()),
    ]
}
