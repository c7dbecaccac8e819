//! Built-in cocycles used by tests, the CLI and the acceptance suite.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::FiniteDimCocycle;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::measure::SparseMeasure;

#[derive(Clone, Debug)]
pub struct CatalogCocycle {
    pub name: &'static str,
    pub description: &'static str,
    /// Harmonic for the simple random walk.
    pub cocycle: FiniteDimCocycle,
}

pub const NAMES: [&str; 9] = [
    "Z1-abelianization",
    "Z2-abelianization",
    "Z3-abelianization",
    "lamplighter-cursor",
    "heisenberg-abelianization",
    "BS12-height",
    "Z-sign-plus-trivial",
    "F2-S3-standard",
    "F2-trivial-plus-S3-standard",
];

fn srw(id: &str) -> Result<(Arc<Group>, SparseMeasure<f64>)> {
    let g = Arc::new(Group::from_id(id)?);
    let mu = SparseMeasure::srw(g.clone());
    Ok((g, mu))
}

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn rot120() -> DMatrix<f64> {
    let (c, s) = (-0.5, 3f64.sqrt() / 2.0);
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn flip() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

fn block(a: f64, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(3, 3);
    out[(0, 0)] = a;
    out.view_mut((1, 1), (2, 2)).copy_from(m);
    out
}

fn abelianization(d: usize) -> Result<FiniteDimCocycle> {
    let (g, mu) = srw(&format!("Z^d:d={d}"))?;
    let names: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let entries: Vec<_> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            (n.as_str(), None, e)
        })
        .collect();
    FiniteDimCocycle::from_generators(g, d, &entries, mu)
}

pub fn catalog_entry(name: &str) -> Result<CatalogCocycle> {
    let (name, description, cocycle) = match name {
        "Z1-abelianization" => (NAMES[0], "b(x) = x on Z, trivial representation", abelianization(1)?),
        "Z2-abelianization" => (NAMES[1], "b(x) = x on Z^2, trivial representation", abelianization(2)?),
        "Z3-abelianization" => (NAMES[2], "b(x) = x on Z^3, trivial representation", abelianization(3)?),
        "lamplighter-cursor" => {
            let (g, mu) = srw("lamplighter:d=1,f=2")?;
            (
                NAMES[3],
                "cursor position of Z/2 wr Z",
                FiniteDimCocycle::from_generators(g, 1, &[("m1", None, v(&[1.0]))], mu)?,
            )
        }
        "heisenberg-abelianization" => {
            let (g, mu) = srw("heisenberg")?;
            (
                NAMES[4],
                "projection of the Heisenberg group onto Z^2",
                FiniteDimCocycle::from_generators(g, 2, &[("x", None, v(&[1.0, 0.0])), ("y", None, v(&[0.0, 1.0]))], mu)?,
            )
        }
        "BS12-height" => {
            let (g, mu) = srw("BS:1,2")?;
            (
                NAMES[5],
                "exponent sum of the stable letter of BS(1,2)",
                FiniteDimCocycle::from_generators(g, 1, &[("a", None, v(&[1.0]))], mu)?,
            )
        }
        "Z-sign-plus-trivial" => {
            let (g, mu) = srw("Z^d:d=1")?;
            let p = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
            let raw = FiniteDimCocycle::from_generators(g, 2, &[("x1", Some(p), v(&[0.7, 1.0]))], mu)?;
            (NAMES[6], "sign representation plus trivial on Z, harmonic part", raw.harmonic_part()?.harmonic)
        }
        "F2-S3-standard" => {
            let (g, mu) = srw("F:k=2")?;
            let raw = FiniteDimCocycle::from_generators(
                g,
                2,
                &[("a", Some(rot120()), v(&[1.0, 0.0])), ("b", Some(flip()), v(&[0.3, 0.8]))],
                mu,
            )?;
            (NAMES[7], "F2 through the 2-dimensional representation of S3, harmonic part", raw.harmonic_part()?.harmonic)
        }
        "F2-trivial-plus-S3-standard" => {
            let (g, mu) = srw("F:k=2")?;
            let raw = FiniteDimCocycle::from_generators(
                g,
                3,
                &[
                    ("a", Some(block(1.0, &rot120())), v(&[1.0, 1.0, 0.0])),
                    ("b", Some(block(1.0, &flip())), v(&[0.5, 0.3, 0.8])),
                ],
                mu,
            )?;
            (
                NAMES[8],
                "F2 through trivial plus the 2-dimensional representation of S3, harmonic part",
                raw.harmonic_part()?.harmonic,
            )
        }
        other => return Err(Error::InvalidParameter(format!("unknown catalog cocycle `{other}`"))),
    };
    Ok(CatalogCocycle {
        name,
        description,
        cocycle,
    })
}

pub fn catalog() -> Result<Vec<CatalogCocycle>> {
    NAMES.iter().map(|n| catalog_entry(n)).collect()
}
