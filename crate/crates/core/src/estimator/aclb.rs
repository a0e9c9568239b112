//! Auxiliary-channel lower bound on finite alphabets.
//!
//! For any auxiliary channel `w_bar`,
//! `I(p; w) >= E[log2(w_bar(Y|X) / (p w_bar)(Y))]` with `(X, Y) ~ p(x) w(y|x)`,
//! with equality when `w_bar = w`. These exact finite sums are used to check
//! the inequality that all the continuous-alphabet bounds rest on.

use crate::error::{invalid, Error, Result};

/// Row-stochastic matrix `w[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(invalid("rows", "matrix is empty"));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(invalid(
                    "rows",
                    format!("row {x} has {} entries, expected {width}", row.len()),
                ));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(invalid(
                    "rows",
                    format!("row {x} has a negative or non-finite entry"),
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid("rows", format!("row {x} sums to {total}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    fn output_distribution(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs()];
        for (row, &px) in self.rows.iter().zip(p) {
            for (qy, w) in q.iter_mut().zip(row) {
                *qy += px * w;
            }
        }
        q
    }
}

fn check_input(p: &[f64], w: &TransitionMatrix) -> Result<()> {
    if p.len() != w.inputs() {
        return Err(invalid(
            "p_x",
            format!("{} probabilities for {} inputs", p.len(), w.inputs()),
        ));
    }
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(invalid("p_x", "not a probability vector"));
    }
    Ok(())
}

/// Exact `I(p; w)` in bits.
pub fn mutual_information(p: &[f64], w: &TransitionMatrix) -> Result<f64> {
    check_input(p, w)?;
    let q = w.output_distribution(p);
    let mut total = 0.0;
    for (row, &px) in w.rows.iter().zip(p) {
        for (&wy, &qy) in row.iter().zip(&q) {
            if px > 0.0 && wy > 0.0 {
                total += px * wy * (wy / qy).log2();
            }
        }
    }
    Ok(total)
}

/// `sum_{x,y} p(x) w(y|x) log2(w_bar(y|x) / sum_x' p(x') w_bar(y|x'))` in bits.
pub fn aclb_discrete(p: &[f64], w: &TransitionMatrix, w_bar: &TransitionMatrix) -> Result<f64> {
    check_input(p, w)?;
    if w_bar.inputs() != w.inputs() || w_bar.outputs() != w.outputs() {
        return Err(invalid("w_bar", "shape differs from the true channel"));
    }
    let q_bar = w_bar.output_distribution(p);
    let mut total = 0.0;
    for (x, (row, &px)) in w.rows.iter().zip(p).enumerate() {
        for (y, &wy) in row.iter().enumerate() {
            if px > 0.0 && wy > 0.0 {
                let wb = w_bar.rows[x][y];
                if wb <= 0.0 {
                    return Err(Error::SupportViolation { x, y });
                }
                total += px * wy * (wb / q_bar[y]).log2();
            }
        }
    }
    Ok(total)
}
