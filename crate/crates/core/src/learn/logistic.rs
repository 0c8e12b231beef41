//! Weighted logistic regression fitted by gradient descent with backtracking
//! line search. It serves as the score ranker inside label massaging and as
//! an optional plain learner; it expects a standardized encoded matrix.

use crate::data::EncodedMatrix;
use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    /// Ridge strength on the coefficients; the intercept is never penalized.
    pub l2: f64,
    pub max_iter: usize,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1e-3,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

/// Fitted coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit<S> {
    pub coef: Vec<S>,
    pub intercept: S,
}

impl<S: Scalar> LogisticFit<S> {
    pub fn score_row(&self, row: &[S]) -> S {
        let mut z = self.intercept;
        for (c, x) in self.coef.iter().zip(row) {
            z += *c * *x;
        }
        sigmoid(z)
    }
}

fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// Numerically stable per-row negative log likelihood:
/// max(z, 0) - z*y + ln(1 + exp(-|z|)).
fn nll_term<S: Scalar>(z: S, y: u8) -> S {
    let zy = if y == 1 { z } else { S::zero() };
    z.max(S::zero()) - zy + (-z.abs()).exp().ln_1p()
}

/// Mean weighted loss plus the ridge term, and its gradient
/// (coefficients first, intercept last).
fn loss_and_grad<S: Scalar>(
    m: &EncodedMatrix<S>,
    y: &[u8],
    w: &[S],
    l2: S,
    coef: &[S],
    intercept: S,
) -> (S, Vec<S>) {
    let n = m.n();
    let d = m.width;
    let w_total: S = w.iter().copied().sum();
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); d + 1];
    for i in 0..n {
        let row = m.row(i);
        let mut z = intercept;
        for c in 0..d {
            z += coef[c] * row[c];
        }
        loss += w[i] * nll_term(z, y[i]);
        let resid = w[i] * (sigmoid(z) - S::from_u8(y[i]).unwrap());
        for c in 0..d {
            grad[c] += resid * row[c];
        }
        grad[d] += resid;
    }
    loss /= w_total;
    for g in grad.iter_mut() {
        *g /= w_total;
    }
    let half = S::from_f64_lossy(0.5);
    for c in 0..d {
        loss += half * l2 * coef[c] * coef[c];
        grad[c] += l2 * coef[c];
    }
    (loss, grad)
}

/// Fits from zero coefficients. Converges when the gradient max-norm drops
/// below `tol` or the iteration budget runs out; a non-finite loss is a hard
/// error rather than a silent bad model.
pub fn fit_logistic_raw<S: Scalar>(
    m: &EncodedMatrix<S>,
    y: &[u8],
    w: &[S],
    params: &LogisticParams,
) -> Result<LogisticFit<S>> {
    if y.len() != m.n() || w.len() != m.n() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows, {} labels, {} weights",
            m.n(),
            y.len(),
            w.len()
        )));
    }
    if m.n() == 0 {
        return Err(Error::InvalidInput("cannot fit on an empty matrix".into()));
    }
    let d = m.width;
    let l2 = S::from_f64_lossy(params.l2);
    let mut coef = vec![S::zero(); d];
    let mut intercept = S::zero();
    let (mut loss, mut grad) = loss_and_grad(m, y, w, l2, &coef, intercept);
    for _ in 0..params.max_iter {
        if !loss.is_finite() {
            return Err(Error::InvalidInput(
                "logistic fit diverged to a non-finite loss".into(),
            ));
        }
        let gmax = grad
            .iter()
            .fold(S::zero(), |acc, g| acc.max(g.abs()));
        if gmax < S::from_f64_lossy(params.tol) {
            break;
        }
        let g_sq: S = grad.iter().map(|g| *g * *g).sum();
        let mut step = S::one();
        let armijo = S::from_f64_lossy(1e-4);
        loop {
            let cand_coef: Vec<S> = coef
                .iter()
                .zip(&grad[..d])
                .map(|(c, g)| *c - step * *g)
                .collect();
            let cand_intercept = intercept - step * grad[d];
            let (cand_loss, cand_grad) = loss_and_grad(m, y, w, l2, &cand_coef, cand_intercept);
            if cand_loss.is_finite() && cand_loss <= loss - armijo * step * g_sq {
                coef = cand_coef;
                intercept = cand_intercept;
                loss = cand_loss;
                grad = cand_grad;
                break;
            }
            step /= S::from_f64_lossy(2.0);
            if step < S::from_f64_lossy(1e-14) {
                // No descent direction left at this precision; stop here.
                return Ok(LogisticFit { coef, intercept });
            }
        }
    }
    Ok(LogisticFit { coef, intercept })
}
