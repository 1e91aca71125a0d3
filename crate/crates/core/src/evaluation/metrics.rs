use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::features::Label;

type Q = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    /// `[gold][predicted]`, index 0 = human, 1 = llm.
    pub counts: [[usize; 2]; 2],
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> usize {
        self.counts[0][class] + self.counts[1][class]
    }

    pub fn correct(&self) -> usize {
        self.counts[0][0] + self.counts[1][1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Accuracy and support-weighted precision, recall and F-measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub per_class: [ClassMetrics; 2],
    pub confusion: Confusion,
}

fn class_index(label: Label) -> Result<usize, EvalError> {
    match label {
        Label::Human => Ok(0),
        Label::Llm => Ok(1),
        Label::Unlabeled => Err(EvalError::UnlabeledPrediction),
    }
}

fn q(num: usize, den: usize) -> Q {
    if den == 0 {
        Q::from_integer(0)
    } else {
        Q::new(num as i128, den as i128)
    }
}

fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

pub fn confusion(gold: &[Label], predicted: &[Label]) -> Result<Confusion, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let mut c = Confusion::default();
    for (&g, &p) in gold.iter().zip(predicted) {
        c.counts[class_index(g)?][class_index(p)?] += 1;
    }
    Ok(c)
}

/// Per-class values are computed exactly and weighted by gold support, so
/// accuracy and weighted recall agree to the last bit. An undefined
/// precision (class never predicted) counts as 0.
pub fn evaluate(gold: &[Label], predicted: &[Label]) -> Result<Metrics, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    Ok(metrics_from_confusion(&confusion(gold, predicted)?))
}

pub fn metrics_from_confusion(c: &Confusion) -> Metrics {
    let n = c.total();
    let zero = Q::from_integer(0);
    let (mut wp, mut wr, mut wf) = (zero, zero, zero);
    let per_class = [0usize, 1].map(|k| {
        let tp = c.counts[k][k];
        let support = c.support(k);
        let predicted = c.predicted(k);
        let p = q(tp, predicted);
        let r = q(tp, support);
        let f = q(2 * tp, predicted + support);
        let w = q(support, n);
        wp += w * p;
        wr += w * r;
        wf += w * f;
        ClassMetrics {
            label: if k == 0 { Label::Human } else { Label::Llm },
            precision: to_f64(p),
            recall: to_f64(r),
            f1: to_f64(f),
            support,
        }
    });
    Metrics {
        accuracy: to_f64(q(c.correct(), n)),
        precision: to_f64(wp),
        recall: to_f64(wr),
        f_measure: to_f64(wf),
        per_class,
        confusion: *c,
    }
}
