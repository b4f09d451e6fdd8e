//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the code it checks. Combiner inputs are integer
//! numerators over a fixed power-of-two denominator so the brute-force answers
//! are exact, ties included.

#![allow(dead_code)]

use forge_core::ensemble::ProbabilityMatrix;
use forge_core::ClassLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DENOM: u64 = 32;

/// Members as integer rows summing to [`DENOM`], plus positive integer weights.
#[derive(Debug, Clone)]
pub struct IntInstance {
    pub members: Vec<Vec<[u64; 3]>>,
    pub weights: Vec<u64>,
}

impl IntInstance {
    pub fn random(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Self {
        // coarse grids make ties common
        let step = [1u64, 4, 8, 16][rng.random_range(0..4)];
        let members = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let a = rng.random_range(0..=DENOM / step) * step;
                        let b = rng.random_range(0..=(DENOM - a) / step) * step;
                        let mut row = [a, b, DENOM - a - b];
                        // random class order so no column is favoured
                        for i in (1..3).rev() {
                            row.swap(i, rng.random_range(0..=i));
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        let weights = (0..m).map(|_| rng.random_range(1..=4)).collect();
        IntInstance { members, weights }
    }

    pub fn matrices(&self) -> Vec<ProbabilityMatrix> {
        self.members
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                let rows = rows.iter().map(|r| r.map(|k| k as f64 / DENOM as f64)).collect();
                ProbabilityMatrix::new(format!("m{j}"), rows).expect("valid rows")
            })
            .collect()
    }

    pub fn float_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| w as f64).collect()
    }

    pub fn rows(&self) -> usize {
        self.members[0].len()
    }
}

fn label(i: usize) -> ClassLabel {
    ClassLabel::from_index(i).unwrap()
}

/// First index of the maximum.
fn first_max(v: &[u64]) -> usize {
    let best = *v.iter().max().unwrap();
    v.iter().position(|&x| x == best).unwrap()
}

pub fn soft_vote_oracle(inst: &IntInstance, weights: &[u64]) -> Vec<ClassLabel> {
    (0..inst.rows())
        .map(|r| {
            let mut score = [0u64; 3];
            for (rows, &w) in inst.members.iter().zip(weights) {
                for c in 0..3 {
                    score[c] += w * rows[r][c];
                }
            }
            label(first_max(&score))
        })
        .collect()
}

pub fn max_value_oracle(inst: &IntInstance) -> Vec<ClassLabel> {
    (0..inst.rows())
        .map(|r| {
            // enumerate every (member, class) cell; keep the first class reaching the global max
            let top = inst.members.iter().flat_map(|rows| rows[r]).max().unwrap();
            let class = (0..3).find(|&c| inst.members.iter().any(|rows| rows[r][c] == top)).unwrap();
            label(class)
        })
        .collect()
}

/// `None` when the member count is even.
pub fn hard_vote_oracle(inst: &IntInstance) -> Option<Vec<ClassLabel>> {
    let m = inst.members.len();
    if m % 2 == 0 {
        return None;
    }
    let soft = soft_vote_oracle(inst, &vec![1; m]);
    Some(
        (0..inst.rows())
            .map(|r| {
                let mut counts = [0usize; 3];
                for rows in &inst.members {
                    counts[first_max(&rows[r])] += 1;
                }
                let top = *counts.iter().max().unwrap();
                let winners: Vec<usize> = (0..3).filter(|&c| counts[c] == top).collect();
                if winners.len() == 1 {
                    label(winners[0])
                } else {
                    soft[r]
                }
            })
            .collect(),
    )
}

/// Macro F1 counted straight from the label pairs.
pub fn macro_f1_from_pairs(truth: &[usize], pred: &[usize]) -> f64 {
    let mut total = 0.0;
    for c in 0..3 {
        let tp = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p == c).count();
        let fp = truth.iter().zip(pred).filter(|(t, p)| **t != c && **p == c).count();
        let fn_ = truth.iter().zip(pred).filter(|(t, p)| **t == c && **p != c).count();
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        total += if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
    }
    total / 3.0
}

/// Dense class-weighted mean cross-entropy, written from the definition.
/// `w[k][i]` is the weight of feature `i` for class `k`.
pub fn loss_oracle(w: &[Vec<f64>], xs: &[Vec<f64>], ys: &[usize], class_w: [f64; 3]) -> f64 {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z: Vec<f64> = w.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        total += class_w[y] * -(z[y].exp() / denom).ln();
    }
    total / xs.len() as f64
}

/// Central finite differences of [`loss_oracle`] with step `h`.
pub fn numeric_gradient(w: &[Vec<f64>], xs: &[Vec<f64>], ys: &[usize], class_w: [f64; 3], h: f64) -> Vec<Vec<f64>> {
    let mut grad = vec![vec![0.0; w[0].len()]; w.len()];
    for k in 0..w.len() {
        for i in 0..w[0].len() {
            let mut plus = w.to_vec();
            let mut minus = w.to_vec();
            plus[k][i] += h;
            minus[k][i] -= h;
            grad[k][i] = (loss_oracle(&plus, xs, ys, class_w) - loss_oracle(&minus, xs, ys, class_w)) / (2.0 * h);
        }
    }
    grad
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
