use super::{EnsembleError, ProbabilityMatrix};
use crate::label::{argmax, ClassLabel, NUM_CLASSES};

/// Checks the member count and that all matrices share one row count.
fn check_members(members: &[ProbabilityMatrix]) -> Result<usize, EnsembleError> {
    if members.len() < 2 {
        return Err(EnsembleError::TooFewMembers(members.len()));
    }
    let n = members[0].len();
    if let Some(bad) = members.iter().find(|m| m.len() != n) {
        return Err(EnsembleError::ShapeMismatch {
            producer: bad.producer().to_string(),
            expected: n,
            found: bad.len(),
        });
    }
    Ok(n)
}

fn check_weights(weights: &[f64], m: usize) -> Result<(), EnsembleError> {
    if weights.len() != m {
        return Err(EnsembleError::InvalidWeights(format!("{} weights for {m} members", weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(EnsembleError::InvalidWeights(format!("weight {w} is not positive")));
    }
    Ok(())
}

fn label(i: usize) -> ClassLabel {
    ClassLabel::from_index(i).expect("class index")
}

/// Weighted average of member probabilities, `sum_j w_j p_ij / sum_j w_j`,
/// followed by argmax (ties to the lowest class index).
pub fn soft_vote(
    members: &[ProbabilityMatrix],
    weights: &[f64],
) -> Result<(Vec<ClassLabel>, ProbabilityMatrix), EnsembleError> {
    let n = check_members(members)?;
    check_weights(weights, members.len())?;
    let total: f64 = weights.iter().sum();
    let rows: Vec<[f64; NUM_CLASSES]> = (0..n)
        .map(|r| {
            let mut acc = [0.0; NUM_CLASSES];
            for (m, &w) in members.iter().zip(weights) {
                for (a, p) in acc.iter_mut().zip(m.row(r)) {
                    *a += w * p;
                }
            }
            acc.map(|a| a / total)
        })
        .collect();
    let labels = rows.iter().map(|r| label(argmax(r))).collect();
    Ok((labels, ProbabilityMatrix::from_valid_rows("soft_vote", rows)))
}

/// The class holding the single largest probability across all members.
/// Ties go to the lowest class index, then the earliest member.
pub fn max_value(members: &[ProbabilityMatrix]) -> Result<Vec<ClassLabel>, EnsembleError> {
    let n = check_members(members)?;
    Ok((0..n)
        .map(|r| {
            let mut best = (f64::NEG_INFINITY, 0);
            for m in members {
                for (c, &p) in m.row(r).iter().enumerate() {
                    if p > best.0 || (p == best.0 && c < best.1) {
                        best = (p, c);
                    }
                }
            }
            label(best.1)
        })
        .collect())
}

/// The unique most frequent vote, if one exists.
pub fn majority(votes: &[ClassLabel]) -> Option<ClassLabel> {
    let mut counts = [0usize; NUM_CLASSES];
    for v in votes {
        counts[v.index()] += 1;
    }
    let top = *counts.iter().max()?;
    let mut winners = counts.iter().enumerate().filter(|(_, &c)| c == top);
    match (winners.next(), winners.next()) {
        (Some((i, _)), None) if top > 0 => Some(label(i)),
        _ => None,
    }
}

/// Majority vote over member argmax labels. Requires an odd member count;
/// rows without a unique mode fall back to an equally weighted soft vote.
pub fn hard_vote(members: &[ProbabilityMatrix]) -> Result<Vec<ClassLabel>, EnsembleError> {
    let n = check_members(members)?;
    if members.len() % 2 == 0 {
        return Err(EnsembleError::EvenMemberCount(members.len()));
    }
    let votes: Vec<Vec<ClassLabel>> = members.iter().map(ProbabilityMatrix::labels).collect();
    let mut fallback: Option<Vec<ClassLabel>> = None;
    let mut out = Vec::with_capacity(n);
    for r in 0..n {
        let row_votes: Vec<ClassLabel> = votes.iter().map(|v| v[r]).collect();
        match majority(&row_votes) {
            Some(l) => out.push(l),
            None => {
                if fallback.is_none() {
                    fallback = Some(soft_vote(members, &vec![1.0; members.len()])?.0);
                }
                out.push(fallback.as_ref().expect("computed above")[r]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(name: &str, rows: &[[f64; 3]]) -> ProbabilityMatrix {
        ProbabilityMatrix::new(name, rows.to_vec()).unwrap()
    }

    use ClassLabel::{Hateful as H, Neither as N, Offensive as O};

    #[test]
    fn soft_vote_examples() {
        let a = pm("a", &[[0.6, 0.3, 0.1]]);
        let b = pm("b", &[[0.2, 0.5, 0.3]]);
        let (labels, avg) = soft_vote(&[a, b], &[1.0, 1.0]).unwrap();
        assert_eq!(labels, [H]);
        let r = avg.row(0);
        assert!((r[0] - 0.4).abs() < 1e-15 && (r[1] - 0.4).abs() < 1e-15 && (r[2] - 0.2).abs() < 1e-15);

        let (labels, avg) = soft_vote(&[pm("a", &[[1.0, 0.0, 0.0]]), pm("b", &[[0.0, 0.0, 1.0]])], &[1.0, 1.0]).unwrap();
        assert_eq!(labels, [H]);
        assert_eq!(avg.row(0), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn soft_vote_of_copies_is_identity() {
        let m = pm("m", &[[0.1, 0.7, 0.2], [0.5, 0.2, 0.3], [0.0, 0.4, 0.6]]);
        let (labels, avg) = soft_vote(&[m.clone(), m.clone(), m.clone()], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(labels, m.labels());
        for (a, b) in avg.rows().iter().zip(m.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn combiner_errors() {
        let a = pm("a", &[[0.6, 0.3, 0.1]]);
        let b = pm("b", &[[0.2, 0.5, 0.3], [0.2, 0.5, 0.3]]);
        assert!(matches!(soft_vote(&[a.clone()], &[1.0]), Err(EnsembleError::TooFewMembers(1))));
        assert!(matches!(max_value(&[a.clone()]), Err(EnsembleError::TooFewMembers(1))));
        match soft_vote(&[a.clone(), b], &[1.0, 1.0]) {
            Err(EnsembleError::ShapeMismatch { producer, expected: 1, found: 2 }) => assert_eq!(producer, "b"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(soft_vote(&[a.clone(), a.clone()], &[1.0, 0.0]), Err(EnsembleError::InvalidWeights(_))));
        assert!(matches!(soft_vote(&[a.clone(), a.clone()], &[1.0]), Err(EnsembleError::InvalidWeights(_))));
        let err = hard_vote(&[a.clone(), a]).unwrap_err();
        assert!(matches!(err, EnsembleError::EvenMemberCount(2)));
        assert!(err.to_string().contains("odd"));
    }

    #[test]
    fn max_value_examples() {
        let labels = max_value(&[pm("a", &[[0.6, 0.3, 0.1]]), pm("b", &[[0.2, 0.5, 0.3]])]).unwrap();
        assert_eq!(labels, [H]);
        let labels = max_value(&[pm("a", &[[0.5, 0.5, 0.0]]), pm("b", &[[0.5, 0.0, 0.5]])]).unwrap();
        assert_eq!(labels, [H]);
        let labels = max_value(&[pm("a", &[[0.0, 0.5, 0.5]]), pm("b", &[[0.1, 0.1, 0.8]])]).unwrap();
        assert_eq!(labels, [N]);
    }

    #[test]
    fn hard_vote_examples() {
        let one = |l: ClassLabel| {
            let mut r = [0.0; 3];
            r[l.index()] = 1.0;
            r
        };
        let vote = |ls: [ClassLabel; 3]| -> Vec<ClassLabel> {
            let ms: Vec<_> = ls.iter().enumerate().map(|(j, &l)| pm(&j.to_string(), &[one(l)])).collect();
            hard_vote(&ms).unwrap()
        };
        assert_eq!(vote([O, O, N]), [O]);
        assert_eq!(vote([N, N, N]), [N]);

        // all distinct: fall back to the soft vote, whose argmax here is class 1
        let ms = [
            pm("a", &[[0.5, 0.4, 0.1]]),
            pm("b", &[[0.1, 0.45, 0.45]]),
            pm("c", &[[0.1, 0.4, 0.5]]),
        ];
        assert_eq!(ms.iter().map(|m| m.labels()[0]).collect::<Vec<_>>(), [H, O, N]);
        assert_eq!(hard_vote(&ms).unwrap(), [O]);
    }

    #[test]
    fn majority_needs_unique_mode() {
        assert_eq!(majority(&[H, H, O]), Some(H));
        assert_eq!(majority(&[H, O, N]), None);
        assert_eq!(majority(&[H, H, O, O, N]), None);
        assert_eq!(majority(&[]), None);
    }
}
