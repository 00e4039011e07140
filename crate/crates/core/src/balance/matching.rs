use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::stats::{logit, sd};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Maximum logit-PS distance, in standard deviations of the logit-PS.
    pub caliper: Option<f64>,
    /// Break ties in the processing order at random instead of by position.
    pub shuffle_ties: bool,
    pub seed: u64,
}

/// Result of 1:1 matching; indices refer to the input rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    /// `(single-arm row, control row)`.
    pub pairs: Vec<(usize, usize)>,
    /// Single-arm rows left without a partner.
    pub unmatched: Vec<usize>,
}

/// Greedy 1:1 nearest-neighbour matching without replacement on the logit
/// of the propensity score.
///
/// Single-arm subjects are served in decreasing propensity order; each
/// takes the closest remaining control (ties go to the lower row index).
pub fn nn_match(ps: &[f64], single_arm: &[bool], options: &MatchOptions) -> Result<Matching> {
    if ps.len() != single_arm.len() {
        return Err(Error::Dimension {
            expected: ps.len(),
            found: single_arm.len(),
        });
    }
    if ps.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::Invalid("propensity scores must lie in (0, 1)".into()));
    }
    let lps: Vec<f64> = ps.iter().map(|&p| logit(p)).collect();
    let mut treated: Vec<usize> = (0..ps.len()).filter(|&i| single_arm[i]).collect();
    let mut controls: Vec<usize> = (0..ps.len()).filter(|&i| !single_arm[i]).collect();
    if treated.is_empty() || controls.is_empty() {
        return Err(Error::Empty("matching group"));
    }
    if controls.len() < treated.len() {
        warn!(
            "{} single-arm subjects but only {} controls; matching will be partial",
            treated.len(),
            controls.len()
        );
    }

    if options.shuffle_ties {
        let mut r = rng::stream(options.seed, 0);
        let keys: Vec<u64> = (0..ps.len()).map(|_| r.random()).collect();
        treated.sort_by(|&a, &b| ps[b].total_cmp(&ps[a]).then(keys[a].cmp(&keys[b])));
    } else {
        treated.sort_by(|&a, &b| ps[b].total_cmp(&ps[a]).then(a.cmp(&b)));
    }
    controls.sort_by(|&a, &b| lps[a].total_cmp(&lps[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = controls.iter().map(|&c| lps[c]).collect();
    let width = options.caliper.map(|c| c * sd(&lps));

    let mut used = vec![false; controls.len()];
    let mut out = Matching::default();
    for &t in &treated {
        let target = lps[t];
        let pos = sorted.partition_point(|&v| v < target);
        let left = (0..pos).rev().find(|&k| !used[k]);
        let right = (pos..controls.len()).find(|&k| !used[k]);
        let best = match (left, right) {
            (None, None) => None,
            (Some(k), None) | (None, Some(k)) => Some(k),
            (Some(l), Some(r)) => {
                let (dl, dr) = (target - sorted[l], sorted[r] - target);
                if dl < dr || (dl == dr && controls[l] < controls[r]) {
                    Some(l)
                } else {
                    Some(r)
                }
            }
        };
        match best {
            Some(k) if width.is_none_or(|w| (sorted[k] - target).abs() <= w) => {
                used[k] = true;
                out.pairs.push((t, controls[k]));
            }
            _ => out.unmatched.push(t),
        }
    }
    if !out.unmatched.is_empty() {
        warn!("{} single-arm subjects left unmatched", out.unmatched.len());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_nearest() {
        let m = nn_match(&[0.8, 0.2, 0.79], &[true, false, false], &MatchOptions::default()).unwrap();
        assert_eq!(m.pairs, vec![(0, 2)]);
        assert!(m.unmatched.is_empty());
    }

    #[test]
    fn identical_scores_match_completely_and_deterministically() {
        let ps = [0.4; 6];
        let g = [true, false, true, false, false, true];
        let a = nn_match(&ps, &g, &MatchOptions::default()).unwrap();
        let b = nn_match(&ps, &g, &MatchOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pairs.len(), 3);
    }

    #[test]
    fn caliper_discards_distant_pairs() {
        let ps = [0.9, 0.1, 0.5, 0.5];
        let g = [true, false, true, false];
        let m = nn_match(&ps, &g, &MatchOptions { caliper: Some(0.1), ..Default::default() }).unwrap();
        assert_eq!(m.pairs, vec![(2, 3)]);
        assert_eq!(m.unmatched, vec![0]);
    }

    #[test]
    fn partial_when_controls_run_out() {
        let m = nn_match(&[0.6, 0.5, 0.4], &[true, true, false], &MatchOptions::default()).unwrap();
        assert_eq!(m.pairs, vec![(0, 2)]);
        assert_eq!(m.unmatched, vec![1]);
    }

    #[test]
    fn empty_group_and_bad_scores() {
        assert!(nn_match(&[0.5, 0.5], &[true, true], &MatchOptions::default()).is_err());
        assert!(nn_match(&[1.0, 0.5], &[true, false], &MatchOptions::default()).is_err());
    }

    #[test]
    fn shuffled_ties_are_seeded() {
        let ps = [0.5; 8];
        let g = [true, true, true, true, false, false, false, false];
        let o = MatchOptions { shuffle_ties: true, seed: 11, ..Default::default() };
        assert_eq!(nn_match(&ps, &g, &o).unwrap(), nn_match(&ps, &g, &o).unwrap());
    }
}
