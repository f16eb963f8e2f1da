use serde::{Deserialize, Serialize};

use crate::engine::CounterfactualResult;
use crate::error::{config_err, dim_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAttribute {
    pub index: usize,
    pub name: String,
    pub score: f64,
}

fn rank(scores: Vec<f64>, names: &[String], exclude: Option<usize>) -> Vec<RankedAttribute> {
    let mut ranked: Vec<RankedAttribute> = scores
        .into_iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude)
        .map(|(index, score)| RankedAttribute { index, name: names[index].clone(), score })
        .collect();
    // Stable sort keeps index order among equal scores.
    ranked.sort_by(|x, y| y.score.total_cmp(&x.score));
    ranked
}

fn check(t: usize, names: &[String], exclude: Option<usize>) -> Result<()> {
    if t == 0 {
        return Err(config_err("attribute ranking needs at least one attribute"));
    }
    if names.len() != t {
        return Err(dim_err(format!("{} attribute names for {t} attributes", names.len())));
    }
    if let Some(j) = exclude {
        if j >= t {
            return Err(config_err(format!("excluded attribute {j} out of range for {t} attributes")));
        }
    }
    Ok(())
}

/// Attributes sorted by `|a*_i - a0_i|`, largest first, ties by index. `exclude` drops
/// the attribute that coincides with the target label, when there is one.
pub fn attribute_interaction_ranking(
    result: &CounterfactualResult,
    a0: &[f64],
    names: &[String],
    exclude: Option<usize>,
) -> Result<Vec<RankedAttribute>> {
    let a_star = &result.latent.a;
    check(a_star.len(), names, exclude)?;
    if a0.len() != a_star.len() {
        return Err(dim_err(format!("a0 has {} entries, result has {}", a0.len(), a_star.len())));
    }
    let scores = a_star.iter().zip(a0).map(|(s, o)| (s - o).abs()).collect();
    Ok(rank(scores, names, exclude))
}

/// Ranking by `|a* - a0|` averaged over several results, each compared with its own
/// starting attributes.
pub fn mean_attribute_interaction(
    results: &[CounterfactualResult],
    names: &[String],
    exclude: Option<usize>,
) -> Result<Vec<RankedAttribute>> {
    let first = results.first().ok_or_else(|| config_err("mean ranking of an empty result list"))?;
    let t = first.latent.a.len();
    check(t, names, exclude)?;
    let mut scores = vec![0.0; t];
    for r in results {
        if r.latent.a.len() != t || r.start.a.len() != t {
            return Err(dim_err("results disagree in attribute count"));
        }
        for (j, s) in scores.iter_mut().enumerate() {
            *s += (r.latent.a[j] - r.start.a[j]).abs();
        }
    }
    let n = results.len() as f64;
    Ok(rank(scores.into_iter().map(|s| s / n).collect(), names, exclude))
}

pub fn ranking_csv(ranking: &[RankedAttribute]) -> String {
    let mut out = String::from("attribute,score\n");
    for r in ranking {
        out.push_str(&format!("{},{}\n", r.name, r.score));
    }
    out
}
