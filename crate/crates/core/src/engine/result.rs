use serde::{Deserialize, Serialize};

use super::loss::LossTerms;
use crate::models::LatentPoint;

/// Counterfactual generators compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Gradient descent on `(z, a)`.
    Aip,
    /// Same loop with random unit directions instead of gradients.
    AipRandom,
    /// Gradient descent on `z` only, attributes held at `a0`.
    LatentOnly,
    /// One signed-gradient step in input space.
    GradientSign,
    /// Iterative input-space descent on prediction loss plus distance to the query.
    InputDescent,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Aip, Method::AipRandom, Method::LatentOnly, Method::GradientSign, Method::InputDescent];

    pub fn name(self) -> &'static str {
        match self {
            Method::Aip => "aip",
            Method::AipRandom => "aip-random",
            Method::LatentOnly => "latent-only",
            Method::GradientSign => "gradient-sign",
            Method::InputDescent => "input-descent",
        }
    }

    pub fn parse(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Whether the method searches the latent space (and therefore pays for encoding).
    pub fn is_latent(self) -> bool {
        matches!(self, Method::Aip | Method::AipRandom | Method::LatentOnly)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one counterfactual search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub method: Method,
    /// Position of the query in the caller's query list (or dataset row), if known.
    pub query: Option<usize>,
    pub original_class: usize,
    pub desired_class: usize,
    /// The generated sample.
    pub x_star: Vec<f64>,
    /// Encoding of the query: `(encoder(x0), a0)`.
    pub start: LatentPoint,
    /// Optimized latent point. Input-space methods store the encoding of `x_star`.
    pub latent: LatentPoint,
    /// `argmax F(x_star) == desired_class`, re-checked on the decoded sample.
    pub flipped: bool,
    /// Number of update steps taken.
    pub iterations: usize,
    /// Loss at every evaluated iterate (initial point included).
    pub loss_trace: Vec<LossTerms>,
    pub wall_time_micros: u64,
    /// Every latent iterate, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<LatentPoint>>,
}

impl CounterfactualResult {
    /// Attribute part of the optimized latent point, thresholded at 0.5.
    pub fn binarized_attributes(&self) -> Vec<f64> {
        self.latent.a.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}
