//! Published landscape parameter sets.
//!
//! Values are stored verbatim at full precision, digit for digit as released
//! with the benchmark fits; units are whatever the source published (top-1
//! error fraction for the classification tasks, cross-entropy for language
//! modeling). The `m` and `n` axes of these fits are expressed relative to
//! each benchmark's base configuration, i.e. `m = n = 1` is the base model
//! trained on the full dataset; `base_model_size` / `base_dataset_size`
//! record what that corresponds to in raw parameter and example counts.

use crate::error::{Error, Result};
use crate::forms::DenseParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Vision,
    Language,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Preset {
    pub name: &'static str,
    pub task: Task,
    pub params: DenseParams,
    /// Error units, as published.
    pub units: &'static str,
    /// Parameter count of the base model (m = 1).
    pub base_model_size: f64,
    /// Example count of the full dataset (n = 1).
    pub base_dataset_size: f64,
}

fn vision(
    name: &'static str,
    classes: u32,
    alpha: f64,
    beta: f64,
    b: f64,
    c_inf: f64,
    eta: f64,
    base_m: f64,
    base_n: f64,
) -> Preset {
    Preset {
        name,
        task: Task::Vision,
        params: DenseParams::with_classes(alpha, beta, b, c_inf, eta, classes)
            .expect("catalog values are valid"),
        units: "top-1 error fraction (as published)",
        base_model_size: base_m,
        base_dataset_size: base_n,
    }
}

fn language(
    name: &'static str,
    alpha: f64,
    beta: f64,
    b: f64,
    c_inf: f64,
    eta: f64,
    eps0: f64,
    base_m: f64,
    base_n: f64,
) -> Preset {
    Preset {
        name,
        task: Task::Language,
        params: DenseParams::with_free_eps0(alpha, beta, b, c_inf, eta, eps0)
            .expect("catalog values are valid"),
        units: "cross-entropy (as published)",
        base_model_size: base_m,
        base_dataset_size: base_n,
    }
}

/// Full catalog, in publication order.
pub fn catalog() -> Vec<Preset> {
    vec![
        vision("imagenet", 1000, 0.75403879, 0.61131518, 0.75575083, 3.62934233, 18.50376969, 25.5e6, 1.2e6),
        vision("cifar10", 10, 6.55043783e-01, 5.34102925e-01, 5.87019717e-02, 7.14208136e-14, 1.97701518e+01, 0.7e6, 60e3),
        vision("cifar100", 100, 0.70403326, 0.50562759, 0.14727227, 0.70969734, 6.92618391, 0.7e6, 60e3),
        vision("dtd", 47, 4.00319211e-01, 1.16231333e+00, 4.30356871e-05, 1.26566374e-09, 8.46839835e-01, 0.7e6, 5640.0),
        vision("aircraft", 100, 1.10233368e+00, 8.31731092e-01, 3.47121817e-03, 5.16320851e-10, 1.12529537e+00, 0.7e6, 10e3),
        vision("ucf101", 101, 9.33547255e-01, 5.37578077e-01, 4.67808736e-02, 1.15612716e-09, 2.98124532e+00, 0.7e6, 13e3),
        language("ptb", 0.80962791, 0.34315027, 0.14690378, 4.99807364, 6.27494232, 6.09699692, 20e6, 0.9e6),
        language("wikitext-2", 1.00822978, 0.21667458, 0.99145936, 8.23497095, 10.37612973, 6.21205331, 20e6, 2e6),
        language("wikitext-103", 0.73505031, 0.55718887, 0.32914295, 9.03598661, 16.33563873, 6.59633058, 41e6, 100e6),
    ]
}

/// Case- and punctuation-insensitive lookup ("WikiText-2" == "wikitext2").
pub fn preset(name: &str) -> Result<Preset> {
    let norm = |s: &str| -> String {
        s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
    };
    let want = norm(name);
    catalog()
        .into_iter()
        .find(|p| norm(p.name) == want)
        .ok_or_else(|| {
            let names: Vec<&str> = catalog().iter().map(|p| p.name).collect();
            Error::Invalid(format!("unknown preset '{name}'; available: {}", names.join(", ")))
        })
}
