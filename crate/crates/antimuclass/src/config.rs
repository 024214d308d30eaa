//! Flat `key = value` run configuration.
//!
//! Keys are case-sensitive. Blank lines and `#` comments are ignored, unknown
//! or repeated keys are errors. `stagnation` accepts `none`, `auto` (stop
//! after [`AUTO_STAGNATION`] iterations without improvement) or a count;
//! `max_evaluations` accepts `none` or a count.

use std::fmt::Write as _;

use antimuclass_core::RunConfig;

use crate::error::{Error, Result};

/// Stagnation window selected by `stagnation = auto`.
pub const AUTO_STAGNATION: usize = 5;

/// Every accepted key, in the order [`format_config`] writes them.
pub const KEYS: &[&str] = &[
    "NbrNeur",
    "NbrAnt",
    "NbrSit",
    "P_local",
    "NbrItr",
    "NbrLar",
    "NbrTra",
    "Coe",
    "Gen",
    "Ncm",
    "A_site",
    "A_local",
    "heterogeneous",
    "A_site_min",
    "A_site_max",
    "local_ratio",
    "nest_period",
    "stagnation",
    "max_evaluations",
    "pool_size",
    "p_min",
    "p_max",
    "window",
    "quant_bits",
    "reject_threshold",
    "ridge",
    "gngu_eps_b",
    "gngu_eps_n",
    "gngu_lambda",
    "gngu_alpha",
    "gngu_decay",
    "gngu_k_utility",
    "gngu_max_age",
    "gngu_epochs",
    "gngu_refine",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn optional<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<Option<T>, String> {
    match value {
        "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

/// Sets `key` on `cfg`.
pub fn set(cfg: &mut RunConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let v = value.trim();
    match key {
        "NbrNeur" => cfg.nbr_neur = parse(key, v)?,
        "NbrAnt" => cfg.nbr_ant = parse(key, v)?,
        "NbrSit" => cfg.nbr_sit = parse(key, v)?,
        "P_local" => cfg.p_local = parse(key, v)?,
        "NbrItr" => cfg.nbr_itr = parse(key, v)?,
        "NbrLar" => cfg.nbr_lar = parse(key, v)?,
        "NbrTra" => cfg.nbr_tra = parse(key, v)?,
        "Coe" => cfg.coe = parse(key, v)?,
        "Gen" => cfg.gen = parse(key, v)?,
        "Ncm" => cfg.ncm = parse(key, v)?,
        "A_site" => cfg.a_site = parse(key, v)?,
        "A_local" => cfg.a_local = parse(key, v)?,
        "heterogeneous" => cfg.heterogeneous = parse(key, v)?,
        "A_site_min" => cfg.a_site_min = parse(key, v)?,
        "A_site_max" => cfg.a_site_max = parse(key, v)?,
        "local_ratio" => cfg.local_ratio = parse(key, v)?,
        "nest_period" => cfg.nest_period = parse(key, v)?,
        "stagnation" => cfg.stagnation = if v == "auto" { Some(AUTO_STAGNATION) } else { optional(key, v)? },
        "max_evaluations" => cfg.max_evaluations = optional(key, v)?,
        "pool_size" => cfg.pool_size = parse(key, v)?,
        "p_min" => cfg.p_min = parse(key, v)?,
        "p_max" => cfg.p_max = parse(key, v)?,
        "window" => cfg.window = parse(key, v)?,
        "quant_bits" => cfg.quant_bits = parse(key, v)?,
        "reject_threshold" => cfg.reject_threshold = parse(key, v)?,
        "ridge" => cfg.ridge = parse(key, v)?,
        "gngu_eps_b" => cfg.gngu.eps_b = parse(key, v)?,
        "gngu_eps_n" => cfg.gngu.eps_n = parse(key, v)?,
        "gngu_lambda" => cfg.gngu.lambda = parse(key, v)?,
        "gngu_alpha" => cfg.gngu.alpha = parse(key, v)?,
        "gngu_decay" => cfg.gngu.decay = parse(key, v)?,
        "gngu_k_utility" => cfg.gngu.k_utility = parse(key, v)?,
        "gngu_max_age" => cfg.gngu.max_age = parse(key, v)?,
        "gngu_epochs" => cfg.gngu.epochs = parse(key, v)?,
        "gngu_refine" => cfg.gngu.refine_iters = parse(key, v)?,
        "seed" => cfg.seed = parse(key, v)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

/// Current value of `key` as written by [`format_config`].
pub fn get(cfg: &RunConfig, key: &str) -> Option<String> {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map_or_else(|| "none".to_string(), |v| v.to_string())
    }
    Some(match key {
        "NbrNeur" => cfg.nbr_neur.to_string(),
        "NbrAnt" => cfg.nbr_ant.to_string(),
        "NbrSit" => cfg.nbr_sit.to_string(),
        "P_local" => cfg.p_local.to_string(),
        "NbrItr" => cfg.nbr_itr.to_string(),
        "NbrLar" => cfg.nbr_lar.to_string(),
        "NbrTra" => cfg.nbr_tra.to_string(),
        "Coe" => cfg.coe.to_string(),
        "Gen" => cfg.gen.to_string(),
        "Ncm" => cfg.ncm.to_string(),
        "A_site" => cfg.a_site.to_string(),
        "A_local" => cfg.a_local.to_string(),
        "heterogeneous" => cfg.heterogeneous.to_string(),
        "A_site_min" => cfg.a_site_min.to_string(),
        "A_site_max" => cfg.a_site_max.to_string(),
        "local_ratio" => cfg.local_ratio.to_string(),
        "nest_period" => cfg.nest_period.to_string(),
        "stagnation" => opt(cfg.stagnation),
        "max_evaluations" => opt(cfg.max_evaluations),
        "pool_size" => cfg.pool_size.to_string(),
        "p_min" => cfg.p_min.to_string(),
        "p_max" => cfg.p_max.to_string(),
        "window" => cfg.window.to_string(),
        "quant_bits" => cfg.quant_bits.to_string(),
        "reject_threshold" => cfg.reject_threshold.to_string(),
        "ridge" => cfg.ridge.to_string(),
        "gngu_eps_b" => cfg.gngu.eps_b.to_string(),
        "gngu_eps_n" => cfg.gngu.eps_n.to_string(),
        "gngu_lambda" => cfg.gngu.lambda.to_string(),
        "gngu_alpha" => cfg.gngu.alpha.to_string(),
        "gngu_decay" => cfg.gngu.decay.to_string(),
        "gngu_k_utility" => cfg.gngu.k_utility.to_string(),
        "gngu_max_age" => cfg.gngu.max_age.to_string(),
        "gngu_epochs" => cfg.gngu.epochs.to_string(),
        "gngu_refine" => cfg.gngu.refine_iters.to_string(),
        "seed" => cfg.seed.to_string(),
        _ => return None,
    })
}

/// Applies the settings in `text` on top of `base`.
pub fn parse_config(text: &str, base: RunConfig) -> Result<RunConfig> {
    let mut cfg = base;
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Config { line: i + 1, msg };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        if seen.contains(&key) {
            return Err(err(format!("{key} is set twice")));
        }
        seen.push(key);
        set(&mut cfg, key, value).map_err(err)?;
    }
    Ok(cfg)
}

/// Every key with its value, one per line, readable by [`parse_config`].
pub fn format_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        let _ = writeln!(out, "{key} = {}", get(cfg, key).expect("listed key"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(parse_config(&format_config(&cfg), RunConfig::default()).unwrap(), cfg);
    }

    #[test]
    fn every_key_round_trips() {
        let mut cfg = RunConfig { coe: 7.25, stagnation: Some(4), max_evaluations: Some(900), seed: 99, ..Default::default() };
        cfg.gngu.eps_b = 0.125;
        let text = format_config(&cfg);
        assert_eq!(text.lines().count(), KEYS.len());
        assert_eq!(parse_config(&text, RunConfig::default()).unwrap(), cfg);
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# tuned\nNbrItr = 40\n\nheterogeneous = false  # plain\nstagnation = auto\n";
        let cfg = parse_config(text, RunConfig::default()).unwrap();
        assert_eq!(cfg.nbr_itr, 40);
        assert!(!cfg.heterogeneous);
        assert_eq!(cfg.stagnation, Some(AUTO_STAGNATION));
        assert_eq!(cfg.nbr_ant, 24);
    }

    #[test]
    fn rejects_bad_lines() {
        let bad = |t: &str| parse_config(t, RunConfig::default()).unwrap_err().to_string();
        assert!(bad("nbrneur = 3").contains("unknown key"));
        assert!(bad("Gen = 3\nGen = 4").contains("line 2"));
        assert!(bad("Coe = lots").contains("invalid value"));
        assert!(bad("Gen 3").contains("key = value"));
    }
}
