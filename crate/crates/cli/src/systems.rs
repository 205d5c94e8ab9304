//! Logic and structural-rule names accepted on the command line.

use tensera_core::calculus_shallow::{make_path_rule, make_sl_rule, rule_4, rule_b, rule_t, rule_u};
use tensera_core::path_engine::parse_axioms;
use tensera_core::{DeepSystem, StructuralRule};

/// Deep system for a `--logic` name; the flag marks plain DKt, which runs the
/// terminating strategy instead of the bounded one.
pub fn logic(name: &str) -> Result<(DeepSystem, bool), String> {
    let sys = match name {
        "kt" => return Ok((DeepSystem::dkt(), true)),
        "kts4" => DeepSystem::ds4(),
        "kts5" => DeepSystem::ds5(),
        "ktcd" => DeepSystem::dktu(),
        "k" => DeepSystem::dk(),
        "ks4" => DeepSystem::dks4(),
        "ks5" => DeepSystem::dks5(),
        "kcd" => DeepSystem::dku(),
        _ => match name.strip_prefix("path:") {
            Some(ax) => DeepSystem::path(parse_axioms(ax).map_err(|e| e.to_string())?),
            None => {
                return Err(format!(
                    "unknown logic {name:?}; use kt, kts4, kts5, ktcd, k, ks4, ks5, kcd or path:<axioms>"
                ))
            }
        },
    };
    Ok((sys, false))
}

/// One structural rule: `T`, `4`, `B`, `U`, `sl<h><i><j><k>` or `path:<axiom>`.
pub fn structural(name: &str) -> Result<StructuralRule, String> {
    match name {
        "T" => Ok(rule_t()),
        "4" => Ok(rule_4()),
        "B" => Ok(rule_b()),
        "U" => Ok(rule_u()),
        _ => {
            if let Some(digits) = name.strip_prefix("sl") {
                let d: Vec<usize> = digits
                    .chars()
                    .filter_map(|c| c.to_digit(10))
                    .map(|d| d as usize)
                    .collect();
                if d.len() == 4 && digits.len() == 4 {
                    return Ok(make_sl_rule(d[0], d[1], d[2], d[3]));
                }
            } else if let Some(ax) = name.strip_prefix("path:") {
                let ax = ax
                    .parse()
                    .map_err(|e: tensera_core::path_engine::AxiomParseError| e.to_string())?;
                return Ok(make_path_rule(&ax));
            }
            Err(format!(
                "unknown structural rule {name:?}; use T, 4, B, U, slHIJK or path:<axiom>"
            ))
        }
    }
}

pub fn structural_all(names: &[String]) -> Result<Vec<StructuralRule>, String> {
    names.iter().map(|n| structural(n.trim())).collect()
}
