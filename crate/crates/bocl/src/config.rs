//! TOML configuration files layered over command-line values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

fn merge(base: &mut Table, over: &Table, prefix: &str) -> Result<(), String> {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o, &format!("{prefix}{k}."))?,
            (Some(slot), _) => *slot = v.clone(),
            // Absent top-level keys may be optional fields; the target type
            // rejects names it does not know.
            (None, _) if prefix.is_empty() => {
                base.insert(k.clone(), v.clone());
            }
            (None, _) => return Err(format!("unknown key {prefix}{k}")),
        }
    }
    Ok(())
}

/// `base` with every key in `over` replacing the corresponding value.
/// Nested tables merge key by key; unknown keys are errors.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, over: &Table) -> Result<T, String> {
    let mut table = Table::try_from(base).map_err(|e| e.to_string())?;
    merge(&mut table, over, "")?;
    table.try_into().map_err(|e: toml::de::Error| e.message().to_string())
}

pub fn read_table(path: &Path) -> Result<Table, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.parse::<Table>().map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::NoiseModel;

    #[test]
    fn file_values_win() {
        let base = NoiseModel::default();
        let over: Table = "pixel_noise_sigma = 2.5\nrng_seed = 9".parse().unwrap();
        let merged = overlay(&base, &over).unwrap();
        assert_eq!(merged.pixel_noise_sigma, 2.5);
        assert_eq!(merged.rng_seed, 9);
        assert_eq!(merged.depth_noise_sigma, base.depth_noise_sigma);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let base = NoiseModel::default();
        let over: Table = "pixel_noise = 2.5".parse().unwrap();
        assert!(overlay(&base, &over).is_err());
    }

    #[test]
    fn unknown_nested_keys_are_rejected() {
        let base = crate::pipeline::SolveConfig::default();
        let over: Table = "[gates]\nyaw_gat = 0.1".parse().unwrap();
        assert!(overlay(&base, &over).unwrap_err().contains("gates.yaw_gat"));
        let ok: Table = "[gates]\nyaw_gate = 0.1".parse().unwrap();
        assert_eq!(overlay(&base, &ok).unwrap().gates.yaw_gate, 0.1);
    }
}
