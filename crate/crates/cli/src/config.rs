//! `key = value` experiment files mapped onto [`PlacerConfig`].

use std::path::Path;

use flowplace::optimizer::PlacerConfig;
use flowplace::{PlaceError, Result};

fn parse<V: std::str::FromStr>(path: &Path, line: usize, key: &str, v: &str) -> Result<V> {
    v.parse().map_err(|_| PlaceError::Parse {
        file: path.to_path_buf(),
        line,
        msg: format!("bad value `{v}` for `{key}`"),
    })
}

/// Applies every `key = value` line of `text` to `cfg`. Blank lines and
/// `#` comments are skipped; unknown keys are errors.
pub fn apply_config_text(cfg: &mut PlacerConfig, text: &str, path: &Path) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(PlaceError::Parse {
                file: path.to_path_buf(),
                line,
                msg: "expected `key = value`".into(),
            });
        };
        let (key, v) = (key.trim(), value.trim());
        match key {
            "target_density" => cfg.target_density = parse(path, line, key, v)?,
            "stop_overflow" => cfg.stop_overflow = parse(path, line, key, v)?,
            "cluster_target_overflow" => cfg.cluster_target_overflow = parse(path, line, key, v)?,
            "iter0" => cfg.iter0 = parse(path, line, key, v)?,
            "max_iters" => cfg.max_iterations = parse(path, line, key, v)?,
            "ignore_net_degree" => cfg.ignore_net_degree = parse(path, line, key, v)?,
            "seed" => cfg.seed = parse(path, line, key, v)?,
            "penalty_divisor" => cfg.penalty_divisor = parse(path, line, key, v)?,
            "datapath_decay" => cfg.datapath_decay = parse(path, line, key, v)?,
            "hop_limit" => cfg.hop_limit = parse(path, line, key, v)?,
            "cluster_min" => cfg.cluster_min = Some(parse(path, line, key, v)?),
            "cluster_max" => cfg.cluster_max = Some(parse(path, line, key, v)?),
            _ => {
                return Err(PlaceError::Parse {
                    file: path.to_path_buf(),
                    line,
                    msg: format!("unknown key `{key}`"),
                })
            }
        }
    }
    Ok(())
}

pub fn apply_config_file(cfg: &mut PlacerConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| PlaceError::io(path, e))?;
    apply_config_text(cfg, &text, path)
}
