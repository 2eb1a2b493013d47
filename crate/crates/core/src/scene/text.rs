//! Line-oriented scene files.
//!
//! ```text
//! # comment
//! seed 42
//! layer <thickness_m> <eps_r>
//! grain <x_m> <y_m> <radius_m> <eps_r>
//! ```
//!
//! Layers are listed from the scanner side inward. Numbers are written with
//! six significant digits, so writing a parsed file reproduces it byte for byte.

use std::fmt::Write as _;

use super::{Layer, NoiseGrain, WallConfig};
use crate::error::{Error, Result};

/// Rounds to six significant digits and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_sig6(x: f64) -> String {
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    format!("{rounded}")
}

pub fn write_scene(config: &WallConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {}", config.seed);
    for l in &config.layers {
        let _ = writeln!(out, "layer {} {}", format_sig6(l.thickness_m), format_sig6(l.eps_r));
    }
    for g in &config.grains {
        let _ = writeln!(
            out,
            "grain {} {} {} {}",
            format_sig6(g.x_m),
            format_sig6(g.y_m),
            format_sig6(g.radius_m),
            format_sig6(g.eps_r)
        );
    }
    out
}

/// Parses the scene text. Only syntax is checked here; geometric validity is
/// enforced when the scene is rasterized.
pub fn parse_scene(text: &str) -> Result<WallConfig> {
    let mut config = WallConfig::from_layers(Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        let err = |message: String| Error::Parse { line, message };
        let floats = |expected: usize| -> Result<Vec<f64>> {
            if args.len() != expected {
                return Err(err(format!(
                    "`{keyword}` takes {expected} values, found {}",
                    args.len()
                )));
            }
            args.iter()
                .map(|a| {
                    a.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("`{a}` is not a finite number")))
                })
                .collect()
        };
        match keyword {
            "seed" => {
                if args.len() != 1 {
                    return Err(err("`seed` takes one value".into()));
                }
                config.seed = args[0]
                    .parse()
                    .map_err(|_| err(format!("`{}` is not an unsigned integer", args[0])))?;
            }
            "layer" => {
                let v = floats(2)?;
                config.layers.push(Layer::new(v[0], v[1]));
            }
            "grain" => {
                let v = floats(4)?;
                config.grains.push(NoiseGrain {
                    x_m: v[0],
                    y_m: v[1],
                    radius_m: v[2],
                    eps_r: v[3],
                });
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }
    if config.layers.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "scene declares no layers".into(),
        });
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::sample_wall_from_seed;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let s = "# wall\nseed 7\n\nlayer 0.128 4.283  # brick\nlayer 0.105 4.3725\ngrain 0.1 0.05 0.004 2\n";
        let c = parse_scene(s).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.layers.len(), 2);
        assert_eq!(c.layers[1].eps_r, 4.3725);
        assert_eq!(c.grains[0].radius_m, 0.004);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_scene("seed 1\nlayer 0.1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_scene("layer 0.1 2\nbrick 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_scene("layer 0.1 NaN\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        assert!(parse_scene("# nothing\n").is_err());
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(0.128), "0.128");
        assert_eq!(format_sig6(4.3725), "4.3725");
        assert_eq!(format_sig6(1.23456789), "1.23457");
        assert_eq!(format_sig6(0.0), "0");
    }

    proptest! {
        #[test]
        fn written_scenes_are_fixed_points(seed in any::<u64>()) {
            let wall = sample_wall_from_seed(seed).unwrap();
            let text = write_scene(&wall);
            let reparsed = parse_scene(&text).unwrap();
            prop_assert_eq!(write_scene(&reparsed), text);
            prop_assert_eq!(reparsed.layers.len(), wall.layers.len());
            prop_assert_eq!(reparsed.seed, wall.seed);
        }
    }
}
