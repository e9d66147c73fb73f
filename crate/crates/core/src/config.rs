//! Plain-text experiment configuration: sectioned key-value files with
//! documented defaults for every key.

use crate::error::{DnlsError, Result};
use crate::evolve::EvolverConfig;
use crate::harness::{ExperimentConfig, Perturbation, PerturbationShape};
use crate::C64;

/// Default configuration rendered in the accepted file syntax. Parsing
/// this text reproduces `ExperimentConfig::default()`.
pub const DEFAULT_CONFIG_TEXT: &str = "\
# Stability experiment configuration. Keys shown with their defaults;
# omitted keys keep them. Comments start with '#' or ';'.

[grid]
n = 4096            # grid points, a power of two
length = 80         # periodic interval length

[evolver]
dt = 1e-4           # time step
t_end = 5           # horizon for the evolve subcommand
dealias = true      # two-thirds rule inside the nonlinear term
store_every = 10    # snapshot stride for the evolve subcommand

[perturbation]
shape = sech-modulated   # sech-modulated | gaussian | random-bandlimited
eps = 1e-3               # L2 amplitude
seed = 7                 # RNG seed (random-bandlimited only)
kappa = 1                # sech width (sech-modulated only)
sigma = 3                # gaussian width (gaussian only)
center = 0               # envelope center (sech-modulated, gaussian)
max_mode = 8             # band limit (random-bandlimited only)

[experiment]
z0_re = 1                # soliton spectral parameter, real part
z0_im = 0.5              # soliton spectral parameter, imaginary part
sample_times = 0,1,2,3,4,5
tol = 1e-8               # Jost consistency tolerance
";

fn bad(line: usize, message: impl Into<String>) -> DnlsError {
    DnlsError::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| bad(line, format!("{key}: expected a number, got '{value}'")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| bad(line, format!("{key}: expected a nonnegative integer, got '{value}'")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(line, format!("{key}: expected true or false, got '{value}'"))),
    }
}

/// Parses configuration text into an experiment description.
///
/// Every key has a default, so the empty string parses to
/// `ExperimentConfig::default()`. Unknown sections or keys and malformed
/// values are reported with their line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut grid_n = 4096usize;
    let mut grid_length = 80.0f64;
    let mut evolver = EvolverConfig::default();
    let mut shape = "sech-modulated".to_string();
    let mut shape_line = 0usize;
    let mut eps = 1e-3f64;
    let mut seed = 7u64;
    let mut kappa = 1.0f64;
    let mut sigma = 3.0f64;
    let mut center = 0.0f64;
    let mut max_mode = 8usize;
    let mut z0_re = 1.0f64;
    let mut z0_im = 0.5f64;
    let mut sample_times = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
    let mut tol = 1e-8f64;

    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find(['#', ';']) {
            Some(p) => &raw[..p],
            None => raw,
        };
        let s = stripped.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad(line, "unterminated section header"))?
                .trim();
            match name {
                "grid" | "evolver" | "perturbation" | "experiment" => {
                    section = name.to_string();
                }
                _ => return Err(bad(line, format!("unknown section '{name}'"))),
            }
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| bad(line, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        match (section.as_str(), key) {
            ("grid", "n") => grid_n = parse_usize(line, key, value)?,
            ("grid", "length") => grid_length = parse_f64(line, key, value)?,
            ("evolver", "dt") => evolver.dt = parse_f64(line, key, value)?,
            ("evolver", "t_end") => evolver.t_end = parse_f64(line, key, value)?,
            ("evolver", "dealias") => evolver.dealias = parse_bool(line, key, value)?,
            ("evolver", "store_every") => evolver.store_every = parse_usize(line, key, value)?,
            ("perturbation", "shape") => {
                shape = value.to_string();
                shape_line = line;
            }
            ("perturbation", "eps") => eps = parse_f64(line, key, value)?,
            ("perturbation", "seed") => {
                seed = value.parse::<u64>().map_err(|_| {
                    bad(line, format!("seed: expected an integer, got '{value}'"))
                })?
            }
            ("perturbation", "kappa") => kappa = parse_f64(line, key, value)?,
            ("perturbation", "sigma") => sigma = parse_f64(line, key, value)?,
            ("perturbation", "center") => center = parse_f64(line, key, value)?,
            ("perturbation", "max_mode") => max_mode = parse_usize(line, key, value)?,
            ("experiment", "z0_re") => z0_re = parse_f64(line, key, value)?,
            ("experiment", "z0_im") => z0_im = parse_f64(line, key, value)?,
            ("experiment", "sample_times") => {
                let mut times = Vec::new();
                for part in value.split(',') {
                    times.push(parse_f64(line, key, part.trim())?);
                }
                if times.is_empty() {
                    return Err(bad(line, "sample_times: expected at least one time"));
                }
                sample_times = times;
            }
            ("experiment", "tol") => tol = parse_f64(line, key, value)?,
            ("", _) => return Err(bad(line, "key appears before any section header")),
            (_, _) => {
                return Err(bad(
                    line,
                    format!("unknown key '{key}' in section '{section}'"),
                ))
            }
        }
    }

    let shape = match shape.as_str() {
        "sech-modulated" => PerturbationShape::SechModulated { kappa, center },
        "gaussian" => PerturbationShape::Gaussian { sigma, center },
        "random-bandlimited" => PerturbationShape::RandomBandlimited { max_mode },
        other => {
            return Err(bad(
                shape_line,
                format!("unknown perturbation shape '{other}'"),
            ))
        }
    };
    Ok(ExperimentConfig {
        grid_n,
        grid_length,
        evolver,
        perturbation: Perturbation { shape, eps, seed },
        z0: C64::new(z0_re, z0_im),
        sample_times,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        let def = ExperimentConfig::default();
        assert_eq!(cfg.grid_n, def.grid_n);
        assert_eq!(cfg.grid_length, def.grid_length);
        assert_eq!(cfg.z0, def.z0);
        assert_eq!(cfg.sample_times, def.sample_times);
        assert_eq!(cfg.perturbation, def.perturbation);
    }

    #[test]
    fn default_text_round_trips() {
        let cfg = parse_config(DEFAULT_CONFIG_TEXT).unwrap();
        let def = ExperimentConfig::default();
        assert_eq!(cfg.perturbation, def.perturbation);
        assert_eq!(cfg.evolver.dt, def.evolver.dt);
        assert_eq!(cfg.tol, def.tol);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("[grid]\nn = 64\nbogus = 1\n");
        match err {
            Err(DnlsError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_config(
            "[grid]\nn = 512\nlength = 40\n[perturbation]\nshape = gaussian\nsigma = 2.5\neps = 5e-4\n",
        )
        .unwrap();
        assert_eq!(cfg.grid_n, 512);
        assert_eq!(cfg.grid_length, 40.0);
        assert_eq!(
            cfg.perturbation.shape,
            PerturbationShape::Gaussian {
                sigma: 2.5,
                center: 0.0
            }
        );
        assert_eq!(cfg.perturbation.eps, 5e-4);
    }
}
