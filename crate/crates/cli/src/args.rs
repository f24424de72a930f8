//! Parsers for the compact command-line value syntaxes.

use std::str::FromStr;

use num_complex::Complex64;

use cvqpt::linalg::CVector;
use cvqpt::verify::Grid;

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect()
}

fn complex_list(s: &str) -> Result<Vec<Complex64>, String> {
    let v = floats(s)?;
    if v.len() % 2 != 0 || v.is_empty() {
        return Err(format!("'{s}' must hold re,im pairs"));
    }
    Ok(v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

/// `--probes` value.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeArg {
    Default,
    Inline(Vec<CVector>),
}

impl FromStr for ProbeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "default" {
            return Ok(ProbeArg::Default);
        }
        let mut out = Vec::new();
        for probe in s.split(';').filter(|p| !p.trim().is_empty()) {
            let modes = probe
                .split('|')
                .map(|m| {
                    let z = complex_list(m)?;
                    if z.len() != 1 {
                        return Err(format!("mode amplitude '{m}' must be a single re,im pair"));
                    }
                    Ok(z[0])
                })
                .collect::<Result<Vec<_>, String>>()?;
            out.push(CVector::from_vec(modes));
        }
        if out.is_empty() {
            return Err("no probes given".into());
        }
        Ok(ProbeArg::Inline(out))
    }
}

/// `--input` value.
#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    Coherent(Vec<Complex64>),
    Squeezed { r: f64, z: Complex64 },
    Fock(Vec<Complex64>),
}

impl FromStr for InputState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or("expected KIND:VALUES")?;
        match kind.trim() {
            "coherent" => Ok(InputState::Coherent(complex_list(rest)?)),
            "fock" => Ok(InputState::Fock(complex_list(rest)?)),
            "squeezed" => match floats(rest)?.as_slice() {
                &[r, re, im] => Ok(InputState::Squeezed { r, z: Complex64::new(re, im) }),
                _ => Err("squeezed input takes R,RE,IM".into()),
            },
            other => Err(format!("unknown input kind '{other}'")),
        }
    }
}

/// `CX,CY,HALFWIDTH,RES`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("grid takes CX,CY,HALFWIDTH,RES".into());
    }
    let nums = floats(&parts[..3].join(","))?;
    let res: usize = parts[3].trim().parse().map_err(|_| format!("'{}' is not a resolution", parts[3]))?;
    Grid::new(Complex64::new(nums[0], nums[1]), nums[2], res).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes() {
        assert_eq!("default".parse::<ProbeArg>().unwrap(), ProbeArg::Default);
        let ProbeArg::Inline(p) = "0,0; 1,0; 0,1".parse::<ProbeArg>().unwrap() else {
            panic!()
        };
        assert_eq!(p.len(), 3);
        assert_eq!(p[2][0], Complex64::new(0.0, 1.0));
        let ProbeArg::Inline(p) = "1,0|0,1;0,0|0,0".parse::<ProbeArg>().unwrap() else {
            panic!()
        };
        assert_eq!(p[0].len(), 2);
        assert!("1,0,2".parse::<ProbeArg>().is_err());
    }

    #[test]
    fn inputs() {
        assert_eq!(
            "squeezed:0.5,1,0".parse::<InputState>().unwrap(),
            InputState::Squeezed {
                r: 0.5,
                z: Complex64::new(1.0, 0.0)
            }
        );
        assert!(matches!("coherent:1,2".parse::<InputState>().unwrap(), InputState::Coherent(v) if v.len() == 1));
        assert!("thermal:1".parse::<InputState>().is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0,0,2,5").unwrap();
        assert_eq!(g.res, 5);
        assert!(parse_grid("0,0,2,1").is_err());
        assert!(parse_grid("0,0,2").is_err());
    }
}
