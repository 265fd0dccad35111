//! CSV writers. Every float is printed with 17 significant digits so the
//! files round-trip bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CavityError, Result};
use crate::observables::EnergyProfile;
use crate::particles::SpectrumResult;

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        CavityError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn profile_csv(profile: &EnergyProfile) -> Result<String> {
    if profile.samples.is_empty() {
        return Err(CavityError::Precondition(
            "energy profile has no samples".into(),
        ));
    }
    let mut rows = profile.samples.clone();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = String::from("tau,rho\n");
    for (tau, rho) in rows {
        let _ = writeln!(out, "{},{}", fmt17(tau), fmt17(rho));
    }
    Ok(out)
}

/// Writes `tau,rho` rows sorted by `τ`. Nothing is created on error.
pub fn emit_profile_csv(profile: &EnergyProfile, path: &Path) -> Result<()> {
    let text = profile_csv(profile)?;
    write_file(path, &text)
}

/// `x,t,T00` on an `nx × nt` grid over `x ∈ [0, L]`, `t ∈ [t0, t0 + span·L]`.
pub fn density_csv(
    profile: &EnergyProfile,
    t0: f64,
    span: f64,
    nx: usize,
    nt: usize,
) -> Result<String> {
    if nx < 2 || nt < 2 {
        return Err(CavityError::Parameter(format!(
            "density grid needs at least 2×2 points, got {nx}×{nt}"
        )));
    }
    let l = profile.phase().length();
    let mut out = String::from("x,t,T00\n");
    for j in 0..nt {
        let t = t0 + span * l * j as f64 / (nt - 1) as f64;
        for i in 0..nx {
            let x = l * i as f64 / (nx - 1) as f64;
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt17(x),
                fmt17(t),
                fmt17(profile.density(x, t)?)
            );
        }
    }
    Ok(out)
}

pub fn spectrum_csv(spec: &SpectrumResult) -> String {
    let mut out = String::from("k,n_k\n");
    for (i, n) in spec.n_k.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, fmt17(*n));
    }
    out
}

pub fn beta_csv(spec: &SpectrumResult) -> String {
    let mut out = String::from("k,l,re,im\n");
    for (k, row) in spec.beta.iter().enumerate() {
        for (l, b) in row.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", k + 1, l + 1, fmt17(b.re), fmt17(b.im));
        }
    }
    out
}

/// Collected file contents, written in order by one thread.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn push(&mut self, name: String, text: String) {
        self.files.push((name, text));
    }

    pub fn write_all(&self, dir: &Path) -> Result<()> {
        for (name, text) in &self.files {
            write_file(&dir.join(name), text)?;
        }
        Ok(())
    }
}

/// `profile.csv` → `profile_s1_t0.csv` when a run has several points.
pub fn tagged_name(file: &str, tag: Option<&str>) -> String {
    match tag {
        None => file.to_string(),
        Some(tag) => match file.rsplit_once('.') {
            Some((stem, ext)) => format!("{stem}_{tag}.{ext}"),
            None => format!("{file}_{tag}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::energy_profile;
    use crate::phase::PhaseFunction;

    #[test]
    fn round_trip_is_exact() {
        for x in [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            -0.0,
        ] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn static_profile_is_flat() {
        let r = PhaseFunction::identity(2.0);
        let p = energy_profile(&r, (0.0, 4.0), 9).unwrap();
        let text = profile_csv(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("tau,rho"));
        let want = -std::f64::consts::PI / (48.0 * 4.0);
        for line in lines {
            let rho: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((rho - want).abs() < 1e-16);
        }
    }

    #[test]
    fn tags_go_before_the_extension() {
        assert_eq!(tagged_name("out/p.csv", Some("s0_t1")), "out/p_s0_t1.csv");
        assert_eq!(tagged_name("p", Some("t1")), "p_t1");
        assert_eq!(tagged_name("p.csv", None), "p.csv");
    }
}
