//! Model configuration files.
//!
//! ```toml
//! name = "quadrant"
//! seed = 1
//! radius = 100
//! step_law = [[1, 0, 0.4], [-1, 0, 0.1], [0, 1, 0.4], [0, -1, 0.1]]
//!
//! [cone]
//! dirs = [[0, 1], [1, 0]]      # or: angles_deg = [90.0, 0.0]
//!
//! [tolerances]                 # optional
//! solve_residual = 1e-13
//! max_gap = 1e-3
//! ```

use std::fmt::Write as _;
use std::ops::Range;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;

use conewalk::models::Model;
use conewalk::{ConeGeometry, LatticePoint, StepLaw};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    step_law: Spanned<Vec<(i64, i64, f64)>>,
    cone: Spanned<RawCone>,
    radius: Spanned<i64>,
    #[serde(default)]
    seed: u64,
    tolerances: Option<Spanned<RawTolerances>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCone {
    dirs: Option<[[i64; 2]; 2]>,
    angles_deg: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    solve_residual: Option<f64>,
    max_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeSpec {
    Dirs([[i64; 2]; 2]),
    AnglesDeg([f64; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub triples: Vec<(i64, i64, f64)>,
    pub cone_spec: ConeSpec,
    pub law: StepLaw,
    pub cone: ConeGeometry,
    pub radius: i64,
    pub seed: u64,
    pub solve_residual: f64,
    pub max_gap: Option<f64>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

fn field_error(text: &str, field: &str, span: Range<usize>, msg: impl std::fmt::Display) -> String {
    format!("field `{field}` (line {}): {msg}", line_of(text, span))
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| format!("config: {e}"))?;
        let law_span = raw.step_law.span();
        let triples = raw.step_law.into_inner();
        let law = StepLaw::from_triples(&triples).map_err(|e| field_error(text, "step_law", law_span, e))?;

        let cone_span = raw.cone.span();
        let cone_spec = match raw.cone.into_inner() {
            RawCone { dirs: Some(d), angles_deg: None } => ConeSpec::Dirs(d),
            RawCone { dirs: None, angles_deg: Some(a) } => ConeSpec::AnglesDeg(a),
            _ => return Err(field_error(text, "cone", cone_span, "give exactly one of `dirs` or `angles_deg`")),
        };
        let cone = match cone_spec {
            ConeSpec::Dirs([d1, d2]) => {
                ConeGeometry::from_dirs(LatticePoint::new(d1[0], d1[1]), LatticePoint::new(d2[0], d2[1]))
            }
            ConeSpec::AnglesDeg([t1, t2]) => ConeGeometry::from_angles_deg(t1, t2),
        }
        .map_err(|e| field_error(text, "cone", cone_span.clone(), e))?;

        let radius_span = raw.radius.span();
        let radius = raw.radius.into_inner();
        check_radius(radius, &law).map_err(|e| field_error(text, "radius", radius_span, e))?;

        let (mut solve_residual, mut max_gap) = (conewalk::SolveOptions::default().tolerance, None);
        if let Some(t) = raw.tolerances {
            let span = t.span();
            let t = t.into_inner();
            if let Some(v) = t.solve_residual {
                if !(v > 0.0 && v < 1.0) {
                    return Err(field_error(text, "tolerances.solve_residual", span, format!("{v} is not in (0, 1)")));
                }
                solve_residual = v;
            }
            if let Some(v) = t.max_gap {
                if !(v > 0.0) {
                    return Err(field_error(text, "tolerances.max_gap", span, format!("{v} is not positive")));
                }
                max_gap = Some(v);
            }
        }
        Ok(ModelConfig {
            name: raw.name.unwrap_or_else(|| "model".into()),
            triples,
            cone_spec,
            law,
            cone,
            radius,
            seed: raw.seed,
            solve_residual,
            max_gap,
        })
    }

    pub fn with_radius(mut self, radius: i64) -> Result<Self, String> {
        check_radius(radius, &self.law).map_err(|e| format!("--radius: {e}"))?;
        self.radius = radius;
        Ok(self)
    }

    pub fn model(&self) -> Model {
        Model { name: self.name.clone(), law: self.law.clone(), cone: self.cone }
    }

    pub fn solve_options(&self) -> conewalk::SolveOptions {
        conewalk::SolveOptions { tolerance: self.solve_residual, max_gap: self.max_gap, ..Default::default() }
    }

    /// Canonical text of the effective configuration; its hash tags every output.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "name={:?};step_law=", self.name);
        for (x, y, p) in &self.triples {
            let _ = write!(s, "({x},{y},{p:?})");
        }
        let _ = match self.cone_spec {
            ConeSpec::Dirs(d) => write!(s, ";cone.dirs={d:?}"),
            ConeSpec::AnglesDeg(a) => write!(s, ";cone.angles_deg={a:?}"),
        };
        let _ = write!(
            s,
            ";radius={};seed={};solve_residual={:?};max_gap={:?}",
            self.radius, self.seed, self.solve_residual, self.max_gap
        );
        s
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_radius(radius: i64, law: &StepLaw) -> Result<(), String> {
    let need = 2 * law.max_jump();
    if radius < need.max(1) {
        return Err(format!("{radius} is below twice the maximal jump ({need})"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUADRANT: &str = "name = \"q\"\nseed = 3\nradius = 40\nstep_law = [[1, 0, 0.4], [-1, 0, 0.1], [0, 1, 0.4], [0, -1, 0.1]]\n\n[cone]\ndirs = [[0, 1], [1, 0]]\n";

    #[test]
    fn parses_the_quadrant() {
        let c = ModelConfig::parse(QUADRANT).unwrap();
        assert_eq!(c.cone, ConeGeometry::quadrant());
        assert_eq!((c.radius, c.seed), (40, 3));
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn errors_name_field_and_line() {
        let bad = QUADRANT.replace("0.4], [-1", "0.5], [-1");
        let e = ModelConfig::parse(&bad).unwrap_err();
        assert!(e.starts_with("field `step_law` (line 4)"), "{e}");
        let e = ModelConfig::parse(&QUADRANT.replace("radius = 40", "radius = 1")).unwrap_err();
        assert!(e.starts_with("field `radius` (line 3)"), "{e}");
        let e = ModelConfig::parse(&QUADRANT.replace("[[0, 1], [1, 0]]", "[[1, 1], [2, 2]]")).unwrap_err();
        assert!(e.starts_with("field `cone` (line 6)"), "{e}");
        let e = ModelConfig::parse(&QUADRANT.replace("radius = 40\n", "")).unwrap_err();
        assert!(e.contains("radius"), "{e}");
        let e = ModelConfig::parse(&QUADRANT.replace("seed = 3", "sead = 3")).unwrap_err();
        assert!(e.contains("line 2") && e.contains("sead"), "{e}");
    }

    #[test]
    fn hash_tracks_overrides() {
        let c = ModelConfig::parse(QUADRANT).unwrap();
        let h = c.hash();
        assert_eq!(h, ModelConfig::parse(QUADRANT).unwrap().hash());
        assert_ne!(h, c.with_radius(41).unwrap().hash());
    }
}
