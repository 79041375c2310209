//! Output files: every CSV starts with `#` comment lines naming the tool
//! version, the effective configuration hash and the tolerance ladder.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use conewalk::cone::MEMBERSHIP_GUARD;
use conewalk::solver::{D_MEMBERSHIP_TOL, HARMONICITY_TOL};
use conewalk::tilt::{ANGLE_TOL, A_OF_ANGLE_TOL, BOUNDARY_TOL, ROOT_TOL};

use crate::config::ModelConfig;

pub fn header(command: &str, config: &ModelConfig) -> Vec<String> {
    vec![
        format!("conewalk {} {command}", env!("CARGO_PKG_VERSION")),
        format!("config {} sha256={}", config.name, config.hash()),
        format!(
            "tolerances boundary={BOUNDARY_TOL:e} root={ROOT_TOL:e} angle={ANGLE_TOL:e} a_of_angle={A_OF_ANGLE_TOL:e} \
             solve_residual={:e} harmonicity={HARMONICITY_TOL:e} d_membership={D_MEMBERSHIP_TOL:e} \
             membership_guard={MEMBERSHIP_GUARD:e}",
            config.solve_residual
        ),
    ]
}

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf() })
    }

    /// Writes `name` through `body`, returning the path.
    pub fn write(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }
}

/// Comment lines followed by a plain CSV table.
pub fn table(out: &mut dyn Write, comments: &[String], columns: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}
