use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use loslap::{Complex64, FockState};

pub const AMPLITUDE_HEADER: &str = "state,re,im,probability";

/// Buffered stdout or file.
pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// 17 significant digits, enough to re-parse every `f64` exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn state(s: &FockState) -> String {
    format!("\"{s}\"")
}

pub fn occupations(occ: &[usize]) -> String {
    let parts: Vec<String> = occ.iter().map(usize::to_string).collect();
    format!("\"{}\"", parts.join(","))
}

pub fn amplitude_line(w: &mut dyn Write, s: &FockState, a: Complex64) -> io::Result<()> {
    writeln!(w, "{},{},{},{}", state(s), num(a.re), num(a.im), num(a.norm_sqr()))
}
