//! Resumable state snapshots: a line-oriented `key = value` header
//! followed by the raw little-endian f64 field values.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::potential::Potential;
use crate::report::fmt_g17;

const MAGIC: &str = "cahnlab-checkpoint v1";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub dim: usize,
    pub n_per_axis: usize,
    pub side_length: f64,
    pub time: f64,
    pub step: usize,
    pub scheme: String,
    pub eps: Option<f64>,
    pub potential: Potential,
    pub values: Vec<f64>,
}

fn potential_lines(p: &Potential, out: &mut String) {
    out.push_str(&format!("potential.kind = {}\n", p.kind_name()));
    match *p {
        Potential::ShiftedQuartic { a } => {
            out.push_str(&format!("potential.a = {}\n", fmt_g17(a)));
        }
        Potential::PaperPolynomial { a1, a2 } => {
            out.push_str(&format!("potential.a1 = {}\n", fmt_g17(a1)));
            out.push_str(&format!("potential.a2 = {}\n", fmt_g17(a2)));
        }
        Potential::Logarithmic { theta0, theta, barrier } => {
            out.push_str(&format!("potential.theta0 = {}\n", fmt_g17(theta0)));
            out.push_str(&format!("potential.theta = {}\n", fmt_g17(theta)));
            out.push_str(&format!("potential.barrier = {}\n", fmt_g17(barrier)));
        }
    }
}

fn potential_from_map(map: &std::collections::BTreeMap<String, String>) -> Result<Potential> {
    let get = |k: &str| -> Result<f64> {
        map.get(k)
            .ok_or_else(|| Error::Checkpoint(format!("missing key {k}")))?
            .parse::<f64>()
            .map_err(|_| Error::Checkpoint(format!("unparsable value for {k}")))
    };
    match map
        .get("potential.kind")
        .ok_or_else(|| Error::Checkpoint("missing key potential.kind".into()))?
        .as_str()
    {
        "shifted_quartic" => Potential::shifted_quartic(get("potential.a")?),
        "paper_polynomial" => Potential::paper_polynomial(get("potential.a1")?, get("potential.a2")?),
        "logarithmic" => Potential::logarithmic(
            get("potential.theta0")?,
            get("potential.theta")?,
            get("potential.barrier")?,
        ),
        other => Err(Error::Checkpoint(format!("unknown potential kind {other}"))),
    }
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("dim = {}\n", ck.dim));
    header.push_str(&format!("n = {}\n", ck.n_per_axis));
    header.push_str(&format!("side_length = {}\n", fmt_g17(ck.side_length)));
    header.push_str(&format!("time = {}\n", fmt_g17(ck.time)));
    header.push_str(&format!("step = {}\n", ck.step));
    header.push_str(&format!("scheme = {}\n", ck.scheme));
    if let Some(eps) = ck.eps {
        header.push_str(&format!("eps = {}\n", fmt_g17(eps)));
    }
    potential_lines(&ck.potential, &mut header);
    header.push_str("data\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    let mut bytes = Vec::with_capacity(ck.values.len() * 8);
    for v in &ck.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let raw = std::fs::read(path)?;
    let boundary = b"\ndata\n";
    let pos = raw
        .windows(boundary.len())
        .position(|w| w == boundary)
        .ok_or_else(|| Error::Checkpoint("missing data section".into()))?;
    let header = std::str::from_utf8(&raw[..pos])
        .map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;
    let payload = &raw[pos + boundary.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::Checkpoint("unrecognized header".into()));
    }
    let mut map = std::collections::BTreeMap::new();
    for line in lines {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Checkpoint(format!("malformed header line: {line}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| -> Result<String> {
        map.get(k)
            .cloned()
            .ok_or_else(|| Error::Checkpoint(format!("missing key {k}")))
    };
    let dim: usize = get("dim")?
        .parse()
        .map_err(|_| Error::Checkpoint("unparsable dim".into()))?;
    let n: usize = get("n")?
        .parse()
        .map_err(|_| Error::Checkpoint("unparsable n".into()))?;
    let side_length: f64 = get("side_length")?
        .parse()
        .map_err(|_| Error::Checkpoint("unparsable side_length".into()))?;
    let time: f64 = get("time")?
        .parse()
        .map_err(|_| Error::Checkpoint("unparsable time".into()))?;
    let step: usize = get("step")?
        .parse()
        .map_err(|_| Error::Checkpoint("unparsable step".into()))?;
    let scheme = get("scheme")?;
    let eps = match map.get("eps") {
        Some(v) => Some(
            v.parse::<f64>()
                .map_err(|_| Error::Checkpoint("unparsable eps".into()))?,
        ),
        None => None,
    };
    let potential = potential_from_map(&map)?;

    let cells = n.pow(dim as u32);
    if payload.len() != cells * 8 {
        return Err(Error::Checkpoint(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            cells * 8
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Checkpoint {
        dim,
        n_per_axis: n,
        side_length,
        time,
        step,
        scheme,
        eps,
        potential,
        values,
    })
}

impl Checkpoint {
    /// Rebuild the grid this snapshot was taken on.
    pub fn grid(&self) -> Result<Arc<TorusGrid>> {
        TorusGrid::new(self.dim, self.n_per_axis, self.side_length)
    }

    pub fn field(&self) -> Result<Field> {
        Field::from_values(self.grid()?, self.values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let dir = std::env::temp_dir().join(format!("cahnlab-ck-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.ckpt");
        let ck = Checkpoint {
            dim: 1,
            n_per_axis: 16,
            side_length: 1.0,
            time: 0.125,
            step: 1250,
            scheme: "nonlocal".into(),
            eps: Some(0.1),
            potential: Potential::shifted_quartic(1.5).unwrap(),
            values: (0..16).map(|i| (i as f64 * 0.7).sin() / 3.0).collect(),
        };
        write_checkpoint(&path, &ck).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.dim, ck.dim);
        assert_eq!(back.step, ck.step);
        assert_eq!(back.scheme, ck.scheme);
        assert_eq!(back.eps, ck.eps);
        assert_eq!(back.potential, ck.potential);
        for (a, b) in back.values.iter().zip(ck.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_truncated_payload() {
        let dir = std::env::temp_dir().join(format!("cahnlab-ck2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.ckpt");
        let ck = Checkpoint {
            dim: 1,
            n_per_axis: 16,
            side_length: 1.0,
            time: 0.0,
            step: 0,
            scheme: "local".into(),
            eps: None,
            potential: Potential::shifted_quartic(1.0).unwrap(),
            values: vec![0.0; 16],
        };
        write_checkpoint(&path, &ck).unwrap();
        let raw = std::fs::read(&path).unwrap();
        std::fs::write(&path, &raw[..raw.len() - 8]).unwrap();
        assert!(read_checkpoint(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
