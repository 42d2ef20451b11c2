use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::net::TransportNet;
use crate::error::{Error, Result};

const MAGIC: &str = "# pushmap-net v1";

/// A network together with the optimizer step count at which it was saved.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: TransportNet,
    pub step: u64,
}

/// Writes a flat CSV `layer,kind,row,col,value`. Values use shortest
/// round-trip formatting, so loading is lossless.
pub fn save_checkpoint(path: &Path, net: &TransportNet, step: u64) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut w, net, step)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_checkpoint<W: Write>(w: &mut W, net: &TransportNet, step: u64) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    let dims: Vec<String> = net.layer_dims().iter().map(|d| d.to_string()).collect();
    writeln!(w, "# layer_dims={}", dims.join(" "))?;
    writeln!(w, "# seed={}", net.seed())?;
    writeln!(w, "# step={step}")?;
    writeln!(w, "layer,kind,row,col,value")?;
    for (l, (wt, b)) in net.weights.iter().zip(&net.biases).enumerate() {
        for ((r, c), v) in wt.indexed_iter() {
            writeln!(w, "{l},W,{r},{c},{v:e}")?;
        }
        for (r, v) in b.iter().enumerate() {
            writeln!(w, "{l},b,{r},0,{v:e}")?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let bad = |msg: &str| Error::Parse(format!("checkpoint {}: {msg}", path.display()));
    if lines.next().transpose()?.as_deref() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let mut meta = |key: &str| -> Result<String> {
        let line = lines.next().transpose()?.ok_or_else(|| bad("truncated header"))?;
        line.strip_prefix(&format!("# {key}="))
            .map(str::to_owned)
            .ok_or_else(|| bad(&format!("expected {key}")))
    };
    let dims: Vec<usize> = meta("layer_dims")?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("layer_dims")))
        .collect::<Result<_>>()?;
    let seed: u64 = meta("seed")?.parse().map_err(|_| bad("seed"))?;
    let step: u64 = meta("step")?.parse().map_err(|_| bad("step"))?;
    if dims.len() < 2 {
        return Err(bad("need at least two layers"));
    }
    if lines.next().transpose()?.as_deref() != Some("layer,kind,row,col,value") {
        return Err(bad("missing column header"));
    }
    let mut weights: Vec<Array2<f64>> = dims.windows(2).map(|p| Array2::from_elem((p[1], p[0]), f64::NAN)).collect();
    let mut biases: Vec<Array1<f64>> = dims[1..].iter().map(|&n| Array1::from_elem(n, f64::NAN)).collect();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(&format!("malformed row {line:?}")));
        }
        let l: usize = f[0].parse().map_err(|_| bad("layer index"))?;
        let r: usize = f[2].parse().map_err(|_| bad("row index"))?;
        let c: usize = f[3].parse().map_err(|_| bad("col index"))?;
        let v: f64 = f[4].parse().map_err(|_| bad("value"))?;
        let slot = match f[1] {
            "W" => weights.get_mut(l).and_then(|w| w.get_mut((r, c))),
            "b" if c == 0 => biases.get_mut(l).and_then(|b| b.get_mut(r)),
            _ => None,
        };
        *slot.ok_or_else(|| bad(&format!("index out of range in {line:?}")))? = v;
    }
    let net = TransportNet::from_parts(weights, biases, seed).map_err(|_| bad("missing or non-finite parameters"))?;
    Ok(Checkpoint { net, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_net;

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.csv");
        let mut net = init_net(&[2, 7, 5, 2], 17).unwrap();
        net.biases[1][3] = 1.0 / 3.0;
        net.weights[0][[0, 0]] = -5e-310;
        save_checkpoint(&p, &net, 42).unwrap();
        let ck = load_checkpoint(&p).unwrap();
        assert_eq!(ck.step, 42);
        assert_eq!(ck.net, net);
        assert!(ck.net.flatten().iter().zip(net.flatten()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn missing_entries_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.csv");
        let net = init_net(&[1, 2, 1], 0).unwrap();
        save_checkpoint(&p, &net, 0).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let truncated: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        std::fs::write(&p, truncated).unwrap();
        assert!(load_checkpoint(&p).is_err());
    }
}
