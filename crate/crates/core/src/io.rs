//! Plain-text file formats: whitespace matrices with a `# rows cols` header
//! (the interchange format for D, P, Q, F and friends) and network
//! checkpoints carrying their own shape manifest.
//!
//! Floats are written with 17 significant digits so files round-trip
//! bit-exactly and repeated runs produce identical bytes.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::net::{Activation, Mlp};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },
}

fn parse_err(path: &Path, reason: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&format!("# {} {}\n", m.nrows(), m.ncols()));
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<(), IoError> {
    write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty file"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, "missing `# rows cols` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(path, format!("bad header: {e}")))?;
    if dims.len() != 2 {
        return Err(parse_err(path, "header must be `# rows cols`"));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| parse_err(path, format!("bad number {tok:?}: {e}")))?;
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(parse_err(
            path,
            format!("expected {} values, found {}", rows * cols, values.len()),
        ));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>, IoError> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(parse_err(path, "expected a single-column matrix"));
    }
    Ok(DVector::from_column_slice(m.column(0).as_slice()))
}

/// Checkpoint: named dense networks with dims, activations and parameters.
pub fn save_checkpoint(path: &Path, nets: &[(&str, &Mlp)]) -> Result<(), IoError> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "# checkpoint v1 nets {}", nets.len())?;
    for (name, net) in nets {
        let dims: Vec<String> = net.dims.iter().map(|d| d.to_string()).collect();
        let acts: Vec<String> = net.acts.iter().map(|a| a.name().to_string()).collect();
        writeln!(
            file,
            "# net {name} dims {} acts {} params {}",
            dims.join(","),
            acts.join(","),
            net.params_slice().len()
        )?;
        for chunk in net.params_slice().chunks(8) {
            let row: Vec<String> = chunk.iter().map(|v| format_f64(*v)).collect();
            writeln!(file, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Mlp)>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().peekable();
    let header = lines.next().ok_or_else(|| parse_err(path, "empty file"))?;
    if !header.starts_with("# checkpoint v1") {
        return Err(parse_err(path, "not a v1 checkpoint"));
    }
    let mut nets = Vec::new();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 9 || toks[0] != "#" || toks[1] != "net" {
            return Err(parse_err(path, format!("bad net header: {line:?}")));
        }
        let name = toks[2].to_string();
        let dims: Vec<usize> = toks[4]
            .split(',')
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(path, format!("bad dims: {e}")))?;
        let acts: Vec<Activation> = toks[6]
            .split(',')
            .map(|t| Activation::parse(t).ok_or_else(|| parse_err(path, format!("bad act {t:?}"))))
            .collect::<Result<_, _>>()?;
        let count: usize = toks[8]
            .parse()
            .map_err(|e| parse_err(path, format!("bad count: {e}")))?;
        let mut params = Vec::with_capacity(count);
        while params.len() < count {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(path, "truncated parameter block"))?;
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| parse_err(path, format!("bad number {tok:?}: {e}")))?;
                params.push(v);
            }
        }
        if params.len() != count {
            return Err(parse_err(path, "parameter count mismatch"));
        }
        nets.push((name, Mlp::from_parts(dims, acts, params)));
    }
    Ok(nets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matrix_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join("safectl-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.txt");
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 1.0 / 3.0, 1e-17, 2e300, -7.25]);
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
        // rewriting produces identical bytes
        let bytes1 = fs::read(&path).unwrap();
        write_matrix(&path, &back).unwrap();
        let bytes2 = fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = std::env::temp_dir().join("safectl-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.txt");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(
            vec![3, 4, 1],
            vec![Activation::Relu, Activation::Tanh],
            &mut rng,
            0.1,
        );
        save_checkpoint(&path, &[("actor", &net)]).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].0, "actor");
        assert_eq!(loaded[0].1.params_slice(), net.params_slice());
        assert_eq!(loaded[0].1.dims, net.dims);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = std::env::temp_dir().join("safectl-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.txt");
        fs::write(&path, "1 2 3\n").unwrap();
        assert!(read_matrix(&path).is_err());
        fs::write(&path, "# 2 2\n1 2\n").unwrap();
        assert!(read_matrix(&path).is_err());
    }
}
