//! Debug dump of square complex matrices.
//!
//! Layout: `dim` (u64 LE), `flags` (u64 LE), then `dim * dim` entries in
//! row-major order, each as two f64 LE (re, im).

use std::io::{self, Read, Write};

use super::{c, Mat};

pub fn write_binary<W: Write>(mut w: W, m: &Mat, flags: u64) -> io::Result<()> {
    let (n, k) = m.dim();
    if n != k {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "matrix is not square",
        ));
    }
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&flags.to_le_bytes())?;
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> io::Result<(Mat, u64)> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let flags = u64::from_le_bytes(word);
    let len = n
        .checked_mul(n)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "dimension overflows"))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        data.push(c(re, f64::from_le_bytes(word)));
    }
    let m = Mat::from_shape_vec((n, n), data)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    Ok((m, flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = Mat::from_shape_fn((3, 3), |(i, j)| c(i as f64, -(j as f64) * 0.5));
        let mut buf = Vec::new();
        write_binary(&mut buf, &m, 7).unwrap();
        assert_eq!(buf.len(), 16 + 9 * 16);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        let (back, flags) = read_binary(&buf[..]).unwrap();
        assert_eq!(flags, 7);
        assert_eq!(back, m);
    }
}
