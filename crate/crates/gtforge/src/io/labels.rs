//! Label files: one code byte per point, in cloud order.

use std::path::Path;

use gtforge_core::classes::is_valid_code;

use super::{read_bytes, write_atomic};
use crate::error::{Result, ResultExt};

pub fn check_codes(labels: &[u8]) -> Result<()> {
    match labels.iter().find(|&&c| !is_valid_code(c)) {
        Some(&c) => Err(gtforge_core::Error::InvalidLabelCode(c).into()),
        None => Ok(()),
    }
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_bytes(path)?;
    check_codes(&bytes).in_file(path)?;
    Ok(bytes)
}

pub fn write_labels(path: &Path, labels: &[u8]) -> Result<()> {
    check_codes(labels).in_file(path)?;
    write_atomic(path, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_codes() {
        assert!(check_codes(&[0, 10, 254, 255]).is_ok());
        assert!(check_codes(&[11]).is_err());
    }
}
