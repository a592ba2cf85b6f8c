//! Small helpers shared by the file readers and writers.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a whole file as UTF-8, reporting the byte offset of the first
/// invalid sequence.
pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Utf8 {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Iterates over `(line_number, line)` pairs, skipping the leading block of
/// `#` comment lines that artifact files start with. Line numbers are
/// 1-based and count the skipped header.
pub fn body_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut in_header = true;
    text.lines()
        .enumerate()
        .filter(move |(_, line)| {
            if in_header && line.starts_with('#') {
                return false;
            }
            in_header = false;
            true
        })
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_lines_are_skipped_only_at_the_top() {
        let text = "# a\n# b\nx\n# not a header\n";
        let lines: Vec<_> = body_lines(text).collect();
        assert_eq!(lines, vec![(3, "x"), (4, "# not a header")]);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, b"abc\xffdef").unwrap();
        match read_text(&path) {
            Err(Error::Utf8 { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
