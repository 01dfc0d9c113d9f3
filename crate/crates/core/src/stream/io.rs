//! Line-oriented stream files.
//!
//! ```text
//! # universe_bits=16 alpha=2.0 seed=42 gen=zipf/s=1/ratio=0.5
//! I 17
//! D 17
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{OpKind, Stream, StreamOp};
use crate::error::{Result, SketchError};

pub fn write_stream<W: Write>(stream: &Stream, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    write!(out, "# universe_bits={} alpha={:?} seed={}", stream.universe_bits, stream.alpha, stream.seed)?;
    if let Some(generator) = &stream.generator {
        write!(out, " gen={generator}")?;
    }
    out.write_all(b"\n")?;
    for op in &stream.ops {
        let code = match op.kind {
            OpKind::Insert => 'I',
            OpKind::Delete => 'D',
        };
        writeln!(out, "{code} {}", op.item)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_stream_file(stream: &Stream, path: impl AsRef<Path>) -> Result<()> {
    write_stream(stream, File::create(path)?)
}

fn parse_error(line: usize, message: impl Into<String>) -> SketchError {
    SketchError::Parse { line, message: message.into() }
}

fn parse_header(line: &str) -> Result<Stream> {
    let body = line
        .strip_prefix("# ")
        .ok_or_else(|| parse_error(1, "header must start with '# '"))?;
    let (mut bits, mut alpha, mut seed, mut generator) = (None, None, None, None);
    for field in body.split(' ') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_error(1, format!("header field '{field}' is not key=value")))?;
        let bad = |what: &str| parse_error(1, format!("invalid {what} '{value}'"));
        match key {
            "universe_bits" => bits = Some(value.parse::<u32>().map_err(|_| bad("universe_bits"))?),
            "alpha" => alpha = Some(value.parse::<f64>().map_err(|_| bad("alpha"))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
            "gen" => generator = Some(value.to_string()),
            _ => return Err(parse_error(1, format!("unknown header field '{key}'"))),
        }
    }
    let universe_bits = bits.ok_or_else(|| parse_error(1, "missing universe_bits"))?;
    if !(1..=64).contains(&universe_bits) {
        return Err(parse_error(1, format!("universe_bits {universe_bits} out of range")));
    }
    let alpha = alpha.ok_or_else(|| parse_error(1, "missing alpha"))?;
    let seed = seed.ok_or_else(|| parse_error(1, "missing seed"))?;
    Ok(Stream { universe_bits, alpha, seed, generator, ops: Vec::new() })
}

fn parse_op(line: &str, number: usize, universe_bits: u32) -> Result<StreamOp> {
    let (code, item) = line
        .split_once(' ')
        .ok_or_else(|| parse_error(number, format!("expected '<op> <item>', got '{line}'")))?;
    let item: u64 = item
        .parse()
        .map_err(|_| parse_error(number, format!("invalid item '{item}'")))?;
    if universe_bits < 64 && item >> universe_bits != 0 {
        return Err(parse_error(number, format!("item {item} outside universe 2^{universe_bits}")));
    }
    match code {
        "I" => Ok(StreamOp::insert(item)),
        "D" => Ok(StreamOp::delete(item)),
        other => Err(parse_error(number, format!("unknown op code '{other}'"))),
    }
}

pub fn read_stream<R: Read>(source: R) -> Result<Stream> {
    let mut text = String::new();
    BufReader::new(source)
        .read_to_string(&mut text)
        .map_err(|e| parse_error(1, format!("unreadable stream: {e}")))?;
    let mut lines = text.split_terminator('\n');
    let header = lines.next().ok_or_else(|| parse_error(1, "empty stream file"))?;
    let mut stream = parse_header(header)?;
    for (i, line) in lines.enumerate() {
        stream.ops.push(parse_op(line, i + 2, stream.universe_bits)?);
    }
    Ok(stream)
}

pub fn read_stream_file(path: impl AsRef<Path>) -> Result<Stream> {
    read_stream(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(stream: &Stream) -> (Vec<u8>, Stream) {
        let mut buf = Vec::new();
        write_stream(stream, &mut buf).unwrap();
        let back = read_stream(buf.as_slice()).unwrap();
        (buf, back)
    }

    #[test]
    fn header_without_generator() {
        let s = read_stream("# universe_bits=16 alpha=2.0 seed=42\nI 1\nD 1\n".as_bytes()).unwrap();
        assert_eq!((s.universe_bits, s.alpha, s.seed), (16, 2.0, 42));
        assert_eq!(s.generator, None);
        assert_eq!(s.ops, vec![StreamOp::insert(1), StreamOp::delete(1)]);
        let (bytes, _) = roundtrip(&s);
        assert_eq!(bytes, b"# universe_bits=16 alpha=2.0 seed=42\nI 1\nD 1\n");
    }

    #[test]
    fn odd_alpha_survives() {
        let s = Stream::new(8, 4.0 / 3.0, 1, vec![StreamOp::insert(3)]).with_generator("zipf/s=1");
        let (_, back) = roundtrip(&s);
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("", 1),
            ("universe_bits=16 alpha=2.0 seed=1\n", 1),
            ("# universe_bits=16 alpha=2.0\n", 1),
            ("# universe_bits=16 alpha=2.0 seed=1\nI 1\nX 2\n", 3),
            ("# universe_bits=16 alpha=2.0 seed=1\nI one\n", 2),
            ("# universe_bits=4 alpha=2.0 seed=1\nI 1\nI 2\nI 16\n", 4),
            ("# universe_bits=16 alpha=2.0 seed=1\nI 1\n\n", 3),
            ("# universe_bits=16 alpha=2.0 seed=1\nI 1\r\n", 2),
        ];
        for (text, line) in cases {
            match read_stream(text.as_bytes()) {
                Err(SketchError::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
